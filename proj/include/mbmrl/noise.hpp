#ifndef MBMRL_NOISE_HPP_
#define MBMRL_NOISE_HPP_

#include <string>

#include "mbmrl/rng.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

// Mean-reverting exploration noise integrated by Euler-Maruyama:
//   current += theta_ou * (mu - current) * dt + sigma_eps * sqrt(dt) * xi
struct OuProcess {
  double theta_ou = 0.15;
  VecD mu;
  VecD sigma_eps;
  VecD current;
  double dt = 0.02;

  void validate() const;  // throws std::invalid_argument
};

OuProcess make_ou_process(std::size_t dim, double theta, double sigma, double mu,
                          double dt);

// advances the process one step and returns the new value
VecD ou_step(OuProcess& process, Rng& rng);

// snaps current back to mu (episode boundaries); idempotent
void ou_reset(OuProcess& process);

enum class NoiseKind { kOu, kGaussian, kNone };

const char* noise_kind_name(NoiseKind kind);
NoiseKind noise_kind_from_name(const std::string& name);

// One exploration-noise stream per rollout worker. `gaussian` resamples
// iid N(mu, sigma^2) each step; `none` returns zeros.
struct NoiseSource {
  NoiseKind kind = NoiseKind::kNone;
  OuProcess process;  // sigma/mu reused by the gaussian mode

  void reset();
  VecD sample(Rng& rng);
};

NoiseSource make_noise_source(NoiseKind kind, std::size_t dim, double theta,
                              double sigma, double mu, double dt);

}  // namespace mbmrl

#endif  // MBMRL_NOISE_HPP_
