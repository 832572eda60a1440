#include "mbmrl/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace mbmrl {

void OuProcess::validate() const {
  if (!(theta_ou >= 0.0)) throw std::invalid_argument("ou theta must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("ou dt must be > 0");
  if (mu.size() != sigma_eps.size() || mu.size() != current.size())
    throw std::invalid_argument("ou vector size mismatch");
  for (double s : sigma_eps)
    if (!(s >= 0.0)) throw std::invalid_argument("ou sigma must be >= 0");
  if (!all_finite(current)) throw std::invalid_argument("ou current not finite");
}

OuProcess make_ou_process(std::size_t dim, double theta, double sigma, double mu,
                          double dt) {
  OuProcess p;
  p.theta_ou = theta;
  p.mu.assign(dim, mu);
  p.sigma_eps.assign(dim, sigma);
  p.current = p.mu;
  p.dt = dt;
  p.validate();
  return p;
}

VecD ou_step(OuProcess& process, Rng& rng) {
  const double root_dt = std::sqrt(process.dt);
  for (std::size_t i = 0; i < process.current.size(); ++i) {
    process.current[i] += process.theta_ou * (process.mu[i] - process.current[i]) * process.dt +
                          process.sigma_eps[i] * root_dt * rng.normal();
  }
  return process.current;
}

void ou_reset(OuProcess& process) { process.current = process.mu; }

const char* noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kOu: return "ou";
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kNone: return "none";
  }
  return "unknown";
}

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "ou") return NoiseKind::kOu;
  if (name == "gaussian") return NoiseKind::kGaussian;
  if (name == "none") return NoiseKind::kNone;
  throw std::invalid_argument("unknown noise kind: " + name);
}

void NoiseSource::reset() { ou_reset(process); }

VecD NoiseSource::sample(Rng& rng) {
  switch (kind) {
    case NoiseKind::kOu:
      return ou_step(process, rng);
    case NoiseKind::kGaussian: {
      VecD out(process.mu.size());
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = process.mu[i] + process.sigma_eps[i] * rng.normal();
      return out;
    }
    case NoiseKind::kNone:
      return VecD(process.mu.size(), 0.0);
  }
  throw std::logic_error("unreachable noise kind");
}

NoiseSource make_noise_source(NoiseKind kind, std::size_t dim, double theta,
                              double sigma, double mu, double dt) {
  NoiseSource src;
  src.kind = kind;
  src.process = make_ou_process(dim, theta, sigma, mu, dt);
  return src;
}

}  // namespace mbmrl
