#ifndef MBMRL_RNG_HPP_
#define MBMRL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace mbmrl {

// splitmix64, used to derive independent child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded random stream. Normal variates use the polar method with a cached
// spare so the draw sequence is identical across platforms for a given seed.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed)
      : engine_(splitmix64(seed)), seed_base_(splitmix64(seed)) {}

  // independent child stream; `tag` distinguishes sibling streams
  Rng derive(std::uint64_t tag) const {
    return Rng(seed_base_ ^ splitmix64(tag ^ 0x5851f42d4c957f2dULL));
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return engine_(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // text round-trip for checkpointing
  std::string serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << std::scientific << spare_ << ' ' << seed_base_;
    return os.str();
  }

  static Rng deserialize(const std::string& text) {
    Rng r;
    std::istringstream is(text);
    int has_spare = 0;
    is >> r.engine_ >> has_spare >> r.spare_ >> r.seed_base_;
    r.has_spare_ = has_spare != 0;
    return r;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
  std::uint64_t seed_base_ = 0;
};

}  // namespace mbmrl

#endif  // MBMRL_RNG_HPP_
