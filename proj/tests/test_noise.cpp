#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "mbmrl/noise.hpp"
#include "mbmrl/rng.hpp"

using namespace mbmrl;

namespace {

// sample autocorrelation at a given lag, mean-centered
double autocorr(const std::vector<double>& x, std::size_t lag) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    den += d * d;
    if (i + lag < n) num += d * (x[i + lag] - mean);
  }
  return num / den;
}

}  // namespace

TEST_CASE("frozen process never moves") {
  OuProcess p = make_ou_process(2, 0.0, 0.0, 0.7, 0.01);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const VecD v = ou_step(p, rng);
    CHECK(v[0] == 0.7);
    CHECK(v[1] == 0.7);
  }
}

TEST_CASE("noiseless process at its mean is a fixed point") {
  OuProcess p = make_ou_process(1, 0.5, 0.0, -1.25, 0.02);
  Rng rng(6);
  for (int k = 0; k < 100; ++k) CHECK(ou_step(p, rng)[0] == -1.25);
}

TEST_CASE("noiseless process relaxes toward the mean geometrically") {
  OuProcess p = make_ou_process(1, 0.5, 0.0, 0.0, 0.1);
  p.current = {1.0};
  Rng rng(7);
  double expected = 1.0;
  for (int k = 0; k < 50; ++k) {
    expected *= 1.0 - 0.5 * 0.1;
    CHECK(ou_step(p, rng)[0] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("stationary variance matches sigma^2/(2 theta)") {
  const double theta = 0.5, sigma = 0.3, dt = 0.01;
  OuProcess p = make_ou_process(1, theta, sigma, 0.0, dt);
  Rng rng(12345);
  for (int k = 0; k < 2000; ++k) ou_step(p, rng);  // burn-in past the transient

  const std::size_t n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = ou_step(p, rng)[0];
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double target = sigma * sigma / (2.0 * theta);
  CHECK(std::fabs(var - target) < 0.05 * target);
}

TEST_CASE("autocorrelation decays as exp(-theta tau)") {
  const double theta = 0.5, sigma = 0.3, dt = 0.01;
  OuProcess p = make_ou_process(1, theta, sigma, 0.0, dt);
  Rng rng(777);
  for (int k = 0; k < 2000; ++k) ou_step(p, rng);

  const std::size_t n = 1000000;
  std::vector<double> series(n);
  for (std::size_t k = 0; k < n; ++k) series[k] = ou_step(p, rng)[0];

  // estimator noise: Bartlett variance for an AR(1) with a = 1 - theta*dt
  // approaches (1+a^2)/(1-a^2)/n at long lags, so the check is 10% of the
  // true value plus three of those standard errors (which dominates once
  // the true correlation has decayed into the noise floor)
  const double a = 1.0 - theta * dt;
  const double se = std::sqrt((1.0 + a * a) / (1.0 - a * a) / static_cast<double>(n));
  for (std::size_t lag : {10u, 50u, 100u, 200u, 300u, 450u, 600u}) {
    const double truth = std::exp(-theta * static_cast<double>(lag) * dt);
    const double got = autocorr(series, lag);
    CHECK(std::fabs(got - truth) < 0.10 * truth + 3.0 * se);
  }
  CHECK(autocorr(series, 600) < autocorr(series, 10));
}

TEST_CASE("gaussian mode is white") {
  NoiseSource src = make_noise_source(NoiseKind::kGaussian, 1, 0.0, 0.3, 0.0, 0.01);
  Rng rng(31);
  const std::size_t n = 1000000;
  std::vector<double> series(n);
  for (std::size_t k = 0; k < n; ++k) series[k] = src.sample(rng)[0];
  CHECK(std::fabs(autocorr(series, 1)) < 0.01);
}

TEST_CASE("reset returns to the mean and is idempotent") {
  OuProcess p = make_ou_process(3, 0.15, 0.3, 0.4, 0.02);
  Rng rng(9);
  for (int k = 0; k < 10; ++k) ou_step(p, rng);
  ou_reset(p);
  for (double v : p.current) CHECK(v == 0.4);
  ou_reset(p);
  for (double v : p.current) CHECK(v == 0.4);
}

TEST_CASE("noise source kinds behave per their names") {
  Rng rng(10);
  NoiseSource none = make_noise_source(NoiseKind::kNone, 2, 0.15, 0.3, 0.0, 0.02);
  const VecD z = none.sample(rng);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);

  // same seed, same stream
  NoiseSource a = make_noise_source(NoiseKind::kOu, 2, 0.15, 0.3, 0.0, 0.02);
  NoiseSource b = a;
  Rng ra(44), rb(44);
  for (int k = 0; k < 20; ++k) {
    const VecD va = a.sample(ra);
    const VecD vb = b.sample(rb);
    CHECK(va[0] == vb[0]);
    CHECK(va[1] == vb[1]);
  }
  a.reset();
  CHECK(a.process.current[0] == 0.0);

  CHECK(noise_kind_from_name("ou") == NoiseKind::kOu);
  CHECK(noise_kind_from_name("gaussian") == NoiseKind::kGaussian);
  CHECK(noise_kind_from_name("none") == NoiseKind::kNone);
  CHECK_THROWS(noise_kind_from_name("pink"));
}

TEST_CASE("invalid process parameters are rejected") {
  CHECK_THROWS(make_ou_process(1, -0.1, 0.3, 0.0, 0.01));
  CHECK_THROWS(make_ou_process(1, 0.1, -0.3, 0.0, 0.01));
  CHECK_THROWS(make_ou_process(1, 0.1, 0.3, 0.0, 0.0));
  OuProcess p = make_ou_process(2, 0.1, 0.3, 0.0, 0.01);
  p.current = {1.0};  // size mismatch
  CHECK_THROWS(p.validate());
}
