#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "mbmrl/attention.hpp"
#include "mbmrl/env.hpp"
#include "mbmrl/policy.hpp"
#include "mbmrl/rng.hpp"
#include "support.hpp"

using namespace mbmrl;
using mbmrl::testing::fd_grad;
using mbmrl::testing::max_rel_err;

namespace {

PolicyParams random_mlp(std::uint64_t seed, std::size_t n, std::size_t m) {
  Rng rng(seed);
  return make_mlp_policy(n, m, VecD(m, -2.0), VecD(m, 2.0), {8}, Activation::kTanh, -0.5,
                         rng);
}

PolicyParams random_linear(std::uint64_t seed, std::size_t n, std::size_t m,
                           std::size_t knots) {
  PolicyParams p = make_linear_policy(n, m, VecD(m, -9.0), VecD(m, 9.0), knots, 4.0, -0.5);
  Rng rng(seed);
  VecD theta = p.get_params();
  for (double& v : theta) v = rng.uniform(-0.8, 0.8);
  p.set_params(theta);
  return p;
}

}  // namespace

TEST_CASE("identity gain gives feedback norm equal to the state dimension") {
  PolicyParams p = make_linear_policy(3, 3, VecD(3, -9.0), VecD(3, 9.0), 1, 4.0, -0.5);
  for (std::size_t i = 0; i < 3; ++i) p.k_knots[0](i, i) = 1.0;
  CHECK(feedback_norm_sq(p, {0.1, 0.2, 0.3}, 0.0) == 3.0);
}

TEST_CASE("zero-weight mlp has zero feedback norm") {
  PolicyParams p = random_mlp(3, 2, 1);
  p.set_params(VecD(p.param_count(), 0.0));
  CHECK(feedback_norm_sq(p, {0.4, -0.2}, 0.0) == 0.0);
}

TEST_CASE("feedback norm matches the finite-difference jacobian") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    PolicyParams p = random_mlp(100 + trial, 3, 2);
    VecD x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    double fd_sum = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const VecD row = fd_grad(
          [&](const VecD& xx) { return mean_action(p, xx, 0.0)[i]; }, x);
      for (double e : row) fd_sum += e * e;
    }
    CHECK(mbmrl::testing::rel_err(feedback_norm_sq(p, x, 0.0), fd_sum) < 1e-4);
  }
}

TEST_CASE("feedforward norm arithmetic") {
  CHECK(feedforward_norm_sq({0.5, -0.5}, {0.5, -0.5}, 0.02) == 0.0);
  CHECK(feedforward_norm_sq({0.02}, {0.0}, 0.02) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS(feedforward_norm_sq({0.1}, {0.0}, 0.0));
  CHECK_THROWS(feedforward_norm_sq({0.1}, {0.0}, -0.01));
}

TEST_CASE("linear action ramp has constant squared slope") {
  const double slope = 1.7, dt = 0.05;
  VecD prev = {0.0};
  for (int k = 1; k <= 40; ++k) {
    VecD u = {slope * dt * static_cast<double>(k)};
    CHECK(feedforward_norm_sq(u, prev, dt) == doctest::Approx(slope * slope).epsilon(1e-10));
    prev = u;
  }
}

TEST_CASE("energy is the squared action norm") {
  CHECK(energy({0.0, 0.0}) == 0.0);
  CHECK(energy({3.0, 4.0}) == 25.0);
  CHECK(energy({-2.0}) == 4.0);
}

TEST_CASE("zero weight leaves the reward bitwise untouched") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = rng.uniform(-100.0, 100.0);
    const double fb = rng.uniform(0.0, 50.0);
    const double ff = rng.uniform(0.0, 50.0);
    CHECK(regularized_reward(r, fb, ff, 0.0) == r);
  }
  // and a tiny denormal-ish reward still comes back bitwise
  CHECK(regularized_reward(5e-324, 1e9, 1e9, 0.0) == 5e-324);
}

TEST_CASE("reward penalty arithmetic and monotonicity in the weight") {
  CHECK(regularized_reward(1.0, 2.0, 3.0, 0.05) == doctest::Approx(0.75).epsilon(1e-15));
  const double r = 2.0, fb = 1.3, ff = 0.4;
  double prev = regularized_reward(r, fb, ff, 0.0);
  for (double alpha : {0.01, 0.1, 1.0, 5.0}) {
    const double cur = regularized_reward(r, fb, ff, alpha);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("trajectory sums of the regularized reward recompose exactly") {
  // roll a pendulum with a random linear policy, then cross-check the summed
  // shaped reward against independently ordered partial sums
  EnvSpec spec = make_env_spec(EnvId::kPendulumSwingup);
  spec.diffusion_scale = 0.0;
  PolicyParams p = random_linear(11, 2, 1, 2);
  Rng rng(12);
  StateVec s = env_reset(spec, TaskPerturbation{}, rng);

  std::vector<double> rewards, fbs, ffs;
  VecD prev_u;
  for (int k = 0; k < 60; ++k) {
    const VecD u = clamp_action(spec, mean_action(p, s.values, s.time));
    ActionVec a;
    a.values = u;
    a.time = s.time;
    const StepResult res = env_step(spec, TaskPerturbation{}, s, a, rng);
    rewards.push_back(res.reward);
    fbs.push_back(feedback_norm_sq(p, s.values, s.time));
    ffs.push_back(k == 0 ? 0.0 : feedforward_norm_sq(u, prev_u, spec.dt));
    prev_u = u;
    s = res.next;
  }

  const double alpha = 1.0;
  double forward = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i)
    forward += regularized_reward(rewards[i], fbs[i], ffs[i], alpha);
  double split = 0.0;
  for (double r : rewards) split += r;
  double pen = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) pen += fbs[i] + ffs[i];
  CHECK(forward == doctest::Approx(split - alpha * pen).epsilon(1e-12));
}

TEST_CASE("metrics ignore the reward function entirely") {
  PolicyParams p = random_mlp(13, 2, 1);
  const VecD x = {0.3, -0.8};
  const VecD u = {0.9};
  const VecD u_prev = {0.4};
  const double fb = feedback_norm_sq(p, x, 0.0);
  const double ff = feedforward_norm_sq(u, u_prev, 0.02);
  const double en = energy(u);
  // nothing about these calls can see a reward; recompute after "changing"
  // the task by scaling rewards elsewhere and check identical values
  CHECK(feedback_norm_sq(p, x, 0.0) == fb);
  CHECK(feedforward_norm_sq(u, u_prev, 0.02) == ff);
  CHECK(energy(u) == en);
}

TEST_CASE("pathwise penalty gradient matches finite differences, mlp kind") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    PolicyParams p = random_mlp(300 + trial, 2, 2);
    const VecD x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const VecD x_prev = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double dt = 0.02;

    const VecD grad = attention_term_grad(p, x, 0.0, x_prev, -dt, dt, true);
    const VecD fd = fd_grad(
        [&](const VecD& theta) {
          PolicyParams q = p;
          q.set_params(theta);
          const double fb = feedback_norm_sq(q, x, 0.0);
          const double ff =
              feedforward_norm_sq(mean_action(q, x, 0.0), mean_action(q, x_prev, -dt), dt);
          return fb + ff;
        },
        p.get_params(), 1e-4);
    CHECK(max_rel_err(grad, fd, 1e-2) < 1e-3);
  }
}

TEST_CASE("pathwise penalty gradient matches finite differences, linear kind") {
  Rng rng(19);
  for (int trial = 0; trial < 8; ++trial) {
    PolicyParams p = random_linear(400 + trial, 2, 1, 3);
    const VecD x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const VecD x_prev = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double t = rng.uniform(0.1, 3.9);
    const double dt = 0.02;

    const VecD grad = attention_term_grad(p, x, t, x_prev, t - dt, dt, true);
    const VecD fd = fd_grad(
        [&](const VecD& theta) {
          PolicyParams q = p;
          q.set_params(theta);
          const double fb = feedback_norm_sq(q, x, t);
          const double ff = feedforward_norm_sq(mean_action(q, x, t),
                                                mean_action(q, x_prev, t - dt), dt);
          return fb + ff;
        },
        p.get_params(), 1e-5);
    CHECK(max_rel_err(grad, fd, 1e-2) < 1e-4);
  }
}

TEST_CASE("first-step penalty gradient drops the temporal term") {
  PolicyParams p = random_linear(23, 2, 1, 1);
  const VecD x = {0.5, -0.5};
  const VecD grad = attention_term_grad(p, x, 0.0, {}, 0.0, 0.02, false);
  const VecD fd = fd_grad(
      [&](const VecD& theta) {
        PolicyParams q = p;
        q.set_params(theta);
        return feedback_norm_sq(q, x, 0.0);
      },
      p.get_params(), 1e-5);
  CHECK(max_rel_err(grad, fd, 1e-2) < 1e-4);
}
