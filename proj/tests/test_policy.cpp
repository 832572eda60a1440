#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "doctest.h"
#include "mbmrl/policy.hpp"
#include "mbmrl/rng.hpp"
#include "support.hpp"

using namespace mbmrl;
using mbmrl::testing::fd_grad;
using mbmrl::testing::max_rel_err;

namespace {

PolicyParams small_mlp(std::uint64_t seed, std::size_t n = 2, std::size_t m = 2,
                       double log_std_init = -0.5) {
  Rng rng(seed);
  return make_mlp_policy(n, m, VecD(m, -2.0), VecD(m, 2.0), {8}, Activation::kTanh,
                         log_std_init, rng);
}

VecD random_state(Rng& rng, std::size_t n, double scale = 1.0) {
  VecD x(n);
  for (double& v : x) v = rng.uniform(-scale, scale);
  return x;
}

}  // namespace

TEST_CASE("policy kind names round-trip") {
  CHECK(policy_kind_from_name(policy_kind_name(PolicyKind::kMlpGaussian)) ==
        PolicyKind::kMlpGaussian);
  CHECK(policy_kind_from_name(policy_kind_name(PolicyKind::kLinearTimeVarying)) ==
        PolicyKind::kLinearTimeVarying);
  CHECK_THROWS(policy_kind_from_name("tabular"));
}

TEST_CASE("pure feedforward linear policy emits its offset everywhere") {
  PolicyParams p = make_linear_policy(2, 1, {-5.0}, {5.0}, 3, 4.0, -0.5);
  for (auto& v : p.v_knots) v = {1.25};
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const VecD x = random_state(rng, 2, 3.0);
    const PolicySample s = act(p, x, rng.uniform(0.0, 4.0), VecD{0.0}, rng);
    CHECK(s.action.values[0] == 1.25);
    CHECK(mean_action(p, x, 1.7)[0] == 1.25);
  }
}

TEST_CASE("vanishing exploration noise collapses samples onto the mean action") {
  PolicyParams p = small_mlp(5, 2, 2, kLogStdMin);
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const VecD x = random_state(rng, 2);
    const VecD mean = mean_action(p, x, 0.0);
    const PolicySample s = act(p, x, 0.0, std::nullopt, rng);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::fabs(s.action.values[i] - mean[i]) < 1e-6);
  }
}

TEST_CASE("zero-weight mlp mean action is the midpoint of the bounds") {
  PolicyParams p = small_mlp(7, 2, 1);
  p.action_lo = {0.0};
  p.action_hi = {4.0};
  VecD flat(p.param_count(), 0.0);
  p.set_params(flat);
  const VecD mean = mean_action(p, {0.3, -1.1}, 0.0);
  CHECK(mean[0] == 2.0);
}

TEST_CASE("squashed action density integrates to one") {
  PolicyParams p = small_mlp(11, 2, 1, -0.3);
  const VecD x = {0.4, -0.9};
  const double lo = p.action_lo[0], hi = p.action_hi[0];
  const double half = 0.5 * (hi - lo), center = 0.5 * (hi + lo);

  // midpoint rule in action space; the grid never touches the bounds where
  // the pre-squash coordinate diverges
  const std::size_t cells = 200000;
  const double h = (hi - lo) / static_cast<double>(cells);
  double integral = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = lo + (static_cast<double>(c) + 0.5) * h;
    const double z = std::atanh((a - center) / half);
    integral += std::exp(policy_log_prob(p, x, 0.0, {z})) * h;
  }
  CHECK(std::fabs(integral - 1.0) < 1e-3);
}

TEST_CASE("linear-policy sample density integrates to one") {
  PolicyParams p = make_linear_policy(2, 1, {-50.0}, {50.0}, 1, 4.0, -0.2);
  p.k_knots[0](0, 0) = 0.3;
  p.k_knots[0](0, 1) = -0.7;
  p.v_knots[0] = {0.5};
  const VecD x = {1.0, 2.0};
  const double mean = mean_action(p, x, 0.0)[0];
  const double sigma = std::exp(-0.2);
  const std::size_t cells = 40000;
  const double lo = mean - 10.0 * sigma, hi = mean + 10.0 * sigma;
  const double h = (hi - lo) / static_cast<double>(cells);
  double integral = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double u = lo + (static_cast<double>(c) + 0.5) * h;
    integral += std::exp(policy_log_prob(p, x, 0.0, {u})) * h;
  }
  CHECK(std::fabs(integral - 1.0) < 1e-3);
}

TEST_CASE("schedule interpolation hits knots and midpoints") {
  PolicyParams p = make_linear_policy(2, 1, {-5.0}, {5.0}, 3, 4.0, -0.5);
  // knots at t = 0, 2, 4
  p.k_knots[0](0, 0) = 1.0;
  p.k_knots[1](0, 0) = 3.0;
  p.k_knots[2](0, 0) = -1.0;
  p.v_knots[0] = {0.0};
  p.v_knots[1] = {2.0};
  p.v_knots[2] = {4.0};

  CHECK(p.k_at(0.0)(0, 0) == 1.0);
  CHECK(p.k_at(2.0)(0, 0) == 3.0);
  CHECK(p.k_at(4.0)(0, 0) == -1.0);
  CHECK(p.k_at(1.0)(0, 0) == doctest::Approx(2.0));
  CHECK(p.k_at(3.0)(0, 0) == doctest::Approx(1.0));
  CHECK(p.v_at(3.0)[0] == doctest::Approx(3.0));
  // outside the grid the schedule clamps to the end knots
  CHECK(p.k_at(-1.0)(0, 0) == 1.0);
  CHECK(p.k_at(9.0)(0, 0) == -1.0);

  // single-knot schedules are constant in time
  PolicyParams q = make_linear_policy(1, 1, {-1.0}, {1.0}, 1, 4.0, -0.5);
  q.k_knots[0](0, 0) = 0.7;
  CHECK(q.k_at(0.0)(0, 0) == 0.7);
  CHECK(q.k_at(123.0)(0, 0) == 0.7);
}

TEST_CASE("mean action of the linear kind is exactly K(t)x + v(t)") {
  PolicyParams p = make_linear_policy(2, 2, VecD(2, -9.0), VecD(2, 9.0), 2, 4.0, -0.5);
  Rng rng(17);
  for (auto& k : p.k_knots)
    for (double& e : k.data) e = rng.uniform(-1.0, 1.0);
  for (auto& v : p.v_knots)
    for (double& e : v) e = rng.uniform(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const VecD x = random_state(rng, 2, 2.0);
    const double t = rng.uniform(0.0, 4.0);
    const DenseMatrix k = p.k_at(t);
    const VecD v = p.v_at(t);
    const VecD mean = mean_action(p, x, t);
    for (std::size_t i = 0; i < 2; ++i) {
      double want = v[i];
      for (std::size_t j = 0; j < 2; ++j) want += k(i, j) * x[j];
      CHECK(mean[i] == doctest::Approx(want).epsilon(1e-15));
    }
  }
}

TEST_CASE("state jacobian of the linear kind is the gain matrix, bitwise") {
  PolicyParams p = make_linear_policy(3, 2, VecD(2, -9.0), VecD(2, 9.0), 2, 4.0, -0.5);
  Rng rng(19);
  for (auto& k : p.k_knots)
    for (double& e : k.data) e = rng.uniform(-1.0, 1.0);
  for (double t : {0.0, 1.3, 4.0}) {
    const DenseMatrix k = p.k_at(t);
    const DenseMatrix jac = policy_state_jacobian(p, {0.1, -0.2, 0.3}, t);
    for (std::size_t i = 0; i < k.data.size(); ++i) CHECK(jac.data[i] == k.data[i]);
  }
}

TEST_CASE("mlp state jacobian matches finite differences of the mean action") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    PolicyParams p = small_mlp(100 + trial, 3, 2);
    const VecD x = random_state(rng, 3);
    const DenseMatrix jac = policy_state_jacobian(p, x, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
      const VecD fd = fd_grad(
          [&](const VecD& xx) { return mean_action(p, xx, 0.0)[i]; }, x);
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(mbmrl::testing::rel_err(jac(i, j), fd[j]) < 1e-5);
    }
  }
}

TEST_CASE("saturated outputs flatten the jacobian") {
  // single linear layer with weights 1, driven far into the tanh tails
  Rng rng(29);
  PolicyParams p = make_mlp_policy(1, 1, {-1.0}, {1.0}, {}, Activation::kTanh, -0.5, rng);
  VecD flat(p.param_count(), 0.0);
  flat[0] = 1.0;   // weight
  flat[1] = 0.0;   // bias
  flat[2] = -0.5;  // log_std
  p.set_params(flat);
  const DenseMatrix jac = policy_state_jacobian(p, {25.0}, 0.0);
  CHECK(std::fabs(jac(0, 0)) < 1e-6);
}

TEST_CASE("log-prob gradients match finite differences for both kinds") {
  Rng rng(31);

  for (int trial = 0; trial < 10; ++trial) {
    PolicyParams p = small_mlp(200 + trial, 2, 2);
    const VecD x = random_state(rng, 2);
    const PolicySample s = act(p, x, 0.0, std::nullopt, rng);
    const VecD grad = log_prob_grad(p, x, 0.0, s.pre_squash);
    const VecD fd = fd_grad(
        [&](const VecD& theta) {
          PolicyParams q = p;
          q.set_params(theta);
          return policy_log_prob(q, x, 0.0, s.pre_squash);
        },
        p.get_params());
    CHECK(max_rel_err(grad, fd) < 1e-5);
  }

  for (int trial = 0; trial < 10; ++trial) {
    PolicyParams p = make_linear_policy(2, 2, VecD(2, -9.0), VecD(2, 9.0), 3, 4.0, -0.4);
    VecD theta = p.get_params();
    for (double& v : theta) v = rng.uniform(-0.5, 0.5);
    p.set_params(theta);
    const VecD x = random_state(rng, 2, 2.0);
    const double t = rng.uniform(0.0, 4.0);
    const PolicySample s = act(p, x, t, std::nullopt, rng);
    const VecD grad = log_prob_grad(p, x, t, s.pre_squash);
    const VecD fd = fd_grad(
        [&](const VecD& th) {
          PolicyParams q = p;
          q.set_params(th);
          return policy_log_prob(q, x, t, s.pre_squash);
        },
        p.get_params());
    CHECK(max_rel_err(grad, fd) < 1e-5);
  }
}

TEST_CASE("score at the mode zeroes the mean-path gradient") {
  PolicyParams p = small_mlp(37, 2, 2);
  const VecD x = {0.2, -0.6};
  const VecD mode = p.mean_net.forward(x);  // pre-squash mean
  const VecD grad = log_prob_grad(p, x, 0.0, mode);
  const std::size_t net_n = p.mean_net.param_count();
  for (std::size_t i = 0; i < net_n; ++i) CHECK(grad[i] == 0.0);
  // the scale entries sit at the known stationary value
  CHECK(grad[net_n] == -1.0);
  CHECK(grad[net_n + 1] == -1.0);
}

TEST_CASE("scale gradient follows the closed-form gaussian score") {
  PolicyParams p = make_linear_policy(1, 1, {-9.0}, {9.0}, 1, 4.0, -0.4);
  p.k_knots[0](0, 0) = 0.5;
  p.v_knots[0] = {0.1};
  const VecD x = {2.0};
  const double mean = mean_action(p, x, 0.0)[0];
  const double eps = 0.37;
  const VecD pre = {mean + eps};

  auto ls_grad_at = [&](double log_std) {
    PolicyParams q = p;
    q.log_std = {log_std};
    const VecD g = log_prob_grad(q, x, 0.0, pre);
    return g[g.size() - 1];
  };
  const double s1 = std::exp(-0.4);
  CHECK(ls_grad_at(-0.4) == doctest::Approx(eps * eps / (s1 * s1) - 1.0).epsilon(1e-12));
  // doubling the scale quarters the quadratic term
  const double s2 = 2.0 * s1;
  CHECK(ls_grad_at(-0.4 + std::log(2.0)) ==
        doctest::Approx(eps * eps / (s2 * s2) - 1.0).epsilon(1e-12));
}

TEST_CASE("score function averages to zero over sampled actions") {
  PolicyParams p = small_mlp(41, 1, 1);
  const VecD x = {0.5};
  Rng rng(42);
  const std::size_t n = 100000;
  const std::size_t d = p.param_count();
  VecD sum(d, 0.0), sum_sq(d, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const PolicySample s = act(p, x, 0.0, std::nullopt, rng);
    const VecD g = log_prob_grad(p, x, 0.0, s.pre_squash);
    for (std::size_t i = 0; i < d; ++i) {
      sum[i] += g[i];
      sum_sq[i] += g[i] * g[i];
    }
  }
  double norm_sq = 0.0, se_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double mean = sum[i] / n;
    norm_sq += mean * mean;
    se_sq += (sum_sq[i] / n - mean * mean) / static_cast<double>(n);
  }
  CHECK(std::sqrt(norm_sq) < 3.0 * std::sqrt(se_sq));
}

TEST_CASE("sampled actions never leave the bounds") {
  PolicyParams p = small_mlp(43, 1, 1, kLogStdMax);
  Rng rng(44);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < 1000000; ++k) {
    const VecD x = {rng.uniform(-3.0, 3.0)};
    const PolicySample s = act(p, x, 0.0, std::nullopt, rng);
    const double a = s.action.values[0];
    if (!(a >= p.action_lo[0] && a <= p.action_hi[0])) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("log std stays clamped through set_params") {
  PolicyParams p = small_mlp(47, 1, 1);
  VecD theta = p.get_params();
  theta[theta.size() - 1] = -50.0;
  p.set_params(theta);
  CHECK(p.log_std[0] == kLogStdMin);
  theta[theta.size() - 1] = 7.0;
  p.set_params(theta);
  CHECK(p.log_std[0] == kLogStdMax);
  CHECK_THROWS(p.set_params(VecD(3, 0.0)));
}

TEST_CASE("parameter flattening round-trips") {
  for (int which = 0; which < 2; ++which) {
    PolicyParams p = which == 0
                         ? small_mlp(53, 3, 2)
                         : make_linear_policy(3, 2, VecD(2, -9.0), VecD(2, 9.0), 4, 4.0, -0.5);
    Rng rng(54);
    VecD theta = p.get_params();
    for (double& v : theta) v = rng.uniform(-0.9, 0.9);
    p.set_params(theta);
    const VecD back = p.get_params();
    REQUIRE(back.size() == theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) CHECK(back[i] == theta[i]);
  }
}

TEST_CASE("json serialization round-trips bitwise") {
  for (int which = 0; which < 2; ++which) {
    PolicyParams p;
    if (which == 0) {
      p = small_mlp(59, 2, 1);
    } else {
      p = make_linear_policy(2, 1, {-5.0}, {5.0}, 3, 4.0, -0.5);
      Rng rng(60);
      VecD theta = p.get_params();
      for (double& v : theta) v = rng.uniform(-1.0, 1.0);
      p.set_params(theta);
    }
    const PolicyParams q = policy_from_json(policy_to_json(p));
    CHECK(q.kind == p.kind);
    CHECK(q.state_dim == p.state_dim);
    CHECK(q.action_dim == p.action_dim);
    const VecD a = p.get_params(), b = q.get_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    Rng rng(61);
    const VecD x = random_state(rng, p.state_dim);
    const VecD ma = mean_action(p, x, 0.7), mb = mean_action(q, x, 0.7);
    for (std::size_t i = 0; i < ma.size(); ++i) CHECK(ma[i] == mb[i]);
  }
}
