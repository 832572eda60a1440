#include "mbmrl/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace mbmrl {

double feedback_norm_sq(const PolicyParams& params, const VecD& x, double t) {
  return policy_state_jacobian(params, x, t).frobenius_sq();
}

double feedforward_norm_sq(const VecD& u, const VecD& u_prev, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("feedforward norm needs dt > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = (u[i] - u_prev[i]) / dt;
    acc += d * d;
  }
  return acc;
}

double energy(const VecD& u) { return norm2_sq(u); }

double regularized_reward(double r, double fb_sq, double ff_sq, double alpha) {
  return r - alpha * (fb_sq + ff_sq);
}

namespace {

// contribution of d fb_sq / d theta for the mlp kind at one state
void add_mlp_feedback_grad(const PolicyParams& params, const VecD& x, VecD& grad) {
  const VecD mu = params.mean_net.forward(x);
  const DenseMatrix jac = params.mean_net.input_jacobian(x);
  VecD mean_upstream(params.action_dim, 0.0);
  for (std::size_t i = 0; i < params.action_dim; ++i) {
    const double half = 0.5 * (params.action_hi[i] - params.action_lo[i]);
    const double th = std::tanh(mu[i]);
    const double one_m = 1.0 - th * th;
    const double g = half * half * one_m * one_m;  // squash factor of row i
    double s_row = 0.0;
    for (std::size_t j = 0; j < params.state_dim; ++j) s_row += jac(i, j) * jac(i, j);

    // g * dS/dtheta
    VecD row_grad;
    params.mean_net.jacobian_row_sqnorm_grad(x, i, &row_grad);
    for (std::size_t p = 0; p < row_grad.size(); ++p) grad[p] += g * row_grad[p];

    // S * dg/dmu_i, chained through the net mean
    const double dg = -4.0 * half * half * th * one_m * one_m;
    mean_upstream[i] = s_row * dg;
  }
  const VecD net_grad = params.mean_net.backward_params(x, mean_upstream);
  for (std::size_t p = 0; p < net_grad.size(); ++p) grad[p] += net_grad[p];
}

// accumulates coef_i * d mean_action_i / d theta into grad
void add_mean_action_grad(const PolicyParams& params, const VecD& x, double t,
                          const VecD& coef, VecD& grad) {
  if (params.kind == PolicyKind::kMlpGaussian) {
    const VecD mu = params.mean_net.forward(x);
    VecD upstream(params.action_dim);
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      const double half = 0.5 * (params.action_hi[i] - params.action_lo[i]);
      const double th = std::tanh(mu[i]);
      upstream[i] = coef[i] * half * (1.0 - th * th);
    }
    const VecD net_grad = params.mean_net.backward_params(x, upstream);
    for (std::size_t p = 0; p < net_grad.size(); ++p) grad[p] += net_grad[p];
    return;
  }
  // linear kind: mean = K(t) x + v(t), distributed over the bracketing knots
  const std::size_t knots = params.k_knots.size();
  const std::size_t k_sz = params.action_dim * params.state_dim;
  const std::size_t v_base = knots * k_sz;
  // mirror k_at/v_at's blend
  double w0 = 1.0, w1 = 0.0;
  std::size_t j0 = 0, j1 = 0;
  if (knots > 1) {
    const double spacing = params.knot_duration / static_cast<double>(knots - 1);
    double s = t;
    if (s < 0.0) s = 0.0;
    if (s > params.knot_duration) s = params.knot_duration;
    std::size_t j = static_cast<std::size_t>(s / spacing);
    if (j >= knots - 1) j = knots - 2;
    const double w = (s - static_cast<double>(j) * spacing) / spacing;
    j0 = j;
    j1 = j + 1;
    w0 = 1.0 - w;
    w1 = w;
  }
  for (std::size_t i = 0; i < params.action_dim; ++i) {
    for (std::size_t j = 0; j < params.state_dim; ++j) {
      const std::size_t off = i * params.state_dim + j;
      grad[j0 * k_sz + off] += w0 * coef[i] * x[j];
      if (j1 != j0) grad[j1 * k_sz + off] += w1 * coef[i] * x[j];
    }
    grad[v_base + j0 * params.action_dim + i] += w0 * coef[i];
    if (j1 != j0) grad[v_base + j1 * params.action_dim + i] += w1 * coef[i];
  }
}

void add_linear_feedback_grad(const PolicyParams& params, double t, VecD& grad) {
  const DenseMatrix k = params.k_at(t);
  const std::size_t knots = params.k_knots.size();
  const std::size_t k_sz = params.action_dim * params.state_dim;
  double w0 = 1.0, w1 = 0.0;
  std::size_t j0 = 0, j1 = 0;
  if (knots > 1) {
    const double spacing = params.knot_duration / static_cast<double>(knots - 1);
    double s = t;
    if (s < 0.0) s = 0.0;
    if (s > params.knot_duration) s = params.knot_duration;
    std::size_t j = static_cast<std::size_t>(s / spacing);
    if (j >= knots - 1) j = knots - 2;
    const double w = (s - static_cast<double>(j) * spacing) / spacing;
    j0 = j;
    j1 = j + 1;
    w0 = 1.0 - w;
    w1 = w;
  }
  for (std::size_t e = 0; e < k.data.size(); ++e) {
    grad[j0 * k_sz + e] += 2.0 * w0 * k.data[e];
    if (j1 != j0) grad[j1 * k_sz + e] += 2.0 * w1 * k.data[e];
  }
}

}  // namespace

VecD attention_term_grad(const PolicyParams& params, const VecD& x, double t,
                         const VecD& x_prev, double t_prev, double dt, bool has_prev) {
  VecD grad(params.param_count(), 0.0);

  if (params.kind == PolicyKind::kMlpGaussian) {
    add_mlp_feedback_grad(params, x, grad);
  } else {
    add_linear_feedback_grad(params, t, grad);
  }

  if (has_prev) {
    if (!(dt > 0.0)) throw std::invalid_argument("attention term grad needs dt > 0");
    const VecD u = mean_action(params, x, t);
    const VecD u_prev = mean_action(params, x_prev, t_prev);
    VecD coef(params.action_dim);
    bool any = false;
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      coef[i] = 2.0 * (u[i] - u_prev[i]) / (dt * dt);
      if (coef[i] != 0.0) any = true;
    }
    if (any) {
      add_mean_action_grad(params, x, t, coef, grad);
      VecD neg(coef);
      for (double& c : neg) c = -c;
      add_mean_action_grad(params, x_prev, t_prev, neg, grad);
    }
  }
  return grad;
}

}  // namespace mbmrl
