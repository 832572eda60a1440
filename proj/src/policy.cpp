#include "mbmrl/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "mbmrl/serialize.hpp"

namespace mbmrl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
constexpr double kLog2 = 0.69314718055994530942;

double softplus(double x) {
  // log(1 + e^x) without overflow on either side
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(1 - tanh(z)^2) in the cancellation-free form
double log_one_minus_tanh_sq(double z) { return 2.0 * (kLog2 - z - softplus(-2.0 * z)); }

double clamp_ls(double v) {
  if (v < kLogStdMin) return kLogStdMin;
  if (v > kLogStdMax) return kLogStdMax;
  return v;
}

// uniform-grid interpolation weights: value = (1-w)*knot[j] + w*knot[j+1]
struct KnotBlend {
  std::size_t j0, j1;
  double w;
};

KnotBlend knot_blend(std::size_t knots, double duration, double t) {
  if (knots == 1) return {0, 0, 0.0};
  const double spacing = duration / static_cast<double>(knots - 1);
  double s = t;
  if (s <= 0.0) return {0, 1, 0.0};
  if (s >= duration) return {knots - 2, knots - 1, 1.0};
  std::size_t j = static_cast<std::size_t>(s / spacing);
  if (j >= knots - 1) j = knots - 2;
  const double w = (s - static_cast<double>(j) * spacing) / spacing;
  return {j, j + 1, w};
}

}  // namespace

const char* policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kMlpGaussian: return "mlp_gaussian";
    case PolicyKind::kLinearTimeVarying: return "linear_time_varying";
  }
  return "unknown";
}

PolicyKind policy_kind_from_name(const std::string& name) {
  if (name == "mlp_gaussian") return PolicyKind::kMlpGaussian;
  if (name == "linear_time_varying") return PolicyKind::kLinearTimeVarying;
  throw std::invalid_argument("unknown policy kind: " + name);
}

std::size_t PolicyParams::param_count() const {
  if (kind == PolicyKind::kMlpGaussian) return mean_net.param_count() + log_std.size();
  std::size_t n = 0;
  for (const auto& k : k_knots) n += k.data.size();
  for (const auto& v : v_knots) n += v.size();
  return n + log_std.size();
}

VecD PolicyParams::get_params() const {
  VecD flat;
  flat.reserve(param_count());
  if (kind == PolicyKind::kMlpGaussian) {
    flat = mean_net.get_params();
  } else {
    for (const auto& k : k_knots) flat.insert(flat.end(), k.data.begin(), k.data.end());
    for (const auto& v : v_knots) flat.insert(flat.end(), v.begin(), v.end());
  }
  flat.insert(flat.end(), log_std.begin(), log_std.end());
  return flat;
}

void PolicyParams::set_params(const VecD& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("policy parameter size mismatch");
  std::size_t pos = 0;
  if (kind == PolicyKind::kMlpGaussian) {
    const std::size_t net_n = mean_net.param_count();
    mean_net.set_params(VecD(flat.begin(), flat.begin() + net_n));
    pos = net_n;
  } else {
    for (auto& k : k_knots)
      for (double& e : k.data) e = flat[pos++];
    for (auto& v : v_knots)
      for (double& e : v) e = flat[pos++];
  }
  for (double& e : log_std) e = flat[pos++];
  clamp_log_std();
}

void PolicyParams::clamp_log_std() {
  for (double& e : log_std) e = clamp_ls(e);
}

DenseMatrix PolicyParams::k_at(double t) const {
  if (k_knots.size() == 1) return k_knots[0];
  const KnotBlend b = knot_blend(k_knots.size(), knot_duration, t);
  if (b.w == 0.0) return k_knots[b.j0];
  if (b.w == 1.0) return k_knots[b.j1];
  DenseMatrix out = k_knots[b.j0];
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (1.0 - b.w) * out.data[i] + b.w * k_knots[b.j1].data[i];
  return out;
}

VecD PolicyParams::v_at(double t) const {
  if (v_knots.size() == 1) return v_knots[0];
  const KnotBlend b = knot_blend(v_knots.size(), knot_duration, t);
  if (b.w == 0.0) return v_knots[b.j0];
  if (b.w == 1.0) return v_knots[b.j1];
  VecD out = v_knots[b.j0];
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - b.w) * out[i] + b.w * v_knots[b.j1][i];
  return out;
}

PolicyParams make_mlp_policy(std::size_t state_dim, std::size_t action_dim,
                             const VecD& action_lo, const VecD& action_hi,
                             const std::vector<std::size_t>& hidden,
                             Activation activation, double log_std_init, Rng& rng) {
  PolicyParams p;
  p.kind = PolicyKind::kMlpGaussian;
  p.state_dim = state_dim;
  p.action_dim = action_dim;
  p.action_lo = action_lo;
  p.action_hi = action_hi;
  std::vector<std::size_t> sizes = {state_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_dim);
  p.mean_net = MlpNetwork(sizes, activation, Activation::kIdentity);
  p.mean_net.init_random(rng);
  p.log_std.assign(action_dim, clamp_ls(log_std_init));
  return p;
}

PolicyParams make_linear_policy(std::size_t state_dim, std::size_t action_dim,
                                const VecD& action_lo, const VecD& action_hi,
                                std::size_t knots, double knot_duration,
                                double log_std_init) {
  if (knots < 1) throw std::invalid_argument("linear policy needs >= 1 knot");
  if (!(knot_duration > 0.0))
    throw std::invalid_argument("linear policy knot duration must be > 0");
  PolicyParams p;
  p.kind = PolicyKind::kLinearTimeVarying;
  p.state_dim = state_dim;
  p.action_dim = action_dim;
  p.action_lo = action_lo;
  p.action_hi = action_hi;
  p.k_knots.assign(knots, DenseMatrix(action_dim, state_dim));
  p.v_knots.assign(knots, VecD(action_dim, 0.0));
  p.knot_duration = knot_duration;
  p.log_std.assign(action_dim, clamp_ls(log_std_init));
  return p;
}

PolicySample act(const PolicyParams& params, const VecD& x, double t,
                 const std::optional<VecD>& noise, Rng& rng) {
  PolicySample sample;
  sample.action.time = t;
  if (params.kind == PolicyKind::kMlpGaussian) {
    const VecD mu = params.mean_net.forward(x);
    sample.pre_squash.resize(params.action_dim);
    sample.action.values.resize(params.action_dim);
    double lp = 0.0;
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      const double s = std::exp(params.log_std[i]);
      const double z = mu[i] + s * rng.normal();
      const double half = 0.5 * (params.action_hi[i] - params.action_lo[i]);
      const double center = 0.5 * (params.action_hi[i] + params.action_lo[i]);
      sample.pre_squash[i] = z;
      sample.action.values[i] = center + half * std::tanh(z);
      const double dz = (z - mu[i]) / s;
      lp += -0.5 * dz * dz - params.log_std[i] - kHalfLog2Pi - std::log(half) -
            log_one_minus_tanh_sq(z);
    }
    sample.log_prob = lp;
    return sample;
  }

  // linear kind: pre_squash holds the pre-clamp action so the log-prob can be
  // reconstructed from current parameters
  const DenseMatrix k = params.k_at(t);
  const VecD v = params.v_at(t);
  VecD raw = k.matvec(x);
  double lp = 0.0;
  sample.action.values.resize(params.action_dim);
  for (std::size_t i = 0; i < params.action_dim; ++i) {
    const double s = std::exp(params.log_std[i]);
    const double eps = noise.has_value() ? (*noise)[i] : s * rng.normal();
    raw[i] += v[i] + eps;
    const double e = eps / s;
    lp += -0.5 * e * e - params.log_std[i] - kHalfLog2Pi;
    double a = raw[i];
    if (a < params.action_lo[i]) a = params.action_lo[i];
    if (a > params.action_hi[i]) a = params.action_hi[i];
    sample.action.values[i] = a;
  }
  sample.pre_squash = raw;
  sample.log_prob = lp;
  return sample;
}

VecD mean_action(const PolicyParams& params, const VecD& x, double t) {
  if (params.kind == PolicyKind::kMlpGaussian) {
    const VecD mu = params.mean_net.forward(x);
    VecD out(params.action_dim);
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      const double half = 0.5 * (params.action_hi[i] - params.action_lo[i]);
      const double center = 0.5 * (params.action_hi[i] + params.action_lo[i]);
      out[i] = center + half * std::tanh(mu[i]);
    }
    return out;
  }
  const DenseMatrix k = params.k_at(t);
  const VecD v = params.v_at(t);
  VecD out = k.matvec(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  return out;
}

DenseMatrix policy_state_jacobian(const PolicyParams& params, const VecD& x, double t) {
  if (params.kind == PolicyKind::kLinearTimeVarying) return params.k_at(t);
  const VecD mu = params.mean_net.forward(x);
  DenseMatrix jac = params.mean_net.input_jacobian(x);
  for (std::size_t i = 0; i < params.action_dim; ++i) {
    const double half = 0.5 * (params.action_hi[i] - params.action_lo[i]);
    const double th = std::tanh(mu[i]);
    const double scale = half * (1.0 - th * th);
    for (std::size_t j = 0; j < params.state_dim; ++j) jac(i, j) *= scale;
  }
  return jac;
}

double policy_log_prob(const PolicyParams& params, const VecD& x, double t,
                       const VecD& pre_squash) {
  double lp = 0.0;
  if (params.kind == PolicyKind::kMlpGaussian) {
    const VecD mu = params.mean_net.forward(x);
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      const double s = std::exp(params.log_std[i]);
      const double half = 0.5 * (params.action_hi[i] - params.action_lo[i]);
      const double dz = (pre_squash[i] - mu[i]) / s;
      lp += -0.5 * dz * dz - params.log_std[i] - kHalfLog2Pi - std::log(half) -
            log_one_minus_tanh_sq(pre_squash[i]);
    }
    return lp;
  }
  const VecD mean = mean_action(params, x, t);
  for (std::size_t i = 0; i < params.action_dim; ++i) {
    const double s = std::exp(params.log_std[i]);
    const double e = (pre_squash[i] - mean[i]) / s;
    lp += -0.5 * e * e - params.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

VecD log_prob_grad(const PolicyParams& params, const VecD& x, double t,
                   const VecD& pre_squash) {
  VecD grad(params.param_count(), 0.0);
  if (params.kind == PolicyKind::kMlpGaussian) {
    const VecD mu = params.mean_net.forward(x);
    VecD upstream(params.action_dim);
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      const double s = std::exp(params.log_std[i]);
      upstream[i] = (pre_squash[i] - mu[i]) / (s * s);
    }
    const VecD net_grad = params.mean_net.backward_params(x, upstream);
    std::copy(net_grad.begin(), net_grad.end(), grad.begin());
    const std::size_t base = params.mean_net.param_count();
    for (std::size_t i = 0; i < params.action_dim; ++i) {
      const double s = std::exp(params.log_std[i]);
      const double dz = (pre_squash[i] - mu[i]) / s;
      grad[base + i] = dz * dz - 1.0;
    }
    return grad;
  }

  const VecD mean = mean_action(params, x, t);
  const std::size_t knots = params.k_knots.size();
  const KnotBlend b = knots == 1 ? KnotBlend{0, 0, 0.0}
                                 : knot_blend(knots, params.knot_duration, t);
  const double w0 = knots == 1 ? 1.0 : 1.0 - b.w;
  const double w1 = knots == 1 ? 0.0 : b.w;
  const std::size_t k_sz = params.action_dim * params.state_dim;
  const std::size_t v_base = knots * k_sz;
  const std::size_t ls_base = v_base + knots * params.action_dim;
  for (std::size_t i = 0; i < params.action_dim; ++i) {
    const double s = std::exp(params.log_std[i]);
    const double e = (pre_squash[i] - mean[i]) / s;
    const double coef = e / s;  // d logN / d mean_i = (eps / s^2)
    for (std::size_t j = 0; j < params.state_dim; ++j) {
      const std::size_t row_off = i * params.state_dim + j;
      grad[b.j0 * k_sz + row_off] += w0 * coef * x[j];
      if (w1 != 0.0) grad[b.j1 * k_sz + row_off] += w1 * coef * x[j];
    }
    grad[v_base + b.j0 * params.action_dim + i] += w0 * coef;
    if (w1 != 0.0) grad[v_base + b.j1 * params.action_dim + i] += w1 * coef;
    grad[ls_base + i] = e * e - 1.0;
  }
  return grad;
}

using nlohmann::json;

std::string policy_to_json(const PolicyParams& params) {
  json j;
  j["kind"] = policy_kind_name(params.kind);
  j["state_dim"] = params.state_dim;
  j["action_dim"] = params.action_dim;
  j["action_lo"] = params.action_lo;
  j["action_hi"] = params.action_hi;
  j["log_std"] = params.log_std;
  if (params.kind == PolicyKind::kMlpGaussian) {
    j["mean_net"] = net_to_json(params.mean_net);
  } else {
    json ks = json::array();
    for (const auto& k : params.k_knots) ks.push_back(matrix_to_json(k));
    json vs = json::array();
    for (const auto& v : params.v_knots) vs.push_back(v);
    j["k_knots"] = std::move(ks);
    j["v_knots"] = std::move(vs);
    j["knot_duration"] = params.knot_duration;
  }
  return j.dump(2);
}

PolicyParams policy_from_json(const std::string& text) {
  const json j = json::parse(text);
  PolicyParams p;
  p.kind = policy_kind_from_name(j.at("kind").get<std::string>());
  p.state_dim = j.at("state_dim").get<std::size_t>();
  p.action_dim = j.at("action_dim").get<std::size_t>();
  p.action_lo = j.at("action_lo").get<VecD>();
  p.action_hi = j.at("action_hi").get<VecD>();
  p.log_std = j.at("log_std").get<VecD>();
  if (p.kind == PolicyKind::kMlpGaussian) {
    p.mean_net = net_from_json(j.at("mean_net"));
  } else {
    for (const auto& k : j.at("k_knots")) p.k_knots.push_back(matrix_from_json(k));
    for (const auto& v : j.at("v_knots")) p.v_knots.push_back(v.get<VecD>());
    p.knot_duration = j.at("knot_duration").get<double>();
  }
  p.clamp_log_std();
  return p;
}

}  // namespace mbmrl
