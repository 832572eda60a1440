#include "mbmrl/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mbmrl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kSwish: return "swish";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "swish") return Activation::kSwish;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation: " + name);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kSwish: return x * sigmoid(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

double activate_d1(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kSwish: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

double activate_d2(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::kRelu: return 0.0;
    case Activation::kSwish: {
      const double s = sigmoid(x);
      return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
    }
    case Activation::kIdentity: return 0.0;
  }
  return 0.0;
}

MlpNetwork::MlpNetwork(std::vector<std::size_t> sizes, Activation hidden, Activation output)
    : layer_sizes(std::move(sizes)), hidden_activation(hidden), output_activation(output) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("MlpNetwork: need at least 2 layers");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    if (layer_sizes[l] == 0 || layer_sizes[l + 1] == 0)
      throw std::invalid_argument("MlpNetwork: zero layer size");
    weights.emplace_back(layer_sizes[l + 1], layer_sizes[l]);
    biases.emplace_back(layer_sizes[l + 1], 0.0);
  }
}

std::size_t MlpNetwork::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpNetwork::init_random(Rng& rng) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const double fan_in = static_cast<double>(weights[l].cols);
    const double gain = hidden_activation == Activation::kRelu ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / fan_in);
    for (double& w : weights[l].data) w = rng.normal(0.0, stddev);
    for (double& b : biases[l]) b = 0.0;
  }
}

VecD MlpNetwork::get_params() const {
  VecD flat;
  flat.reserve(param_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data.begin(), weights[l].data.end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void MlpNetwork::set_params(const VecD& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("set_params: size mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double& w : weights[l].data) w = flat[k++];
    for (double& b : biases[l]) b = flat[k++];
  }
}

MlpNetwork::ForwardTape MlpNetwork::forward_tape(const VecD& input) const {
  if (input.size() != input_size())
    throw std::invalid_argument("mlp forward: input dimension mismatch");
  ForwardTape tape;
  tape.post.resize(num_layers() + 1);
  tape.pre.resize(num_layers());
  tape.post[0] = input;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    VecD z = weights[l].matvec(tape.post[l]);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += biases[l][i];
    const Activation act = layer_activation(l);
    VecD a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = activate(act, z[i]);
    tape.pre[l] = std::move(z);
    tape.post[l + 1] = std::move(a);
  }
  return tape;
}

VecD MlpNetwork::forward(const VecD& input) const {
  return forward_tape(input).post.back();
}

VecD MlpNetwork::backward_params(const VecD& input, const VecD& upstream) const {
  return backward_params(input, upstream, nullptr);
}

VecD MlpNetwork::backward_params(const VecD& input, const VecD& upstream,
                                 VecD* input_grad) const {
  if (upstream.size() != output_size())
    throw std::invalid_argument("mlp backward: upstream dimension mismatch");
  const ForwardTape tape = forward_tape(input);
  const std::size_t L = num_layers();

  VecD grad(param_count(), 0.0);
  // per-layer offsets into the flat gradient
  std::vector<std::size_t> offset(L);
  {
    std::size_t k = 0;
    for (std::size_t l = 0; l < L; ++l) {
      offset[l] = k;
      k += weights[l].size() + biases[l].size();
    }
  }

  VecD delta(upstream.size());
  {
    const Activation act = layer_activation(L - 1);
    for (std::size_t i = 0; i < delta.size(); ++i)
      delta[i] = upstream[i] * activate_d1(act, tape.pre[L - 1][i]);
  }
  for (std::size_t l = L; l-- > 0;) {
    const VecD& a_in = tape.post[l];
    double* wg = grad.data() + offset[l];
    double* bg = wg + weights[l].size();
    const std::size_t cols = weights[l].cols;
    for (std::size_t i = 0; i < weights[l].rows; ++i) {
      const double d = delta[i];
      double* wrow = wg + i * cols;
      for (std::size_t j = 0; j < cols; ++j) wrow[j] += d * a_in[j];
      bg[i] += d;
    }
    if (l > 0) {
      VecD next = weights[l].matvec_transpose(delta);
      const Activation act = layer_activation(l - 1);
      for (std::size_t i = 0; i < next.size(); ++i)
        next[i] *= activate_d1(act, tape.pre[l - 1][i]);
      delta = std::move(next);
    } else if (input_grad) {
      *input_grad = weights[0].matvec_transpose(delta);
    }
  }
  return grad;
}

DenseMatrix MlpNetwork::input_jacobian(const VecD& input) const {
  if (input.size() != input_size())
    throw std::invalid_argument("mlp jacobian: input dimension mismatch");
  const ForwardTape tape = forward_tape(input);
  const std::size_t L = num_layers();
  const std::size_t m = output_size();
  const std::size_t n = input_size();

  DenseMatrix jac(m, n);
  for (std::size_t r = 0; r < m; ++r) {
    VecD delta(m, 0.0);
    delta[r] = activate_d1(layer_activation(L - 1), tape.pre[L - 1][r]);
    for (std::size_t l = L; l-- > 1;) {
      VecD next = weights[l].matvec_transpose(delta);
      const Activation act = layer_activation(l - 1);
      for (std::size_t i = 0; i < next.size(); ++i)
        next[i] *= activate_d1(act, tape.pre[l - 1][i]);
      delta = std::move(next);
    }
    const VecD row = weights[0].matvec_transpose(delta);
    for (std::size_t j = 0; j < n; ++j) jac(r, j) = row[j];
  }
  return jac;
}

// S(theta) = ||h||^2 where h = d output_row / d input. The reverse sweep that
// produces h is itself differentiated, which brings in second derivatives of
// the activations.
double MlpNetwork::jacobian_row_sqnorm_grad(const VecD& input, std::size_t row,
                                            VecD* param_grad) const {
  if (row >= output_size()) throw std::invalid_argument("jacobian row out of range");
  const ForwardTape tape = forward_tape(input);
  const std::size_t L = num_layers();

  // reverse tape: r_l = d output_row / d z_l, p_l = W_{l+1}^T r_{l+1}
  std::vector<VecD> r(L), p(L);
  {
    VecD seed(output_size(), 0.0);
    seed[row] = 1.0;
    r[L - 1].assign(output_size(), 0.0);
    r[L - 1][row] = activate_d1(layer_activation(L - 1), tape.pre[L - 1][row]);
    for (std::size_t l = L - 1; l-- > 0;) {
      p[l] = weights[l + 1].matvec_transpose(r[l + 1]);
      const Activation act = layer_activation(l);
      r[l].resize(p[l].size());
      for (std::size_t i = 0; i < p[l].size(); ++i)
        r[l][i] = activate_d1(act, tape.pre[l][i]) * p[l][i];
    }
  }
  const VecD h = weights[0].matvec_transpose(r[0]);
  const double sqnorm = norm2_sq(h);
  if (!param_grad) return sqnorm;

  param_grad->assign(param_count(), 0.0);
  std::vector<std::size_t> offset(L);
  {
    std::size_t k = 0;
    for (std::size_t l = 0; l < L; ++l) {
      offset[l] = k;
      k += weights[l].size() + biases[l].size();
    }
  }
  auto wgrad = [&](std::size_t l) { return param_grad->data() + offset[l]; };
  auto bgrad = [&](std::size_t l) { return param_grad->data() + offset[l] + weights[l].size(); };

  // adjoints over the reverse tape
  std::vector<VecD> zbar(L);
  for (std::size_t l = 0; l < L; ++l) zbar[l].assign(tape.pre[l].size(), 0.0);

  VecD hbar(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) hbar[i] = 2.0 * h[i];

  // h = W_0^T r_0
  VecD rbar = weights[0].matvec(hbar);
  {
    double* wg = wgrad(0);
    const std::size_t cols = weights[0].cols;
    for (std::size_t o = 0; o < weights[0].rows; ++o) {
      const double ro = r[0][o];
      double* wrow = wg + o * cols;
      for (std::size_t i = 0; i < cols; ++i) wrow[i] += ro * hbar[i];
    }
  }

  for (std::size_t l = 0; l + 1 < L; ++l) {
    // r_l = act'(z_l) . p_l
    const Activation act = layer_activation(l);
    VecD pbar(p[l].size());
    for (std::size_t i = 0; i < p[l].size(); ++i) {
      const double z = tape.pre[l][i];
      pbar[i] = activate_d1(act, z) * rbar[i];
      zbar[l][i] += activate_d2(act, z) * p[l][i] * rbar[i];
    }
    // p_l = W_{l+1}^T r_{l+1}
    {
      double* wg = wgrad(l + 1);
      const std::size_t cols = weights[l + 1].cols;
      for (std::size_t o = 0; o < weights[l + 1].rows; ++o) {
        const double ro = r[l + 1][o];
        double* wrow = wg + o * cols;
        for (std::size_t i = 0; i < cols; ++i) wrow[i] += ro * pbar[i];
      }
    }
    rbar = weights[l + 1].matvec(pbar);
  }
  // top of the reverse tape: r_{L-1} = act'(z_{L-1}) . e_row
  {
    const Activation act = layer_activation(L - 1);
    zbar[L - 1][row] += activate_d2(act, tape.pre[L - 1][row]) * rbar[row];
  }

  // adjoints over the forward tape
  for (std::size_t l = L; l-- > 0;) {
    const VecD& a_in = tape.post[l];
    double* wg = wgrad(l);
    double* bg = bgrad(l);
    const std::size_t cols = weights[l].cols;
    for (std::size_t o = 0; o < weights[l].rows; ++o) {
      const double zb = zbar[l][o];
      if (zb == 0.0) continue;
      double* wrow = wg + o * cols;
      for (std::size_t j = 0; j < cols; ++j) wrow[j] += zb * a_in[j];
      bg[o] += zb;
    }
    if (l > 0) {
      const VecD abar = weights[l].matvec_transpose(zbar[l]);
      const Activation act = layer_activation(l - 1);
      for (std::size_t i = 0; i < abar.size(); ++i)
        zbar[l - 1][i] += activate_d1(act, tape.pre[l - 1][i]) * abar[i];
    }
  }
  return sqnorm;
}

}  // namespace mbmrl
