#ifndef MBMRL_MLP_HPP_
#define MBMRL_MLP_HPP_

#include <cstddef>
#include <vector>

#include "mbmrl/rng.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

enum class Activation { kTanh, kRelu, kSwish, kIdentity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double activate(Activation a, double x);
double activate_d1(Activation a, double x);   // first derivative
double activate_d2(Activation a, double x);   // second derivative

// Fully-connected network, 64-bit floats, exact gradients.
//
// layer_sizes = {n_in, h_1, ..., n_out}; weights[l] has shape
// (layer_sizes[l+1] x layer_sizes[l]). Hidden layers use hidden_activation,
// the last layer uses output_activation. Parameters flatten in layer order,
// each layer's weight matrix (row-major) followed by its bias.
struct MlpNetwork {
  std::vector<std::size_t> layer_sizes;
  std::vector<DenseMatrix> weights;
  std::vector<VecD> biases;
  Activation hidden_activation = Activation::kTanh;
  Activation output_activation = Activation::kIdentity;

  MlpNetwork() = default;
  MlpNetwork(std::vector<std::size_t> sizes, Activation hidden, Activation output);

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t param_count() const;

  void init_random(Rng& rng);

  VecD get_params() const;
  void set_params(const VecD& flat);

  VecD forward(const VecD& input) const;

  // gradient of (upstream . output) with respect to every parameter
  VecD backward_params(const VecD& input, const VecD& upstream) const;

  // same contraction, but also returns d(upstream . output)/d(input)
  VecD backward_params(const VecD& input, const VecD& upstream, VecD* input_grad) const;

  // J[i][j] = d output_i / d input_j, one reverse sweep per output row
  DenseMatrix input_jacobian(const VecD& input) const;

  // S = || d output_row / d input ||^2 and dS/d(params), exact
  // (second-order chain through the reverse sweep)
  double jacobian_row_sqnorm_grad(const VecD& input, std::size_t row, VecD* param_grad) const;

  Activation layer_activation(std::size_t l) const {
    return l + 1 == weights.size() ? output_activation : hidden_activation;
  }

 private:
  struct ForwardTape {
    std::vector<VecD> pre;   // pre[l] = z_l
    std::vector<VecD> post;  // post[l] = a_l, post[0] = input
  };
  ForwardTape forward_tape(const VecD& input) const;
};

}  // namespace mbmrl

#endif  // MBMRL_MLP_HPP_
