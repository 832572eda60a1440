#ifndef MBMRL_TENSOR_HPP_
#define MBMRL_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mbmrl {

using VecD = std::vector<double>;

// Row-major dense matrix of 64-bit floats.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  VecD data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return rows * cols; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double frobenius_sq() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return s;
  }

  // y = A x
  VecD matvec(const VecD& x) const {
    if (x.size() != cols) throw std::invalid_argument("matvec: dimension mismatch");
    VecD y(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = data.data() + i * cols;
      double acc = 0.0;
      for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
    return y;
  }

  // y = A^T x
  VecD matvec_transpose(const VecD& x) const {
    if (x.size() != rows) throw std::invalid_argument("matvec_transpose: dimension mismatch");
    VecD y(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = data.data() + i * cols;
      const double xi = x[i];
      for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * xi;
    }
    return y;
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(const VecD& a, const VecD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2_sq(const VecD& a) { return dot(a, a); }

inline double norm2(const VecD& a) { return std::sqrt(norm2_sq(a)); }

// y += alpha * x
inline void axpy(double alpha, const VecD& x, VecD& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, VecD& x) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(const VecD& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace mbmrl

#endif  // MBMRL_TENSOR_HPP_
