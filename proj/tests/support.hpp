#ifndef MBMRL_TESTS_SUPPORT_HPP_
#define MBMRL_TESTS_SUPPORT_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "mbmrl/tensor.hpp"

namespace mbmrl::testing {

// central finite differences, independent oracle for every gradient check
inline VecD fd_grad(const std::function<double(const VecD&)>& f, VecD x, double h = 1e-5) {
  VecD g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double a, double b, double floor_scale = 1e-3) {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor_scale});
  return std::fabs(a - b) / denom;
}

inline double max_rel_err(const VecD& a, const VecD& b, double floor_scale = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, rel_err(a[i], b[i], floor_scale));
  return worst;
}

}  // namespace mbmrl::testing

#endif  // MBMRL_TESTS_SUPPORT_HPP_
