#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace seqot {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// Dense row-major storage for costs, kernels and plans.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

/// Max-shifted log(sum(exp(x))). Returns -inf for an empty or all -inf input.
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += std::exp(x.derived().coeff(i) - m);
  return m + std::log(s);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail
}  // namespace seqot
