#pragma once

// Distance and contraction functionals: Hilbert projective metric, Birkhoff
// contraction coefficient, KL divergence, L1 distance.

#include "seqot/error.hpp"
#include "seqot/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqot {

namespace detail {

inline void require_same_length(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw Error(Errc::LengthMismatch,
                "lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()) + " differ");
  }
}

inline void require_positive(const Vector& x) {
  for (Index i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
      throw Error(Errc::NonPositiveEntry, "entry " + std::to_string(i) + " is not strictly positive and finite");
    }
  }
}

}  // namespace detail

/// d_H(u, v) = log(max_i u_i/v_i * max_j v_j/u_j) for strictly positive u, v.
inline double hilbert_metric(const Vector& u, const Vector& v) {
  detail::require_same_length(u, v);
  detail::require_positive(u);
  detail::require_positive(v);
  if (u.size() == 0) return 0.0;
  const Vector r = u.cwiseQuotient(v);
  return std::log(r.maxCoeff()) - std::log(r.minCoeff());
}

/// Hilbert metric between exp(log_u) and exp(log_v), computed without
/// leaving log space.
inline double hilbert_metric_log(const Vector& log_u, const Vector& log_v) {
  detail::require_same_length(log_u, log_v);
  if (!log_u.allFinite() || !log_v.allFinite()) {
    throw Error(Errc::NonPositiveEntry, "log-scaled vector has a non-finite entry");
  }
  if (log_u.size() == 0) return 0.0;
  const Vector diff = log_u - log_v;
  return diff.maxCoeff() - diff.minCoeff();
}

/// log gamma(A) from log A, by direct enumeration of all index quadruples.
inline double birkhoff_log_gamma(const Matrix& log_a) {
  if (!log_a.allFinite()) throw Error(Errc::NonPositiveEntry, "matrix has a non-positive or non-finite entry");
  const Index n = log_a.rows();
  const Index m = log_a.cols();
  double best = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < m; ++k)
        for (Index l = 0; l < m; ++l) {
          const double v = log_a(i, k) + log_a(j, l) - log_a(j, k) - log_a(i, l);
          best = std::max(best, v);
        }
  return best;
}

inline Matrix checked_log(const Matrix& a) {
  if (!((a.array() > 0.0).all()) || !a.allFinite()) {
    throw Error(Errc::NonPositiveEntry, "matrix must be strictly positive and finite");
  }
  return a.array().log().matrix();
}

/// gamma(A) = max A_ik A_jl / (A_jk A_il); always >= 1.
inline double birkhoff_gamma(const Matrix& a) { return std::exp(birkhoff_log_gamma(checked_log(a))); }

/// lambda = (sqrt(gamma) - 1) / (sqrt(gamma) + 1) = tanh(log(gamma) / 4).
inline double birkhoff_lambda_from_log_gamma(double log_gamma) { return std::tanh(0.25 * log_gamma); }

inline double birkhoff_lambda(const Matrix& a) {
  return birkhoff_lambda_from_log_gamma(birkhoff_log_gamma(checked_log(a)));
}

/// KL(c || d) = sum_i c_i log(c_i / d_i) with 0 log(0 / x) = 0.
inline double kl_divergence(const Vector& c, const Vector& d) {
  detail::require_same_length(c, d);
  double s = 0.0;
  for (Index i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    if (!(d[i] > 0.0)) {
      throw Error(Errc::ZeroDenominatorWithPositiveMass, "c_" + std::to_string(i) + " > 0 but d_" +
                                                             std::to_string(i) + " is not positive");
    }
    s += c[i] * std::log(c[i] / d[i]);
  }
  return s;
}

inline double l1_distance(const Vector& x, const Vector& y) {
  detail::require_same_length(x, y);
  return (x - y).cwiseAbs().sum();
}

}  // namespace seqot
