#pragma once

// Scaling-vector state and the Sinkhorn updates for sequentially composed
// transport. Vectors are indexed 0..M (u^(1)..u^(M+1)), kernels 0..M-1.
//
// One iteration first refreshes every boundary vector u^(2..M) from the
// previous state, then the two edge vectors u^(1), u^(M+1) from the fresh
// boundary values. The order is fixed; the convergence guarantees rely on it.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/types.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace seqot {

/// Linear representation stores u; LogDomain stores f = epsilon * log(u).
struct ScalingState {
  Backend representation = Backend::Linear;
  double epsilon = 1.0;
  std::vector<Vector> vectors;
  std::size_t n = 0;

  std::size_t chain_length() const noexcept { return vectors.empty() ? 0 : vectors.size() - 1; }

  /// log u^(i+1), whatever the representation.
  Vector log_u(std::size_t i) const {
    if (representation == Backend::Linear) return vectors[i].array().log().matrix();
    return vectors[i] / epsilon;
  }

  std::vector<Vector> log_scaling() const {
    std::vector<Vector> out;
    out.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) out.push_back(log_u(i));
    return out;
  }

  ScalingState to_linear() const {
    if (representation == Backend::Linear) return *this;
    ScalingState s{Backend::Linear, epsilon, {}, n};
    s.vectors.reserve(vectors.size());
    for (const auto& f : vectors) s.vectors.push_back((f / epsilon).array().exp().matrix());
    return s;
  }

  ScalingState to_log() const {
    if (representation == Backend::LogDomain) return *this;
    ScalingState s{Backend::LogDomain, epsilon, {}, n};
    s.vectors.reserve(vectors.size());
    for (const auto& u : vectors) s.vectors.push_back(epsilon * u.array().log().matrix());
    return s;
  }
};

/// u^(1) = 1 / ||K^(1)||_1, u^(M+1) = 1 / ||K^(M)||_1, interior vectors all ones.
inline ScalingState init_state(const GibbsKernels& k, Backend representation = Backend::Linear) {
  const std::size_t m = k.chain_length();
  if (m < 2) throw Error(Errc::WrongChainLength, "need at least two kernels");
  ScalingState s{representation, k.epsilon, {}, 0};
  s.vectors.reserve(m + 1);
  s.vectors.emplace_back(k.kernels.front().rows());
  for (std::size_t i = 0; i < m; ++i) s.vectors.emplace_back(k.kernels[i].cols());

  if (representation == Backend::Linear) {
    for (auto& v : s.vectors) v.setOnes();
    const double first = k.kernels.front().sum();
    const double last = k.kernels.back().sum();
    if (!(first > 0.0) || !(last > 0.0)) throw Error(Errc::NumericalUnderflow, "kernel mass underflowed to zero");
    s.vectors.front().setConstant(1.0 / first);
    s.vectors.back().setConstant(1.0 / last);
  } else {
    for (auto& v : s.vectors) v.setZero();
    s.vectors.front().setConstant(-k.epsilon * detail::log_sum_exp(k.log_kernels.front().reshaped()));
    s.vectors.back().setConstant(-k.epsilon * detail::log_sum_exp(k.log_kernels.back().reshaped()));
  }
  return s;
}

namespace detail {

inline void require_positive_denominator(const Vector& den, const char* where) {
  for (Index j = 0; j < den.size(); ++j) {
    if (!(den[j] > 0.0) || !std::isfinite(den[j])) {
      throw Error(Errc::NumericalUnderflow, std::string(where) + ": denominator entry " + std::to_string(j) +
                                                " is zero or non-finite");
    }
  }
}

inline void require_usable_scaling(const Vector& u, const char* where) {
  for (Index j = 0; j < u.size(); ++j) {
    if (!(u[j] > 0.0) || !std::isfinite(u[j])) {
      throw Error(Errc::NumericalUnderflow, std::string(where) + ": scaling entry " + std::to_string(j) +
                                                " left the positive finite range");
    }
  }
}

inline void check_shapes(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  const std::size_t m = k.chain_length();
  if (m < 2) throw Error(Errc::WrongChainLength, "need at least two kernels");
  if (s.vectors.size() != m + 1) throw Error(Errc::ShapeMismatch, "state has wrong number of vectors");
  for (std::size_t i = 0; i < m; ++i) {
    if (s.vectors[i].size() != k.kernels[i].rows() || s.vectors[i + 1].size() != k.kernels[i].cols()) {
      throw Error(Errc::ShapeMismatch, "state vector " + std::to_string(i) + " does not match its kernel");
    }
  }
  if (p.a.size() != s.vectors.front().size() || p.b.size() != s.vectors.back().size()) {
    throw Error(Errc::ShapeMismatch, "marginals do not match the state");
  }
}

// ---- linear representation ----

inline Vector linear_boundary(const ScalingState& s, const GibbsKernels& k, std::size_t q) {
  const std::size_t m = k.chain_length();
  const Vector num = k.kernels[q - 1].transpose() * s.vectors[q - 1];
  Vector den;
  if (q + 1 < m) {
    den = k.kernels[q] * s.vectors[q + 1].cwiseInverse();
  } else {
    den = k.kernels[q] * s.vectors[q + 1];
  }
  require_positive_denominator(den, "boundary update");
  Vector out = num.cwiseQuotient(den).cwiseSqrt();
  require_usable_scaling(out, "boundary update");
  return out;
}

inline Vector linear_first_edge(const Vector& u2, const GibbsKernels& k, const Vector& a) {
  const Vector den = k.kernels.front() * u2.cwiseInverse();
  require_positive_denominator(den, "first edge update");
  Vector out = a.cwiseQuotient(den);
  require_usable_scaling(out, "first edge update");
  return out;
}

inline Vector linear_last_edge(const Vector& u_m, const GibbsKernels& k, const Vector& b) {
  const Vector den = k.kernels.back().transpose() * u_m;
  require_positive_denominator(den, "last edge update");
  Vector out = b.cwiseQuotient(den);
  require_usable_scaling(out, "last edge update");
  return out;
}

// ---- log representation ----

inline Vector log_boundary(const ScalingState& s, const GibbsKernels& k, std::size_t q) {
  const std::size_t m = k.chain_length();
  const double eps = s.epsilon;
  const Matrix& lk_prev = k.log_kernels[q - 1];  // m_{q-1} x m_q
  const Matrix& lk_next = k.log_kernels[q];      // m_q x m_{q+1}
  const Vector g_prev = s.vectors[q - 1] / eps;
  const Vector g_next = (q + 1 < m) ? Vector(-s.vectors[q + 1] / eps) : Vector(s.vectors[q + 1] / eps);
  Vector out(lk_prev.cols());
  for (Index j = 0; j < out.size(); ++j) {
    const double num = log_sum_exp(g_prev + lk_prev.col(j));
    const double den = log_sum_exp(g_next + lk_next.row(j).transpose());
    out[j] = 0.5 * eps * (num - den);
  }
  return out;
}

inline Vector log_first_edge(const Vector& f2, const GibbsKernels& k, const Vector& a, double eps) {
  const Matrix& lk = k.log_kernels.front();
  const Vector g = -f2 / eps;
  Vector out(lk.rows());
  for (Index j = 0; j < out.size(); ++j) {
    out[j] = eps * std::log(a[j]) - eps * log_sum_exp(g + lk.row(j).transpose());
  }
  return out;
}

inline Vector log_last_edge(const Vector& f_m, const GibbsKernels& k, const Vector& b, double eps) {
  const Matrix& lk = k.log_kernels.back();
  const Vector g = f_m / eps;
  Vector out(lk.cols());
  for (Index j = 0; j < out.size(); ++j) {
    out[j] = eps * std::log(b[j]) - eps * log_sum_exp(g + lk.col(j));
  }
  return out;
}

}  // namespace detail

/// Refreshes u^(2..M) from the current state; edge vectors and n are untouched.
inline ScalingState update_boundaries(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  detail::check_shapes(s, k, p);
  const std::size_t m = k.chain_length();
  ScalingState out = s;
  for (std::size_t q = 1; q < m; ++q) {
    out.vectors[q] = s.representation == Backend::Linear ? detail::linear_boundary(s, k, q)
                                                         : detail::log_boundary(s, k, q);
  }
  return out;
}

/// Refreshes u^(1) and u^(M+1) from the boundary vectors already in `s`.
inline ScalingState update_edges(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  const std::size_t m = k.chain_length();
  ScalingState out = s;
  if (s.representation == Backend::Linear) {
    out.vectors[0] = detail::linear_first_edge(s.vectors[1], k, p.a);
    out.vectors[m] = detail::linear_last_edge(s.vectors[m - 1], k, p.b);
  } else {
    out.vectors[0] = detail::log_first_edge(s.vectors[1], k, p.a, s.epsilon);
    out.vectors[m] = detail::log_last_edge(s.vectors[m - 1], k, p.b, s.epsilon);
  }
  return out;
}

/// One iteration for any M >= 2 in the linear representation.
inline ScalingState step_general(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  if (s.representation != Backend::Linear) throw Error(Errc::InvalidArgument, "step_general needs a linear state");
  ScalingState out = update_edges(update_boundaries(s, k, p), k, p);
  out.n = s.n + 1;
  return out;
}

/// The M = 2 iteration written out directly:
///   u2 <- sqrt(K1^T u1 / (K2 u3)),  u1 <- a / (K1 (1/u2)),  u3 <- b / (K2^T u2).
inline ScalingState step_m2(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  if (k.chain_length() != 2) throw Error(Errc::WrongChainLength, "step_m2 needs exactly two kernels");
  if (s.representation != Backend::Linear) throw Error(Errc::InvalidArgument, "step_m2 needs a linear state");
  detail::check_shapes(s, k, p);
  const Matrix& k1 = k.kernels[0];
  const Matrix& k2 = k.kernels[1];

  const Vector mid_den = k2 * s.vectors[2];
  detail::require_positive_denominator(mid_den, "step_m2 boundary");
  const Vector u2 = (k1.transpose() * s.vectors[0]).cwiseQuotient(mid_den).cwiseSqrt();
  detail::require_usable_scaling(u2, "step_m2 boundary");

  const Vector den1 = k1 * u2.cwiseInverse();
  detail::require_positive_denominator(den1, "step_m2 first edge");
  const Vector den3 = k2.transpose() * u2;
  detail::require_positive_denominator(den3, "step_m2 last edge");

  ScalingState out{Backend::Linear, s.epsilon, {p.a.cwiseQuotient(den1), u2, p.b.cwiseQuotient(den3)}, s.n + 1};
  detail::require_usable_scaling(out.vectors[0], "step_m2 first edge");
  detail::require_usable_scaling(out.vectors[2], "step_m2 last edge");
  return out;
}

/// One iteration on the potentials f = epsilon log u with max-shifted log-sum-exp.
inline ScalingState step_log_domain(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  if (s.representation != Backend::LogDomain) {
    throw Error(Errc::InvalidArgument, "step_log_domain needs a log-domain state");
  }
  ScalingState out = update_edges(update_boundaries(s, k, p), k, p);
  out.n = s.n + 1;
  return out;
}

/// Dispatches on the state's representation.
inline ScalingState step(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  return s.representation == Backend::Linear ? step_general(s, k, p) : step_log_domain(s, k, p);
}

}  // namespace seqot
