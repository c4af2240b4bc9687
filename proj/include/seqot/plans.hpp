#pragma once

// Plan families built from a scaling state (induced, primed, half-step),
// marginals, the dual objective and the primal objective.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/metrics.hpp"
#include "seqot/scaling.hpp"
#include "seqot/types.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace seqot {

enum class PlanKind { Induced, Primed, HalfStep, Rounded, Exact };

constexpr std::string_view to_string(PlanKind k) noexcept {
  switch (k) {
    case PlanKind::Induced: return "induced";
    case PlanKind::Primed: return "primed";
    case PlanKind::HalfStep: return "halfstep";
    case PlanKind::Rounded: return "rounded";
    case PlanKind::Exact: return "exact";
  }
  return "unknown";
}

struct PlanSet {
  std::vector<Matrix> plans;
  PlanKind kind = PlanKind::Induced;
  std::size_t iteration = 0;

  std::vector<double> masses() const {
    std::vector<double> m;
    m.reserve(plans.size());
    for (const auto& p : plans) m.push_back(p.sum());
    return m;
  }
};

namespace detail {

// exp(row_log_j + log_k_jk + col_log_k)
inline Matrix plan_from_logs(const Vector& row_log, const Matrix& log_k, const Vector& col_log) {
  Matrix out(log_k.rows(), log_k.cols());
  for (Index j = 0; j < out.rows(); ++j)
    for (Index k = 0; k < out.cols(); ++k) out(j, k) = std::exp(row_log[j] + log_k(j, k) + col_log[k]);
  return out;
}

inline Matrix plan_linear(const Vector& left, const Matrix& kernel, const Vector& right) {
  Matrix out = left.asDiagonal() * kernel * right.asDiagonal();
  if (!out.allFinite()) throw Error(Errc::NumericalUnderflow, "plan entry is not finite");
  return out;
}

}  // namespace detail

/// P^(i) = diag(u^(i)) K^(i) diag(1/u^(i+1)) for i < M, and
/// P^(M) = diag(u^(M)) K^(M) diag(u^(M+1)).
inline PlanSet plans_from_state(const ScalingState& s, const GibbsKernels& k) {
  const std::size_t m = k.chain_length();
  if (s.vectors.size() != m + 1) throw Error(Errc::ShapeMismatch, "state has wrong number of vectors");
  PlanSet out{{}, PlanKind::Induced, s.n};
  out.plans.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool last = i + 1 == m;
    if (s.representation == Backend::Linear) {
      const Vector right = last ? s.vectors[i + 1] : Vector(s.vectors[i + 1].cwiseInverse());
      out.plans.push_back(detail::plan_linear(s.vectors[i], k.kernels[i], right));
    } else {
      const Vector row = s.vectors[i] / s.epsilon;
      const Vector col = (last ? 1.0 : -1.0) * s.vectors[i + 1] / s.epsilon;
      out.plans.push_back(detail::plan_from_logs(row, k.log_kernels[i], col));
    }
  }
  return out;
}

/// P'^(1) = diag(u^(n,1)) K^(1) diag(1/u^(n+1,2)), P'^(2) = diag(u^(n+1,2)) K^(2) diag(u^(n,3)).
/// `u2_next` is in the representation of `s_prev`.
inline PlanSet primed_plans(const ScalingState& s_prev, const Vector& u2_next, const GibbsKernels& k) {
  if (k.chain_length() != 2 || s_prev.vectors.size() != 3) {
    throw Error(Errc::WrongChainLength, "primed plans exist for two-link chains only");
  }
  ScalingState mixed = s_prev;
  mixed.vectors[1] = u2_next;
  PlanSet out = plans_from_state(mixed, k);
  out.kind = PlanKind::Primed;
  return out;
}

/// Primed plans divided by their common mass; both have unit mass and share a
/// boundary marginal.
inline PlanSet half_plans(const ScalingState& s_prev, const Vector& u2_next, const GibbsKernels& k) {
  PlanSet out = primed_plans(s_prev, u2_next, k);
  const double mass = out.plans[0].sum();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(Errc::NumericalUnderflow, "primed plan mass is zero");
  for (auto& pl : out.plans) pl /= mass;
  out.kind = PlanKind::HalfStep;
  return out;
}

struct Marginals {
  Vector first_edge;  // P^(1) 1
  Vector last_edge;   // (P^(M))^T 1
  /// For each boundary i: ((P^(i))^T 1, P^(i+1) 1).
  std::vector<std::pair<Vector, Vector>> boundaries;
};

inline Marginals marginals(const PlanSet& ps) {
  Marginals m;
  if (ps.plans.empty()) return m;
  m.first_edge = ps.plans.front().rowwise().sum();
  m.last_edge = ps.plans.back().colwise().sum().transpose();
  for (std::size_t i = 0; i + 1 < ps.plans.size(); ++i) {
    m.boundaries.emplace_back(ps.plans[i].colwise().sum().transpose(), ps.plans[i + 1].rowwise().sum());
  }
  return m;
}

/// The edge marginals of the primed plans, written in terms of the induced
/// plans: P1 (r/c)^(1/2) and P2^T (c/r)^(1/2) with c = P1^T 1, r = P2 1.
inline std::pair<Vector, Vector> corrected_edge_marginals(const PlanSet& induced) {
  if (induced.plans.size() != 2) throw Error(Errc::WrongChainLength, "two plans required");
  const Matrix& p1 = induced.plans[0];
  const Matrix& p2 = induced.plans[1];
  const Vector c = p1.colwise().sum().transpose();
  const Vector r = p2.rowwise().sum();
  if (!((c.array() > 0.0).all()) || !((r.array() > 0.0).all())) {
    throw Error(Errc::NumericalUnderflow, "boundary marginal has a zero entry");
  }
  const Vector ratio = r.cwiseQuotient(c);
  return {p1 * ratio.cwiseSqrt(), p2.transpose() * ratio.cwiseInverse().cwiseSqrt()};
}

/// L(f) = <f^(1), a> + <f^(M+1), b> - epsilon * sum_i ||P^(i)||_1 with f = epsilon log u.
inline double lagrangian_value(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  const PlanSet ps = plans_from_state(s, k);
  double mass = 0.0;
  for (const auto& pl : ps.plans) mass += pl.sum();
  const double eps = s.epsilon;
  double lin = 0.0;
  if (s.representation == Backend::LogDomain) {
    lin = s.vectors.front().dot(p.a) + s.vectors.back().dot(p.b);
  } else {
    lin = eps * (s.log_u(0).dot(p.a) + s.log_u(s.vectors.size() - 1).dot(p.b));
  }
  return lin - eps * mass;
}

struct LagrangianGap {
  double kl_a = 0.0;
  double kl_b = 0.0;
  /// L(next) - L(prev), evaluated directly.
  double direct = 0.0;
};

/// The two KL terms whose epsilon-weighted sum is the dual increase of one step.
inline LagrangianGap lagrangian_gap_kl(const ScalingState& prev, const ScalingState& next, const GibbsKernels& k,
                                       const Problem& p) {
  if (k.chain_length() != 2) throw Error(Errc::WrongChainLength, "two-link chains only");
  const auto [a_half, b_half] = corrected_edge_marginals(plans_from_state(prev, k));
  LagrangianGap g;
  g.kl_a = kl_divergence(p.a, a_half);
  g.kl_b = kl_divergence(p.b, b_half);
  g.direct = lagrangian_value(next, k, p) - lagrangian_value(prev, k, p);
  return g;
}

/// Mass below this is treated as zero in the entropy.
inline constexpr double kEntropyFloor = 1e-300;

/// H(P) = -sum P (log P - 1), with 0 log 0 = 0.
inline double entropy(const Matrix& plan) {
  double h = 0.0;
  for (Index i = 0; i < plan.size(); ++i) {
    const double x = plan.data()[i];
    if (x < kEntropyFloor) continue;
    h -= x * (std::log(x) - 1.0);
  }
  return h;
}

struct ObjectiveValue {
  double cost = 0.0;
  std::optional<double> regularized;
};

inline ObjectiveValue objective(const PlanSet& ps, const Problem& p, std::optional<double> epsilon = std::nullopt) {
  if (ps.plans.size() != p.costs.size()) throw Error(Errc::ShapeMismatch, "plan count differs from cost count");
  ObjectiveValue v;
  double h = 0.0;
  for (std::size_t i = 0; i < ps.plans.size(); ++i) {
    if (ps.plans[i].rows() != p.costs[i].rows() || ps.plans[i].cols() != p.costs[i].cols()) {
      throw Error(Errc::ShapeMismatch, "plan " + std::to_string(i) + " shape differs from its cost");
    }
    v.cost += p.costs[i].cwiseProduct(ps.plans[i]).sum();
    if (epsilon) h += entropy(ps.plans[i]);
  }
  if (epsilon) v.regularized = v.cost - *epsilon * h;
  return v;
}

/// Largest violation of the three chain constraints, in L1.
inline double feasibility_residual(const PlanSet& ps, const Problem& p) {
  const Marginals m = marginals(ps);
  double r = std::max(l1_distance(m.first_edge, p.a), l1_distance(m.last_edge, p.b));
  for (const auto& [left, right] : m.boundaries) r = std::max(r, l1_distance(left, right));
  return r;
}

}  // namespace seqot
