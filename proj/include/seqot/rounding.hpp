#pragma once

// Marginal repair: turns a near-feasible matrix into one with exactly the
// requested row and column sums, moving at most
// 2 (||P 1 - a||_1 + ||P^T 1 - b||_1) of L1 mass.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/metrics.hpp"
#include "seqot/plans.hpp"
#include "seqot/types.hpp"

#include <algorithm>
#include <cmath>

namespace seqot {

struct RoundingResult {
  Matrix rounded;
  double l1_change = 0.0;  // ||P - rounded||_1
  double bound = 0.0;      // 2 (||P 1 - a||_1 + ||P^T 1 - b||_1)
};

namespace detail {

inline void require_distribution(const Vector& v, const char* name) {
  if (!v.allFinite() || (v.size() > 0 && v.minCoeff() < 0.0) || std::abs(v.sum() - 1.0) > kMarginalSumTolerance) {
    throw Error(Errc::TargetNotDistribution, std::string(name) + " is not a probability vector");
  }
}

}  // namespace detail

/// Three passes: shrink rows that exceed a, shrink columns that exceed b,
/// then add the rank-one correction err_r err_c^T / ||err_r||_1.
inline RoundingResult round_to_feasible(const Matrix& plan, const Vector& a, const Vector& b) {
  if (plan.rows() != a.size() || plan.cols() != b.size()) {
    throw Error(Errc::LengthMismatch, "plan shape does not match the target marginals");
  }
  detail::require_distribution(a, "a");
  detail::require_distribution(b, "b");
  if (!plan.allFinite() || (plan.size() > 0 && plan.minCoeff() < 0.0)) {
    throw Error(Errc::InvalidArgument, "plan must be nonnegative and finite");
  }
  if (!(plan.sum() > 0.0)) throw Error(Errc::ZeroMassInput, "plan has zero total mass");

  const Vector rows0 = plan.rowwise().sum();
  const Vector cols0 = plan.colwise().sum().transpose();

  Matrix out = plan;
  for (Index i = 0; i < out.rows(); ++i) {
    if (rows0[i] > a[i]) out.row(i) *= a[i] / rows0[i];
  }
  const Vector cols1 = out.colwise().sum().transpose();
  for (Index j = 0; j < out.cols(); ++j) {
    if (cols1[j] > b[j]) out.col(j) *= b[j] / cols1[j];
  }
  // Clamped: after the scaling passes both errors are nonnegative up to rounding.
  const Vector err_r = (a - out.rowwise().sum()).cwiseMax(0.0);
  const Vector err_c = (b - out.colwise().sum().transpose()).cwiseMax(0.0);
  const double err_mass = err_r.cwiseAbs().sum();
  if (err_mass > 0.0) out.noalias() += err_r * err_c.transpose() / err_mass;

  RoundingResult res;
  res.l1_change = (plan - out).cwiseAbs().sum();
  res.bound = 2.0 * ((rows0 - a).cwiseAbs().sum() + (cols0 - b).cwiseAbs().sum());
  res.rounded = std::move(out);
  return res;
}

/// Rounds the two half-step plans onto (a, s) and (s, b), where s is their
/// shared boundary marginal, giving a pair that satisfies every chain
/// constraint.
inline PlanSet feasible_pair_m2(const PlanSet& half, const Problem& p) {
  if (half.plans.size() != 2 || p.costs.size() != 2) {
    throw Error(Errc::WrongChainLength, "feasible_pair_m2 needs two plans");
  }
  Vector s = half.plans[0].colwise().sum().transpose();
  // s carries rounding noise of the half-step normalization; renormalize so it
  // is an exact target.
  s /= s.sum();
  PlanSet out{{}, PlanKind::Rounded, half.iteration};
  out.plans.push_back(round_to_feasible(half.plans[0], p.a, s).rounded);
  out.plans.push_back(round_to_feasible(half.plans[1], s, p.b).rounded);
  return out;
}

}  // namespace seqot
