#pragma once

// The solve loop: stopping criteria, traces, contraction diagnostics and the
// iteration budget.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/metrics.hpp"
#include "seqot/plans.hpp"
#include "seqot/rounding.hpp"
#include "seqot/scaling.hpp"
#include "seqot/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace seqot {

/// Edge error of the primed plans, ||a - P'1 1||_1 + ||b - P'2^T 1||_1. Equal to
/// the corrected-marginal form on the induced plans, but stays defined when an
/// induced boundary marginal has a zero entry.
inline double halfstep_residual(const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  if (k.chain_length() != 2) throw Error(Errc::WrongChainLength, "half-step residual is defined for M = 2");
  const PlanSet primed = primed_plans(s, update_boundaries(s, k, p).vectors[1], k);
  const Vector a_half = primed.plans[0].rowwise().sum();
  const Vector b_half = primed.plans[1].colwise().sum().transpose();
  return l1_distance(p.a, a_half) + l1_distance(p.b, b_half);
}

/// max_i ||(P^(i))^T 1 - P^(i+1) 1||_1 over the boundaries of the induced plans.
inline double boundary_residual_of(const PlanSet& induced) {
  double r = 0.0;
  for (std::size_t i = 0; i + 1 < induced.plans.size(); ++i) {
    const Vector left = induced.plans[i].colwise().sum().transpose();
    const Vector right = induced.plans[i + 1].rowwise().sum();
    r = std::max(r, l1_distance(left, right));
  }
  return r;
}

inline double boundary_residual(const ScalingState& s, const GibbsKernels& k, const Problem&) {
  return boundary_residual_of(plans_from_state(s, k));
}

struct TraceRecord {
  std::size_t n = 0;
  std::optional<double> halfstep_residual;  // M = 2 only
  double boundary_residual = 0.0;
  double lagrangian = 0.0;
  std::optional<std::vector<double>> hilbert_to_reference;
};

inline TraceRecord make_trace_record(const ScalingState& s, const GibbsKernels& k, const Problem& p,
                                     const std::vector<Vector>* reference_log_u = nullptr) {
  TraceRecord r;
  r.n = s.n;
  const PlanSet induced = plans_from_state(s, k);
  if (k.chain_length() == 2) r.halfstep_residual = halfstep_residual(s, k, p);
  r.boundary_residual = boundary_residual_of(induced);
  r.lagrangian = lagrangian_value(s, k, p);
  if (reference_log_u) {
    std::vector<double> h;
    h.reserve(s.vectors.size());
    for (std::size_t i = 0; i < s.vectors.size(); ++i) h.push_back(hilbert_metric_log(s.log_u(i), (*reference_log_u)[i]));
    r.hilbert_to_reference = std::move(h);
  }
  return r;
}

enum class SolveStatus { Converged, MaxItersExceeded };

struct SolveReport {
  SolveStatus status = SolveStatus::MaxItersExceeded;
  Criterion criterion = Criterion::HalfStepResidual;
  Backend backend = Backend::LogDomain;
  double epsilon = 0.0;
  std::optional<double> delta;
  double threshold = 0.0;
  double terminal_residual = std::numeric_limits<double>::quiet_NaN();
  /// True when the delta-suboptimality guarantee applies: M = 2 with both epsilon
  /// and the threshold derived from delta.
  bool suboptimality_guarantee = false;

  ScalingState state;
  PlanSet induced;
  std::optional<PlanSet> half;
  std::optional<PlanSet> rounded;
  ObjectiveValue induced_objective;
  std::optional<ObjectiveValue> rounded_objective;

  std::vector<TraceRecord> trace;
  std::vector<std::string> warnings;

  bool converged() const noexcept { return status == SolveStatus::Converged; }
  std::size_t iterations() const noexcept { return state.n; }
};

/// delta / (16 max_i ||C^(i)||_inf); +inf for an all-zero cost chain.
inline double threshold_from_delta(const Problem& p, double delta) {
  const double c = max_cost_norm(p);
  if (c == 0.0) return std::numeric_limits<double>::infinity();
  return delta / (16.0 * c);
}

inline double criterion_residual(Criterion c, const ScalingState& s, const GibbsKernels& k, const Problem& p) {
  return c == Criterion::HalfStepResidual ? halfstep_residual(s, k, p) : boundary_residual(s, k, p);
}

/// Iterates until the configured residual drops to the threshold or the
/// budget runs out. The check runs after each step, so a converged report has
/// n >= 1. Running out of budget is not an error: the report comes back with
/// status MaxItersExceeded and the last state.
inline SolveReport solve(const Problem& p, const SolveConfig& cfg,
                         const std::vector<Vector>* reference_log_u = nullptr) {
  validate_problem(p);
  const std::size_t m = p.chain_length();
  if (!((p.a.array() > 0.0).all()) || !((p.b.array() > 0.0).all())) {
    throw Error(Errc::NonPositiveMarginal, "the iteration needs strictly positive marginals");
  }
  if (cfg.delta && !(*cfg.delta > 0.0)) throw Error(Errc::InvalidConfig, "delta must be positive");
  if (cfg.residual_tolerance && !(*cfg.residual_tolerance >= 0.0)) {
    throw Error(Errc::InvalidConfig, "residual tolerance must be nonnegative");
  }
  if (cfg.criterion == Criterion::HalfStepResidual && m != 2) {
    throw Error(Errc::WrongChainLength, "the half-step criterion is defined for M = 2; use the boundary criterion");
  }
  if (cfg.trace_stride == 0) throw Error(Errc::InvalidConfig, "trace stride must be positive");

  SolveReport rep;
  rep.criterion = cfg.criterion;
  rep.backend = cfg.backend;
  rep.delta = cfg.delta;

  if (cfg.epsilon) {
    rep.epsilon = *cfg.epsilon;
  } else if (cfg.delta && m == 2) {
    rep.epsilon = epsilon_from_delta(p, *cfg.delta);
  } else {
    throw Error(Errc::InvalidConfig, "give epsilon, or delta for a two-link chain");
  }

  if (cfg.residual_tolerance) {
    rep.threshold = *cfg.residual_tolerance;
  } else if (cfg.delta && m == 2) {
    rep.threshold = threshold_from_delta(p, *cfg.delta);
    rep.suboptimality_guarantee = !cfg.epsilon;
  } else {
    throw Error(Errc::InvalidConfig,
                "chains with M > 2 need an explicit residual tolerance; no delta guarantee exists there");
  }
  if (cfg.delta) {
    if (auto w = delta_warning(p, *cfg.delta)) rep.warnings.push_back(*w);
  }
  if (m > 2) rep.warnings.push_back("M > 2: no suboptimality guarantee, residual stopping only");

  const GibbsKernels k = build_kernels(p, rep.epsilon);
  if (cfg.backend == Backend::Linear) require_normal_kernels(k);

  ScalingState s = init_state(k, cfg.backend);
  auto record = [&](const ScalingState& st) {
    if (cfg.record_trace) rep.trace.push_back(make_trace_record(st, k, p, reference_log_u));
  };
  record(s);

  while (s.n < cfg.max_iters) {
    s = step(s, k, p);
    rep.terminal_residual = criterion_residual(cfg.criterion, s, k, p);
    const bool done = rep.terminal_residual <= rep.threshold;
    if (done || s.n % cfg.trace_stride == 0 || s.n == cfg.max_iters) record(s);
    if (done) {
      rep.status = SolveStatus::Converged;
      break;
    }
  }

  rep.induced = plans_from_state(s, k);
  rep.induced_objective = objective(rep.induced, p, rep.epsilon);
  if (m == 2) {
    const Vector u2_next = update_boundaries(s, k, p).vectors[1];
    rep.half = half_plans(s, u2_next, k);
    rep.rounded = feasible_pair_m2(*rep.half, p);
    rep.rounded_objective = objective(*rep.rounded, p, rep.epsilon);
  }
  rep.state = std::move(s);
  return rep;
}

/// Birkhoff contraction data for a kernel chain. The predicted Hilbert
/// distance to the optimal scaling is coefficient * rate^(exponent_multiplier * n)
/// for the edge vectors (M = 2) or every vector (M > 2).
struct ContractionReport {
  std::vector<double> lambdas;
  double rate = 0.0;
  int exponent_multiplier = 1;
  std::size_t chain_length = 0;
  /// max initial Hilbert distance to a reference solution, when one is known.
  std::optional<double> coefficient;

  /// Predicted bound on d_H(u^(n, layer), reference) for 0-based `layer`.
  double vector_bound(std::size_t n, std::size_t layer) const {
    const double c = coefficient.value_or(std::numeric_limits<double>::infinity());
    const double dn = static_cast<double>(n);
    if (chain_length == 2) {
      if (layer == 1) {
        if (n == 0) return std::numeric_limits<double>::infinity();
        return std::pow(rate, 2.0 * dn - 1.0) * c;
      }
      return std::pow(rate, 2.0 * dn) * c;
    }
    return std::pow(rate, dn) * c;
  }

  /// Predicted bound on the Hilbert distance between the two sides of any
  /// boundary at iteration n >= 1.
  double boundary_bound(std::size_t n) const {
    const double c = coefficient.value_or(std::numeric_limits<double>::infinity());
    if (n == 0) return std::numeric_limits<double>::infinity();
    const double dn = static_cast<double>(n);
    if (chain_length == 2) return 2.0 * c * (1.0 + rate * rate) * std::pow(rate, 2.0 * dn - 1.0);
    return 2.0 * c * (1.0 + rate) * std::pow(rate, dn - 1.0);
  }
};

inline ContractionReport contraction_bound(const GibbsKernels& k) {
  ContractionReport r;
  r.chain_length = k.chain_length();
  r.exponent_multiplier = r.chain_length == 2 ? 2 : 1;
  for (const auto& lk : k.log_kernels) {
    r.lambdas.push_back(birkhoff_lambda_from_log_gamma(birkhoff_log_gamma(lk)));
  }
  r.rate = r.lambdas.empty() ? 0.0 : *std::max_element(r.lambdas.begin(), r.lambdas.end());
  return r;
}

/// Fills the coefficient from the initial state and a reference solution:
/// max over the edge vectors for M = 2, over all vectors otherwise.
inline ContractionReport with_reference(ContractionReport r, const ScalingState& initial,
                                        const std::vector<Vector>& reference_log_u) {
  double c = 0.0;
  for (std::size_t i = 0; i < initial.vectors.size(); ++i) {
    if (r.chain_length == 2 && i == 1) continue;
    c = std::max(c, hilbert_metric_log(initial.log_u(i), reference_log_u[i]));
  }
  r.coefficient = c;
  return r;
}

/// 1 + (4 / delta^2) log(||K1||_1 ||K2||_1 / K), K = min_jl sum_k K1_jk K2_kl.
inline double iteration_bound(const GibbsKernels& k, double delta_residual) {
  if (k.chain_length() != 2) throw Error(Errc::WrongChainLength, "iteration_bound needs two kernels");
  if (!(delta_residual > 0.0)) throw Error(Errc::InvalidArgument, "residual threshold must be positive");
  const Matrix& l1 = k.log_kernels[0];
  const Matrix& l2 = k.log_kernels[1];
  const double log_mass = detail::log_sum_exp(l1.reshaped()) + detail::log_sum_exp(l2.reshaped());
  double log_min = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < l1.rows(); ++j)
    for (Index l = 0; l < l2.cols(); ++l) {
      log_min = std::min(log_min, detail::log_sum_exp(l1.row(j).transpose() + l2.col(l)));
    }
  return 1.0 + 4.0 / (delta_residual * delta_residual) * (log_mass - log_min);
}

}  // namespace seqot
