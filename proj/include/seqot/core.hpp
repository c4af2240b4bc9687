#pragma once

// Problem representation, validation, Gibbs kernels and the epsilon(delta) rule.

#include "seqot/error.hpp"
#include "seqot/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace seqot {

/// Tolerance on |sum(a) - 1| and |sum(b) - 1| for accepted marginals.
inline constexpr double kMarginalSumTolerance = 1e-12;

/// A chain of M cost matrices C^(1..M) with edge marginals a (rows of C^(1))
/// and b (columns of C^(M)).
struct Problem {
  std::vector<Matrix> costs;
  Vector a;
  Vector b;

  std::size_t chain_length() const noexcept { return costs.size(); }

  /// m_1 .. m_{M+1}, read from the cost shapes.
  std::vector<Index> dims() const {
    std::vector<Index> d;
    if (costs.empty()) return d;
    d.reserve(costs.size() + 1);
    for (const auto& c : costs) d.push_back(c.rows());
    d.push_back(costs.back().cols());
    return d;
  }
};

struct Issue {
  Errc code;
  std::string detail;
};

/// Every violated well-formedness condition of `p`; empty when valid.
inline std::vector<Issue> check_problem(const Problem& p) {
  std::vector<Issue> issues;
  auto add = [&](Errc c, const std::string& what) { issues.push_back({c, what}); };

  if (p.costs.size() < 2) {
    add(Errc::WrongChainLength, "need at least two cost matrices, got " + std::to_string(p.costs.size()));
  }
  for (std::size_t i = 0; i < p.costs.size(); ++i) {
    const Matrix& c = p.costs[i];
    if (c.size() == 0) add(Errc::ShapeMismatch, "costs[" + std::to_string(i) + "] is empty");
    if (i + 1 < p.costs.size() && c.cols() != p.costs[i + 1].rows()) {
      add(Errc::ShapeMismatch, "costs[" + std::to_string(i) + "] has " + std::to_string(c.cols()) +
                                   " columns but costs[" + std::to_string(i + 1) + "] has " +
                                   std::to_string(p.costs[i + 1].rows()) + " rows");
    }
    if (!c.allFinite()) add(Errc::NonFiniteValue, "costs[" + std::to_string(i) + "] has a non-finite entry");
    if (c.size() > 0 && c.minCoeff() < 0.0) {
      add(Errc::NegativeCost, "costs[" + std::to_string(i) + "] has a negative entry");
    }
  }

  auto check_marginal = [&](const Vector& m, const char* name, std::optional<Index> expected_len) {
    if (expected_len && m.size() != *expected_len) {
      add(Errc::ShapeMismatch, std::string(name) + " has length " + std::to_string(m.size()) +
                                   ", expected " + std::to_string(*expected_len));
    }
    if (!m.allFinite()) {
      add(Errc::NonFiniteValue, std::string(name) + " has a non-finite entry");
      return;
    }
    if (m.size() > 0 && m.minCoeff() < 0.0) {
      add(Errc::NonStochasticMarginal, std::string(name) + " has a negative entry");
    }
    const double s = m.sum();
    if (std::abs(s - 1.0) > kMarginalSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << name << " sums to " << s;
      add(Errc::NonStochasticMarginal, os.str());
    }
  };
  const bool have_costs = !p.costs.empty();
  check_marginal(p.a, "a", have_costs ? std::optional<Index>(p.costs.front().rows()) : std::nullopt);
  check_marginal(p.b, "b", have_costs ? std::optional<Index>(p.costs.back().cols()) : std::nullopt);
  return issues;
}

/// Returns `p` unchanged when valid; otherwise throws an Error carrying the
/// first violation's code and every violation in the message.
inline const Problem& validate_problem(const Problem& p) {
  const auto issues = check_problem(p);
  if (issues.empty()) return p;
  std::string msg;
  for (const auto& is : issues) {
    if (!msg.empty()) msg += "; ";
    msg += std::string(to_string(is.code)) + " (" + is.detail + ")";
  }
  throw Error(issues.front().code, msg);
}

/// K^(i) = exp(-C^(i) / epsilon). `log_kernels` holds -C/epsilon exactly so that
/// log-domain code never has to take the log of an underflowed entry.
struct GibbsKernels {
  double epsilon = 0.0;
  std::vector<Matrix> kernels;
  std::vector<Matrix> log_kernels;

  std::size_t chain_length() const noexcept { return kernels.size(); }

  /// False when some entry fell below the smallest positive normal double.
  bool all_normal() const {
    for (const auto& k : kernels) {
      if ((k.array() < std::numeric_limits<double>::min()).any()) return false;
    }
    return true;
  }
};

inline GibbsKernels build_kernels(const Problem& p, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(Errc::NonPositiveEpsilon, "epsilon must be positive and finite");
  }
  GibbsKernels k;
  k.epsilon = epsilon;
  k.kernels.reserve(p.costs.size());
  k.log_kernels.reserve(p.costs.size());
  for (const auto& c : p.costs) {
    Matrix lk = -c / epsilon;
    // Eigen's vectorized exp clamps large negative arguments; std::exp underflows to 0.
    k.kernels.push_back(lk.unaryExpr([](double x) { return std::exp(x); }));
    k.log_kernels.push_back(std::move(lk));
  }
  return k;
}

/// Raised by the linear backend: every kernel entry must be a normal double.
inline void require_normal_kernels(const GibbsKernels& k) {
  for (std::size_t i = 0; i < k.kernels.size(); ++i) {
    if ((k.kernels[i].array() < std::numeric_limits<double>::min()).any()) {
      throw Error(Errc::ZeroKernelEntry,
                  "kernel " + std::to_string(i) + " has entries below the smallest normal double; "
                  "use the log-domain backend");
    }
  }
}

struct ComposedCost {
  Matrix cost;          // m_1 x m_3
  IndexMatrix argmin;   // smallest minimizing middle index per (i, j)
};

/// C_ij = min_k C1_ik + C2_kj for a two-link chain.
inline ComposedCost compose_min_cost(const Problem& p) {
  if (p.costs.size() != 2) throw Error(Errc::WrongChainLength, "compose_min_cost needs exactly two cost matrices");
  const Matrix& c1 = p.costs[0];
  const Matrix& c2 = p.costs[1];
  if (c1.cols() != c2.rows()) throw Error(Errc::ShapeMismatch, "inner dimensions differ");
  ComposedCost out{Matrix(c1.rows(), c2.cols()), IndexMatrix(c1.rows(), c2.cols())};
  for (Index i = 0; i < c1.rows(); ++i) {
    for (Index j = 0; j < c2.cols(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      Index best_k = 0;
      for (Index k = 0; k < c1.cols(); ++k) {
        const double v = c1(i, k) + c2(k, j);
        if (v < best) {
          best = v;
          best_k = k;
        }
      }
      out.cost(i, j) = best;
      out.argmin(i, j) = best_k;
    }
  }
  return out;
}

/// epsilon = delta / (2 log(m_1 m_2^2 m_3)).
inline double epsilon_from_delta(const Problem& p, double delta) {
  if (p.costs.size() != 2) throw Error(Errc::WrongChainLength, "epsilon_from_delta needs exactly two cost matrices");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(Errc::InvalidArgument, "delta must be positive");
  const auto d = p.dims();
  const double prod = static_cast<double>(d[0]) * static_cast<double>(d[1]) * static_cast<double>(d[1]) *
                      static_cast<double>(d[2]);
  if (prod <= 1.0) throw Error(Errc::DegenerateDimensions, "m_1 m_2^2 m_3 must exceed 1");
  return delta / (2.0 * std::log(prod));
}

/// max_i ||C^(i)||_inf, the largest cost entry over the chain.
inline double max_cost_norm(const Problem& p) {
  double m = 0.0;
  for (const auto& c : p.costs) {
    if (c.size() > 0) m = std::max(m, c.cwiseAbs().maxCoeff());
  }
  return m;
}

/// Warning text when delta >= ||C||_inf of the composed cost (M = 2 only);
/// the iteration still runs but the complexity statement does not cover it.
inline std::optional<std::string> delta_warning(const Problem& p, double delta) {
  if (p.costs.size() != 2) return std::nullopt;
  const double cinf = compose_min_cost(p).cost.maxCoeff();
  if (delta >= cinf) {
    std::ostringstream os;
    os.precision(17);
    os << "delta (" << delta << ") is not below the composed cost norm (" << cinf << ")";
    return os.str();
  }
  return std::nullopt;
}

enum class Criterion { HalfStepResidual, BoundaryResidual };
enum class Backend { Linear, LogDomain };

struct SolveConfig {
  /// Regularization; derived from `delta` when absent (M = 2 only).
  std::optional<double> epsilon;
  /// Target suboptimality.
  std::optional<double> delta;
  /// Explicit stopping threshold; overrides the delta-derived one.
  std::optional<double> residual_tolerance;
  std::size_t max_iters = 100000;
  Criterion criterion = Criterion::HalfStepResidual;
  Backend backend = Backend::LogDomain;
  /// Record every `trace_stride`-th iteration (plus n = 0 and the last one).
  std::size_t trace_stride = 1;
  bool record_trace = true;
};

}  // namespace seqot
