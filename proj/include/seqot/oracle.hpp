#pragma once

// Desk-scale ground truth. The unregularized chain problem is a transportation
// problem on a layered graph and is solved exactly by successive shortest
// paths with node potentials. A second route composes the two costs through
// their cheapest middle node and solves plain OT. A long log-domain run gives
// reference scaling vectors for rate checks.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/plans.hpp"
#include "seqot/scaling.hpp"
#include "seqot/sinkhorn.hpp"
#include "seqot/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

namespace seqot {

/// Largest number of layer-to-layer arcs the oracle accepts.
inline constexpr Index kOracleMaxArcs = 10000;
/// The flow solver stops once the unsent supply is at most this.
inline constexpr double kFlowSupplyTolerance = 1e-12;

namespace detail {

class LayeredFlow {
 public:
  LayeredFlow(const std::vector<Matrix>& costs, const Vector& supply, const Vector& demand) : costs_(costs) {
    offsets_.push_back(1);
    offsets_.push_back(1 + costs.front().rows());
    for (const auto& c : costs) offsets_.push_back(offsets_.back() + c.cols());
    // offsets_[L] .. offsets_[L+1]: layer L; the sink is the last node.
    sink_ = static_cast<int>(offsets_.back());
    offsets_.pop_back();
    adj_.resize(static_cast<std::size_t>(sink_) + 1);

    for (Index j = 0; j < supply.size(); ++j) add_arc(0, node(0, j), supply[j], 0.0);
    layer_arc_begin_.reserve(costs.size());
    for (std::size_t l = 0; l < costs.size(); ++l) {
      layer_arc_begin_.push_back(arcs_.size());
      for (Index j = 0; j < costs[l].rows(); ++j)
        for (Index k = 0; k < costs[l].cols(); ++k) add_arc(node(l, j), node(l + 1, k), kInf, costs[l](j, k));
    }
    const std::size_t last = costs.size();
    for (Index k = 0; k < demand.size(); ++k) add_arc(node(last, k), sink_, demand[k], 0.0);
    total_supply_ = supply.sum();
  }

  /// Runs to completion and returns the optimal cost.
  double run() {
    const std::size_t n = adj_.size();
    potential_.assign(n, 0.0);
    double remaining = total_supply_;
    std::vector<double> dist(n);
    std::vector<int> via(n);
    while (remaining > kFlowSupplyTolerance) {
      shortest_paths(dist, via);
      if (!std::isfinite(dist[static_cast<std::size_t>(sink_)])) {
        throw Error(Errc::InfeasibleSupplies, "no augmenting path left with supply remaining");
      }
      double reach_max = 0.0;
      for (double d : dist)
        if (std::isfinite(d)) reach_max = std::max(reach_max, d);
      for (std::size_t v = 0; v < n; ++v) potential_[v] += std::isfinite(dist[v]) ? dist[v] : reach_max;

      double push = remaining;
      for (int v = sink_; v != 0; v = arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)]) ^ 1U].to) {
        push = std::min(push, arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])].cap);
      }
      for (int v = sink_; v != 0;) {
        const auto e = static_cast<std::size_t>(via[static_cast<std::size_t>(v)]);
        arcs_[e].cap -= push;
        arcs_[e ^ 1U].cap += push;
        v = arcs_[e ^ 1U].to;
      }
      remaining -= push;
    }
    double cost = 0.0;
    const auto fl = flows();
    for (std::size_t l = 0; l < costs_.size(); ++l) cost += costs_[l].cwiseProduct(fl[l]).sum();
    return cost;
  }

  std::vector<Matrix> flows() const {
    std::vector<Matrix> out;
    for (std::size_t l = 0; l < costs_.size(); ++l) {
      Matrix f(costs_[l].rows(), costs_[l].cols());
      std::size_t e = layer_arc_begin_[l];
      for (Index j = 0; j < f.rows(); ++j)
        for (Index k = 0; k < f.cols(); ++k, e += 2) f(j, k) = arcs_[e + 1].cap;  // reverse capacity = flow
      out.push_back(std::move(f));
    }
    return out;
  }

  /// Node potentials per layer; C_jk + pi_j - pi_k >= 0 on every layer arc,
  /// with equality wherever flow is positive.
  std::vector<Vector> potentials() const {
    std::vector<Vector> out;
    for (std::size_t l = 0; l + 1 < offsets_.size(); ++l) {
      Vector v(static_cast<Index>(offsets_[l + 1] - offsets_[l]));
      for (Index j = 0; j < v.size(); ++j) v[j] = potential_[static_cast<std::size_t>(node(l, j))];
      out.push_back(std::move(v));
    }
    Vector v(static_cast<Index>(sink_ - offsets_.back()));
    for (Index j = 0; j < v.size(); ++j) v[j] = potential_[static_cast<std::size_t>(node(offsets_.size() - 1, j))];
    out.push_back(std::move(v));
    return out;
  }

 private:
  struct Arc {
    int to;
    double cap;
    double cost;
  };
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kCapTolerance = 1e-15;

  int node(std::size_t layer, Index j) const { return static_cast<int>(offsets_[layer] + j); }

  void add_arc(int from, int to, double cap, double cost) {
    adj_[static_cast<std::size_t>(from)].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({to, cap, cost});
    adj_[static_cast<std::size_t>(to)].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({from, 0.0, -cost});
  }

  // Dijkstra on reduced costs from the source (node 0).
  void shortest_paths(std::vector<double>& dist, std::vector<int>& via) const {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(via.begin(), via.end(), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[0] = 0.0;
    pq.emplace(0.0, 0);
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[static_cast<std::size_t>(u)]) continue;
      for (int e : adj_[static_cast<std::size_t>(u)]) {
        const Arc& arc = arcs_[static_cast<std::size_t>(e)];
        if (arc.cap <= kCapTolerance) continue;
        // Potentials keep reduced costs nonnegative up to rounding.
        const double rc = std::max(0.0, arc.cost + potential_[static_cast<std::size_t>(u)] -
                                            potential_[static_cast<std::size_t>(arc.to)]);
        const double nd = d + rc;
        if (nd < dist[static_cast<std::size_t>(arc.to)]) {
          dist[static_cast<std::size_t>(arc.to)] = nd;
          via[static_cast<std::size_t>(arc.to)] = e;
          pq.emplace(nd, arc.to);
        }
      }
    }
  }

  const std::vector<Matrix>& costs_;
  std::vector<Index> offsets_;
  std::vector<std::size_t> layer_arc_begin_;
  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
  std::vector<double> potential_;
  int sink_ = 0;
  double total_supply_ = 0.0;
};

inline void check_oracle_input(const std::vector<Matrix>& costs, const Vector& a, const Vector& b) {
  Index arcs = 0;
  for (const auto& c : costs) arcs += c.rows() * c.cols();
  if (arcs > kOracleMaxArcs) {
    throw Error(Errc::ScaleExceeded, std::to_string(arcs) + " arcs exceed the oracle limit of " +
                                         std::to_string(kOracleMaxArcs));
  }
  if ((a.size() > 0 && a.minCoeff() < 0.0) || (b.size() > 0 && b.minCoeff() < 0.0)) {
    throw Error(Errc::InfeasibleSupplies, "negative supply or demand");
  }
  if (std::abs(a.sum() - b.sum()) > kMarginalSumTolerance) {
    throw Error(Errc::InfeasibleSupplies, "total supply and demand differ");
  }
}

}  // namespace detail

struct ExactSolution {
  double optimum = 0.0;
  PlanSet plans;
  /// Layer potentials pi with C_jk + pi_j - pi_k >= 0, tight on the support.
  std::optional<std::vector<Vector>> dual_certificate;
};

inline ExactSolution exact_seqot(const Problem& p) {
  for (const auto& is : check_problem(p)) {
    if (is.code != Errc::NonStochasticMarginal) throw Error(is.code, is.detail);
  }
  detail::check_oracle_input(p.costs, p.a, p.b);
  detail::LayeredFlow flow(p.costs, p.a, p.b);
  ExactSolution sol;
  sol.optimum = flow.run();
  sol.plans = PlanSet{flow.flows(), PlanKind::Exact, 0};
  sol.dual_certificate = flow.potentials();
  return sol;
}

/// Largest complementary-slackness violation of a certificate: the most
/// negative reduced cost, or the largest reduced cost on an arc carrying flow.
inline double certificate_gap(const ExactSolution& sol, const Problem& p, double support_tol = 1e-12) {
  if (!sol.dual_certificate) return 0.0;
  const auto& pi = *sol.dual_certificate;
  double gap = 0.0;
  for (std::size_t l = 0; l < p.costs.size(); ++l) {
    for (Index j = 0; j < p.costs[l].rows(); ++j)
      for (Index k = 0; k < p.costs[l].cols(); ++k) {
        const double rc = p.costs[l](j, k) + pi[l][j] - pi[l + 1][k];
        gap = std::max(gap, -rc);
        if (sol.plans.plans[l](j, k) > support_tol) gap = std::max(gap, std::abs(rc));
      }
  }
  return gap;
}

struct ReducedSolution {
  double optimum = 0.0;
  PlanSet lifted;
  Matrix ot_plan;
};

/// Solves OT(a, b) under the composed cost, then routes each gamma_ij through
/// the smallest minimizing middle index.
inline ReducedSolution reduce_to_ot(const Problem& p) {
  if (p.costs.size() != 2) throw Error(Errc::WrongChainLength, "reduce_to_ot needs exactly two cost matrices");
  detail::check_oracle_input(p.costs, p.a, p.b);
  const ComposedCost composed = compose_min_cost(p);
  const std::vector<Matrix> single{composed.cost};
  detail::LayeredFlow flow(single, p.a, p.b);

  ReducedSolution out;
  out.optimum = flow.run();
  out.ot_plan = flow.flows().front();
  Matrix p1 = Matrix::Zero(p.costs[0].rows(), p.costs[0].cols());
  Matrix p2 = Matrix::Zero(p.costs[1].rows(), p.costs[1].cols());
  for (Index i = 0; i < out.ot_plan.rows(); ++i)
    for (Index j = 0; j < out.ot_plan.cols(); ++j) {
      const double g = out.ot_plan(i, j);
      if (g == 0.0) continue;
      const Index k = composed.argmin(i, j);
      p1(i, k) += g;
      p2(k, j) += g;
    }
  out.lifted = PlanSet{{std::move(p1), std::move(p2)}, PlanKind::Exact, 0};
  return out;
}

inline constexpr double kReferenceResidualFloor = 1e-13;
inline constexpr std::size_t kReferenceIterationCap = 1000000;

/// Scaling vectors of the regularized optimum, stored as log u-hat.
struct ReferenceVectors {
  std::vector<Vector> log_u_hat;
  double epsilon = 0.0;
  double residual_at_reference = 0.0;
  std::size_t iterations = 0;

  std::vector<Vector> u_hat() const {
    std::vector<Vector> out;
    for (const auto& l : log_u_hat) out.push_back(l.array().exp().matrix());
    return out;
  }

  ScalingState state() const {
    ScalingState s{Backend::LogDomain, epsilon, {}, iterations};
    for (const auto& l : log_u_hat) s.vectors.push_back(epsilon * l);
    return s;
  }
};

/// Runs the log-domain iteration until the boundary residual reaches `floor`.
inline ReferenceVectors high_precision_reference(const Problem& p, double epsilon,
                                                 double floor = kReferenceResidualFloor,
                                                 std::size_t cap = kReferenceIterationCap) {
  validate_problem(p);
  const GibbsKernels k = build_kernels(p, epsilon);
  ScalingState s = init_state(k, Backend::LogDomain);
  // The initial state can have a zero boundary residual without being a fixed
  // point (symmetric kernels), so at least one step is always taken.
  double r = 0.0;
  do {
    s = step_log_domain(s, k, p);
    r = boundary_residual(s, k, p);
    if (!std::isfinite(r)) throw Error(Errc::ReferenceNotConverged, "residual became non-finite");
  } while (r > floor && s.n < cap);
  if (r > floor) {
    throw Error(Errc::ReferenceNotConverged,
                "boundary residual " + std::to_string(r) + " after " + std::to_string(s.n) + " iterations");
  }
  ReferenceVectors ref;
  ref.epsilon = epsilon;
  ref.residual_at_reference = r;
  ref.iterations = s.n;
  ref.log_u_hat = s.log_scaling();
  return ref;
}

}  // namespace seqot
