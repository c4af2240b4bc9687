#pragma once

// Seeded random instances: uniform costs, Dirichlet(1) marginals.

#include "seqot/core.hpp"
#include "seqot/types.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace seqot {

struct RandomProblemSpec {
  std::size_t chain_length = 2;
  Index min_dim = 2;
  Index max_dim = 8;
  double cost_max = 1.0;
  /// Fixed m_1..m_{M+1}; overrides min_dim/max_dim when non-empty.
  std::vector<Index> dims;
};

/// Dirichlet(1, ..., 1) sample with strictly positive entries.
inline Vector random_simplex(std::mt19937_64& rng, Index n) {
  std::exponential_distribution<double> e(1.0);
  Vector v(n);
  for (;;) {
    for (Index i = 0; i < n; ++i) v[i] = e(rng);
    const double s = v.sum();
    if (s > 0.0 && (v.array() > 0.0).all()) return v / s;
  }
}

inline Problem random_problem(std::mt19937_64& rng, const RandomProblemSpec& spec = {}) {
  std::vector<Index> dims = spec.dims;
  if (dims.empty()) {
    std::uniform_int_distribution<Index> pick(spec.min_dim, spec.max_dim);
    for (std::size_t i = 0; i <= spec.chain_length; ++i) dims.push_back(pick(rng));
  }
  std::uniform_real_distribution<double> u(0.0, spec.cost_max);
  Problem p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Matrix c(dims[i], dims[i + 1]);
    for (Index j = 0; j < c.size(); ++j) c.data()[j] = u(rng);
    p.costs.push_back(std::move(c));
  }
  p.a = random_simplex(rng, dims.front());
  p.b = random_simplex(rng, dims.back());
  return p;
}

}  // namespace seqot
