#pragma once

// Seeded corpora shared by the property tests and the acceptance binary.

#include "seqot/random.hpp"
#include "seqot/seqot.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace seqot::fixtures {

struct Instance {
  Problem problem;
  double epsilon = 1.0;
};

/// `count` two-link instances, dims in [2, 8], costs in [0, 1], epsilon in [eps_lo, eps_hi].
inline std::vector<Instance> corpus(std::uint64_t seed, std::size_t count, double eps_lo = 0.05, double eps_hi = 1.0,
                                    std::size_t chain_length = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> eps(eps_lo, eps_hi);
  RandomProblemSpec spec;
  spec.chain_length = chain_length;
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Instance inst;
    inst.problem = random_problem(rng, spec);
    inst.epsilon = eps(rng);
    out.push_back(std::move(inst));
  }
  return out;
}

inline Problem t1() {
  Problem p;
  p.costs = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  p.a = Vector::Constant(2, 0.5);
  p.b = Vector::Constant(2, 0.5);
  return p;
}

inline Problem t2() {
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  Problem p;
  p.costs = {c, c};
  p.a = Vector(2);
  p.a << 0.7, 0.3;
  p.b = Vector(2);
  p.b << 0.6, 0.4;
  return p;
}

/// All-zero costs with uniform marginals over `dims`.
inline Problem uniform_chain(const std::vector<Index>& dims) {
  Problem p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) p.costs.push_back(Matrix::Zero(dims[i], dims[i + 1]));
  p.a = Vector::Constant(dims.front(), 1.0 / static_cast<double>(dims.front()));
  p.b = Vector::Constant(dims.back(), 1.0 / static_cast<double>(dims.back()));
  return p;
}

inline Vector row_sums(const Matrix& m) { return m.rowwise().sum(); }
inline Vector col_sums(const Matrix& m) { return m.colwise().sum().transpose(); }

}  // namespace seqot::fixtures
