#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace seqot;
using seqot::fixtures::t1;
using seqot::fixtures::t2;
using seqot::fixtures::uniform_chain;

namespace {

void expect_constant(const Vector& v, double value, double tol = 1e-15) {
  for (Index i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], value, tol) << "entry " << i;
}

// Costs with max entry 1; at epsilon = 1e-4 every kernel entry except (0, 0) is exactly zero.
Problem stiff_problem() {
  Problem p = t2();
  p.costs[0] << 0, 1, 1, 1;
  p.costs[1] << 0, 1, 1, 1;
  return p;
}

}  // namespace

TEST(Init, TwoLinkAllOnes) {
  const ScalingState s = init_state(build_kernels(t1(), 1.0));
  ASSERT_EQ(s.vectors.size(), 3u);
  expect_constant(s.vectors[0], 0.25);
  expect_constant(s.vectors[1], 1.0);
  expect_constant(s.vectors[2], 0.25);
  EXPECT_EQ(s.n, 0u);
}

TEST(Init, ThreeLinkAllOnes) {
  const ScalingState s = init_state(build_kernels(uniform_chain({2, 2, 2, 2}), 1.0));
  ASSERT_EQ(s.vectors.size(), 4u);
  expect_constant(s.vectors[0], 0.25);
  expect_constant(s.vectors[1], 1.0);
  expect_constant(s.vectors[2], 1.0);
  expect_constant(s.vectors[3], 0.25);
}

TEST(Init, KernelMassNormalization) {
  const ScalingState s = init_state(build_kernels(t2(), 0.5));
  expect_constant(s.vectors[0], 1.0 / (2.0 + 2.0 * std::exp(-2.0)));
  expect_constant(s.vectors[2], 1.0 / (2.0 + 2.0 * std::exp(-2.0)));
}

TEST(Init, LogRepresentationMatches) {
  const GibbsKernels k = build_kernels(t2(), 0.5);
  const ScalingState lin = init_state(k, Backend::Linear);
  const ScalingState log = init_state(k, Backend::LogDomain).to_linear();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(lin.vectors[i].isApprox(log.vectors[i], 1e-15));
}

TEST(StepGeneral, ThreeLinkHandEvaluation) {
  const Problem p = uniform_chain({2, 2, 2, 2});
  const GibbsKernels k = build_kernels(p, 1.0);
  const ScalingState s = step_general(init_state(k), k, p);
  expect_constant(s.vectors[0], 0.125);
  expect_constant(s.vectors[1], 0.5);
  expect_constant(s.vectors[2], 2.0);
  expect_constant(s.vectors[3], 0.125);
  EXPECT_EQ(s.n, 1u);
  for (const auto& plan : plans_from_state(s, k).plans) EXPECT_TRUE(plan.isApproxToConstant(0.25, 1e-15));
}

TEST(StepGeneral, TwoLinkFixedPoint) {
  const Problem p = t1();
  const GibbsKernels k = build_kernels(p, 1.0);
  ScalingState s = init_state(k);
  for (int n = 0; n < 5; ++n) {
    s = step_general(s, k, p);
    expect_constant(s.vectors[0], 0.25);
    expect_constant(s.vectors[1], 1.0);
    expect_constant(s.vectors[2], 0.25);
  }
}

TEST(StepGeneral, BoundariesReadPreviousState) {
  // With M = 4 the interior update of u^(3) must use the old u^(2) and u^(4).
  std::mt19937_64 rng(31);
  RandomProblemSpec spec;
  spec.chain_length = 4;
  const Problem p = random_problem(rng, spec);
  const GibbsKernels k = build_kernels(p, 0.7);
  ScalingState s = init_state(k);
  s = step_general(s, k, p);
  const ScalingState next = step_general(s, k, p);
  const Vector expected = (k.kernels[1].transpose() * s.vectors[1])
                              .cwiseQuotient(k.kernels[2] * s.vectors[3].cwiseInverse())
                              .cwiseSqrt();
  EXPECT_TRUE(next.vectors[2].isApprox(expected, 1e-14));
  const Vector last_boundary =
      (k.kernels[2].transpose() * s.vectors[2]).cwiseQuotient(k.kernels[3] * s.vectors[4]).cwiseSqrt();
  EXPECT_TRUE(next.vectors[3].isApprox(last_boundary, 1e-14));
  EXPECT_TRUE(next.vectors[0].isApprox(p.a.cwiseQuotient(k.kernels[0] * next.vectors[1].cwiseInverse()), 1e-14));
  EXPECT_TRUE(next.vectors[4].isApprox(p.b.cwiseQuotient(k.kernels[3].transpose() * next.vectors[3]), 1e-14));
}

TEST(StepGeneral, UnderflowIsReported) {
  const Problem p = stiff_problem();
  const GibbsKernels k = build_kernels(p, 1e-4);
  const ScalingState s = init_state(k);
  try {
    step_general(s, k, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NumericalUnderflow);
  }
  EXPECT_THROW(step_m2(s, k, p), Error);
}

TEST(StepGeneral, RejectsShapeMismatch) {
  const Problem p = t1();
  const GibbsKernels k = build_kernels(p, 1.0);
  ScalingState s = init_state(k);
  s.vectors[1] = Vector::Ones(3);
  EXPECT_THROW(step_general(s, k, p), Error);
}

TEST(StepM2, FixedPoint) {
  const Problem p = t1();
  const GibbsKernels k = build_kernels(p, 1.0);
  const ScalingState s = step_m2(init_state(k), k, p);
  expect_constant(s.vectors[0], 0.25);
  expect_constant(s.vectors[1], 1.0);
  expect_constant(s.vectors[2], 0.25);
}

TEST(StepM2, AgreesWithGeneralStep) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> eps(0.05, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Problem p = random_problem(rng);
    const GibbsKernels k = build_kernels(p, eps(rng));
    ScalingState g = init_state(k), m = init_state(k);
    for (int n = 0; n < 10; ++n) {
      g = step_general(g, k, p);
      m = step_m2(m, k, p);
      for (std::size_t i = 0; i < 3; ++i) {
        for (Index j = 0; j < g.vectors[i].size(); ++j) {
          EXPECT_NEAR(m.vectors[i][j], g.vectors[i][j], 1e-14 * std::abs(g.vectors[i][j]));
        }
      }
    }
  }
}

TEST(StepM2, EdgeMarginalsAfterOneStep) {
  const Problem p = t2();
  const GibbsKernels k = build_kernels(p, 0.5);
  const ScalingState s = step_m2(init_state(k), k, p);
  const PlanSet ps = plans_from_state(s, k);
  EXPECT_LE(l1_distance(fixtures::row_sums(ps.plans[0]), p.a), 1e-15);
  EXPECT_LE(l1_distance(fixtures::col_sums(ps.plans[1]), p.b), 1e-15);
}

TEST(StepM2, RequiresTwoLinks) {
  const Problem p = uniform_chain({2, 2, 2, 2});
  const GibbsKernels k = build_kernels(p, 1.0);
  EXPECT_THROW(step_m2(init_state(k), k, p), Error);
}

TEST(LogDomain, MatchesLinearIteration) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> eps(0.1, 1.0);
  for (int t = 0; t < 100; ++t) {
    RandomProblemSpec spec;
    spec.chain_length = 2 + t % 3;
    const Problem p = random_problem(rng, spec);
    const GibbsKernels k = build_kernels(p, eps(rng));
    ScalingState lin = init_state(k, Backend::Linear), log = init_state(k, Backend::LogDomain);
    for (int n = 0; n < 30; ++n) {
      lin = step_general(lin, k, p);
      log = step_log_domain(log, k, p);
    }
    const ScalingState back = log.to_linear();
    for (std::size_t i = 0; i < lin.vectors.size(); ++i) {
      for (Index j = 0; j < lin.vectors[i].size(); ++j) {
        EXPECT_NEAR(back.vectors[i][j], lin.vectors[i][j], 1e-10 * std::abs(lin.vectors[i][j]));
      }
    }
  }
}

TEST(LogDomain, FixedPointPotentials) {
  const Problem p = t1();
  const GibbsKernels k = build_kernels(p, 1.0);
  ScalingState s = init_state(k, Backend::LogDomain);
  for (int n = 0; n < 3; ++n) {
    s = step_log_domain(s, k, p);
    expect_constant(s.vectors[0], std::log(0.25), 1e-15);
    expect_constant(s.vectors[1], 0.0, 1e-15);
    expect_constant(s.vectors[2], std::log(0.25), 1e-15);
  }
}

TEST(LogDomain, SurvivesWhereLinearUnderflows) {
  const Problem p = stiff_problem();
  const GibbsKernels k = build_kernels(p, 1e-4);
  EXPECT_THROW(step_general(init_state(k, Backend::Linear), k, p), Error);
  ScalingState s = init_state(k, Backend::LogDomain);
  for (int n = 0; n < 20; ++n) s = step_log_domain(s, k, p);
  for (const auto& f : s.vectors) EXPECT_TRUE(f.allFinite());
  const PlanSet ps = plans_from_state(s, k);
  EXPECT_LE(l1_distance(fixtures::row_sums(ps.plans[0]), p.a), 1e-12);
}

TEST(LogDomain, RepresentationChecks) {
  const Problem p = t1();
  const GibbsKernels k = build_kernels(p, 1.0);
  EXPECT_THROW(step_log_domain(init_state(k, Backend::Linear), k, p), Error);
  EXPECT_THROW(step_general(init_state(k, Backend::LogDomain), k, p), Error);
  EXPECT_NO_THROW(step(init_state(k, Backend::LogDomain), k, p));
}

TEST(State, ConversionsRoundTrip) {
  std::mt19937_64 rng(34);
  const Problem p = random_problem(rng);
  const GibbsKernels k = build_kernels(p, 0.3);
  ScalingState s = init_state(k);
  for (int n = 0; n < 5; ++n) s = step(s, k, p);
  const ScalingState back = s.to_log().to_linear();
  for (std::size_t i = 0; i < s.vectors.size(); ++i) EXPECT_TRUE(back.vectors[i].isApprox(s.vectors[i], 1e-14));
  EXPECT_EQ(back.n, s.n);
}
