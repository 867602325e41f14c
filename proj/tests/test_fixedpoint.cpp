#include <equiprox/equiprox.hpp>
#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace equiprox;

namespace {

Vec V1(double v) { return Vec::Constant(1, v); }
const FixedPointMap halve = [](const Vec& z) -> Vec { return 0.5 * z; };

}  // namespace

TEST(Iterate, ContractionHalvesEachStep) {
  const Trace tr = iterate(halve, V1(1.0), 10, 1e-300);
  ASSERT_EQ(tr.points.size(), 11u);
  for (std::size_t k = 0; k < tr.points.size(); ++k) EXPECT_DOUBLE_EQ(tr.points[k](0), std::ldexp(1.0, -static_cast<int>(k)));
  EXPECT_FALSE(tr.converged);
}

TEST(Iterate, StopsAtTolerance) {
  const Trace tr = iterate(halve, V1(1.0), 1000, 1e-6);
  EXPECT_TRUE(tr.converged);
  EXPECT_LE(tr.step_norms.back(), 1e-6);
  EXPECT_GT(tr.step_norms[tr.step_norms.size() - 2], 1e-6);
}

TEST(Iterate, ExpansiveMapIsDetected) {
  const FixedPointMap dbl = [](const Vec& z) -> Vec { return 2.0 * z; };
  try {
    iterate(dbl, V1(1.0), 100, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_averaged_map);
  }
}

TEST(Iterate, AdmmMapOnOneDimensionalLassoReachesReferenceFixedPoint) {
  const ProblemSpec spec = make_l1_problem(Mat::Identity(1, 1), V1(-3.0), 1.0);
  const DiagonalMetric M = metric_from_vector(V1(1.0));
  const SolutionPair one = one_shot_solve(spec, optimal_metric(V1(2.0), V1(1.0)).metric);
  const Vec lambda = -detail::pull_back_gradient(spec.F, spec.f_gradient(one.x_star));
  const Vec zstar = unscaled_fixed_point(spec, M, one.x_star, lambda);
  EXPECT_NEAR(zstar(0), 3.0, 1e-12);
  const Trace tr = iterate(admm_fixed_point_map(spec, M), V1(0.0), 10000, 1e-13, 0.5, zstar);
  ASSERT_TRUE(tr.converged);
  EXPECT_NEAR(tr.points.back()(0), zstar(0), 1e-10);
  EXPECT_TRUE(verify_rate(tr, zstar.squaredNorm()).passed());
}

TEST(RateBound, FormulaValues) {
  EXPECT_DOUBLE_EQ(rate_bound(0.5, 0, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(rate_bound(0.5, 9, 4.0), 0.4);
  EXPECT_NEAR(rate_bound(0.9, 0, 1.0), 9.0, 1e-14);
  EXPECT_THROW(rate_bound(1.0, 0, 1.0), Error);
  EXPECT_THROW(rate_bound(0.0, 0, 1.0), Error);
}

TEST(ParallelScaling, IdenticalTracesHaveZeroDeviation) {
  const Trace tr = iterate(halve, V1(3.0), 20, 1e-300);
  const auto rep = check_parallel_scaling(tr, tr, 1.0);
  EXPECT_EQ(rep.max_deviation, 0.0);
  EXPECT_TRUE(rep.passed);
}

TEST(ParallelScaling, ClassicalDualTraceIsGammaTimesPrimal) {
  const ProblemSpec spec = generate_instance(Family::lasso_dense, 4, 4, 3, 0);
  const auto rep = classical_duality_scaling(spec, 2.0, Vec::Zero(4), 50);
  EXPECT_TRUE(rep.scaled.passed) << rep.scaled.max_deviation;
  EXPECT_FALSE(rep.unscaled.passed);
}

TEST(ParallelScaling, DifferentProblemsFail) {
  const ProblemSpec a = generate_instance(Family::lasso_dense, 4, 4, 1, 0);
  const ProblemSpec b = generate_instance(Family::lasso_dense, 4, 4, 2, 0);
  const DiagonalMetric M = metric_from_vector(Vec::Ones(4));
  const Trace ta = iterate(admm_fixed_point_map(a, M), Vec::Zero(4), 30, 1e-300);
  const Trace tb = iterate(admm_fixed_point_map(b, M), Vec::Zero(4), 30, 1e-300);
  const auto rep = check_parallel_scaling(ta, tb, 1.0);
  EXPECT_FALSE(rep.passed);
  EXPECT_GT(rep.max_deviation, 1e-3);
}

TEST(ParallelScalingProperty, SymmetricUnderSwap) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<Vec> a, b;
    const double alpha = std::exp(detail::gaussian_vec(rng, 1)(0));
    for (int k = 0; k < 5; ++k) {
      a.push_back(detail::gaussian_vec(rng, 3));
      b.push_back(a.back() / (alpha * alpha) + (t % 2 ? 1e-9 : 1e-3) * detail::gaussian_vec(rng, 3));
    }
    const auto ab = check_parallel_scaling(a, b, alpha);
    const auto ba = check_parallel_scaling(b, a, 1.0 / alpha);
    EXPECT_EQ(ab.passed, ba.passed);
    EXPECT_NEAR(ab.max_deviation, ba.max_deviation, 1e-12 * (1 + ab.scale));
  }
}

TEST(VerifyRate, ContractionSatisfiesBound) {
  Trace tr = iterate(halve, V1(1.0), 40, 1e-300, 0.5, V1(0.0));
  const auto rep = verify_rate(tr, 1.0);
  EXPECT_TRUE(rep.passed());
  EXPECT_LE(rep.tightest_ratio, 1.0);
}

TEST(VerifyRate, InjectedViolationIsFlagged) {
  Trace tr = iterate(halve, V1(1.0), 10, 1e-300, 0.5, V1(0.0));
  tr.step_norms[5] = 10.0;
  const auto rep = verify_rate(tr, 1.0);
  EXPECT_FALSE(rep.bound_holds);
  EXPECT_FALSE(rep.steps_monotone);
  EXPECT_EQ(rep.first_violation, 5);
}

TEST(VerifyRateProperty, AdmmTracesOnRandomLasso) {
  for (std::uint64_t i = 0; i < 6; ++i) {
    const ProblemSpec spec = generate_instance(i % 2 ? Family::lasso_diagonal : Family::lasso_dense, 8, 8, 17, i);
    const SolutionPair ref = estimate_reference(spec);
    std::mt19937_64 rng(i);
    const DiagonalMetric M = metric_from_vector(detail::uniform_vec(rng, 8, 0.1, 10.0));
    const Vec zstar = unscaled_fixed_point(spec, M, ref.x_star, ref.lambda_star);
    const Trace tr = iterate(admm_fixed_point_map(spec, M), Vec::Zero(8), 300, 1e-300, 0.5, zstar);
    const auto rep = verify_rate(tr, zstar.squaredNorm());
    EXPECT_TRUE(rep.passed()) << "instance " << i << " ratio " << rep.tightest_ratio;
  }
}

TEST(TraceCsv, HeaderAndRows) {
  const Trace tr = iterate(halve, V1(1.0), 2, 1e-300, 0.5, V1(0.0));
  std::ostringstream os;
  write_trace_csv(os, tr, 1.0);
  EXPECT_EQ(os.str(), "k,step_norm,fix_distance,bound\n0,0.5,1,1\n1,0.25,0.5,0.5\n");
}
