#include <equiprox/equiprox.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace equiprox;

namespace {

Mat M1(double v) { return Mat::Constant(1, 1, v); }
Vec V1(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST(ProblemValidation, OneDimensionalLassoIsValid) {
  const ProblemSpec s = make_l1_problem(M1(1), V1(-3), 1.0, M1(1));
  EXPECT_TRUE(validate_problem(s).ok());
  EXPECT_TRUE(s.is_l1_form());
}

TEST(ProblemValidation, AsymmetricQuadraticIsRejected) {
  Mat Q(2, 2);
  Q << 1, 2, 0, 1;
  const auto rep = validate_problem(make_l1_problem(Q, Vec::Zero(2), 1.0));
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations.front().field, "quad_Q");
  EXPECT_NE(rep.summary().find("symmetric"), std::string::npos);
}

TEST(ProblemValidation, RankDeficientFIsRejected) {
  Mat F(2, 2);
  F << 1, 1, 1, 1;
  const auto rep = validate_problem(make_l1_problem(Mat::Identity(2, 2), Vec::Zero(2), 1.0, F));
  ASSERT_FALSE(rep.ok());
  EXPECT_NE(rep.summary().find("rank 1"), std::string::npos);
}

TEST(ProblemValidation, DimensionMismatchNamesBothSides) {
  ProblemSpec s = make_l1_problem(Mat::Identity(2, 2), Vec::Zero(2), 1.0);
  s.c = Vec::Zero(3);
  try {
    validate_problem(s);
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
    const std::string what = e.what();
    EXPECT_NE(what.find("c is 3"), std::string::npos);
    EXPECT_NE(what.find("2x2"), std::string::npos);
  }
}

TEST(ProblemValidation, NonPositiveAlphaIsRejected) {
  EXPECT_FALSE(validate_problem(make_l1_problem(M1(1), V1(1), 0.0)).ok());
  EXPECT_THROW(require_valid(make_l1_problem(M1(1), V1(1), -1.0)), Error);
}

TEST(ProblemValidation, IndefiniteQuadraticIsRejected) {
  Mat Q(2, 2);
  Q << 1, 0, 0, -1;
  EXPECT_FALSE(validate_problem(make_l1_problem(Q, Vec::Zero(2), 1.0)).ok());
}

TEST(DiagonalMetric, EntriesFollowInverseForm) {
  Vec m(2);
  m << 2.0, 0.5;
  const DiagonalMetric M = metric_from_vector(m);
  EXPECT_DOUBLE_EQ(M.M_diag()(0), 0.5);
  EXPECT_DOUBLE_EQ(M.M_diag()(1), 2.0);
  EXPECT_DOUBLE_EQ(M.S_diag()(0), 1.0 / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(M.S_diag()(1), std::sqrt(2.0));
  EXPECT_EQ(M.clamped()[0], ClampFlag::none);
}

TEST(DiagonalMetric, ZeroSentinelIsClampedAndFlagged) {
  const DiagonalMetric M = metric_from_vector(V1(0.0), 1e-8);
  EXPECT_DOUBLE_EQ(M.m()(0), 1e-8);
  EXPECT_EQ(M.clamped()[0], ClampFlag::clamped_zero);
}

TEST(DiagonalMetric, InfinitySentinelIsClampedAndFlagged) {
  const DiagonalMetric M = metric_from_vector(V1(std::numeric_limits<double>::infinity()), 1e-8);
  EXPECT_DOUBLE_EQ(M.m()(0), 1e8);
  EXPECT_EQ(M.clamped()[0], ClampFlag::clamped_inf);
}

TEST(DiagonalMetric, NegativeOrNaNEntriesAreErrors) {
  Vec m(2);
  m << -1.0, 1.0;
  EXPECT_THROW(metric_from_vector(m), Error);
  EXPECT_THROW(metric_from_vector(V1(std::nan(""))), Error);
}

TEST(DiagonalMetric, ScalarAndDecompositionForms) {
  const DiagonalMetric G = scalar_metric(3, 4.0);
  EXPECT_TRUE(G.M_diag().isApprox(Vec::Constant(3, 4.0)));
  const DiagonalMetric D = metric_from_decomposition(Vec::Constant(2, -2.0));
  EXPECT_TRUE(D.m().isApprox(Vec::Constant(2, 0.25)));
}

TEST(DiagonalMetricProperty, InnerProductEmbeddingAndInverse) {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> lm(0.0, 2.0);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Index p = 1 + trial % 7;
    Vec m(p), v(p);
    for (Index i = 0; i < p; ++i) {
      m(i) = lm(rng);
      v(i) = nd(rng);
    }
    const DiagonalMetric M = metric_from_vector(m);
    EXPECT_LE(std::abs(v.dot(M.apply_M(v)) - M.apply_S(v).squaredNorm()), 1e-12 * (1.0 + v.squaredNorm()));
    EXPECT_LE((M.apply_M(M.apply_M_inv(v)) - v).norm(), 1e-12 * (1.0 + v.norm()));
    EXPECT_LE((M.apply_S_inv(M.apply_S(v)) - v).norm(), 1e-12 * (1.0 + v.norm()));
  }
}

TEST(Parametrization, ValidationAndTags) {
  EXPECT_THROW(validate_parametrization(ClassicalScalar{0.0}), Error);
  EXPECT_THROW(validate_parametrization(EquilibrateScalar{0.0}), Error);
  EXPECT_NO_THROW(validate_parametrization(EquilibrateScalar{-1.0}));
  EXPECT_THROW(validate_parametrization(EquilibrateOperator{Mat::Zero(2, 2)}), Error);
  EXPECT_EQ(parametrization_tag(ClassicalScalar{1.0}), "classical_scalar");
  EXPECT_EQ(parametrization_tag(EquilibrateOperator{Mat::Identity(2, 2)}), "equilibrate_operator");
}
