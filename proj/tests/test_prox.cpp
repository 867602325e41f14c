#include <equiprox/equiprox.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace equiprox;

namespace {

Mat M1(double v) { return Mat::Constant(1, 1, v); }
Vec V1(double v) { return Vec::Constant(1, v); }
Function half_square() { return quadratic(M1(1.0), V1(0.0)); }

}  // namespace

TEST(ProxClassical, ScalarExamples) {
  EXPECT_NEAR(prox_classical(half_square(), 1.0, V1(2.0))(0), 1.0, 1e-15);

  const double l1_oracle = oracle::metric_l1_scalar(2.5, 1.0);
  EXPECT_NEAR(l1_oracle, 1.5, 1e-12);
  EXPECT_NEAR(prox_classical(l1(1.0, 1), 1.0, V1(2.5))(0), 1.5, 1e-15);

  // (1/gamma) f + 1/2 |z - v|^2 with gamma = 3
  const double q_oracle = oracle::golden_section_diff(
      [](double a, double b) { return (a - b) * (a + b) / 6.0 + 0.5 * (a - b) * (a + b - 4.0); }, -5, 5, 1e-15);
  EXPECT_NEAR(q_oracle, 1.5, 1e-12);
  EXPECT_NEAR(prox_classical(half_square(), 3.0, V1(2.0))(0), 1.5, 1e-15);
}

// Grid scans refine on raw function values, which resolve the minimizer to about sqrt(eps).
TEST(ProxEquilibrate, ScalarExamples) {
  EXPECT_NEAR(prox_equilibrate(half_square(), Mat::Identity(1, 1), V1(2.0))(0), 1.0, 1e-15);

  const double z_hat = oracle::scan_then_refine([](double z) { return 0.5 * z * z + 0.5 * (2 * z - 3) * (2 * z - 3); }, -5, 5);
  EXPECT_NEAR(2.0 * z_hat, 2.4, 1e-7);
  EXPECT_NEAR(prox_equilibrate(half_square(), 2.0, V1(3.0))(0), 2.4, 1e-14);

  const double z_neg = oracle::scan_then_refine([](double z) { return 0.5 * z * z + 0.5 * (-z - 2) * (-z - 2); }, -5, 5);
  EXPECT_NEAR(z_neg, -1.0, 1e-7);
  EXPECT_NEAR(prox_equilibrate(half_square(), -1.0, V1(2.0))(0), 1.0, 1e-14);
}

TEST(ProxEquilibrate, DomainFormAgreesForQuadratics) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Index n = 1 + t % 5;
    const Mat G = detail::gaussian(rng, n, n);
    const Function f = quadratic(G.transpose() * G + 0.5 * Mat::Identity(n, n), detail::gaussian_vec(rng, n));
    Mat S = Mat::Identity(n, n) + 0.3 * detail::gaussian(rng, n, n);
    const Vec v = detail::gaussian_vec(rng, n);
    EXPECT_LE((prox_equilibrate(f, S, v) - prox_equilibrate_domain_form(f, S, v)).norm(), 1e-9 * (1 + v.norm()));
  }
}

TEST(ProxEquilibrate, RejectsRankDeficientOperator) {
  Mat S(2, 2);
  S << 1, 1, 1, 1;
  EXPECT_THROW(prox_equilibrate(quadratic(Mat::Identity(2, 2), Vec::Zero(2)), S, Vec::Ones(2)), Error);
}

TEST(SoftThreshold, Examples) {
  EXPECT_DOUBLE_EQ(soft_threshold(V1(2.5))(0), 1.5);
  EXPECT_DOUBLE_EQ(soft_threshold(V1(0.7))(0), 0.0);
  Vec u(3), want(3);
  u << -3, 0, 1;
  want << -2, 0, 0;
  EXPECT_EQ(soft_threshold(u), want);
}

TEST(MetricProxL1, Examples) {
  EXPECT_NEAR(metric_prox_l1(V1(2.5), metric_from_vector(V1(1.0)))(0), 1.5, 1e-15);

  EXPECT_NEAR(oracle::metric_l1_scalar(3.0, 2.0), 1.0, 1e-12);
  EXPECT_NEAR(metric_prox_l1(V1(3.0), metric_from_vector(V1(2.0)))(0), 1.0, 1e-15);

  EXPECT_NEAR(oracle::metric_l1_scalar(0.5, 4.0), 0.0, 1e-12);
  EXPECT_EQ(metric_prox_l1(V1(0.5), metric_from_vector(V1(4.0)))(0), 0.0);
}

TEST(MetricProxL1, NonDiagonalMetricIsUnsupported) {
  Mat M(2, 2);
  M << 2, 1, 1, 2;
  try {
    metric_prox_l1(Vec::Ones(2), M);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported);
  }
}

TEST(MetricProxL1Property, SubdifferentialMembership) {
  std::mt19937_64 rng(21);
  std::lognormal_distribution<double> lm(0.0, 1.5);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const Index n = 1 + t % 6;
    Vec m(n), v(n);
    for (Index i = 0; i < n; ++i) {
      m(i) = lm(rng);
      v(i) = nd(rng);
    }
    const DiagonalMetric M = metric_from_vector(m);
    const Vec x = metric_prox_l1(v, M);
    EXPECT_LE(l1_subdifferential_violation(x, M.apply_M(v - x)), 1e-10);
  }
}

TEST(Moreau, Examples) {
  const auto a = moreau_decompose(half_square(), Mat::Identity(1, 1), V1(2.0));
  EXPECT_NEAR(a.p(0), 1.0, 1e-15);
  EXPECT_NEAR(a.d(0), 1.0, 1e-15);
  EXPECT_TRUE(a.d_closed_form);

  const auto b = moreau_decompose(l1(1.0, 1), Mat::Identity(1, 1), V1(0.4));
  EXPECT_EQ(b.p(0), 0.0);
  EXPECT_NEAR(b.d(0), 0.4, 1e-15);

  // d from the conjugate side: f* = 1/2 y^2, S* = 2, d = (1/2) argmin 1/2 y^2 + 1/2 (y/2 - 3)^2
  const double y = oracle::scan_then_refine([](double w) { return 0.5 * w * w + 0.5 * (0.5 * w - 3) * (0.5 * w - 3); }, -10, 10);
  EXPECT_NEAR(0.5 * y, 0.6, 1e-7);
  const auto c = moreau_decompose(half_square(), 2.0 * Mat::Identity(1, 1), V1(3.0));
  EXPECT_NEAR(c.p(0), 2.4, 1e-14);
  EXPECT_NEAR(c.d(0), 0.6, 1e-14);
}

TEST(Conjugate, FenchelYoungHoldsWithEquality) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + t % 4;
    const Mat G = detail::gaussian(rng, n, n);
    Function f = quadratic(G.transpose() * G + 0.3 * Mat::Identity(n, n), detail::gaussian_vec(rng, n));
    f = translate(linear_tilt(f, detail::gaussian_vec(rng, n)), detail::gaussian_vec(rng, n));
    const Function fc = conjugate(f);
    const Vec x = detail::gaussian_vec(rng, n);
    // y in the subdifferential of f at x
    const Vec y = f.Q * (x + f.shift) + f.q - f.tilt;
    EXPECT_NEAR(f.value(x) + fc.value(y), x.dot(y), 1e-9 * (1 + x.norm() * y.norm()));
  }
}

TEST(TranslateParametrization, Examples) {
  const DiagonalMetric I = metric_from_vector(V1(1.0));
  const Vec v = V1(1.7);
  EXPECT_NEAR(translate_parametrization(half_square(), I, v, TranslateDirection::remove_scaling)(0),
              prox_classical(half_square(), 1.0, v)(0), 1e-15);

  const DiagonalMetric quarter = metric_from_vector(V1(0.25));
  EXPECT_NEAR(translate_parametrization(half_square(), quarter, V1(3.0), TranslateDirection::remove_scaling)(0), 2.4, 1e-14);

  const DiagonalMetric two = metric_from_vector(V1(2.0));
  EXPECT_NEAR(prox_metric(l1(1.0, 1), two, V1(3.0))(0), 1.0, 1e-14);
  EXPECT_NEAR(translate_parametrization(l1(1.0, 1), two, V1(3.0), TranslateDirection::equip_scaling)(0), 1.0, 1e-14);
}

TEST(TranslateParametrizationProperty, RoundTripThroughBothDirections) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 300; ++t) {
    const auto d = detail::random_prox_draw(rng);
    const DiagonalMetric M = metric_from_decomposition(d.S.diagonal());
    // metric prox -> equilibrate form -> metric prox
    const Vec removed = translate_parametrization(d.f, M, M.apply_S(d.v), TranslateDirection::remove_scaling);
    const Vec equipped = translate_parametrization(d.f, M, d.v, TranslateDirection::equip_scaling);
    EXPECT_LE((M.apply_S_inv(removed) - equipped).norm(), 1e-10 * (1 + d.v.norm()));
    EXPECT_LE((equipped - prox_metric(d.f, M, d.v)).norm(), 1e-10 * (1 + d.v.norm()));
  }
}

TEST(TiltProx, Examples) {
  const Vec v = V1(0.8);
  EXPECT_EQ(tilt_prox(half_square(), V1(0.0), Mat::Identity(1, 1), v), prox_equilibrate(half_square(), Mat::Identity(1, 1), v));
  EXPECT_NEAR(tilt_prox(half_square(), V1(1.0), Mat::Identity(1, 1), V1(1.0))(0), 1.0, 1e-15);
  EXPECT_NEAR(tilt_prox(l1(1.0, 1), V1(2.0), Mat::Identity(1, 1), V1(0.5))(0), 1.5, 1e-15);
  // tilted function evaluated directly
  EXPECT_NEAR(prox_equilibrate(linear_tilt(l1(1.0, 1), V1(2.0)), Mat::Identity(1, 1), V1(0.5))(0), 1.5, 1e-15);
}

TEST(ProxIdentities, MoreauResolventAndFirmNonexpansiveness) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const auto d = detail::random_prox_draw(rng);
    const auto split = moreau_decompose(d.f, d.S, d.v);
    ASSERT_TRUE(split.d_closed_form);
    EXPECT_LE((split.p + split.d - d.v).cwiseAbs().maxCoeff(), 1e-10);
    const Vec pc = prox_classical(d.f, 1.0, d.v) + prox_classical(conjugate(d.f), 1.0, d.v);
    EXPECT_LE((pc - d.v).cwiseAbs().maxCoeff(), 1e-10);
  }
  for (int op = 0; op < 5; ++op) {
    const auto d = detail::random_prox_draw(rng);
    for (int k = 0; k < 1000; ++k) {
      const Vec x = 3.0 * detail::gaussian_vec(rng, d.f.dim());
      const Vec y = 3.0 * detail::gaussian_vec(rng, d.f.dim());
      const Vec tx = prox_equilibrate(d.f, d.S, x), ty = prox_equilibrate(d.f, d.S, y);
      EXPECT_LE((tx - ty).squaredNorm(), (x - y).dot(tx - ty) + 1e-10);
    }
  }
}

TEST(ProxDispatch, ParametrizationsAgreeOnScalarCase) {
  const Function f = quadratic(Mat::Identity(2, 2) * 2.0, Vec::Ones(2));
  const Vec v = Vec::Constant(2, 1.3);
  // classical gamma and equilibrate rho = sqrt(gamma) after rescaling
  const Vec a = prox({f, ClassicalScalar{4.0}}, v);
  const Vec b = prox({f, ClassicalMetric{scalar_metric(2, 4.0)}}, v);
  EXPECT_LE((a - b).norm(), 1e-14);
  const Vec c = prox({f, EquilibrateScalar{2.0}}, 2.0 * v) / 2.0;
  EXPECT_LE((a - c).norm(), 1e-14);
}
