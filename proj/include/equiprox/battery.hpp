#pragma once

#include "admm.hpp"
#include "fixedpoint.hpp"
#include "instances.hpp"
#include "metric_select.hpp"
#include "prox.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace equiprox {

struct CheckRow {
  std::string check;
  std::string instance;
  double deviation = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct BatteryOptions {
  std::uint64_t seed = 42;
  int prox_draws = 200;
  int firm_pairs = 1000;
  int admm_instances = 5;
  Index admm_dim = 5;
};

namespace detail {

struct ProxDraw {
  Function f;
  Mat S;
  Vec v;
};

inline Vec uniform_vec(Rng& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> ud(lo, hi);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = ud(rng);
  return v;
}

/// Random function from the closed-form family (quadratic or l1, optionally tilted
/// and translated), a random nonsingular diagonal S with mixed signs, and a point.
inline ProxDraw random_prox_draw(Rng& rng) {
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_int_distribution<int> kind(0, 3);
  const Index n = dim(rng);
  ProxDraw d;
  const int k = kind(rng);
  if (k < 2) {
    const Mat G = gaussian(rng, n, n);
    Mat Q = G.transpose() * G + 0.1 * Mat::Identity(n, n);
    Q = 0.5 * (Q + Q.transpose());
    d.f = quadratic(Q, gaussian_vec(rng, n));
  } else {
    d.f = l1(uniform_vec(rng, 1, 0.1, 3.0)(0), n);
  }
  if (k % 2 == 1) d.f = translate(linear_tilt(d.f, gaussian_vec(rng, n)), gaussian_vec(rng, n));
  Vec s = uniform_vec(rng, n, 0.2, 3.0);
  std::bernoulli_distribution flip(0.3);
  for (Index i = 0; i < n; ++i)
    if (flip(rng)) s(i) = -s(i);
  d.S = s.asDiagonal();
  d.v = 3.0 * gaussian_vec(rng, n);
  return d;
}

inline void add_row(std::vector<CheckRow>& rows, std::string check, std::string instance, double dev,
                    double threshold) {
  rows.push_back({std::move(check), std::move(instance), dev, threshold, dev <= threshold});
}

}  // namespace detail

/// Runs every operator identity on seeded random instances, one row per instance.
inline std::vector<CheckRow> run_identity_battery(const BatteryOptions& opt = {}) {
  std::vector<CheckRow> rows;
  detail::Rng rng(opt.seed);

  for (int i = 0; i < opt.prox_draws; ++i) {
    const auto d = detail::random_prox_draw(rng);
    const std::string id = "draw_" + std::to_string(i);
    const auto split = moreau_decompose(d.f, d.S, d.v);
    detail::add_row(rows, "moreau", id, (split.p + split.d - d.v).cwiseAbs().maxCoeff(), 1e-10);

    const Mat I = Mat::Identity(d.f.dim(), d.f.dim());
    const auto plain = moreau_decompose(d.f, I, d.v);
    detail::add_row(rows, "resolvent_complement", id, (plain.p + plain.d - d.v).cwiseAbs().maxCoeff(), 1e-10);

    const DiagonalMetric M = metric_from_decomposition(d.S.diagonal().cwiseAbs());
    const Mat Sp = M.S();
    const double scale = 1.0 + d.v.norm();
    const double remove_dev = (translate_parametrization(d.f, M, d.v, TranslateDirection::remove_scaling) -
                               prox_equilibrate(d.f, Sp, d.v)).norm();
    const double equip_dev = (translate_parametrization(d.f, M, d.v, TranslateDirection::equip_scaling) -
                              prox_metric(d.f, M, d.v)).norm();
    detail::add_row(rows, "translation", id, std::max(remove_dev, equip_dev) / scale, 1e-10);

    const Vec c = detail::gaussian_vec(rng, d.f.dim());
    const double tilt_dev =
        (tilt_prox(d.f, c, d.S, d.v) - prox_equilibrate(linear_tilt(d.f, d.S.transpose() * c), d.S, d.v)).norm();
    detail::add_row(rows, "tilt", id, tilt_dev / (scale + c.norm()), 1e-10);
  }

  for (int i = 0; i < 5; ++i) {
    const auto d = detail::random_prox_draw(rng);
    double worst = 0.0;
    for (int k = 0; k < opt.firm_pairs; ++k) {
      const Vec x = 3.0 * detail::gaussian_vec(rng, d.f.dim());
      const Vec y = 3.0 * detail::gaussian_vec(rng, d.f.dim());
      const Vec tx = prox_equilibrate(d.f, d.S, x);
      const Vec ty = prox_equilibrate(d.f, d.S, y);
      worst = std::max(worst, (tx - ty).squaredNorm() - (x - y).dot(tx - ty));
    }
    detail::add_row(rows, "firm_nonexpansive", "operator_" + std::to_string(i), worst, 1e-10);
  }

  for (int i = 0; i < opt.prox_draws; ++i) {
    const Index n = 1 + static_cast<Index>(i % 6);
    const DiagonalMetric M = metric_from_vector(detail::uniform_vec(rng, n, 0.05, 5.0));
    const Vec v = 3.0 * detail::gaussian_vec(rng, n);
    const Vec x = metric_prox_l1(v, M);
    detail::add_row(rows, "metric_l1_subdifferential", "draw_" + std::to_string(i),
                    l1_subdifferential_violation(x, M.apply_M(v - x)), 1e-10);
  }

  const std::vector<double> gammas{0.5, 2.0, 10.0};
  for (int i = 0; i < opt.admm_instances; ++i) {
    const Family fam = i % 2 ? Family::lasso_diagonal : Family::lasso_dense;
    const ProblemSpec spec = generate_instance(fam, opt.admm_dim, opt.admm_dim, opt.seed, static_cast<std::uint64_t>(i));
    const std::string id = std::string(to_string(fam)) + "_" + std::to_string(i);
    const DiagonalMetric M = metric_from_vector(detail::uniform_vec(rng, spec.p(), 0.2, 5.0));
    const Vec z0 = Vec::Zero(spec.p());

    const auto sd = self_duality_check(spec, M, z0, 40);
    detail::add_row(rows, "self_duality", id, sd.unscaled.max_deviation, 1e-8 * (1.0 + sd.unscaled.scale));

    for (double g : gammas) {
      const auto cd = classical_duality_scaling(spec, g, z0, 40);
      detail::add_row(rows, "parallel_scaling", id + "_gamma_" + detail::fmt_double(g), cd.scaled.max_deviation,
                      1e-8 * (1.0 + cd.scaled.scale));
    }

    AdmmConfig cfg;
    cfg.k_max = 400;
    cfg.tol = 1e-12;
    cfg.stop = StopRule::fixed_point;
    const AdmmResult run = admm_equilibrate(spec, M, {}, cfg);
    const FixedPointMap F = admm_fixed_point_map(spec, M);
    double fp_dev = 0.0;
    for (std::size_t k = 0; k + 1 < run.trace.points.size(); ++k)
      fp_dev = std::max(fp_dev, (F(run.trace.points[k]) - run.trace.points[k + 1]).norm() /
                                    (1.0 + run.trace.points[k + 1].norm()));
    detail::add_row(rows, "fixed_point_consistency", id, fp_dev, 1e-10);

    const SolutionPair ref = estimate_reference(spec);
    const Vec zstar = unscaled_fixed_point(spec, M, ref.x_star, ref.lambda_star);
    Trace tr = run.trace;
    tr.fix_distances.clear();
    for (const auto& pt : tr.points) tr.fix_distances.push_back((pt - zstar).norm());
    const double d0 = (tr.points.front() - zstar).squaredNorm();
    const RateReport rr = verify_rate(tr, d0);
    detail::add_row(rows, "rate_bound", id, rr.passed() ? rr.tightest_ratio : 1e300, 1.0 + 1e-9);

    for (double g : gammas) {
      AdmmConfig c2;
      c2.k_max = 60;
      c2.tol = 1e-300;
      const AdmmResult a = admm_classical(spec, g, {}, c2);
      const AdmmResult b = admm_equilibrate(spec, metric_from_vector(Vec::Constant(spec.p(), 1.0 / g)), {}, c2);
      double dev = 0.0;
      for (std::size_t k = 0; k < a.states.size(); ++k) {
        const auto& sa = a.states[k];
        const auto& sb = b.states[k];
        dev = std::max({dev, (sa.x - sb.x).norm() / (1.0 + sa.x.norm()), (sa.z - sb.z).norm() / (1.0 + sa.z.norm()),
                        (sa.lambda - sb.lambda).norm() / (1.0 + sa.lambda.norm())});
      }
      detail::add_row(rows, "scalar_metric_equivalence", id + "_gamma_" + detail::fmt_double(g), dev, 1e-10);
    }
  }
  return rows;
}

inline void write_battery_csv(std::ostream& os, const std::vector<CheckRow>& rows) {
  os << "check,instance,deviation,threshold,passed\n";
  for (const auto& r : rows)
    os << r.check << ',' << r.instance << ',' << detail::fmt_double(r.deviation) << ','
       << detail::fmt_double(r.threshold) << ',' << (r.passed ? "pass" : "fail") << '\n';
}

}  // namespace equiprox
