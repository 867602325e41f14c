#pragma once

#include "admm.hpp"
#include "core.hpp"
#include "residual.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <string>
#include <vector>

namespace equiprox {

enum class MetricProvenance { ratio, clamped_zero, clamped_inf, both_zero_default };

inline const char* to_string(MetricProvenance p) {
  switch (p) {
    case MetricProvenance::ratio: return "ratio";
    case MetricProvenance::clamped_zero: return "clamped_zero";
    case MetricProvenance::clamped_inf: return "clamped_inf";
    case MetricProvenance::both_zero_default: return "both_zero_default";
  }
  return "unknown";
}

struct MetricChoice {
  DiagonalMetric metric;
  std::vector<MetricProvenance> provenance;
  double objective_value = 0.0;  // selection objective at zeta0 = 0

  const Vec& m() const { return metric.m(); }
};

/// ||S ax||^2 + ||S^{-T} lambda||^2 - 2<S ax, zeta0> - 2<S^{-T} lambda, zeta0>
/// with ax = A x* (or F x*) supplied directly.
inline double selection_objective(const DiagonalMetric& metric, const Vec& ax, const Vec& lambda,
                                  const Vec& zeta0) {
  detail::require(ax.size() == metric.size() && lambda.size() == metric.size() && zeta0.size() == metric.size(),
                  ErrorKind::dimension_mismatch, "selection_objective: size mismatch");
  const Vec sx = metric.apply_S(ax);
  const Vec sl = metric.apply_S_inv(lambda);
  return sx.squaredNorm() + sl.squaredNorm() - 2.0 * sx.dot(zeta0) - 2.0 * sl.dot(zeta0);
}

/// m_i = |x_i / lambda_i|, with the limits m -> 0 (x_i = 0) and m -> inf
/// (lambda_i = 0) clamped to eps_floor and 1/eps_floor, and m_i = 1 when both vanish.
inline MetricChoice optimal_metric(const Vec& x_ref, const Vec& lambda_ref, double eps_floor = kDefaultEpsFloor) {
  detail::require(x_ref.size() == lambda_ref.size(), ErrorKind::dimension_mismatch,
                  "optimal_metric: x has size " + std::to_string(x_ref.size()) + " but lambda has size " +
                      std::to_string(lambda_ref.size()));
  const Index p = x_ref.size();
  Vec m(p);
  std::vector<MetricProvenance> prov(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    const bool x0 = x_ref(i) == 0.0;
    const bool l0 = lambda_ref(i) == 0.0;
    auto& tag = prov[static_cast<std::size_t>(i)];
    if (x0 && l0) {
      m(i) = 1.0;
      tag = MetricProvenance::both_zero_default;
    } else if (x0) {
      m(i) = 0.0;
      tag = MetricProvenance::clamped_zero;
    } else if (l0) {
      m(i) = std::numeric_limits<double>::infinity();
      tag = MetricProvenance::clamped_inf;
    } else {
      m(i) = std::abs(x_ref(i) / lambda_ref(i));
      tag = MetricProvenance::ratio;
    }
  }
  MetricChoice out;
  out.metric = metric_from_vector(m, eps_floor);
  for (Index i = 0; i < p; ++i) {
    // a ratio pushed outside [eps_floor, 1/eps_floor] is reported as clamped
    const auto flag = out.metric.clamped()[static_cast<std::size_t>(i)];
    auto& tag = prov[static_cast<std::size_t>(i)];
    if (tag == MetricProvenance::ratio && flag == ClampFlag::clamped_zero) tag = MetricProvenance::clamped_zero;
    if (tag == MetricProvenance::ratio && flag == ClampFlag::clamped_inf) tag = MetricProvenance::clamped_inf;
  }
  out.provenance = std::move(prov);
  out.objective_value = selection_objective(out.metric, x_ref, lambda_ref, Vec::Zero(p));
  return out;
}

namespace detail {

inline SolutionPair finish_one_shot(const ProblemSpec& spec, const Vec& x, const std::vector<Index>& zero_rows) {
  SolutionPair sol;
  sol.x_star = x;
  sol.z_star = spec.F * x;
  for (Index i : zero_rows) sol.z_star(i) = 0.0;
  sol.lambda_star = -pull_back_gradient(spec.F, spec.f_gradient(x));
  sol.objective = spec.f_value(x) + spec.alpha * sol.z_star.lpNorm<1>();
  sol.residual = optimality_residual(spec, x);
  sol.tolerance = 1e-6 * (1.0 + spec.quad_q.norm());
  sol.converged = sol.residual <= sol.tolerance;
  sol.iterations = 1;
  return sol;
}

inline void require_one_shot_problem(const ProblemSpec& spec, const DiagonalMetric& metric) {
  require_valid(spec);
  require(spec.has_l1_term(), ErrorKind::unsupported, "one-shot solve needs the l1 problem form");
  require(metric.size() == spec.F.rows(), ErrorKind::dimension_mismatch,
          "metric has size " + std::to_string(metric.size()) + " but F has " + std::to_string(spec.F.rows()) +
              " rows");
}

}  // namespace detail

/// x = argmin f(x) + 1/2 ||Fx||_M^2, i.e. (Q + F'MF) x = -q, with every metric entry
/// taken at its clamped finite value.
inline SolutionPair one_shot_solve_finite(const ProblemSpec& spec, const DiagonalMetric& metric) {
  detail::require_one_shot_problem(spec, metric);
  const Mat K = spec.quad_Q + spec.F.transpose() * metric.M_diag().asDiagonal() * spec.F;
  Eigen::LLT<Mat> llt(K);
  detail::require(llt.info() == Eigen::Success, ErrorKind::rank_deficient, "one-shot system is singular");
  return detail::finish_one_shot(spec, llt.solve(-spec.quad_q), {});
}

/// One-shot solve where entries clamped at the m -> 0 limit are imposed exactly as
/// (Fx)_i = 0 instead of through a huge metric weight.
inline SolutionPair one_shot_solve(const ProblemSpec& spec, const DiagonalMetric& metric) {
  detail::require_one_shot_problem(spec, metric);
  std::vector<Index> zero_rows, kept_rows;
  for (Index i = 0; i < metric.size(); ++i) {
    if (metric.clamped()[static_cast<std::size_t>(i)] == ClampFlag::clamped_zero) zero_rows.push_back(i);
    else kept_rows.push_back(i);
  }
  if (zero_rows.empty()) return one_shot_solve_finite(spec, metric);

  const Index n = spec.n();
  const Vec Mdiag = metric.M_diag();
  // x = W y parametrizes {x : (Fx)_i = 0 for the zero rows}
  Mat W;
  if (spec.F.rows() == spec.F.cols()) {
    const Mat Finv = detail::inverse(spec.F);
    W.resize(n, static_cast<Index>(kept_rows.size()));
    for (std::size_t j = 0; j < kept_rows.size(); ++j) W.col(static_cast<Index>(j)) = Finv.col(kept_rows[j]);
  } else {
    Mat FZ(static_cast<Index>(zero_rows.size()), n);
    for (std::size_t j = 0; j < zero_rows.size(); ++j) FZ.row(static_cast<Index>(j)) = spec.F.row(zero_rows[j]);
    Eigen::FullPivHouseholderQR<Mat> qr(FZ.transpose());
    qr.setThreshold(1e-10);
    const Index r = qr.rank();
    const Mat Qfull = qr.matrixQ();
    W = Qfull.rightCols(n - r);
  }
  Vec x = Vec::Zero(n);
  if (W.cols() > 0) {
    Mat Fk(static_cast<Index>(kept_rows.size()), n);
    Vec Mk(static_cast<Index>(kept_rows.size()));
    for (std::size_t j = 0; j < kept_rows.size(); ++j) {
      Fk.row(static_cast<Index>(j)) = spec.F.row(kept_rows[j]);
      Mk(static_cast<Index>(j)) = Mdiag(kept_rows[j]);
    }
    const Mat FkW = Fk * W;
    const Mat K = W.transpose() * spec.quad_Q * W + FkW.transpose() * Mk.asDiagonal() * FkW;
    Eigen::LLT<Mat> llt(K);
    detail::require(llt.info() == Eigen::Success, ErrorKind::rank_deficient, "restricted one-shot system is singular");
    x = W * llt.solve(-W.transpose() * spec.quad_q);
  }
  return detail::finish_one_shot(spec, x, zero_rows);
}

/// High-accuracy (x*, lambda*) from classical ADMM with gamma = 1, stopped once the
/// KKT residual reaches tol. z* is the splitting iterate, so its zeros are exact.
inline SolutionPair estimate_reference(const ProblemSpec& spec, double tol = 1e-10, long k_max = 100000) {
  require_valid(spec);
  detail::require(spec.is_l1_form(), ErrorKind::unsupported,
                  "estimate_reference needs the l1 form with A = F, B = I, c = 0");
  AdmmConfig cfg;
  cfg.k_max = k_max;
  cfg.tol = tol / (1.0 + spec.quad_q.norm());
  cfg.stop = StopRule::kkt;
  cfg.record_trace = false;
  AdmmResult res = admm_classical(spec, 1.0, {}, cfg);
  if (!res.converged)
    throw Error(ErrorKind::non_convergence, "reference solve stopped after " + std::to_string(res.iterations) +
                                                " iterations with residual " + detail::fmt_double(res.solution.residual));
  SolutionPair sol = res.solution;
  // lambda* must lie in alpha * d||z*||_1
  const double slack = 1e-9 * (1.0 + spec.alpha);
  for (Index i = 0; i < sol.z_star.size(); ++i) {
    const double l = sol.lambda_star(i);
    const bool ok = sol.z_star(i) != 0.0
                        ? std::abs(l - spec.alpha * (sol.z_star(i) > 0.0 ? 1.0 : -1.0)) <= slack
                        : std::abs(l) <= spec.alpha + slack;
    detail::require(ok, ErrorKind::non_convergence,
                    "recovered multiplier leaves the l1 subdifferential at index " + std::to_string(i));
  }
  sol.residual = kkt_residual(spec, sol.x_star, sol.z_star, sol.lambda_star);
  sol.tolerance = tol;
  sol.converged = sol.residual <= tol;
  return sol;
}

}  // namespace equiprox
