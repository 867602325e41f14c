#pragma once

#include "core.hpp"
#include "prox.hpp"

#include <Eigen/QR>

#include <cmath>

namespace equiprox {

namespace detail {

inline void require_l1_problem(const ProblemSpec& spec, const char* what) {
  require(spec.has_l1_term(), ErrorKind::unsupported, std::string(what) + " needs an l1 term");
  require(spec.F.cols() == spec.n(), ErrorKind::dimension_mismatch,
          std::string(what) + ": F is " + dims(spec.F.rows(), spec.F.cols()) + " but x has size " +
              std::to_string(spec.n()));
}

/// F^{-T} g: exact for square F, least squares otherwise.
inline Vec pull_back_gradient(const Mat& F, const Vec& g) {
  if (is_identity(F)) return g;
  if (is_diagonal(F)) return g.cwiseQuotient(F.diagonal());
  return F.transpose().colPivHouseholderQr().solve(g);
}

}  // namespace detail

/// Distance-style residual of 0 in grad f(x) + alpha dl1(Fx), measured in the Fx
/// coordinates. Entries |u_i| <= 1e-12 (1 + ||u||_inf) count as zero.
inline double optimality_residual(const ProblemSpec& spec, const Vec& x) {
  detail::require_l1_problem(spec, "optimality_residual");
  const Vec u = spec.F * x;
  const Vec g = detail::pull_back_gradient(spec.F, spec.f_gradient(x));
  const double zero_tol = 1e-12 * (1.0 + (u.size() ? u.cwiseAbs().maxCoeff() : 0.0));
  double sum = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    double r;
    if (std::abs(u(i)) > zero_tol) r = g(i) + spec.alpha * (u(i) > 0.0 ? 1.0 : -1.0);
    else r = std::max(std::abs(g(i)) - spec.alpha, 0.0);
    sum += r * r;
  }
  return std::sqrt(sum);
}

/// ||u - T_alpha(u - F^{-T} grad f(x))|| with u = Fx; zero exactly at solutions
/// and continuous in x, so small nonzero entries are not penalized as support.
inline double prox_gradient_residual(const ProblemSpec& spec, const Vec& x) {
  detail::require_l1_problem(spec, "prox_gradient_residual");
  const Vec u = spec.F * x;
  const Vec g = detail::pull_back_gradient(spec.F, spec.f_gradient(x));
  return (u - soft_threshold(u - g, spec.alpha)).norm();
}

/// max(||Ax - Bz - c||, ||Qx + q + A' lambda||)
inline double kkt_residual(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& lambda) {
  const double primal = (spec.A * x - spec.B * z - spec.c).norm();
  const double dual = (spec.f_gradient(x) + spec.A.transpose() * lambda).norm();
  return std::max(primal, dual);
}

}  // namespace equiprox
