#pragma once

#include "core.hpp"
#include "fixedpoint.hpp"
#include "prox.hpp"
#include "residual.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace equiprox {

struct AdmmState {
  Vec x;
  Vec z;
  Vec lambda;
  Vec zeta;
};

enum class StopRule {
  kkt,           // max(||Ax - Bz - c||, ||Qx + q + A'lambda||) <= tol (1 + ||q||)
  x_optimality,  // prox-gradient residual of x <= tol (1 + ||q||)
  fixed_point,   // ||zeta^{k+1} - zeta^k|| <= tol
};

inline const char* to_string(StopRule r) {
  switch (r) {
    case StopRule::kkt: return "kkt";
    case StopRule::x_optimality: return "x_optimality";
    case StopRule::fixed_point: return "fixed_point";
  }
  return "unknown";
}

struct AdmmConfig {
  long k_max = 10000;
  double tol = 1e-8;
  StopRule stop = StopRule::kkt;
  bool record_trace = true;
};

struct AdmmResult {
  SolutionPair solution;
  Trace trace;                    // zeta sequence
  std::vector<AdmmState> states;  // states[k] holds (x^k, z^k, lambda^k, zeta^k)
  long iterations = 0;
  bool converged = false;
};

inline Function f_function(const ProblemSpec& spec) { return quadratic(spec.quad_Q, spec.quad_q); }

inline Function g_function(const ProblemSpec& spec) {
  if (spec.g_quadratic) return quadratic(spec.g_quadratic->Q, spec.g_quadratic->q);
  return l1(spec.alpha, spec.m());
}

namespace detail {

inline AdmmState initial_state(const ProblemSpec& spec, const AdmmState& init) {
  AdmmState s;
  s.x = init.x.size() ? init.x : Vec::Zero(spec.n());
  s.z = init.z.size() ? init.z : Vec::Zero(spec.m());
  s.lambda = init.lambda.size() ? init.lambda : Vec::Zero(spec.p());
  require(s.x.size() == spec.n() && s.z.size() == spec.m() && s.lambda.size() == spec.p(),
          ErrorKind::dimension_mismatch,
          "initial state sizes (" + std::to_string(s.x.size()) + ", " + std::to_string(s.z.size()) + ", " +
              std::to_string(s.lambda.size()) + ") do not match problem (" + std::to_string(spec.n()) + ", " +
              std::to_string(spec.m()) + ", " + std::to_string(spec.p()) + ")");
  return s;
}

inline void require_separable_z_update(const ProblemSpec& spec) {
  if (spec.has_l1_term())
    require(is_diagonal(spec.B), ErrorKind::unsupported,
            "l1 term with non-diagonal B makes the z-update non-separable");
}

inline double stop_residual(const ProblemSpec& spec, const AdmmConfig& cfg, const AdmmState& s,
                            double step) {
  switch (cfg.stop) {
    case StopRule::kkt: return kkt_residual(spec, s.x, s.z, s.lambda);
    case StopRule::x_optimality: return prox_gradient_residual(spec, s.x);
    case StopRule::fixed_point: return step;
  }
  return step;
}

inline double stop_threshold(const ProblemSpec& spec, const AdmmConfig& cfg) {
  return cfg.stop == StopRule::fixed_point ? cfg.tol : cfg.tol * (1.0 + spec.quad_q.norm());
}

/// Shared loop: `step` advances (x, z, lambda) and returns zeta^{k+1}.
template <class Step>
AdmmResult run_admm(const ProblemSpec& spec, const AdmmConfig& cfg, AdmmState state, Step&& step) {
  require(cfg.tol > 0.0, ErrorKind::invalid_argument, "tol must be positive");
  require(cfg.k_max >= 0, ErrorKind::invalid_argument, "k_max must be nonnegative");
  AdmmResult out;
  out.trace.theta = 0.5;
  if (cfg.record_trace) {
    out.states.push_back(state);
    out.trace.points.push_back(state.zeta);
  }
  const double threshold = stop_threshold(spec, cfg);
  double residual = std::numeric_limits<double>::infinity();
  long k = 0;
  for (; k < cfg.k_max;) {
    const Vec zeta_prev = state.zeta;
    step(state);
    ++k;
    const double step_norm = (state.zeta - zeta_prev).norm();
    if (cfg.record_trace) {
      out.states.push_back(state);
      out.trace.points.push_back(state.zeta);
      out.trace.step_norms.push_back(step_norm);
    }
    residual = stop_residual(spec, cfg, state, step_norm);
    if (!std::isfinite(residual)) break;
    if (residual <= threshold) {
      out.converged = true;
      break;
    }
  }
  out.iterations = k;
  out.trace.converged = out.converged;
  SolutionPair& sol = out.solution;
  sol.x_star = state.x;
  sol.z_star = state.z;
  sol.lambda_star = state.lambda;
  sol.objective = spec.f_value(state.x) + spec.g_value(state.z);
  sol.residual = residual;
  sol.tolerance = threshold;
  sol.converged = out.converged;
  sol.iterations = k;
  return out;
}

}  // namespace detail

/// Classical scaled ADMM with scalar step gamma. zeta^k = A x^k + lambda^{k-1} / gamma.
inline AdmmResult admm_classical(const ProblemSpec& spec, double gamma, const AdmmState& init = {},
                                 const AdmmConfig& cfg = {}) {
  require_valid(spec);
  detail::require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::invalid_argument,
                  "gamma must be strictly positive");
  detail::require_separable_z_update(spec);
  const Function g = g_function(spec);
  const Mat& A = spec.A;
  const Mat& B = spec.B;
  const Eigen::LLT<Mat> x_solver(spec.quad_Q + gamma * A.transpose() * A);
  detail::require(x_solver.info() == Eigen::Success, ErrorKind::rank_deficient,
                  "x-update system is not positive definite");
  const Mat Hz = gamma * B.transpose() * B;

  AdmmState state = detail::initial_state(spec, init);
  state.zeta = spec.c + B * state.z + state.lambda / gamma;
  return detail::run_admm(spec, cfg, state, [&](AdmmState& s) {
    const Vec lambda_prev = s.lambda;
    s.x = x_solver.solve(gamma * A.transpose() * (B * s.z + spec.c - s.lambda / gamma) - spec.quad_q);
    s.z = solve_regularized(g, Hz, gamma * B.transpose() * (A * s.x - spec.c + s.lambda / gamma));
    s.lambda += gamma * (A * s.x - B * s.z - spec.c);
    s.zeta = A * s.x + lambda_prev / gamma;
  });
}

/// Equilibrate ADMM in the metric M = S'S, updates written with equilibrate proxes:
///   x  = (SA)^{-1} Prox_{f (SA)^{-1}}( Sc + SBz - S^{-T} lambda)
///   z  = (SB)^{-1} Prox_{g (SB)^{-1}}(-Sc + SAx + S^{-T} lambda)
///   lambda += S'S (Ax - Bz - c)
/// zeta^{k+1} = SAx^{k+1} + S^{-T} lambda^k.
inline AdmmResult admm_equilibrate(const ProblemSpec& spec, const DiagonalMetric& metric,
                                   const AdmmState& init = {}, const AdmmConfig& cfg = {}) {
  require_valid(spec);
  detail::require(metric.size() == spec.p(), ErrorKind::dimension_mismatch,
                  "metric has size " + std::to_string(metric.size()) + " but constraint has " +
                      std::to_string(spec.p()) + " rows");
  detail::require_separable_z_update(spec);
  const Function g = g_function(spec);
  const Vec s = metric.S_diag();
  const Mat SA = s.asDiagonal() * spec.A;
  const Mat SB = s.asDiagonal() * spec.B;
  const Vec c_t = s.cwiseProduct(spec.c);
  const Eigen::LLT<Mat> x_solver(spec.quad_Q + SA.transpose() * SA);
  detail::require(x_solver.info() == Eigen::Success, ErrorKind::rank_deficient,
                  "x-update system is not positive definite");
  const Mat Hz = SB.transpose() * SB;

  AdmmState state = detail::initial_state(spec, init);
  state.zeta = c_t + SB * state.z + state.lambda.cwiseQuotient(s);
  return detail::run_admm(spec, cfg, state, [&](AdmmState& st) {
    const Vec lambda_t = st.lambda.cwiseQuotient(s);
    const Vec vx = c_t + SB * st.z - lambda_t;
    st.x = x_solver.solve(SA.transpose() * vx - spec.quad_q);
    const Vec vz = -c_t + SA * st.x + lambda_t;
    st.z = solve_regularized(g, Hz, SB.transpose() * vz);
    st.lambda += metric.apply_M(spec.A * st.x - spec.B * st.z - spec.c);
    st.zeta = SA * st.x + lambda_t;
  });
}

/// Runs the solver selected by a parametrization. Classical metric and equilibrate
/// forms all run E-ADMM with the corresponding metric.
inline AdmmResult admm_solve(const ProblemSpec& spec, const Parametrization& param, const AdmmState& init = {},
                             const AdmmConfig& cfg = {}) {
  validate_parametrization(param);
  return std::visit(
      [&](const auto& p) -> AdmmResult {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassicalScalar>) {
          return admm_classical(spec, p.gamma, init, cfg);
        } else if constexpr (std::is_same_v<T, ClassicalMetric>) {
          return admm_equilibrate(spec, p.metric, init, cfg);
        } else if constexpr (std::is_same_v<T, EquilibrateScalar>) {
          return admm_equilibrate(spec, metric_from_decomposition(Vec::Constant(spec.p(), p.rho)), init, cfg);
        } else {
          detail::require(detail::is_diagonal(p.S), ErrorKind::unsupported,
                          "ADMM supports diagonal S only");
          return admm_equilibrate(spec, metric_from_decomposition(p.S.diagonal()), init, cfg);
        }
      },
      param);
}

/// zeta = S A x + S^{-T} lambda
inline Vec unscaled_fixed_point(const ProblemSpec& spec, const DiagonalMetric& metric, const Vec& x,
                                const Vec& lambda) {
  return metric.apply_S(spec.A * x) + metric.apply_S_inv(lambda);
}

/// zeta -> 1/2 (2P_f - I)(2P_g - I) zeta + 1/2 zeta with
///   P_f(v) = Prox_{f (SA)^{-1}}(v),  P_g(v) = Sc + Prox_{g (SB)^{-1}}(v - Sc).
/// One application to zeta^k reproduces the zeta^{k+1} of an E-ADMM sweep.
inline FixedPointMap admm_fixed_point_map(const ProblemSpec& spec, const DiagonalMetric& metric) {
  require_valid(spec);
  detail::require(metric.size() == spec.p(), ErrorKind::dimension_mismatch, "metric size mismatch");
  const Vec s = metric.S_diag();
  const Mat SA = s.asDiagonal() * spec.A;
  const Mat SB = s.asDiagonal() * spec.B;
  const Vec c_t = s.cwiseProduct(spec.c);
  const Function f = f_function(spec);
  const Function g = g_function(spec);
  return [=](const Vec& zeta) -> Vec {
    const Vec pg = c_t + prox_through(g, SB, 1.0, zeta - c_t);
    const Vec rg = 2.0 * pg - zeta;
    const Vec rf = 2.0 * prox_through(f, SA, 1.0, rg) - rg;
    return 0.5 * rf + 0.5 * zeta;
  };
}

struct DualityReport {
  std::vector<Vec> primal;  // zeta^k
  std::vector<Vec> dual;    // psi^k
  ScalingReport unscaled;   // psi^k against zeta^k with alpha = 1
  ScalingReport scaled;     // psi^k against zeta^k with alpha = sqrt(gamma)
  bool passed = false;
};

namespace detail {

inline void require_square_constraint(const ProblemSpec& spec) {
  require(spec.A.rows() == spec.A.cols() && spec.B.rows() == spec.B.cols(), ErrorKind::unsupported,
          "duality maps need square A and B (A is " + dims(spec.A.rows(), spec.A.cols()) + ", B is " +
              dims(spec.B.rows(), spec.B.cols()) + ")");
}

inline std::vector<Vec> run_map(const FixedPointMap& map, Vec z, long steps) {
  std::vector<Vec> out{z};
  for (long k = 0; k < steps; ++k) {
    z = map(z);
    out.push_back(z);
  }
  return out;
}

}  // namespace detail

/// Dual fixed-point map built from the conjugates:
///   1/2 (2Q_f - I)(2Q_g - I) + 1/2 I
///   Q_f(v) = Prox_{f* with parameter (SA)'(-I)}(v)
///   Q_g(v) = Prox_{g* with parameter (SB)'}(v - Sc)
inline FixedPointMap admm_dual_fixed_point_map(const ProblemSpec& spec, const DiagonalMetric& metric) {
  require_valid(spec);
  detail::require_square_constraint(spec);
  const Vec s = metric.S_diag();
  const Mat SA = s.asDiagonal() * spec.A;
  const Mat SB = s.asDiagonal() * spec.B;
  const Vec c_t = s.cwiseProduct(spec.c);
  const Function fc = conjugate(f_function(spec));
  const Function gc = conjugate(g_function(spec));
  const Mat Kf = detail::inverse(Mat(-SA.transpose()));
  const Mat Kg = detail::inverse(Mat(SB.transpose()));
  return [=](const Vec& psi) -> Vec {
    const Vec rg = 2.0 * prox_through(gc, Kg, 1.0, psi - c_t) - psi;
    const Vec rf = 2.0 * prox_through(fc, Kf, 1.0, rg) - rg;
    return 0.5 * rf + 0.5 * psi;
  };
}

/// Iterates the primal and dual equilibrate maps from the same point; they must
/// coincide.
inline DualityReport self_duality_check(const ProblemSpec& spec, const DiagonalMetric& metric, const Vec& z0,
                                        long steps = 50) {
  DualityReport rep;
  rep.primal = detail::run_map(admm_fixed_point_map(spec, metric), z0, steps);
  rep.dual = detail::run_map(admm_dual_fixed_point_map(spec, metric), z0, steps);
  rep.unscaled = check_parallel_scaling(rep.dual, rep.primal, 1.0);
  rep.scaled = rep.unscaled;
  rep.passed = rep.unscaled.passed;
  return rep;
}

/// Classical parametrization: primal map in zeta = Ax + lambda/gamma, dual map in
/// psi = gamma Ax + lambda. Started from psi^0 = gamma zeta^0 the traces stay
/// parallel, psi^k = gamma zeta^k.
inline DualityReport classical_duality_scaling(const ProblemSpec& spec, double gamma, const Vec& z0,
                                               long steps = 50) {
  require_valid(spec);
  detail::require(gamma > 0.0, ErrorKind::invalid_argument, "gamma must be strictly positive");
  detail::require_square_constraint(spec);
  const Function f = f_function(spec);
  const Function g = g_function(spec);
  const Function fc = conjugate(f);
  const Function gc = conjugate(g);
  const Mat A = spec.A;
  const Mat B = spec.B;
  const Vec c = spec.c;
  const FixedPointMap primal = [=](const Vec& zeta) -> Vec {
    const Vec rg = 2.0 * (c + prox_through(g, B, 1.0 / gamma, zeta - c)) - zeta;
    const Vec rf = 2.0 * prox_through(f, A, 1.0 / gamma, rg) - rg;
    return 0.5 * rf + 0.5 * zeta;
  };
  const Mat Kf = detail::inverse(Mat(-A.transpose()));
  const Mat Kg = detail::inverse(Mat(B.transpose()));
  const FixedPointMap dual = [=](const Vec& psi) -> Vec {
    const Vec rg = 2.0 * prox_through(gc, Kg, gamma, psi - gamma * c) - psi;
    const Vec rf = 2.0 * prox_through(fc, Kf, gamma, rg) - rg;
    return 0.5 * rf + 0.5 * psi;
  };
  DualityReport rep;
  rep.primal = detail::run_map(primal, z0, steps);
  rep.dual = detail::run_map(dual, gamma * z0, steps);
  rep.unscaled = check_parallel_scaling(rep.dual, rep.primal, 1.0);
  rep.scaled = check_parallel_scaling(rep.dual, rep.primal, std::sqrt(gamma));
  rep.passed = rep.scaled.passed;
  return rep;
}

/// One-variable dual of min f(x) + g(z) s.t. Ax - Bz = c:
///   d(l) = weight * ( f*(Kf l) + g*(Kg l) ) + <l, c_t>
/// equilibrate: Kf = -(SA)', Kg = (SB)', c_t = Sc, weight = 1, lambda = S' l
/// classical:   Kf = -gamma A', Kg = gamma B', c_t = c, weight = 1/gamma, lambda = gamma l
/// The primal in the same variables has optimal value weight * p*, so at
/// solutions weight * p* + d* = 0.
struct UnifiedDual {
  Function f_conj;
  Function g_conj;
  Mat Kf;
  Mat Kg;
  Vec c_t;
  double weight = 1.0;
  Mat lambda_map;  // lambda = lambda_map * l

  double value(const Vec& l) const {
    return weight * (f_conj.value(Kf * l) + g_conj.value(Kg * l)) + l.dot(c_t);
  }
};

inline UnifiedDual build_unified_dual(const ProblemSpec& spec, const Parametrization& param) {
  require_valid(spec);
  UnifiedDual d;
  d.f_conj = conjugate(f_function(spec));
  d.g_conj = conjugate(g_function(spec));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassicalScalar>) {
          d.Kf = -p.gamma * spec.A.transpose();
          d.Kg = p.gamma * spec.B.transpose();
          d.c_t = spec.c;
          d.weight = 1.0 / p.gamma;
          d.lambda_map = p.gamma * Mat::Identity(spec.p(), spec.p());
        } else {
          Vec s;
          if constexpr (std::is_same_v<T, ClassicalMetric>) s = p.metric.S_diag();
          else if constexpr (std::is_same_v<T, EquilibrateScalar>) s = Vec::Constant(spec.p(), p.rho);
          else {
            detail::require(detail::is_diagonal(p.S), ErrorKind::unsupported, "diagonal S only");
            s = p.S.diagonal();
          }
          d.Kf = -(s.asDiagonal() * spec.A).transpose();
          d.Kg = (s.asDiagonal() * spec.B).transpose();
          d.c_t = s.cwiseProduct(spec.c);
          d.weight = 1.0;
          d.lambda_map = s.asDiagonal();
        }
      },
      param);
  return d;
}

struct DualSolution {
  Vec l;
  double value = 0.0;
  double kkt = 0.0;
};

namespace detail {

/// Quadratic model of weight * f*(Kf l) + <l, c_t> (+ the g* part when quadratic):
/// 1/2 l'Hl + h'l + const.
inline void dual_quadratic_part(const Function& fc, const Mat& K, double w, Mat& H, Vec& h) {
  // fc(y) = 1/2 (y+s)'Q(y+s) + q'(y+s) - t'y + k
  H += w * K.transpose() * fc.Q * K;
  h += w * K.transpose() * (fc.Q * fc.shift + fc.q - fc.tilt);
}

}  // namespace detail

/// Minimizes the unified dual for quadratic f with a quadratic or l1 g. The l1
/// case is a box-constrained QP, solved by coordinate descent followed by an
/// exact solve on the free set.
inline DualSolution solve_unified_dual(const UnifiedDual& d, double tol = 1e-13, long max_sweeps = 200000) {
  detail::require(d.f_conj.base == Function::Base::quadratic, ErrorKind::unsupported,
                  "dual solve needs a quadratic f");
  const Index p = d.c_t.size();
  Mat H = Mat::Zero(p, p);
  Vec h = d.c_t;
  detail::dual_quadratic_part(d.f_conj, d.Kf, d.weight, H, h);
  DualSolution out;
  if (d.g_conj.base == Function::Base::quadratic) {
    detail::dual_quadratic_part(d.g_conj, d.Kg, d.weight, H, h);
    Eigen::LDLT<Mat> ldlt(H);
    out.l = ldlt.solve(-h);
    out.kkt = (H * out.l + h).norm();
    out.value = d.value(out.l);
    return out;
  }
  detail::require(d.g_conj.base == Function::Base::box && detail::is_diagonal(d.Kg) &&
                      d.g_conj.shift.isZero(0.0) && d.g_conj.tilt.isZero(0.0),
                  ErrorKind::unsupported, "dual solve needs an untilted box with diagonal Kg");
  const Vec bound = Vec::Constant(p, d.g_conj.alpha).cwiseQuotient(d.Kg.diagonal().cwiseAbs());
  Vec l = Vec::Zero(p);
  Vec grad = h;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Index i = 0; i < p; ++i) {
      const double li = std::clamp(l(i) - grad(i) / H(i, i), -bound(i), bound(i));
      const double delta = li - l(i);
      if (delta != 0.0) {
        grad += delta * H.col(i);
        l(i) = li;
        moved = std::max(moved, std::abs(delta));
      }
    }
    if (moved <= tol * (1.0 + l.cwiseAbs().maxCoeff())) break;
  }
  // exact solve on the free set with the active bounds fixed
  std::vector<Index> free;
  for (Index i = 0; i < p; ++i)
    if (std::abs(l(i)) < bound(i) * (1.0 - 1e-12)) free.push_back(i);
  if (!free.empty()) {
    const Index nf = static_cast<Index>(free.size());
    Mat Hf(nf, nf);
    Vec rhs(nf);
    for (Index a = 0; a < nf; ++a) {
      rhs(a) = -h(free[a]);
      for (Index j = 0; j < p; ++j) {
        const bool is_free = std::find(free.begin(), free.end(), j) != free.end();
        if (!is_free) rhs(a) -= H(free[a], j) * l(j);
      }
      for (Index b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
    }
    const Vec lf = Hf.ldlt().solve(rhs);
    Vec candidate = l;
    for (Index a = 0; a < nf; ++a) candidate(free[a]) = lf(a);
    if ((candidate.cwiseAbs().array() <= bound.array()).all()) l = candidate;
  }
  grad = H * l + h;
  double kkt = 0.0;
  for (Index i = 0; i < p; ++i) {
    // projected gradient
    const double stepped = std::clamp(l(i) - grad(i), -bound(i), bound(i));
    kkt = std::max(kkt, std::abs(stepped - l(i)));
  }
  out.l = l;
  out.kkt = kkt;
  out.value = d.value(l);
  return out;
}

}  // namespace equiprox
