#pragma once

#include "core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace equiprox {

/// Closed-convex function with a closed-form prox, stored in the normalized form
///
///   h(z) = base(z + shift) - <tilt, z> + constant
///
/// where base is a quadratic 1/2 u'Qu + q'u, alpha*||u||_1, or the indicator of
/// the box [-alpha, alpha]^n. Tilts, translations and conjugates stay inside
/// this family, so every derived function keeps an exact prox.
struct Function {
  enum class Base { quadratic, l1, box };

  Base base = Base::quadratic;
  Mat Q;
  Vec q;
  double alpha = 0.0;
  Vec shift;
  Vec tilt;
  double constant = 0.0;
  std::string kind;  // how the function was built, for reports

  Index dim() const { return shift.size(); }

  double base_value(const Vec& u) const {
    switch (base) {
      case Base::quadratic: return 0.5 * u.dot(Q * u) + q.dot(u);
      case Base::l1: return alpha * u.lpNorm<1>();
      case Base::box: {
        const double slack = 1e-12 * std::max(1.0, alpha);
        return (u.cwiseAbs().array() <= alpha + slack).all() ? 0.0
                                                             : std::numeric_limits<double>::infinity();
      }
    }
    return 0.0;
  }

  double value(const Vec& z) const {
    detail::require(z.size() == dim(), ErrorKind::dimension_mismatch,
                    "function of dimension " + std::to_string(dim()) + " evaluated at vector of size " +
                        std::to_string(z.size()));
    return base_value(z + shift) - tilt.dot(z) + constant;
  }
};

inline Function quadratic(Mat Q, Vec q) {
  detail::require(Q.rows() == Q.cols() && Q.rows() == q.size(), ErrorKind::dimension_mismatch,
                  "quadratic: Q is " + detail::dims(Q.rows(), Q.cols()) + " but q has size " +
                      std::to_string(q.size()));
  detail::require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12, ErrorKind::invalid_argument,
                  "quadratic: Q must be symmetric");
  Function f;
  const Index n = q.size();
  f.base = Function::Base::quadratic;
  f.Q = std::move(Q);
  f.q = std::move(q);
  f.shift = Vec::Zero(n);
  f.tilt = Vec::Zero(n);
  f.kind = "quadratic";
  return f;
}

inline Function l1(double alpha, Index n) {
  detail::require(alpha > 0.0, ErrorKind::invalid_argument, "l1: alpha must be positive");
  Function f;
  f.base = Function::Base::l1;
  f.alpha = alpha;
  f.shift = Vec::Zero(n);
  f.tilt = Vec::Zero(n);
  f.kind = "l1";
  return f;
}

/// Indicator of {u : ||u||_inf <= alpha}, the conjugate of alpha*||.||_1.
inline Function box_indicator(double alpha, Index n) {
  Function f = l1(alpha, n);
  f.base = Function::Base::box;
  f.kind = "box";
  return f;
}

/// h(z) = f(z) - <c, z>
inline Function linear_tilt(Function f, const Vec& c) {
  detail::require(c.size() == f.dim(), ErrorKind::dimension_mismatch, "linear_tilt: size mismatch");
  f.tilt += c;
  f.kind = "tilt(" + f.kind + ")";
  return f;
}

/// h(z) = f(z + s)
inline Function translate(Function f, const Vec& s) {
  detail::require(s.size() == f.dim(), ErrorKind::dimension_mismatch, "translate: size mismatch");
  f.constant += f.tilt.dot(s);
  f.shift += s;
  f.kind = "translate(" + f.kind + ")";
  return f;
}

/// h(z) = f(z) + k
inline Function add_constant(Function f, double k) {
  f.constant += k;
  return f;
}

/// Fenchel conjugate. For h(z) = b(z + s) - <t, z> + k the conjugate is
/// h*(y) = b*(y + t) - <s, y + t> - k.
inline Function conjugate(const Function& f) {
  Function g;
  const Index n = f.dim();
  switch (f.base) {
    case Function::Base::quadratic: {
      Eigen::LLT<Mat> llt(f.Q);
      const double scale = f.Q.cwiseAbs().maxCoeff();
      const bool pd = llt.info() == Eigen::Success &&
                      llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-7 * std::sqrt(std::max(scale, 1e-300));
      detail::require(pd, ErrorKind::unsupported,
                      "conjugate of a quadratic needs a positive definite Hessian");
      Mat P = llt.solve(Mat::Identity(n, n));
      P = 0.5 * (P + P.transpose());
      const Vec Pq = P * f.q;
      g.base = Function::Base::quadratic;
      g.Q = std::move(P);
      g.q = -Pq;
      g.constant = 0.5 * f.q.dot(Pq);
      break;
    }
    case Function::Base::l1:
      g.base = Function::Base::box;
      g.alpha = f.alpha;
      break;
    case Function::Base::box:
      g.base = Function::Base::l1;
      g.alpha = f.alpha;
      break;
  }
  // b*(y + t) - <s, y> - <s, t> - k
  g.shift = f.tilt;
  g.tilt = f.shift;
  g.constant += -f.shift.dot(f.tilt) - f.constant;
  g.kind = "conjugate(" + f.kind + ")";
  return g;
}

inline Vec soft_threshold(const Vec& u, double level = 1.0) {
  return u.unaryExpr([level](double x) {
    const double a = std::abs(x) - level;
    return a > 0.0 ? std::copysign(a, x) : 0.0;
  });
}

namespace detail {

/// argmin_u base(u) + 1/2 u'Hu - w'u for the bare base function. l1 and box bases
/// are separable only for diagonal H.
inline Vec solve_base(const Function& f, const Mat& H, const Vec& w) {
  switch (f.base) {
    case Function::Base::quadratic: {
      const Mat K = f.Q + H;
      Eigen::LLT<Mat> llt(K);
      if (llt.info() == Eigen::Success) return llt.solve(w - f.q);
      Eigen::FullPivLU<Mat> lu(K);
      require(lu.isInvertible(), ErrorKind::rank_deficient, "prox system is singular");
      return lu.solve(w - f.q);
    }
    case Function::Base::l1:
    case Function::Base::box: {
      require(is_diagonal(H), ErrorKind::unsupported,
              "l1/box prox requires a diagonal metric");
      const Vec h = H.diagonal();
      require((h.array() > 0.0).all(), ErrorKind::invalid_argument, "metric must be positive");
      if (f.base == Function::Base::l1) return soft_threshold(w, f.alpha).cwiseQuotient(h);
      return w.cwiseQuotient(h).cwiseMax(-f.alpha).cwiseMin(f.alpha);
    }
  }
  return {};
}

}  // namespace detail

/// argmin_z h(z) + 1/2 z'Hz - w'z for H positive definite (diagonal for l1/box).
inline Vec solve_regularized(const Function& h, const Mat& H, const Vec& w) {
  detail::require(H.rows() == h.dim() && H.cols() == h.dim() && w.size() == h.dim(),
                  ErrorKind::dimension_mismatch,
                  "regularized solve: H is " + detail::dims(H.rows(), H.cols()) + ", w has size " +
                      std::to_string(w.size()) + ", function has dimension " + std::to_string(h.dim()));
  const Vec w_base = w + h.tilt + H * h.shift;
  return detail::solve_base(h, H, w_base) - h.shift;
}

namespace detail {

inline void require_injective(const Mat& K, const char* what) {
  bool ok;
  if (is_diagonal(K)) {
    ok = (K.diagonal().array() != 0.0).all();
  } else {
    Eigen::ColPivHouseholderQR<Mat> qr(K);
    qr.setThreshold(1e-10);
    ok = K.cols() <= K.rows() && qr.rank() == K.cols();
  }
  require(ok, ErrorKind::rank_deficient, std::string(what) + " must have full column rank");
}

/// Inverse of a square invertible matrix; diagonal inputs stay exactly diagonal.
inline Mat inverse(const Mat& K) {
  if (is_diagonal(K)) return K.diagonal().cwiseInverse().asDiagonal();
  Eigen::FullPivLU<Mat> lu(K);
  require(lu.isInvertible(), ErrorKind::rank_deficient, "matrix is not invertible");
  return lu.inverse();
}

}  // namespace detail

/// K * argmin_x h(x) + 1/(2 beta) ||Kx - v||^2 for injective K.
inline Vec prox_through(const Function& h, const Mat& K, double beta, const Vec& v) {
  detail::require(K.rows() == v.size() && K.cols() == h.dim(), ErrorKind::dimension_mismatch,
                  "prox: operator is " + detail::dims(K.rows(), K.cols()) + ", input has size " +
                      std::to_string(v.size()) + ", function has dimension " + std::to_string(h.dim()));
  detail::require(beta > 0.0, ErrorKind::invalid_argument, "prox: step must be positive");
  detail::require_injective(K, "prox operator");
  const Mat H = K.transpose() * K / beta;
  const Vec w = K.transpose() * v / beta;
  return K * solve_regularized(h, H, w);
}

/// argmin_z (1/gamma) f(z) + 1/2 ||z - v||^2
inline Vec prox_classical(const Function& f, double gamma, const Vec& v) {
  detail::require(gamma > 0.0, ErrorKind::invalid_argument, "gamma must be strictly positive");
  detail::require(v.size() == f.dim(), ErrorKind::dimension_mismatch, "prox: size mismatch");
  const Index n = f.dim();
  return solve_regularized(f, gamma * Mat::Identity(n, n), gamma * v);
}

/// argmin_z f(z) + 1/2 ||z - v||_M^2
inline Vec prox_metric(const Function& f, const DiagonalMetric& M, const Vec& v) {
  detail::require(M.size() == f.dim() && v.size() == f.dim(), ErrorKind::dimension_mismatch,
                  "metric prox: size mismatch");
  return solve_regularized(f, M.M(), M.apply_M(v));
}

/// S * argmin_z f(z) + 1/2 ||Sz - v||^2
inline Vec prox_equilibrate(const Function& f, const Mat& S, const Vec& v) {
  return prox_through(f, S, 1.0, v);
}

inline Vec prox_equilibrate(const Function& f, double rho, const Vec& v) {
  detail::require(rho != 0.0, ErrorKind::invalid_argument, "rho must be nonzero");
  return prox_equilibrate(f, Mat(rho * Mat::Identity(f.dim(), f.dim())), v);
}

/// h(z) = f(Pz) for a quadratic f; other bases are not closed under composition.
inline Function compose_linear(const Function& f, const Mat& P) {
  detail::require(f.base == Function::Base::quadratic, ErrorKind::unsupported,
                  "composition with a linear map is only closed for quadratics");
  detail::require(P.rows() == f.dim(), ErrorKind::dimension_mismatch, "compose_linear: size mismatch");
  Mat Q = P.transpose() * f.Q * P;
  Q = 0.5 * (Q + Q.transpose());
  Function h = quadratic(std::move(Q), P.transpose() * (f.Q * f.shift + f.q - f.tilt));
  h.constant = f.base_value(f.shift) - f.constant;
  h.kind = "compose(" + f.kind + ")";
  return h;
}

/// argmin_z f(S^{-1} z) + 1/2 ||z - v||^2 for square invertible S: the domain form
/// of the equilibrate prox, evaluated through the composed function.
inline Vec prox_equilibrate_domain_form(const Function& f, const Mat& S, const Vec& v) {
  detail::require(S.rows() == S.cols(), ErrorKind::invalid_argument, "domain form needs square S");
  return prox_classical(compose_linear(f, detail::inverse(S)), 1.0, v);
}

/// Metric l1 prox: argmin ||x||_1 + 1/2 ||x - v||_M^2 = m .* T(v ./ m).
inline Vec metric_prox_l1(const Vec& v, const DiagonalMetric& M) {
  detail::require(v.size() == M.size(), ErrorKind::dimension_mismatch, "metric_prox_l1: size mismatch");
  return M.m().cwiseProduct(soft_threshold(v.cwiseQuotient(M.m())));
}

inline Vec metric_prox_l1(const Vec& v, const Mat& M) {
  detail::require(detail::is_diagonal(M), ErrorKind::unsupported,
                  "metric soft-thresholding requires a diagonal metric");
  detail::require(M.rows() == v.size(), ErrorKind::dimension_mismatch, "metric_prox_l1: size mismatch");
  detail::require((M.diagonal().array() > 0.0).all(), ErrorKind::invalid_argument,
                  "metric must be positive definite");
  const Vec m = M.diagonal().cwiseInverse();
  return m.cwiseProduct(soft_threshold(v.cwiseQuotient(m)));
}

/// Largest violation of Mv - T(Mv) in the l1 subdifferential at x, componentwise.
inline double l1_subdifferential_violation(const Vec& x, const Vec& g) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double r = x(i) != 0.0 ? std::abs(g(i) - std::copysign(1.0, x(i)))
                                 : std::max(std::abs(g(i)) - 1.0, 0.0);
    worst = std::max(worst, r);
  }
  return worst;
}

struct MoreauSplit {
  Vec p;
  Vec d;
  bool d_closed_form = false;
  double cross_check = 0.0;  // ||p + d - v||_inf when d has a closed form
};

/// v = Prox_{f S^{-1}}(v) + Prox_{f* S*}(v) for square invertible S. d is computed
/// from the conjugate directly when possible, otherwise as v - p.
inline MoreauSplit moreau_decompose(const Function& f, const Mat& S, const Vec& v) {
  detail::require(S.rows() == S.cols(), ErrorKind::invalid_argument,
                  "Moreau decomposition needs square invertible S");
  MoreauSplit out;
  out.p = prox_equilibrate(f, S, v);
  try {
    const Function fc = conjugate(f);
    out.d = prox_through(fc, detail::inverse(S.transpose()), 1.0, v);
    out.d_closed_form = true;
    out.cross_check = (out.p + out.d - v).cwiseAbs().maxCoeff();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::unsupported) throw;
    out.d = v - out.p;
  }
  return out;
}

enum class TranslateDirection { remove_scaling, equip_scaling };

/// remove_scaling evaluates S o Prox^M_f o S^{-1} (equal to the equilibrate prox);
/// equip_scaling evaluates S^{-1} o Prox_{f S^{-1}} o S (equal to the metric prox).
inline Vec translate_parametrization(const Function& f, const DiagonalMetric& M, const Vec& v,
                                     TranslateDirection direction) {
  if (direction == TranslateDirection::remove_scaling)
    return M.apply_S(prox_metric(f, M, M.apply_S_inv(v)));
  return M.apply_S_inv(prox_equilibrate(f, M.S(), M.apply_S(v)));
}

/// Prox_{f S^{-1}}(c + v), equal to the equilibrate prox of f - <S'c, .> at v.
inline Vec tilt_prox(const Function& f, const Vec& c, const Mat& S, const Vec& v) {
  return prox_equilibrate(f, S, c + v);
}

struct ProxSpec {
  Function f;
  Parametrization param;
};

inline Vec prox(const ProxSpec& spec, const Vec& v) {
  validate_parametrization(spec.param);
  return std::visit(
      [&](const auto& p) -> Vec {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassicalScalar>) return prox_classical(spec.f, p.gamma, v);
        else if constexpr (std::is_same_v<T, ClassicalMetric>) return prox_metric(spec.f, p.metric, v);
        else if constexpr (std::is_same_v<T, EquilibrateScalar>) return prox_equilibrate(spec.f, p.rho, v);
        else return prox_equilibrate(spec.f, p.S, v);
      },
      spec.param);
}

}  // namespace equiprox
