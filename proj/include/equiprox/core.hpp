#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace equiprox {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorKind {
  dimension_mismatch,
  invalid_argument,
  unsupported,
  rank_deficient,
  non_averaged_map,
  non_convergence,
  domain_error,
  parse_error,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::rank_deficient: return "rank_deficient";
    case ErrorKind::non_averaged_map: return "non_averaged_map";
    case ErrorKind::non_convergence: return "non_convergence";
    case ErrorKind::domain_error: return "domain_error";
    case ErrorKind::parse_error: return "parse_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline std::string dims(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

/// Numerical rank with singular values below tol * sigma_max treated as zero.
inline Index numerical_rank(const Mat& a, double rel_tol = 1e-10) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

inline bool full_column_rank(const Mat& a, double rel_tol = 1e-10) {
  return a.cols() <= a.rows() && numerical_rank(a, rel_tol) == a.cols();
}

inline bool is_diagonal(const Mat& a, double abs_tol = 0.0) {
  if (a.rows() != a.cols()) return false;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j && std::abs(a(i, j)) > abs_tol) return false;
  return true;
}

inline bool is_identity(const Mat& a) {
  return a.rows() == a.cols() && a == Mat::Identity(a.rows(), a.cols());
}

inline bool all_finite(const Mat& a) { return a.allFinite(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem data
// ---------------------------------------------------------------------------

/// Quadratic coupling term g(z) = 1/2 z'Qz + q'z, used instead of alpha*||z||_1
/// for the quadratic-pair family.
struct QuadraticTerm {
  Mat Q;
  Vec q;
};

/// minimize f(x) + g(z)  subject to  Ax - Bz = c
///
/// f(x) = 1/2 x'Qx + q'x. g is alpha*||z||_1 unless `g_quadratic` is set.
/// The l1 reading f(x) + alpha*||Fx||_1 corresponds to A = F, B = I, c = 0.
struct ProblemSpec {
  Mat quad_Q;
  Vec quad_q;
  double alpha = 1.0;
  Mat F;
  Mat A;
  Mat B;
  Vec c;
  std::optional<QuadraticTerm> g_quadratic;

  Index n() const { return quad_q.size(); }
  Index p() const { return A.rows(); }
  Index m() const { return B.cols(); }

  bool has_l1_term() const { return !g_quadratic.has_value(); }

  /// True when the constraint encodes z = Fx, so the ADMM problem is f + alpha*||Fx||_1.
  bool is_l1_form() const {
    return has_l1_term() && A.rows() == F.rows() && A.cols() == F.cols() && A == F &&
           detail::is_identity(B) && c.isZero(0.0);
  }

  double f_value(const Vec& x) const { return 0.5 * x.dot(quad_Q * x) + quad_q.dot(x); }
  Vec f_gradient(const Vec& x) const { return quad_Q * x + quad_q; }

  double g_value(const Vec& z) const {
    if (g_quadratic) return 0.5 * z.dot(g_quadratic->Q * z) + g_quadratic->q.dot(z);
    return alpha * z.lpNorm<1>();
  }
};

/// Builds the l1 problem f(x) + alpha*||Fx||_1 with ADMM data A = F, B = I, c = 0.
inline ProblemSpec make_l1_problem(Mat Q, Vec q, double alpha, std::optional<Mat> F = std::nullopt) {
  ProblemSpec s;
  const Index n = q.size();
  s.quad_Q = std::move(Q);
  s.quad_q = std::move(q);
  s.alpha = alpha;
  s.F = F ? std::move(*F) : Mat::Identity(n, n);
  s.A = s.F;
  s.B = Mat::Identity(s.F.rows(), s.F.rows());
  s.c = Vec::Zero(s.F.rows());
  return s;
}

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.field + ": " + v.message;
    }
    return out;
  }
};

namespace detail {

inline void check_psd(const Mat& Q, const std::string& name, ValidationReport& rep) {
  if (!all_finite(Q)) {
    rep.violations.push_back({name, "non-finite entries"});
    return;
  }
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    rep.violations.push_back({name, "not symmetric (max |Q - Q'| = " + std::to_string(asym) + ")"});
    return;
  }
  if (Q.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10)
    rep.violations.push_back({name, "not positive semidefinite (min eigenvalue " +
                                        std::to_string(eig.eigenvalues().minCoeff()) + ")"});
}

}  // namespace detail

/// Checks every structural invariant of a ProblemSpec. Dimension mismatches throw,
/// value-level violations are collected in the report.
inline ValidationReport validate_problem(const ProblemSpec& spec) {
  using detail::dims;
  const Index n = spec.quad_q.size();
  auto mismatch = [](const std::string& a, const std::string& da, const std::string& b,
                     const std::string& db) {
    throw Error(ErrorKind::dimension_mismatch, a + " is " + da + " but " + b + " is " + db);
  };
  if (spec.quad_Q.rows() != n || spec.quad_Q.cols() != n)
    mismatch("quad_Q", dims(spec.quad_Q.rows(), spec.quad_Q.cols()), "quad_q",
             std::to_string(n));
  if (spec.F.cols() != n)
    mismatch("F", dims(spec.F.rows(), spec.F.cols()), "quad_q", std::to_string(n));
  if (spec.A.cols() != n)
    mismatch("A", dims(spec.A.rows(), spec.A.cols()), "quad_q", std::to_string(n));
  if (spec.B.rows() != spec.A.rows())
    mismatch("B", dims(spec.B.rows(), spec.B.cols()), "A", dims(spec.A.rows(), spec.A.cols()));
  if (spec.c.size() != spec.A.rows())
    mismatch("c", std::to_string(spec.c.size()), "A", dims(spec.A.rows(), spec.A.cols()));
  if (spec.g_quadratic) {
    const Index m = spec.B.cols();
    if (spec.g_quadratic->Q.rows() != m || spec.g_quadratic->Q.cols() != m ||
        spec.g_quadratic->q.size() != m)
      mismatch("g.Q", dims(spec.g_quadratic->Q.rows(), spec.g_quadratic->Q.cols()), "B",
               dims(spec.B.rows(), spec.B.cols()));
  }

  ValidationReport rep;
  detail::check_psd(spec.quad_Q, "quad_Q", rep);
  if (!spec.quad_q.allFinite()) rep.violations.push_back({"quad_q", "non-finite entries"});
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
    rep.violations.push_back({"alpha", "must be positive and finite"});
  if (!spec.c.allFinite()) rep.violations.push_back({"c", "non-finite entries"});
  for (const auto& [name, mat] : {std::pair<const char*, const Mat*>{"F", &spec.F},
                                  std::pair<const char*, const Mat*>{"A", &spec.A},
                                  std::pair<const char*, const Mat*>{"B", &spec.B}}) {
    if (!detail::all_finite(*mat)) {
      rep.violations.push_back({name, "non-finite entries"});
    } else if (!detail::full_column_rank(*mat)) {
      rep.violations.push_back(
          {name, "not full column rank (rank " + std::to_string(detail::numerical_rank(*mat)) +
                     ", columns " + std::to_string(mat->cols()) + ")"});
    }
  }
  if (spec.g_quadratic) detail::check_psd(spec.g_quadratic->Q, "g.Q", rep);
  return rep;
}

inline void require_valid(const ProblemSpec& spec) {
  const auto rep = validate_problem(spec);
  if (!rep.ok()) throw Error(ErrorKind::invalid_argument, "invalid problem: " + rep.summary());
}

// ---------------------------------------------------------------------------
// Diagonal metric
// ---------------------------------------------------------------------------

inline constexpr double kDefaultEpsFloor = 1e-8;

enum class ClampFlag { none, clamped_zero, clamped_inf };

/// Diagonal metric in the inverse form M^{-1} v = m .* v, so M = diag(1/m) and
/// S = sqrt(M) = diag(1/sqrt(m)) satisfies <v, M v> = ||S v||^2.
class DiagonalMetric {
 public:
  DiagonalMetric() = default;

  const Vec& m() const { return m_; }
  Index size() const { return m_.size(); }
  double eps_floor() const { return eps_floor_; }
  double inf_ceiling() const { return inf_ceiling_; }
  const std::vector<ClampFlag>& clamped() const { return clamped_; }

  Vec M_diag() const { return m_.cwiseInverse(); }
  Vec S_diag() const { return m_.cwiseSqrt().cwiseInverse(); }
  Vec S_inv_diag() const { return m_.cwiseSqrt(); }

  Mat M() const { return M_diag().asDiagonal(); }
  Mat S() const { return S_diag().asDiagonal(); }

  Vec apply_M(const Vec& v) const { return v.cwiseQuotient(m_); }
  Vec apply_M_inv(const Vec& v) const { return v.cwiseProduct(m_); }
  Vec apply_S(const Vec& v) const { return v.cwiseProduct(S_diag()); }
  Vec apply_S_inv(const Vec& v) const { return v.cwiseProduct(S_inv_diag()); }

  friend DiagonalMetric metric_from_vector(const Vec& m, double eps_floor, double inf_ceiling);

 private:
  Vec m_;
  double eps_floor_ = kDefaultEpsFloor;
  double inf_ceiling_ = 1.0 / kDefaultEpsFloor;
  std::vector<ClampFlag> clamped_;
};

/// Builds a metric from m with 0 and +inf accepted as limit sentinels. Entries are
/// clamped into [eps_floor, inf_ceiling]; inf_ceiling <= 0 selects 1/eps_floor.
inline DiagonalMetric metric_from_vector(const Vec& m, double eps_floor = kDefaultEpsFloor,
                                         double inf_ceiling = 0.0) {
  detail::require(eps_floor > 0.0 && eps_floor < 1.0, ErrorKind::invalid_argument,
                  "eps_floor must lie in (0, 1)");
  if (inf_ceiling <= 0.0) inf_ceiling = 1.0 / eps_floor;
  detail::require(inf_ceiling >= eps_floor && inf_ceiling <= 1.0 / eps_floor,
                  ErrorKind::invalid_argument, "inf_ceiling must lie in [eps_floor, 1/eps_floor]");
  DiagonalMetric out;
  out.eps_floor_ = eps_floor;
  out.inf_ceiling_ = inf_ceiling;
  out.m_.resize(m.size());
  out.clamped_.assign(static_cast<std::size_t>(m.size()), ClampFlag::none);
  for (Index i = 0; i < m.size(); ++i) {
    const double v = m(i);
    detail::require(!std::isnan(v), ErrorKind::invalid_argument,
                    "metric entry " + std::to_string(i) + " is NaN");
    detail::require(v >= 0.0, ErrorKind::invalid_argument,
                    "metric entry " + std::to_string(i) + " is negative; metric must be positive definite");
    if (v < eps_floor) {
      out.m_(i) = eps_floor;
      out.clamped_[static_cast<std::size_t>(i)] = ClampFlag::clamped_zero;
    } else if (v > inf_ceiling) {
      out.m_(i) = inf_ceiling;
      out.clamped_[static_cast<std::size_t>(i)] = ClampFlag::clamped_inf;
    } else {
      out.m_(i) = v;
    }
  }
  return out;
}

/// Metric M = gamma * I, i.e. m = 1/gamma.
inline DiagonalMetric scalar_metric(Index p, double gamma, double eps_floor = kDefaultEpsFloor) {
  detail::require(gamma > 0.0, ErrorKind::invalid_argument, "gamma must be positive");
  return metric_from_vector(Vec::Constant(p, 1.0 / gamma), std::min(eps_floor, 0.5 * std::min(gamma, 1.0 / gamma)));
}

/// Metric M = S'S for a diagonal decomposition S = diag(s), s_i != 0.
inline DiagonalMetric metric_from_decomposition(const Vec& s, double eps_floor = kDefaultEpsFloor) {
  detail::require((s.array() != 0.0).all(), ErrorKind::invalid_argument,
                  "metric decomposition must be nonzero");
  return metric_from_vector(s.cwiseAbs2().cwiseInverse(), eps_floor);
}

// ---------------------------------------------------------------------------
// Solutions and parametrizations
// ---------------------------------------------------------------------------

struct SolutionPair {
  Vec x_star;
  Vec lambda_star;
  Vec z_star;  // splitting variable; exact zeros mark the l1 support complement
  double objective = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool converged = false;
  long iterations = 0;
};

struct ClassicalScalar {
  double gamma;
};
struct ClassicalMetric {
  DiagonalMetric metric;
};
struct EquilibrateScalar {
  double rho;
};
struct EquilibrateOperator {
  Mat S;
};

using Parametrization =
    std::variant<ClassicalScalar, ClassicalMetric, EquilibrateScalar, EquilibrateOperator>;

inline void validate_parametrization(const Parametrization& param) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassicalScalar>) {
          detail::require(p.gamma > 0.0 && std::isfinite(p.gamma), ErrorKind::invalid_argument,
                          "gamma must be strictly positive");
        } else if constexpr (std::is_same_v<T, EquilibrateScalar>) {
          detail::require(p.rho != 0.0 && std::isfinite(p.rho), ErrorKind::invalid_argument,
                          "rho must be nonzero");
        } else if constexpr (std::is_same_v<T, EquilibrateOperator>) {
          detail::require(detail::full_column_rank(p.S), ErrorKind::rank_deficient,
                          "S must have full column rank");
        } else {
          detail::require(p.metric.size() > 0, ErrorKind::invalid_argument, "empty metric");
        }
      },
      param);
}

inline std::string parametrization_tag(const Parametrization& param) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassicalScalar>) return "classical_scalar";
        else if constexpr (std::is_same_v<T, ClassicalMetric>) return "classical_metric";
        else if constexpr (std::is_same_v<T, EquilibrateScalar>) return "equilibrate_scalar";
        else return "equilibrate_operator";
      },
      param);
}

}  // namespace equiprox
