#pragma once

#include "core.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace equiprox {

enum class Family { lasso_dense, lasso_diagonal, quadratic_pair };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::lasso_dense: return "lasso_dense";
    case Family::lasso_diagonal: return "lasso_diagonal";
    case Family::quadratic_pair: return "quadratic_pair";
  }
  return "unknown";
}

inline Family parse_family(const std::string& s) {
  if (s == "lasso_dense") return Family::lasso_dense;
  if (s == "lasso_diagonal") return Family::lasso_diagonal;
  if (s == "quadratic_pair") return Family::quadratic_pair;
  throw Error(ErrorKind::invalid_argument, "unknown family '" + s + "'");
}

inline constexpr Index kMaxDimension = 500;

namespace detail {

using Rng = std::mt19937_64;

inline Mat gaussian(Rng& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = scale * nd(rng);
  return m;
}

inline Vec gaussian_vec(Rng& rng, Index n) { return gaussian(rng, n, 1); }

/// G'G + 1e-3 I with G entries N(0, 1)/sqrt(n).
inline Mat lasso_hessian(Rng& rng, Index n, Mat* G_out = nullptr) {
  const Mat G = gaussian(rng, n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  Mat Q = G.transpose() * G + 1e-3 * Mat::Identity(n, n);
  Q = 0.5 * (Q + Q.transpose());
  if (G_out) *G_out = G;
  return Q;
}

}  // namespace detail

/// Builds one instance; instance `index` of a family is independent of `count`.
inline ProblemSpec generate_instance(Family family, Index n, Index p, std::uint64_t seed, std::uint64_t index) {
  detail::require(n >= 1 && n <= kMaxDimension && p <= kMaxDimension, ErrorKind::invalid_argument,
                  "instance dimensions must lie in [1, " + std::to_string(kMaxDimension) + "]");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(family)};
  detail::Rng rng(seq);
  ProblemSpec s;
  switch (family) {
    case Family::lasso_dense:
    case Family::lasso_diagonal: {
      detail::require(p <= 0 || p == n, ErrorKind::invalid_argument, "lasso families use p = n");
      Mat G;
      s.quad_Q = detail::lasso_hessian(rng, n, &G);
      const Vec b = detail::gaussian_vec(rng, n);
      s.quad_q = -G.transpose() * b;
      if (family == Family::lasso_diagonal) {
        std::uniform_real_distribution<double> ud(0.5, 2.0);
        Vec d(n);
        for (Index i = 0; i < n; ++i) d(i) = ud(rng);
        s.F = d.asDiagonal();
      } else {
        s.F = Mat::Identity(n, n);
      }
      // a third of the largest gradient at 0, in the Fx coordinates
      const Vec gq = s.F.diagonal().cwiseInverse().cwiseProduct(s.quad_q);
      s.alpha = std::max(0.3 * gq.cwiseAbs().maxCoeff(), 1e-6);
      s.A = s.F;
      s.B = Mat::Identity(n, n);
      s.c = Vec::Zero(n);
      break;
    }
    case Family::quadratic_pair: {
      detail::require(p <= 0 || p == n, ErrorKind::invalid_argument, "quadratic_pair uses p = n");
      s.quad_Q = detail::lasso_hessian(rng, n);
      s.quad_q = detail::gaussian_vec(rng, n);
      QuadraticTerm g;
      g.Q = detail::lasso_hessian(rng, n) + 0.1 * Mat::Identity(n, n);
      g.q = detail::gaussian_vec(rng, n);
      s.g_quadratic = std::move(g);
      s.alpha = 1.0;
      s.A = Mat::Identity(n, n) + detail::gaussian(rng, n, n, 0.1);
      s.F = s.A;
      s.B = Mat::Identity(n, n);
      s.c = detail::gaussian_vec(rng, n);
      break;
    }
  }
  return s;
}

inline std::vector<ProblemSpec> generate_instances(Family family, Index n, Index p, Index count, std::uint64_t seed) {
  detail::require(count >= 0, ErrorKind::invalid_argument, "count must be nonnegative");
  std::vector<ProblemSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out.push_back(generate_instance(family, n, p, seed, static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace equiprox
