#pragma once

#include "core.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace equiprox {

using FixedPointMap = std::function<Vec(const Vec&)>;

struct Trace {
  std::vector<Vec> points;
  std::vector<double> step_norms;     // ||z^{k+1} - z^k||
  std::vector<double> fix_distances;  // ||z^k - z*||, empty without a reference
  double theta = 0.5;
  bool converged = false;
};

inline double rate_bound(double theta, long k, double dist0_sq) {
  detail::require(theta > 0.0 && theta < 1.0, ErrorKind::domain_error, "theta must lie in (0, 1)");
  detail::require(k >= 0 && dist0_sq >= 0.0, ErrorKind::domain_error,
                  "k and dist0_sq must be nonnegative");
  return theta * dist0_sq / (static_cast<double>(k + 1) * (1.0 - theta));
}

/// Runs z^{k+1} = T z^k until the step drops to tol or k_max steps were taken.
/// Three consecutive relative step increases above 1e-6 abort with non_averaged_map.
inline Trace iterate(const FixedPointMap& map, const Vec& z0, long k_max, double tol, double theta = 0.5,
                     const std::optional<Vec>& reference = std::nullopt) {
  detail::require(tol > 0.0, ErrorKind::invalid_argument, "tol must be positive");
  detail::require(theta > 0.0 && theta < 1.0, ErrorKind::domain_error, "theta must lie in (0, 1)");
  if (reference)
    detail::require(reference->size() == z0.size(), ErrorKind::dimension_mismatch,
                    "reference has size " + std::to_string(reference->size()) + " but z0 has size " +
                        std::to_string(z0.size()));
  Trace tr;
  tr.theta = theta;
  tr.points.push_back(z0);
  if (reference) tr.fix_distances.push_back((z0 - *reference).norm());
  int increases = 0;
  for (long k = 0; k < k_max; ++k) {
    Vec next = map(tr.points.back());
    const double step = (next - tr.points.back()).norm();
    if (!tr.step_norms.empty() && step > tr.step_norms.back() * (1.0 + 1e-6) && step > 0.0) {
      if (++increases >= 3)
        throw Error(ErrorKind::non_averaged_map,
                    "step norm grew for 3 consecutive iterations (k = " + std::to_string(k) + ")");
    } else {
      increases = 0;
    }
    tr.step_norms.push_back(step);
    if (reference) tr.fix_distances.push_back((next - *reference).norm());
    tr.points.push_back(std::move(next));
    if (!std::isfinite(step))
      throw Error(ErrorKind::non_averaged_map, "non-finite iterate at k = " + std::to_string(k));
    if (step <= tol) {
      tr.converged = true;
      break;
    }
  }
  return tr;
}

struct ScalingReport {
  double max_deviation = 0.0;
  double scale = 0.0;
  bool passed = false;
};

/// max_k ||alpha^{-1} a_k - alpha b_k||; passes within 1e-8 (1 + scale), where scale
/// is the largest of the two compared magnitudes, so swapping (a, b, alpha) for
/// (b, a, 1/alpha) gives the same verdict.
inline ScalingReport check_parallel_scaling(const std::vector<Vec>& a, const std::vector<Vec>& b,
                                            double alpha) {
  detail::require(alpha != 0.0, ErrorKind::invalid_argument, "alpha must be nonzero");
  detail::require(a.size() == b.size(), ErrorKind::dimension_mismatch,
                  "trace lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  ScalingReport rep;
  for (std::size_t k = 0; k < a.size(); ++k) {
    detail::require(a[k].size() == b[k].size(), ErrorKind::dimension_mismatch,
                    "trace points differ in size at k = " + std::to_string(k));
    const Vec sa = a[k] / alpha;
    const Vec sb = alpha * b[k];
    rep.max_deviation = std::max(rep.max_deviation, (sa - sb).norm());
    rep.scale = std::max({rep.scale, sa.norm(), sb.norm()});
  }
  rep.passed = rep.max_deviation <= 1e-8 * (1.0 + rep.scale);
  return rep;
}

inline ScalingReport check_parallel_scaling(const Trace& a, const Trace& b, double alpha) {
  return check_parallel_scaling(a.points, b.points, alpha);
}

struct RateReport {
  bool bound_holds = true;
  bool steps_monotone = true;
  bool distances_monotone = true;
  double tightest_ratio = 0.0;  // max_k step_k^2 / bound_k
  long first_violation = -1;
  bool passed() const { return bound_holds && steps_monotone && distances_monotone; }
};

inline RateReport verify_rate(const Trace& tr, double dist0_sq) {
  RateReport rep;
  const double slack = 1e-9 * (1.0 + std::sqrt(dist0_sq));
  for (std::size_t k = 0; k < tr.step_norms.size(); ++k) {
    const double s2 = tr.step_norms[k] * tr.step_norms[k];
    const double bound = rate_bound(tr.theta, static_cast<long>(k), dist0_sq);
    if (bound > 0.0) rep.tightest_ratio = std::max(rep.tightest_ratio, s2 / bound);
    if (s2 > bound * (1.0 + 1e-9) + 1e-300) {
      rep.bound_holds = false;
      if (rep.first_violation < 0) rep.first_violation = static_cast<long>(k);
    }
    if (k > 0 && tr.step_norms[k] > tr.step_norms[k - 1] + slack) rep.steps_monotone = false;
  }
  for (std::size_t k = 1; k < tr.fix_distances.size(); ++k)
    if (tr.fix_distances[k] > tr.fix_distances[k - 1] + slack) rep.distances_monotone = false;
  return rep;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// One row per step: k, step_norm, fix_distance, bound. fix_distance and bound are
/// empty when unavailable.
inline void write_trace_csv(std::ostream& os, const Trace& tr, std::optional<double> dist0_sq = std::nullopt) {
  os << "k,step_norm,fix_distance,bound\n";
  for (std::size_t k = 0; k < tr.step_norms.size(); ++k) {
    os << k << ',' << detail::fmt_double(tr.step_norms[k]) << ',';
    if (k < tr.fix_distances.size()) os << detail::fmt_double(tr.fix_distances[k]);
    os << ',';
    if (dist0_sq) os << detail::fmt_double(rate_bound(tr.theta, static_cast<long>(k), *dist0_sq));
    os << '\n';
  }
}

}  // namespace equiprox
