#pragma once

// Independent numerical oracles used to pin down expected values.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace oracle {

/// Golden-section search on a unimodal function given through a comparator
/// diff(a, b) = f(a) - f(b). Writing the difference in cancellation-free form lets
/// the bracket shrink far below sqrt(machine epsilon).
inline double golden_section_diff(const std::function<double(double, double)>& diff, double lo, double hi,
                                  double tol = 1e-12) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int it = 0; it < 400 && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (diff(c, d) < 0.0) {
      b = d;
      d = c;
      c = b - r * (b - a);
    } else {
      a = c;
      c = d;
      d = a + r * (b - a);
    }
  }
  return 0.5 * (a + b);
}

inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
  return golden_section_diff([&](double a, double b) { return f(a) - f(b); }, lo, hi, tol);
}

/// Minimum of f over n points evenly spaced in [lo, hi] (log-spaced when log_scale).
/// Returns (argmin, min).
inline std::pair<double, double> grid_scan(const std::function<double(double)>& f, double lo, double hi, int n,
                                           bool log_scale = false) {
  double best_x = lo, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const double x = log_scale ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return {best_x, best};
}

/// Grid scan followed by golden-section refinement on the neighbouring cells.
inline double scan_then_refine(const std::function<double(double)>& f, double lo, double hi, int n = 2001) {
  const double h = (hi - lo) / (n - 1);
  const double x = grid_scan(f, lo, hi, n).first;
  return golden_section(f, std::max(lo, x - h), std::min(hi, x + h));
}

/// argmin_x |x| + (x - v)^2 / (2m), the scalar l1 prox in the metric 1/m.
inline double metric_l1_scalar(double v, double m) {
  auto diff = [v, m](double a, double b) {
    return (std::abs(a) - std::abs(b)) + (a - b) * (a + b - 2.0 * v) / (2.0 * m);
  };
  const double r = std::abs(v) + 1.0;
  return golden_section_diff(diff, -r, r, 1e-15);
}

}  // namespace oracle
