#pragma once

// Independent reference computations used only by the tests.  Nothing here
// calls into the solver paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// Composite Simpson rule with `panels` (made even) sub-intervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t panels) {
  if (panels % 2) ++panels;
  const double h = (hi - lo) / static_cast<double>(panels);
  double s = f(lo) + f(hi);
  for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + static_cast<double>(i) * h);
  return s * h / 3.0;
}

/// Plain bisection for an increasing function crossing zero in [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Picard iteration for f(y) = H(y) [ 1 + q int_y^a f(s) ds ] on [lower, a]
/// (a CSBP equation with pure-drift base W == 1 and h_D == 1), on a uniform
/// native grid with cumulative trapezoid integration.
inline std::vector<double> picard_csbp_unit_kernel(const std::function<double(double)>& H, double q, double a,
                                                   double lower, std::size_t m, int iters = 200) {
  const double h = (a - lower) / static_cast<double>(m);
  std::vector<double> f(m + 1, 0.0), next(m + 1);
  for (int it = 0; it < iters; ++it) {
    // tail[i] = int_{y_i}^{a} f
    std::vector<double> tail(m + 1, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      tail[k] = tail[k + 1] + 0.5 * h * (f[k] + f[k + 1]);
    }
    double change = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      const double y = lower + static_cast<double>(i) * h;
      next[i] = H(y) * (1.0 + q * tail[i]);
      change = std::max(change, std::abs(next[i] - f[i]));
    }
    f.swap(next);
    if (change < 1e-15) break;
  }
  return f;
}

/// Observed convergence order from errors at h and h/2.
inline double order(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

}  // namespace oracle
