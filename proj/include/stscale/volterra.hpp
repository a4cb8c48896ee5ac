#pragma once

// Second-kind Volterra equations with a difference kernel,
//
//   f(u) = H(u) * [ g(u) + q * int_u^A f(v) W(v - u) D(v) dv ],   u <= A,
//
// solved by a downward trapezoid product-integration march from the anchor A.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "stscale/errors.hpp"
#include "stscale/levy.hpp"

namespace stscale {

/// Uniform grid u_i = lower + i*h, i = 0..n, on [lower, anchor].
///
/// A grid with lower == anchor is the degenerate single-node grid (n = 0).
class Grid {
 public:
  Grid() = default;
  Grid(double lower, double anchor, std::size_t n) : lower_(lower), anchor_(anchor), n_(n) {
    if (!std::isfinite(lower) || !std::isfinite(anchor)) throw DomainError("grid endpoints must be finite");
    if (lower > anchor) throw DomainError("grid lower end must not exceed the anchor");
    if (lower == anchor) {
      n_ = 0;
    } else if (n < 2) {
      throw InvalidSpec("grid needs n >= 2 intervals");
    }
  }

  double lower() const { return lower_; }
  double anchor() const { return anchor_; }
  std::size_t intervals() const { return n_; }
  std::size_t size() const { return n_ + 1; }
  double step() const { return n_ == 0 ? 0.0 : (anchor_ - lower_) / static_cast<double>(n_); }
  double node(std::size_t i) const {
    if (i >= n_) return anchor_;
    return lower_ + static_cast<double>(i) * step();
  }
  bool degenerate() const { return n_ == 0; }

  /// Same interval, half the step.
  Grid refined() const { return degenerate() ? *this : Grid(lower_, anchor_, 2 * n_); }

 private:
  double lower_ = 0.0;
  double anchor_ = 1.0;
  std::size_t n_ = 2;
};

/// Equation data in the internal coordinate.  `forcing` is the core g(u);
/// `hmult` multiplies both g and the integral; `density` weights the
/// integration measure.
struct VolterraProblem {
  double q = 0.0;
  std::function<double(double)> forcing;
  ScaleFunction kernel;
  std::function<double(double)> hmult;
  std::function<double(double)> density;
  double anchor = 0.0;
};

/// Gridded solution.  `core[i] = values[i] / hmult(u_i)`, the bracketed term
/// of the equation; ratios of cores at a shared node equal ratios of values.
struct ScaleTable {
  Grid grid;
  std::vector<double> values;
  std::vector<double> core;
  double q = 0.0;
  double est_error = 0.0;
  std::vector<double> native_nodes;
};

namespace detail {

struct SampledProblem {
  std::vector<double> g, hm, d, w;  // w[k] = W(k h)
};

inline SampledProblem sample(const VolterraProblem& p, const Grid& grid) {
  const std::size_t n = grid.intervals();
  const double h = grid.step();
  SampledProblem s;
  s.g.resize(n + 1);
  s.hm.resize(n + 1);
  s.d.resize(n + 1);
  s.w.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = grid.node(i);
    s.g[i] = p.forcing(u);
    s.hm[i] = p.hmult(u);
    s.d[i] = p.density(u);
    if (!(s.hm[i] > 0.0) || !(s.d[i] > 0.0))
      throw DomainError("hmult and density must be strictly positive on the solve interval");
    s.w[i] = i == 0 ? p.kernel.w_at_zero() : p.kernel(static_cast<double>(i) * h);
  }
  return s;
}

}  // namespace detail

/// Trapezoid product-integration march from the anchor down to `grid.lower()`.
///
/// At node i the unknown enters its own quadrature with weight h/2 W(0) D_i,
/// which is moved to the left-hand side.  Throws StepTooLarge when the
/// resulting divisor drops below 1/2.
inline ScaleTable solve(const VolterraProblem& problem, const Grid& grid) {
  if (grid.anchor() != problem.anchor) throw InvalidSpec("grid anchor does not match the problem anchor");
  if (!(problem.q >= 0.0)) throw DomainError("q must be >= 0");

  const std::size_t n = grid.intervals();
  const double h = grid.step();
  const double q = problem.q;
  const auto s = detail::sample(problem, grid);

  ScaleTable t;
  t.grid = grid;
  t.q = q;
  t.values.assign(n + 1, 0.0);
  t.core.assign(n + 1, 0.0);

  // c[j] = f_j D_j, the quadrature integrand without the kernel
  std::vector<double> c(n + 1, 0.0);
  t.core[n] = s.g[n];
  t.values[n] = s.hm[n] * s.g[n];
  c[n] = t.values[n] * s.d[n];

  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = n - 1 - step;
    double known = 0.5 * c[n] * s.w[n - i];
    for (std::size_t j = i + 1; j < n; ++j) known += c[j] * s.w[j - i];
    const double denom = 1.0 - q * s.hm[i] * 0.5 * h * s.w[0] * s.d[i];
    if (denom < 0.5)
      throw StepTooLarge("implicit diagonal unstable at u = " + std::to_string(grid.node(i)) + "; refine the grid");
    const double core = (s.g[i] + q * h * known) / denom;
    const double val = s.hm[i] * core;
    if (!std::isfinite(val)) throw NonFinite("Volterra march overflowed at u = " + std::to_string(grid.node(i)));
    t.core[i] = core;
    t.values[i] = val;
    c[i] = val * s.d[i];
  }
  return t;
}

/// Max-norm defect of `table` in the defining equation, with the integral
/// recomputed by composite Simpson on the piecewise-linear interpolant.
inline double residual(const VolterraProblem& problem, const ScaleTable& table) {
  const Grid& grid = table.grid;
  const std::size_t n = grid.intervals();
  const double h = grid.step();
  const auto s = detail::sample(problem, grid);

  std::vector<double> w_half(n), d_mid(n), f_mid(n);
  for (std::size_t k = 0; k < n; ++k) {
    w_half[k] = problem.kernel((static_cast<double>(k) + 0.5) * h);
    d_mid[k] = problem.density(0.5 * (grid.node(k) + grid.node(k + 1)));
    f_mid[k] = 0.5 * (table.values[k] + table.values[k + 1]);
  }

  double worst = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    double integral = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      const double left = table.values[j] * s.w[j - i] * s.d[j];
      const double mid = f_mid[j] * w_half[j - i] * d_mid[j];
      const double right = table.values[j + 1] * s.w[j + 1 - i] * s.d[j + 1];
      integral += (left + 4.0 * mid + right);
    }
    integral *= h / 6.0;
    const double defect = table.values[i] - s.hm[i] * (s.g[i] + problem.q * integral);
    worst = std::max(worst, std::abs(defect));
  }
  return worst;
}

/// Solve at h and h/2; return the h/2 table with a Richardson error estimate
/// max |f_h - f_{h/2}| / 3.  A grid that trips StepTooLarge is halved up to
/// 12 times before giving up.
inline ScaleTable solve_with_refinement(const VolterraProblem& problem, const Grid& grid, int max_halvings = 12) {
  Grid g = grid;
  ScaleTable coarse;
  for (int halvings = 0;; ++halvings) {
    try {
      coarse = solve(problem, g);
      break;
    } catch (const StepTooLarge&) {
      if (halvings >= max_halvings) throw;
      g = g.refined();
    }
  }
  ScaleTable fine = solve(problem, g.refined());
  double est = 0.0;
  for (std::size_t i = 0; i < coarse.values.size(); ++i) {
    const std::size_t j = fine.grid.degenerate() ? i : 2 * i;
    est = std::max(est, std::abs(coarse.values[i] - fine.values[j]));
  }
  fine.est_error = est / 3.0;
  return fine;
}

}  // namespace stscale
