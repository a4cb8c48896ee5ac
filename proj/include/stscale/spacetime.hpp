#pragma once

// Space-time changes Y_t = h_S(X_{tau(t)}) of a spectrally negative Levy
// process X, where tau inverts the clock A_t = int_0^t h_T(X_s) ds, and the
// Volterra problems that characterise the scale functions of Y.
//
// Everything numerical happens in the internal coordinate u = h_S^{-1}(y), in
// which the kernel is the difference kernel W(v - u) of the base process.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "stscale/errors.hpp"
#include "stscale/levy.hpp"
#include "stscale/volterra.hpp"

namespace stscale {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v > lo && v < hi; }
};

/// Space map h_S.
enum class SpaceMap {
  Identity,       // y = u
  Exp,            // y = e^u
  NegExpReflect,  // y = -e^{-u}
};

/// Clock density h_T, a function of the internal coordinate.
struct Clock {
  enum class Kind {
    One,          // 1
    ExpAlpha,     // e^{alpha u}
    NegExpAlpha,  // e^{-alpha u}
    Reciprocal,   // -1/u on u < 0
  };
  Kind kind = Kind::One;
  double alpha = 1.0;

  double operator()(double u) const {
    switch (kind) {
      case Kind::One: return 1.0;
      case Kind::ExpAlpha: return std::exp(alpha * u);
      case Kind::NegExpAlpha: return std::exp(-alpha * u);
      case Kind::Reciprocal: return -1.0 / u;
    }
    return 1.0;
  }
};

/// Density h_D of the reference measure of Y against the image of Lebesgue
/// measure, from the whitelist `1`, `y`, `-y`, `abs(y)^p`.  `scale` is a
/// constant factor available programmatically.
struct ReferenceDensity {
  enum class Kind { One, Y, NegY, AbsPow };
  Kind kind = Kind::One;
  double power = 1.0;
  double scale = 1.0;

  double operator()(double y) const {
    double v = 1.0;
    switch (kind) {
      case Kind::One: v = 1.0; break;
      case Kind::Y: v = y; break;
      case Kind::NegY: v = -y; break;
      case Kind::AbsPow: v = std::pow(std::abs(y), power); break;
    }
    v *= scale;
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("reference density is not strictly positive at y = " + std::to_string(y));
    return v;
  }

  static ReferenceDensity parse(std::string text) {
    text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }), text.end());
    ReferenceDensity d;
    if (text == "1") return d;
    if (text == "y") {
      d.kind = Kind::Y;
      return d;
    }
    if (text == "-y") {
      d.kind = Kind::NegY;
      return d;
    }
    const std::string prefix = "abs(y)";
    if (text.rfind(prefix, 0) == 0) {
      d.kind = Kind::AbsPow;
      const std::string rest = text.substr(prefix.size());
      if (rest.empty()) return d;
      if (rest.size() > 1 && rest[0] == '^') {
        std::size_t used = 0;
        try {
          d.power = std::stod(rest.substr(1), &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == rest.size() - 1 && std::isfinite(d.power)) return d;
      }
    }
    throw InvalidSpec("hd must be one of 1, y, -y, abs(y)^p; got '" + text + "'");
  }

  std::string to_text() const {
    switch (kind) {
      case Kind::One: return "1";
      case Kind::Y: return "y";
      case Kind::NegY: return "-y";
      case Kind::AbsPow: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "abs(y)^%.17g", power);
        return buf;
      }
    }
    return "1";
  }
};

/// The triple (h_S, h_T, h_D).
struct SpaceTimeChangeSpec {
  SpaceMap space = SpaceMap::Identity;
  Clock clock{};
  ReferenceDensity density{};

  Interval internal_domain() const {
    Interval i;
    if (clock.kind == Clock::Kind::Reciprocal) i.hi = 0.0;
    return i;
  }

  double to_native(double u) const {
    switch (space) {
      case SpaceMap::Identity: return u;
      case SpaceMap::Exp: return std::exp(u);
      case SpaceMap::NegExpReflect: return -std::exp(-u);
    }
    return u;
  }

  Interval state_interval() const {
    const Interval i = internal_domain();
    return {to_native(i.lo), to_native(i.hi)};
  }

  double to_internal(double y) const {
    if (!state_interval().contains(y))
      throw DomainError("y = " + std::to_string(y) + " lies outside the state interval");
    switch (space) {
      case SpaceMap::Identity: return y;
      case SpaceMap::Exp: return std::log(y);
      case SpaceMap::NegExpReflect: return -std::log(-y);
    }
    return y;
  }

  /// H expressed in the internal coordinate: h_T(u) / h_D(h_S(u)).
  double hmult_internal(double u) const { return clock(u) / density(to_native(u)); }
  /// h_D(h_S(u)).
  double density_internal(double u) const { return density(to_native(u)); }
};

/// H(y) = h_T(h_S^{-1}(y)) / h_D(y).
inline double h_weight(const SpaceTimeChangeSpec& change, double y) {
  const double u = change.to_internal(y);
  return change.clock(u) / change.density(y);
}

enum class ModelKind { Generic, PSSMP, NSSMP, CSBP };

/// A base Levy process together with the space-time change applied to it.
struct ModelSpec {
  LevySpec base{};
  SpaceTimeChangeSpec change{};
  ModelKind kind = ModelKind::Generic;

  static ModelSpec generic(const LevySpec& base, const SpaceTimeChangeSpec& change = {}) {
    ModelSpec m{base, change, ModelKind::Generic};
    m.validate();
    return m;
  }
  /// Lamperti representation of a positive self-similar process of index alpha.
  static ModelSpec pssmp(const LevySpec& base, double alpha, ReferenceDensity hd = {}) {
    ModelSpec m{base, {SpaceMap::Exp, {Clock::Kind::ExpAlpha, alpha}, hd}, ModelKind::PSSMP};
    m.validate();
    return m;
  }
  static ModelSpec nssmp(const LevySpec& base, double alpha, ReferenceDensity hd = {}) {
    ModelSpec m{base, {SpaceMap::NegExpReflect, {Clock::Kind::NegExpAlpha, alpha}, hd}, ModelKind::NSSMP};
    m.validate();
    return m;
  }
  /// -Y for a CSBP Y: clock -1/x on (-inf, 0), no space change.
  static ModelSpec csbp(const LevySpec& base, ReferenceDensity hd = {}) {
    ModelSpec m{base, {SpaceMap::Identity, {Clock::Kind::Reciprocal, 1.0}, hd}, ModelKind::CSBP};
    m.validate();
    return m;
  }

  double alpha() const { return change.clock.alpha; }

  void validate() const {
    stscale::validate(base);
    const auto& c = change;
    switch (kind) {
      case ModelKind::PSSMP:
        if (c.space != SpaceMap::Exp || c.clock.kind != Clock::Kind::ExpAlpha)
          throw InvalidSpec("pssmp requires h_S = exp and h_T = exp(alpha x)");
        break;
      case ModelKind::NSSMP:
        if (c.space != SpaceMap::NegExpReflect || c.clock.kind != Clock::Kind::NegExpAlpha)
          throw InvalidSpec("nssmp requires h_S = -exp(-x) and h_T = exp(-alpha x)");
        break;
      case ModelKind::CSBP:
        if (c.space != SpaceMap::Identity || c.clock.kind != Clock::Kind::Reciprocal)
          throw InvalidSpec("csbp requires h_S = x and h_T = -1/x");
        if (base.kill_rate != 0.0) throw InvalidSpec("csbp base process must not be killed (kill_rate = 0)");
        break;
      case ModelKind::Generic: break;
    }
    if ((c.clock.kind == Clock::Kind::ExpAlpha || c.clock.kind == Clock::Kind::NegExpAlpha) &&
        !(c.clock.alpha > 0.0 && std::isfinite(c.clock.alpha)))
      throw InvalidSpec("alpha must be > 0");
    if (!(c.density.scale > 0.0)) throw InvalidSpec("reference density scale must be > 0");
    const Interval si = c.state_interval();
    switch (c.density.kind) {
      case ReferenceDensity::Kind::Y:
        if (si.lo < 0.0) throw InvalidSpec("hd = y is not positive on the state interval");
        break;
      case ReferenceDensity::Kind::NegY:
        if (si.hi > 0.0) throw InvalidSpec("hd = -y is not positive on the state interval");
        break;
      case ReferenceDensity::Kind::AbsPow:
        if (si.lo < 0.0 && si.hi > 0.0) throw InvalidSpec("hd = abs(y)^p vanishes inside the state interval");
        break;
      case ReferenceDensity::Kind::One: break;
    }
  }
};

/// Internal-coordinate Volterra problem for y -> W_Y^(q)(a, y) on [lower, a].
struct AssembledProblem {
  VolterraProblem problem;
  double lower = 0.0;   // internal
  double anchor = 0.0;  // internal
  SpaceTimeChangeSpec change;

  double to_native(double u) const { return change.to_native(u); }
  double to_internal(double y) const { return change.to_internal(y); }
};

/// 0-scale function of the (possibly killed) base process.
inline ScaleFunction base_scale(const ModelSpec& model) {
  return scale_closed_form(model.base, model.base.kill_rate);
}

inline AssembledProblem build_generic(const ModelSpec& model, double q, double a, double lower) {
  model.validate();
  if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("q must be finite and >= 0");
  const auto& change = model.change;
  if (lower == a) throw DegenerateInterval("lower end equals the anchor");
  if (!(lower < a)) throw DomainError("lower end must be below the anchor");
  const double A = change.to_internal(a);
  const double B = change.to_internal(lower);

  const ScaleFunction w = base_scale(model);
  AssembledProblem out;
  out.lower = B;
  out.anchor = A;
  out.change = change;
  out.problem.q = q;
  out.problem.anchor = A;
  out.problem.kernel = w;
  out.problem.forcing = [w, A](double u) { return w(A - u); };
  out.problem.hmult = [change](double u) { return change.hmult_internal(u); };
  out.problem.density = [change](double u) { return change.density_internal(u); };
  return out;
}

/// y_i -> W_Y^(q)(a, y_i) on n + 1 nodes uniform in the internal coordinate.
///
/// Solved at h and h/2; the returned values are the h/2 solution sampled at
/// the requested nodes, with the Richardson estimate in `est_error`.
inline ScaleTable scale_curve(const ModelSpec& model, double q, double a, double lower, std::size_t n) {
  const AssembledProblem ap = build_generic(model, q, a, lower);
  const Grid grid(ap.lower, ap.anchor, n);
  const ScaleTable fine = solve_with_refinement(ap.problem, grid);

  const std::size_t stride = fine.grid.intervals() / n;
  ScaleTable t;
  t.grid = grid;
  t.q = q;
  t.est_error = fine.est_error;
  t.values.resize(n + 1);
  t.core.resize(n + 1);
  t.native_nodes.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    t.values[i] = fine.values[i * stride];
    t.core[i] = fine.core[i * stride];
    t.native_nodes[i] = ap.to_native(grid.node(i));
  }
  t.native_nodes[n] = a;
  t.native_nodes[0] = lower;
  return t;
}

namespace detail {

/// Lagrange interpolation of a table in the internal coordinate, using up to
/// four nodes around u.
inline double interpolate(const ScaleTable& t, double u) {
  const Grid& g = t.grid;
  const std::size_t n = g.intervals();
  if (n == 0) return t.values[0];
  const double h = g.step();
  const double pos = (u - g.lower()) / h;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) <= 1e-10 && nearest >= 0.0 && nearest <= static_cast<double>(n))
    return t.values[static_cast<std::size_t>(nearest)];
  const std::size_t width = std::min<std::size_t>(4, n + 1);
  auto k = static_cast<long>(std::floor(pos)) - static_cast<long>(width / 2 - 1);
  k = std::clamp(k, 0L, static_cast<long>(n + 1 - width));
  double acc = 0.0;
  for (std::size_t i = 0; i < width; ++i) {
    const std::size_t ni = static_cast<std::size_t>(k) + i;
    double basis = 1.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == i) continue;
      const double nj = static_cast<double>(static_cast<std::size_t>(k) + j);
      basis *= (pos - nj) / (static_cast<double>(ni) - nj);
    }
    acc += basis * t.values[ni];
  }
  return acc;
}

template <class F>
double simpson(F&& f, double lo, double hi, std::size_t panels) {
  if (panels % 2 == 1) ++panels;
  const double h = (hi - lo) / static_cast<double>(panels);
  double acc = f(lo) + f(hi);
  for (std::size_t i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + static_cast<double>(i) * h);
  return acc * h / 3.0;
}

}  // namespace detail

/// Value of a solved curve at native y; zero above the anchor.
inline double sample_curve(const SpaceTimeChangeSpec& change, const ScaleTable& t, double y) {
  const double u = change.to_internal(y);
  if (u > t.grid.anchor()) return 0.0;
  if (u < t.grid.lower()) throw DomainError("y = " + std::to_string(y) + " is below the solved interval");
  return detail::interpolate(t, u);
}

struct ExitRatio {
  double value = 0.0;
  double est_error = 0.0;
};

/// The pair of anchored solves (anchor x and anchor b, both down to a) that
/// the two-sided exit and resolvent identities need.
class TwoSidedWindow {
 public:
  TwoSidedWindow(const ModelSpec& model, double q, double a, double x, double b, std::size_t n)
      : model_(model), a_(a), x_(x), b_(b) {
    if (!(a < x && x <= b)) throw DomainError("window must satisfy a < x <= b");
    from_b_ = scale_curve(model, q, b, a, n);
    from_x_ = x == b ? from_b_ : scale_curve(model, q, x, a, n);
  }

  const ScaleTable& from_x() const { return from_x_; }
  const ScaleTable& from_b() const { return from_b_; }

  /// W_Y(x, a) / W_Y(b, a).  Computed from the cores: H(a) cancels.
  ExitRatio ratio() const {
    const double den = from_b_.core.front();
    if (den == 0.0) throw DivisionByZero("W_Y(b, a) = 0: degenerate window");
    ExitRatio r;
    r.value = from_x_.core.front() / den;
    const double fx = std::abs(from_x_.values.front());
    const double fb = std::abs(from_b_.values.front());
    r.est_error = std::abs(r.value) * ((fx > 0.0 ? from_x_.est_error / fx : 0.0) + from_b_.est_error / fb);
    return r;
  }

  double scale_from_x(double y) const { return sample_curve(model_.change, from_x_, y); }
  double scale_from_b(double y) const { return sample_curve(model_.change, from_b_, y); }

  /// Density, against the reference measure of Y, of the q-discounted
  /// occupation of y' before leaving (a, b), started from x.
  double resolvent(double xp) const {
    if (!(xp >= a_ && xp <= b_)) throw DomainError("xp must lie in [a, b]");
    const double wx = xp > x_ ? 0.0 : scale_from_x(xp);
    return ratio().value * scale_from_b(xp) - wx;
  }

  /// Predicted E_x[ int_0^T e^{-qt} f(Y_t) dt ] for exit time T of (a, b):
  /// the resolvent integrated against the reference measure, by Simpson in
  /// the internal coordinate with the kink at x as a breakpoint.
  template <class F>
  double occupation(F&& f, std::size_t panels = 0) const {
    const auto& ch = model_.change;
    const std::size_t m = panels ? panels : 2 * from_b_.grid.intervals();
    const double ratio_v = ratio().value;
    auto integrand = [&](double u) {
      const double y = ch.to_native(u);
      const double wx = u > from_x_.grid.anchor() ? 0.0 : detail::interpolate(from_x_, std::max(u, from_x_.grid.lower()));
      const double wb = detail::interpolate(from_b_, std::clamp(u, from_b_.grid.lower(), from_b_.grid.anchor()));
      return f(y) * (ratio_v * wb - wx) * ch.density_internal(u);
    };
    const double ua = from_b_.grid.lower();
    const double ux = from_x_.grid.anchor();
    const double ub = from_b_.grid.anchor();
    double total = detail::simpson(integrand, ua, ux, m);
    if (ub > ux) total += detail::simpson(integrand, ux, ub, m);
    return total;
  }

 private:
  ModelSpec model_;
  double a_, x_, b_;
  ScaleTable from_x_, from_b_;
};

/// E_x[e^{-q T_b}; T_b < T_a] for Y, as W_Y(x, a) / W_Y(b, a).
inline ExitRatio exit_ratio(const ModelSpec& model, double q, double a, double x, double b, std::size_t n) {
  return TwoSidedWindow(model, q, a, x, b, n).ratio();
}

inline double resolvent_density(const ModelSpec& model, double q, double a, double b, double x, double xp,
                                std::size_t n) {
  return TwoSidedWindow(model, q, a, x, b, n).resolvent(xp);
}

}  // namespace stscale
