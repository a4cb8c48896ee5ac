#pragma once

// Spectrally negative Levy processes with rational Laplace exponent
//
//   psi(l) = a l + sigma^2 l^2 / 2 - rho l / (mu + l)
//
// (Brownian motion with drift plus a compound Poisson stream of negative,
// exponentially distributed jumps) and their q-scale functions.  For this
// family 1 / (psi(b) - q) is a rational function of b with a denominator of
// degree <= 3, so W^(q) is an exact sum of (polynomial x exponential) terms
// obtained by partial fractions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stscale/errors.hpp"

namespace stscale {

/// Parameters of the Laplace exponent plus an independent killing rate.
///
/// The jump part is finite activity and uncompensated, so `drift` is the true
/// linear drift of the paths.  When `sigma == 0` the process has bounded
/// variation and `drift` plays the role of delta, the drift of the
/// bounded-variation representation.
struct LevySpec {
  double drift = 0.0;
  double sigma = 0.0;
  double jump_rate = 0.0;
  double jump_decay = 1.0;  // jump magnitudes ~ Exp(jump_decay)
  double kill_rate = 0.0;   // does not enter psi
  /// Accept a pure upward drift (monotone paths).  Test fixture only.
  bool allow_monotone = false;

  bool bounded_variation() const { return sigma == 0.0; }

  friend bool operator==(const LevySpec&, const LevySpec&) = default;
};

inline void validate(const LevySpec& s) {
  for (double v : {s.drift, s.sigma, s.jump_rate, s.jump_decay, s.kill_rate}) {
    if (!std::isfinite(v)) throw InvalidSpec("Levy spec has a non-finite parameter");
  }
  if (s.sigma < 0.0) throw InvalidSpec("sigma must be >= 0");
  if (s.jump_rate < 0.0) throw InvalidSpec("jump_rate must be >= 0");
  if (s.jump_decay <= 0.0) throw InvalidSpec("jump_decay must be > 0");
  if (s.kill_rate < 0.0) throw InvalidSpec("kill_rate must be >= 0");
  if (s.sigma == 0.0) {
    if (s.drift == 0.0 && s.jump_rate == 0.0)
      throw DegenerateModel("Laplace exponent is identically zero");
    if (s.drift <= 0.0)
      throw InvalidSpec("bounded-variation process needs drift > 0 (otherwise paths are monotone decreasing)");
    if (s.jump_rate == 0.0 && !s.allow_monotone)
      throw InvalidSpec("pure drift has monotone paths; set the degenerate-model override to accept it");
  }
}

/// Laplace exponent psi(lambda) for lambda >= 0.
inline double psi(const LevySpec& s, double lambda) {
  double v = s.drift * lambda + 0.5 * s.sigma * s.sigma * lambda * lambda;
  if (s.jump_rate > 0.0) v -= s.jump_rate * lambda / (s.jump_decay + lambda);
  return v;
}

inline double psi_derivative(const LevySpec& s, double lambda) {
  double v = s.drift + s.sigma * s.sigma * lambda;
  if (s.jump_rate > 0.0) {
    const double d = s.jump_decay + lambda;
    v -= s.jump_rate * s.jump_decay / (d * d);
  }
  return v;
}

/// Right inverse Phi(q) = sup{lambda >= 0 : psi(lambda) = q}.
///
/// psi is convex with psi(0) = 0, so the root is bracketed between the
/// minimiser of psi and a geometrically grown upper point.
inline double phi(const LevySpec& s, double q, int max_iter = 2000) {
  if (!(q >= 0.0)) throw DomainError("phi: q must be >= 0");
  validate(s);
  if (s.sigma == 0.0 && s.jump_rate == 0.0) return q / s.drift;

  double lam0 = 0.0;
  if (psi_derivative(s, 0.0) < 0.0) {
    double lo = 0.0, hi = 1.0;
    int it = 0;
    while (psi_derivative(s, hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++it > max_iter) throw NonConvergence("phi: could not bracket the minimiser of psi");
    }
    for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++k) {
      const double mid = 0.5 * (lo + hi);
      (psi_derivative(s, mid) < 0.0 ? lo : hi) = mid;
    }
    lam0 = hi;
  } else if (q == 0.0) {
    return 0.0;
  }

  double lo = lam0;
  double hi = std::max(1.0, 2.0 * lam0);
  int it = 0;
  while (psi(s, hi) <= q) {
    lo = hi;
    hi *= 2.0;
    if (++it > max_iter || !std::isfinite(hi)) throw NonConvergence("phi: could not bracket psi(lambda) = q");
  }
  for (int k = 0; k < 400; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (psi(s, mid) <= q ? lo : hi) = mid;
    if (hi - lo <= 1e-13) break;
  }
  return 0.5 * (lo + hi);
}

/// One term c * x^power * exp(rate * x) of a scale function.
struct ScaleTerm {
  std::complex<double> coeff;
  std::complex<double> rate;
  int power = 0;
};

/// q-scale function stored as an exact exponential sum; zero on (-inf, 0).
class ScaleFunction {
 public:
  ScaleFunction() = default;
  ScaleFunction(std::vector<ScaleTerm> terms, double q, LevySpec source, double w_at_zero)
      : terms_(std::move(terms)), q_(q), source_(source), w_at_zero_(w_at_zero) {}

  const std::vector<ScaleTerm>& terms() const { return terms_; }
  double q() const { return q_; }
  const LevySpec& source() const { return source_; }
  double w_at_zero() const { return w_at_zero_; }

  /// Complex evaluation of the exponential sum on x > 0; the imaginary part
  /// is rounding noise from conjugate pairs.
  std::complex<double> eval_complex(double x) const {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& t : terms_) {
      std::complex<double> v = t.coeff * std::exp(t.rate * x);
      if (t.power > 0) v *= std::pow(x, t.power);
      acc += v;
    }
    return acc;
  }

  double operator()(double x) const {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return w_at_zero_;
    return eval_complex(x).real();
  }

  /// Analytic Laplace transform of the stored sum, valid for beta > max Re(rate).
  double laplace(double beta) const {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& t : terms_) {
      double fact = 1.0;
      for (int k = 2; k <= t.power; ++k) fact *= k;
      acc += t.coeff * fact / std::pow(std::complex<double>(beta) - t.rate, t.power + 1);
    }
    return acc.real();
  }

 private:
  std::vector<ScaleTerm> terms_;
  double q_ = 0.0;
  LevySpec source_{};
  double w_at_zero_ = 0.0;
};

inline double eval_scale(const ScaleFunction& w, double x) { return w(x); }

/// Two-argument form W(x, x') = W(x - x') of a Levy scale function.
inline double eval_two_arg(const ScaleFunction& w, double x, double xp) { return w(x - xp); }

namespace detail {

using cplx = std::complex<double>;
using Poly = std::vector<cplx>;  // ascending coefficients

inline cplx poly_eval(const Poly& p, cplx z) {
  cplx v{0.0, 0.0};
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * z + *it;
  return v;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

inline Poly poly_derivative(const Poly& p) {
  if (p.size() <= 1) return {cplx{0.0, 0.0}};
  Poly d(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = p[i] * static_cast<double>(i);
  return d;
}

/// Coefficients of p(r + t) in powers of t.
inline Poly taylor_shift(Poly p, cplx r) {
  const std::size_t n = p.size();
  for (std::size_t k = 0; k + 1 < n; ++k)
    for (std::size_t i = n - 1; i > k; --i) p[i - 1] += r * p[i];
  return p;
}

/// First `order` coefficients of the power series num(t) / den(t); den(0) != 0.
inline Poly series_divide(const Poly& num, const Poly& den, std::size_t order) {
  Poly out(order, cplx{0.0, 0.0});
  for (std::size_t k = 0; k < order; ++k) {
    cplx acc = k < num.size() ? num[k] : cplx{0.0, 0.0};
    for (std::size_t j = 1; j <= k && j < den.size(); ++j) acc -= den[j] * out[k - j];
    out[k] = acc / den[0];
  }
  return out;
}

struct RootGroup {
  cplx root;
  int multiplicity;
};

/// Roots of a real polynomial (ascending coefficients, nonzero leading term)
/// grouped by multiplicity.  Exact zero roots are deflated first; the rest
/// come from the eigenvalues of the companion matrix, polished by Newton.
inline std::vector<RootGroup> real_poly_roots(std::vector<double> c, double cluster_tol = 1e-9) {
  std::vector<RootGroup> groups;
  int zero_mult = 0;
  while (c.size() > 1 && c.front() == 0.0) {
    c.erase(c.begin());
    ++zero_mult;
  }
  const std::size_t deg = c.size() - 1;
  std::vector<cplx> roots;
  if (deg == 1) {
    roots.emplace_back(-c[0] / c[1], 0.0);
  } else if (deg > 1) {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg), static_cast<Eigen::Index>(deg));
    for (std::size_t i = 1; i < deg; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < deg; ++i)
      comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(deg - 1)) = -c[i] / c[deg];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    if (es.info() != Eigen::Success) throw RootFindingFailure("companion eigenvalue solve failed");
    const auto ev = es.eigenvalues();
    Poly p(c.begin(), c.end());
    Poly dp = poly_derivative(p);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      cplx z = ev[i];
      for (int k = 0; k < 8; ++k) {
        const cplx d = poly_eval(dp, z);
        if (std::abs(d) == 0.0) break;
        const cplx step = poly_eval(p, z) / d;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
        z -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
      }
      roots.push_back(z);
    }
  }
  for (auto& z : roots) {
    if (std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z))) z.imag(0.0);
  }
  if (zero_mult > 0) groups.push_back({cplx{0.0, 0.0}, zero_mult});
  for (const auto& z : roots) {
    bool merged = false;
    for (auto& g : groups) {
      const double scale = std::max(std::abs(z), std::abs(g.root));
      if (std::abs(z - g.root) <= cluster_tol * scale) {
        // running mean keeps the representative centred in the cluster
        g.root = (g.root * static_cast<double>(g.multiplicity) + z) / static_cast<double>(g.multiplicity + 1);
        ++g.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) groups.push_back({z, 1});
  }
  // Enforce exact conjugate symmetry: every group with Im < 0 mirrors its partner.
  for (auto& g : groups) {
    if (g.root.imag() >= 0.0) continue;
    auto it = std::min_element(groups.begin(), groups.end(), [&](const RootGroup& a, const RootGroup& b) {
      auto dist = [&](const RootGroup& r) {
        return r.root.imag() > 0.0 ? std::abs(r.root - std::conj(g.root)) : std::numeric_limits<double>::infinity();
      };
      return dist(a) < dist(b);
    });
    if (it == groups.end() || it->root.imag() <= 0.0)
      throw RootFindingFailure("complex root without conjugate partner");
    g.root = std::conj(it->root);
  }
  return groups;
}

}  // namespace detail

/// Closed-form q-scale function of `spec`: partial-fraction inversion of
/// 1 / (psi(beta) - q).
///
/// For the q-scale function of the process killed at rate r, request
/// `scale_closed_form(spec, spec.kill_rate)`.
inline ScaleFunction scale_closed_form(const LevySpec& spec, double q) {
  using detail::cplx;
  if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("scale_closed_form: q must be finite and >= 0");
  validate(spec);

  const double half_s2 = 0.5 * spec.sigma * spec.sigma;
  // 1/(psi - q) = num / den with real polynomial coefficients (ascending)
  std::vector<double> num, den;
  if (spec.jump_rate > 0.0) {
    const double mu = spec.jump_decay;
    num = {mu, 1.0};
    // (a b + s2/2 b^2 - q)(mu + b) - rho b
    den = {-q * mu, spec.drift * mu - q - spec.jump_rate, spec.drift + half_s2 * mu, half_s2};
  } else {
    num = {1.0};
    den = {-q, spec.drift, half_s2};
  }
  while (den.size() > 1 && den.back() == 0.0) den.pop_back();
  if (den.size() == 1) throw DegenerateModel("psi - q has no roots");

  const auto groups = detail::real_poly_roots(den);
  const double lead = den.back();
  detail::Poly num_c(num.begin(), num.end());

  std::vector<ScaleTerm> terms;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    if (g.root.imag() < 0.0) continue;  // mirrored below
    detail::Poly den_t{cplx{lead, 0.0}};
    for (std::size_t gj = 0; gj < groups.size(); ++gj) {
      if (gj == gi) continue;
      const detail::Poly factor{g.root - groups[gj].root, cplx{1.0, 0.0}};
      for (int m = 0; m < groups[gj].multiplicity; ++m) den_t = detail::poly_mul(den_t, factor);
    }
    const auto m = static_cast<std::size_t>(g.multiplicity);
    const auto series = detail::series_divide(detail::taylor_shift(num_c, g.root), den_t, m);
    double fact = 1.0;
    for (std::size_t j = 1; j <= m; ++j) {
      if (j > 1) fact *= static_cast<double>(j - 1);
      cplx coeff = series[m - j] / fact;
      const int power = static_cast<int>(j - 1);
      if (g.root.imag() == 0.0) {
        terms.push_back({cplx{coeff.real(), 0.0}, g.root, power});
      } else {
        terms.push_back({coeff, g.root, power});
        terms.push_back({std::conj(coeff), std::conj(g.root), power});
      }
    }
  }

  const double w0 = spec.bounded_variation() ? 1.0 / spec.drift : 0.0;
  ScaleFunction w(std::move(terms), q, spec, w0);

  const double beta = phi(spec, q) + 1.0;
  const double expected = 1.0 / (psi(spec, beta) - q);
  const double got = w.laplace(beta);
  if (!(std::abs(got - expected) <= 1e-10 * std::abs(expected)))
    throw RootFindingFailure("partial-fraction expansion failed the transform check");
  return w;
}

}  // namespace stscale
