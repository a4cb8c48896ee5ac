#pragma once

// Monte Carlo estimates of the two-sided exit and occupation functionals of a
// space-time changed process.  The base process is stepped by Euler on its
// own clock and Y's time is the additive functional A_t = int h_T(X_s) ds, so
// discounting at Y's exit time is exp(-q A) at X's exit time and no inversion
// of the clock is needed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "stscale/errors.hpp"
#include "stscale/levy.hpp"
#include "stscale/spacetime.hpp"

namespace stscale {

struct MCConfig {
  std::uint64_t seed = 1;
  std::size_t n_paths = 10000;
  double dt = 1e-4;
  bool bridge_correction = true;
  std::size_t max_steps = 10'000'000;
  unsigned workers = 1;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;  // paths used (truncated paths excluded)
  std::size_t truncated_paths = 0;
  bool unreliable = false;  // more than 1% of paths truncated
};

/// What happened on one simulated path.
struct PathOutcome {
  bool upward = false;
  bool truncated = false;
  double exit_x = 0.0;  // internal coordinate at exit
  double clock = 0.0;   // A at exit (Y's exit time)
  double time = 0.0;    // X's exit time
  double score = 0.0;   // exp(-q A - r T) on upward exit, else 0
  double occupation = 0.0;
};

inline void validate(const MCConfig& cfg, const LevySpec& base) {
  if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be > 0");
  if (cfg.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (base.jump_rate * cfg.dt > 0.1) throw ConfigError("jump_rate * dt must be <= 0.1 (at most one jump per step)");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream per (seed, path index); the result depends on nothing else.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ path));
}

}  // namespace detail

/// Simulate one path of X from internal x0 until it leaves (lo, hi).
///
/// With bridge correction, a step that stays inside still counts as a
/// crossing with the Brownian-bridge probability exp(-2 d1 d2 / (sigma^2 dt)),
/// and the exit position is then the barrier itself.  Jumps are applied at
/// the end of a step, at most one per step.  `occupation_f`, when given, is
/// integrated as exp(-q A - r t) f(h_S(X)) dA along the path.
inline PathOutcome simulate_path(const ModelSpec& model, double q, double x0, double lo, double hi,
                                 const MCConfig& cfg, std::uint64_t path_index,
                                 const std::function<double(double)>* occupation_f = nullptr) {
  const LevySpec& base = model.base;
  const auto& change = model.change;
  const bool reciprocal = change.clock.kind == Clock::Kind::Reciprocal;
  const double dt = cfg.dt;
  const double sd = base.sigma * std::sqrt(dt);
  const double var = base.sigma * base.sigma * dt;
  const double drift_step = base.drift * dt;
  const double jump_p = base.jump_rate * dt;
  const double r = base.kill_rate;
  const double eps = 10.0 * sd;

  PathOutcome out;
  double x = x0;
  if (x >= hi || x <= lo) {
    out.upward = x >= hi;
    out.exit_x = x;
    out.score = out.upward ? 1.0 : 0.0;
    return out;
  }

  auto rng = detail::path_engine(cfg.seed, path_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> jump_size(base.jump_decay);

  auto occ_integrand = [&](double xs, double rate, double A, double t) {
    return (*occupation_f)(change.to_native(xs)) * rate * std::exp(-q * A - r * t);
  };

  double rate = change.clock(x);
  double A = 0.0;
  double t = 0.0;
  double g_prev = occupation_f ? occ_integrand(x, rate, A, t) : 0.0;
  int side = 0;

  for (std::size_t k = 0; k < cfg.max_steps; ++k) {
    double xc = x + drift_step + sd * normal(rng);
    double exit_x = xc;
    if (xc >= hi) {
      side = 1;
    } else if (xc <= lo) {
      side = -1;
    } else if (cfg.bridge_correction && var > 0.0) {
      const double eu = 2.0 * (hi - x) * (hi - xc) / var;
      const double ed = 2.0 * (x - lo) * (xc - lo) / var;
      const double pu = eu < 700.0 ? std::exp(-eu) : 0.0;
      const double pd = ed < 700.0 ? std::exp(-ed) : 0.0;
      if (pu + pd > 1e-300) {
        const double v = unif(rng);
        if (v < pu) {
          side = 1;
          exit_x = hi;
        } else if (v < pu + pd) {
          side = -1;
          exit_x = lo;
        }
      }
    }
    // clock and occupation run along the continuous part, clamped to the window
    const double x_end = side == 1 ? hi : (side == -1 ? lo : xc);
    double xn = xc;
    bool jumped = false;
    if (side == 0 && jump_p > 0.0 && unif(rng) < jump_p) {
      xn = xc - jump_size(rng);
      jumped = true;
      if (xn <= lo) {
        side = -1;
        exit_x = xn;
      }
    }

    const double rate_end = change.clock(x_end);
    const double A_new = A + 0.5 * (rate + rate_end) * dt;
    const double t_new = t + dt;
    if (occupation_f) {
      const double g_end = occ_integrand(x_end, rate_end, A_new, t_new);
      out.occupation += 0.5 * (g_prev + g_end) * dt;
      g_prev = g_end;
    }
    A = A_new;
    t = t_new;
    rate = rate_end;

    if (side != 0) {
      out.exit_x = exit_x;
      break;
    }
    x = xn;
    if (jumped) {
      rate = change.clock(x);
      if (occupation_f) g_prev = occ_integrand(x, rate, A, t);
    }
    if (reciprocal && x > -eps) {
      // clock -1/x is unreliable this close to absorption
      out.truncated = true;
      break;
    }
  }
  if (side == 0) out.truncated = true;
  out.upward = side == 1;
  out.clock = A;
  out.time = t;
  out.score = out.upward ? std::exp(-q * A - r * t) : 0.0;
  return out;
}

namespace detail {

/// Fan the paths out over cfg.workers threads and reduce in path order, so
/// the estimate is independent of the worker count.
template <class PathScore>
MCEstimate run_paths(const MCConfig& cfg, PathScore&& score_of) {
  const std::size_t n = cfg.n_paths;
  std::vector<double> scores(n, 0.0);
  std::vector<unsigned char> truncated(n, 0);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      const PathOutcome o = score_of(static_cast<std::uint64_t>(i));
      truncated[i] = o.truncated ? 1 : 0;
      scores[i] = o.truncated ? 0.0 : o.score;
    }
  };
  const std::size_t workers = std::min<std::size_t>(cfg.workers, n);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& th : pool) th.join();
  }

  MCEstimate est;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (truncated[i]) {
      ++est.truncated_paths;
      continue;
    }
    sum += scores[i];
    ++est.n;
  }
  est.unreliable = static_cast<double>(est.truncated_paths) > 0.01 * static_cast<double>(n);
  if (est.n == 0) {
    est.mean = std::numeric_limits<double>::quiet_NaN();
    est.std_error = std::numeric_limits<double>::infinity();
    est.unreliable = true;
    return est;
  }
  est.mean = sum / static_cast<double>(est.n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (truncated[i]) continue;
    const double d = scores[i] - est.mean;
    ss += d * d;
  }
  est.std_error = est.n > 1 ? std::sqrt(ss / static_cast<double>(est.n - 1) / static_cast<double>(est.n)) : 0.0;
  return est;
}

struct Window {
  double x0, lo, hi;
};

inline Window internal_window(const ModelSpec& model, double y0, double a, double b) {
  if (!(a < y0 && y0 <= b)) throw DomainError("simulation window must satisfy a < y0 <= b");
  const auto& ch = model.change;
  return {ch.to_internal(y0), ch.to_internal(a), ch.to_internal(b)};
}

}  // namespace detail

/// Estimate E_{y0}[exp(-q T_b); T_b < T_a] for Y.
inline MCEstimate simulate_exit_functional(const ModelSpec& model, double q, double y0, double a, double b,
                                           const MCConfig& cfg) {
  model.validate();
  validate(cfg, model.base);
  if (!(q >= 0.0)) throw DomainError("q must be >= 0");
  const auto w = detail::internal_window(model, y0, a, b);
  return detail::run_paths(cfg, [&](std::uint64_t i) { return simulate_path(model, q, w.x0, w.lo, w.hi, cfg, i); });
}

/// Estimate E_{y0}[ int_0^T exp(-q t) f(Y_t) dt ] with T the exit time of (a, b).
inline MCEstimate simulate_occupation_functional(const ModelSpec& model, double q, double y0, double a, double b,
                                                 const std::function<double(double)>& f, const MCConfig& cfg) {
  model.validate();
  validate(cfg, model.base);
  if (!(q >= 0.0)) throw DomainError("q must be >= 0");
  const auto w = detail::internal_window(model, y0, a, b);
  return detail::run_paths(cfg, [&](std::uint64_t i) {
    PathOutcome o = simulate_path(model, q, w.x0, w.lo, w.hi, cfg, i, &f);
    o.score = o.occupation;
    return o;
  });
}

struct Verdict {
  bool pass = false;
  double z = 0.0;  // |mean - predicted| / stderr
};

/// PASS iff |mean - predicted| <= 3 stderr + bias_allowance.
inline Verdict compare(const MCEstimate& est, double predicted, double bias_allowance) {
  const double diff = std::abs(est.mean - predicted);
  Verdict v;
  v.pass = diff <= 3.0 * est.std_error + bias_allowance;
  if (est.std_error > 0.0)
    v.z = diff / est.std_error;
  else
    v.z = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return v;
}

}  // namespace stscale
