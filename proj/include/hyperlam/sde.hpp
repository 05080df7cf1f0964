#pragma once
// Path simulation of the radial diffusion dX = dW + coth(X)/2 dt and the
// planar hyperbolic Brownian motion in polar coordinates, plus the two
// Girsanov log-densities relative to Wiener measure.
//
// Integrator: Strang splitting.  The drift ODE dX = coth(X)/2 dt has the
// exact solution cosh X_t = cosh X_0 e^{t/2}, so each step is
//
//   exact drift over h/2  ->  full Wiener increment  ->  exact drift over h/2,
//
// which remains well-defined arbitrarily close to the entrance boundary 0
// where plain Euler-Maruyama breaks down.  With noise disabled the scheme
// reproduces the drift ODE exactly (up to rounding) for any step size.
// After the noise substep the value is reflected at the floor eps = h
// (X <- 2 eps - X when X < eps): the exact process never reaches 0, and the
// O(h) reflection barrier perturbs the law only at O(sqrt h) near t = 0.
//
// Girsanov.  On paths not crossing 0 the two candidate laws have densities
//
//   Z_t  = (sinh x_T / sinh x_0)^{1/2} exp{-t/4 + (1/8) int coth^2(x_r) dr}
//   Z*_t = exp{W_t/2 - t/8},   W_t = x_T - x_0 read off the same path,
//
// and the ratio collapses to
//
//   Z/Z* = ((1 - e^{-2 x_T}) / (1 - e^{-2 x_0}))^{1/2}
//          exp{(1/8) int (coth^2(x_r) - 1) dr},
//
// an exact identity the tests verify at the discrete level (the integral is
// the same trapezoid in both expressions).  For a path started at y >= R
// staying in [R/2, inf) the ratio lies in [(1-e^{-R})^{1/2}, bound_C(R,t)]
// deterministically, because the trapezoid preserves pointwise bounds on
// coth^2 - 1 and the sinh factors are monotone.
//
// Randomness: counter-based (seed, path, step, stream); stream 0 drives the
// radial increments, stream 1 the angular ones, so planar and radial runs
// with equal seeds have bit-identical radial marginals.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hyperlam/csv.hpp"
#include "hyperlam/errors.hpp"
#include "hyperlam/kernel.hpp"
#include "hyperlam/numerics.hpp"
#include "hyperlam/rng.hpp"

namespace hyperlam {

enum class NoiseMode { Wiener, Zero };

struct PathSample {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> theta;  // empty for radial-only paths
  uint64_t seed = 0;
  uint64_t path_id = 0;
  double min_x = std::numeric_limits<double>::infinity();
};

namespace detail {

// Exact flow of dX = coth(X)/2 dt over time h/2: cosh X <- cosh X * e^{h/4}.
inline double drift_half_step(double x, double exp_quarter_h, double h) {
  if (x > 20.0) {
    // cosh x ~ e^x (1 + e^{-2x})/2: solve for the shifted value directly;
    // one fixed-point pass is exact to far below double precision here.
    return x + 0.25 * h + std::log1p(std::exp(-2.0 * x)) -
           std::log1p(std::exp(-2.0 * x - 0.5 * h));
  }
  return std::acosh(std::cosh(x) * exp_quarter_h);
}

inline double coth(double x) { return 1.0 / std::tanh(x); }

}  // namespace detail

// One radial path with full storage.  Reflection at the floor eps = h is
// applied only in Wiener mode so that Zero mode is the pure drift ODE.
inline PathSample simulate_radial(double x0, double t_end, double h, uint64_t seed,
                                  NoiseMode noise, uint64_t path_id = 0) {
  if (!(x0 > 0) || !(h > 0) || !(t_end >= 0))
    throw DomainError("simulate_radial: need x0 > 0, h > 0, t_end >= 0");
  const uint64_t n = uint64_t(std::llround(t_end / h));
  const double eq = std::exp(0.25 * h);
  const double sq = std::sqrt(h);
  const CounterRng rng(seed);
  PathSample p;
  p.seed = seed;
  p.path_id = path_id;
  p.times.reserve(n + 1);
  p.x.reserve(n + 1);
  double x = x0;
  p.times.push_back(0.0);
  p.x.push_back(x);
  p.min_x = x;
  CounterRng::NormalPair z{0, 0};
  for (uint64_t k = 0; k < n; ++k) {
    x = detail::drift_half_step(x, eq, h);
    if (noise == NoiseMode::Wiener) {
      if (k % 2 == 0) z = rng.normal_pair(path_id, k / 2, 0);
      x += sq * ((k % 2 == 0) ? z.z0 : z.z1);
      if (x < h) x = 2.0 * h - x;  // reflect at the entrance floor
      if (!(x > 0)) throw StepError("simulate_radial: radius collapsed; reduce h");
    }
    x = detail::drift_half_step(x, eq, h);
    p.times.push_back(double(k + 1) * h);
    p.x.push_back(x);
    if (x < p.min_x) p.min_x = x;
  }
  return p;
}

// Planar Brownian motion in polar coordinates about the start: the radius is
// bit-identical to simulate_radial with the same (seed, path_id), and the
// angle adds sqrt(h) xi / sinh(X_mid) per step from an independent stream.
inline PathSample simulate_planar(double x0, double theta0, double t_end, double h,
                                  uint64_t seed, uint64_t path_id = 0) {
  PathSample p = simulate_radial(x0, t_end, h, seed, NoiseMode::Wiener, path_id);
  const CounterRng rng(seed);
  const double sq = std::sqrt(h);
  p.theta.resize(p.x.size());
  p.theta[0] = theta0;
  CounterRng::NormalPair z{0, 0};
  for (size_t k = 0; k + 1 < p.x.size(); ++k) {
    if (k % 2 == 0) z = rng.normal_pair(path_id, k / 2, 1);
    const double xi = (k % 2 == 0) ? z.z0 : z.z1;
    const double xmid = 0.5 * (p.x[k] + p.x[k + 1]);
    p.theta[k + 1] = p.theta[k] + sq * xi / std::sinh(xmid);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Girsanov weights
// ---------------------------------------------------------------------------

struct GirsanovWeight {
  double logZ = 0;
  double logZstar = 0;
};

inline double log_sinh(double x) {
  // ln sinh x = x + ln(1 - e^{-2x}) - ln 2, stable for all x > 0
  return x + std::log1p(-std::exp(-2.0 * x)) - 0.6931471805599453094;
}

// Trapezoid of coth^2 along a stored path.
inline double integral_coth2(const std::vector<double>& x, double h) {
  if (x.size() < 2) return 0.0;
  double acc = 0.5 * (detail::coth(x.front()) * detail::coth(x.front()) +
                      detail::coth(x.back()) * detail::coth(x.back()));
  for (size_t k = 1; k + 1 < x.size(); ++k) {
    const double c = detail::coth(x[k]);
    acc += c * c;
  }
  return acc * h;
}

inline GirsanovWeight girsanov_weights(const PathSample& p) {
  if (!(p.min_x > 0)) throw DomainError("girsanov_weights: path touches 0");
  if (p.x.size() < 2) throw DomainError("girsanov_weights: empty path");
  const double t = p.times.back();
  const double h = p.times[1] - p.times[0];
  GirsanovWeight w;
  w.logZ = 0.5 * (log_sinh(p.x.back()) - log_sinh(p.x.front())) - 0.25 * t +
           0.125 * integral_coth2(p.x, h);
  w.logZstar = 0.5 * (p.x.back() - p.x.front()) - 0.125 * t;
  return w;
}

// Streaming per-path summary for large ensembles (no path storage).
struct PathStats {
  double x0 = 0;
  double x_end = 0;
  double min_x = 0;
  double int_coth2 = 0;  // trapezoid of coth^2(X) dt
};

inline PathStats radial_path_stats(double x0, double t_end, double h, uint64_t seed,
                                   uint64_t path_id, NoiseMode noise = NoiseMode::Wiener) {
  if (!(x0 > 0) || !(h > 0) || !(t_end >= 0))
    throw DomainError("radial_path_stats: need x0 > 0, h > 0, t_end >= 0");
  const uint64_t n = uint64_t(std::llround(t_end / h));
  const double eq = std::exp(0.25 * h);
  const double sq = std::sqrt(h);
  const CounterRng rng(seed);
  PathStats s;
  s.x0 = x0;
  s.min_x = x0;
  double x = x0;
  double cprev = detail::coth(x);
  double acc = 0;
  CounterRng::NormalPair z{0, 0};
  for (uint64_t k = 0; k < n; ++k) {
    x = detail::drift_half_step(x, eq, h);
    if (noise == NoiseMode::Wiener) {
      if (k % 2 == 0) z = rng.normal_pair(path_id, k / 2, 0);
      x += sq * ((k % 2 == 0) ? z.z0 : z.z1);
      if (x < h) x = 2.0 * h - x;
      if (!(x > 0)) throw StepError("radial_path_stats: radius collapsed; reduce h");
    }
    x = detail::drift_half_step(x, eq, h);
    const double c = detail::coth(x);
    acc += 0.5 * (cprev * cprev + c * c);
    cprev = c;
    if (x < s.min_x) s.min_x = x;
  }
  s.x_end = x;
  s.int_coth2 = acc * h;
  return s;
}

inline GirsanovWeight girsanov_from_stats(const PathStats& s, double t) {
  if (!(s.min_x > 0)) throw DomainError("girsanov_from_stats: path touches 0");
  GirsanovWeight w;
  w.logZ = 0.5 * (log_sinh(s.x_end) - log_sinh(s.x0)) - 0.25 * t + 0.125 * s.int_coth2;
  w.logZstar = 0.5 * (s.x_end - s.x0) - 0.125 * t;
  return w;
}

// ---------------------------------------------------------------------------
// Ensemble helpers
// ---------------------------------------------------------------------------

inline std::vector<double> radial_terminals(double x0, double t_end, double h,
                                            uint64_t n_paths, uint64_t seed,
                                            int threads = 0) {
  std::vector<double> out(n_paths);
  parallel_for(n_paths, threads, [&](size_t p) {
    out[p] = radial_path_stats(x0, t_end, h, seed, uint64_t(p)).x_end;
  });
  return out;
}

// Histogram of samples as a RadialDensity on bin centers; values integrate
// (midpoint rule, bin width) to exactly count/n_total.
inline RadialDensity histogram_density(const std::vector<double>& samples, double t,
                                       double bin_width, double range_max) {
  const size_t nbins = size_t(std::ceil(range_max / bin_width));
  RadialDensity d;
  d.t = t;
  d.grid.resize(nbins);
  d.values.assign(nbins, 0.0);
  for (size_t b = 0; b < nbins; ++b) d.grid[b] = (double(b) + 0.5) * bin_width;
  for (double v : samples) {
    size_t b = size_t(std::max(0.0, v / bin_width));
    if (b >= nbins) b = nbins - 1;  // catch-all top bin keeps the mass identity
    d.values[b] += 1.0;
  }
  const double norm = 1.0 / (double(samples.size()) * bin_width);
  for (double& v : d.values) v *= norm;
  return d;
}

inline RadialDensity mc_radial_histogram(double x0, double t_end, double h,
                                         uint64_t n_paths, uint64_t seed,
                                         double bin_width = 0.25, int threads = 0) {
  const auto terminals = radial_terminals(x0, t_end, h, n_paths, seed, threads);
  const double range = 0.5 * t_end + 12.0 * std::sqrt(t_end) + 10.0;
  return histogram_density(terminals, t_end, bin_width, range);
}

// L1 distance between a histogram and a densely tabulated density, evaluated
// at the bin centers; centers beyond the tabulated span count the density as
// zero (the tabulation grids cover everything above ~1e-16).
inline double l1_histogram_vs_density(const RadialDensity& hist, const RadialDensity& dense) {
  double acc = 0;
  const double w = hist.grid.size() > 1 ? hist.grid[1] - hist.grid[0]
                                        : 2.0 * hist.grid.at(0);
  for (size_t b = 0; b < hist.grid.size(); ++b) {
    const double r = hist.grid[b];
    const double d = (r > dense.grid.back()) ? 0.0 : dense.value_at(r);
    acc += std::abs(hist.values[b] - d) * w;
  }
  return acc;
}

// L1 distance of two densities sharing one grid.
inline double l1_same_grid(const RadialDensity& a, const RadialDensity& b) {
  if (a.grid.size() != b.grid.size())
    throw GridError("l1_same_grid: grids have different sizes");
  double acc = 0;
  for (size_t i = 0; i + 1 < a.grid.size(); ++i) {
    if (std::abs(a.grid[i] - b.grid[i]) > 1e-9)
      throw GridError("l1_same_grid: grids differ");
    const double d0 = std::abs(a.values[i] - b.values[i]);
    const double d1 = std::abs(a.values[i + 1] - b.values[i + 1]);
    acc += 0.5 * (d0 + d1) * (a.grid[i + 1] - a.grid[i]);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Path-restricted density (the floor-crossing decomposition)
// ---------------------------------------------------------------------------

struct RestrictedDensity {
  RadialDensity q;        // terminal histogram of never-crossing paths,
                          // normalized by the TOTAL path count
  double escaped_mass = 0;   // fraction of paths whose grid minimum crossed
  double surviving_mass = 0; // 1 - escaped_mass, exactly
};

inline RestrictedDensity restricted_density_estimate(double y0, double t, double floor,
                                                     uint64_t n_paths, uint64_t seed,
                                                     double h = 1e-3,
                                                     double bin_width = 0.25,
                                                     int threads = 0) {
  if (!(y0 > floor)) throw DomainError("restricted_density_estimate: need y0 > floor");
  std::vector<double> terminal(n_paths);
  std::vector<char> crossed(n_paths);
  parallel_for(n_paths, threads, [&](size_t p) {
    const PathStats s = radial_path_stats(y0, t, h, seed, uint64_t(p));
    terminal[p] = s.x_end;
    crossed[p] = (s.min_x < floor) ? 1 : 0;
  });
  uint64_t n_crossed = 0;
  std::vector<double> kept;
  kept.reserve(n_paths);
  for (size_t p = 0; p < n_paths; ++p) {
    if (crossed[p])
      ++n_crossed;
    else
      kept.push_back(terminal[p]);
  }
  const double range = y0 + 0.5 * t + 12.0 * std::sqrt(t) + 10.0;
  RestrictedDensity r;
  r.q = histogram_density(kept, t, bin_width, range);
  // renormalize by total paths so q-mass equals the surviving fraction
  const double scale = double(kept.size()) / double(n_paths);
  for (double& v : r.q.values) v *= scale;
  r.escaped_mass = double(n_crossed) / double(n_paths);
  r.surviving_mass = double(n_paths - n_crossed) / double(n_paths);
  return r;
}

// ---------------------------------------------------------------------------
// Drift domination
// ---------------------------------------------------------------------------

// Fraction of coupled paths with X_k > x0 + W_k + t_k/2 at every step k >= 1
// (the same Wiener increments drive both sides).  The splitting adds at
// least h/4 per drift half-step plus a positive margin, so the contract is
// a fraction of exactly 1.
inline double drift_domination_check(uint64_t n_paths, double t, uint64_t seed,
                                     double x0 = 1.0, double h = 1e-3,
                                     int threads = 0) {
  if (t == 0.0) return 1.0;  // vacuous
  const uint64_t n = uint64_t(std::llround(t / h));
  const double eq = std::exp(0.25 * h);
  const double sq = std::sqrt(h);
  const CounterRng rng(seed);
  std::vector<char> ok(n_paths);
  parallel_for(n_paths, threads, [&](size_t p) {
    double x = x0, w = 0;
    bool dominated = true;
    CounterRng::NormalPair z{0, 0};
    for (uint64_t k = 0; k < n; ++k) {
      x = detail::drift_half_step(x, eq, h);
      if (k % 2 == 0) z = rng.normal_pair(uint64_t(p), k / 2, 0);
      const double xi = (k % 2 == 0) ? z.z0 : z.z1;
      x += sq * xi;
      w += sq * xi;
      if (x < h) x = 2.0 * h - x;
      x = detail::drift_half_step(x, eq, h);
      if (!(x > x0 + w + 0.5 * double(k + 1) * h)) {
        dominated = false;
        break;
      }
    }
    ok[p] = dominated ? 1 : 0;
  });
  uint64_t good = 0;
  for (char c : ok) good += uint64_t(c);
  return double(good) / double(n_paths);
}

// ---------------------------------------------------------------------------
// CSV dumps
// ---------------------------------------------------------------------------

inline void save_paths(const std::vector<PathSample>& paths, const std::string& file) {
  const bool with_theta = !paths.empty() && !paths.front().theta.empty();
  CsvWriter w(file, with_theta ? "path_id,t,x,theta" : "path_id,t,x");
  for (const auto& p : paths)
    for (size_t k = 0; k < p.times.size(); ++k) {
      if (with_theta)
        w.row({std::to_string(p.path_id), fmt17(p.times[k]), fmt17(p.x[k]),
               fmt17(p.theta[k])});
      else
        w.row({std::to_string(p.path_id), fmt17(p.times[k]), fmt17(p.x[k])});
    }
}

}  // namespace hyperlam
