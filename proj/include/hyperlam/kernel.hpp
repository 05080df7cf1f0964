#pragma once
// Radial heat density of hyperbolic Brownian motion and the explicit bound
// ingredients used by the shift-regularity experiment.
//
// Generator convention.  The diffusion generator throughout this library is
// Delta/2 (the radial SDE dX = dW + coth(X)/2 dt).  The classical integral
// formula below is for generator Delta, so all public entry points convert
// via  p^{Delta/2}(t, r) = p^{Delta}(t/2, r).  Single point of truth for a
// notorious factor-of-two trap; the eigenfunction identity
//     E[cosh X_t] = e^t   (X_0 = 0, generator Delta/2)
// pins the convention in the tests.
//
// Point-pair kernel (generator Delta, time tau):
//
//   p_tau(r) = sqrt(2) e^{-tau/4} / (4 pi tau)^{3/2}
//              * Integral_r^inf  s e^{-s^2/(4 tau)} / sqrt(cosh s - cosh r) ds.
//
// The radial density per unit distance is then 2 pi sinh(r) times the kernel.
//
// Quadrature.  The integrand has an inverse-square-root singularity at
// s = r; the substitution u^2 = cosh s - cosh r removes it:
//
//   Integral = 2 Integral_0^{u_max}  s(u) e^{-(s^2-r^2)/(4 tau)} / sinh s(u) du,
//
// where the node map u -> s = r + d inverts 2 sinh(r + d/2) sinh(d/2) = u^2
// (a cancellation-free factoring of cosh s - cosh r) by bracketed Newton.
// The factor e^{-r^2/(4 tau)} is pulled outside, so the exponent inside is
// -(d (2r + d))/(4 tau), again cancellation-free.  Gauss-Legendre panels over
// the u-images of an s-uniform partition are doubled until the value moves
// by less than 1e-9 relatively.  The tail beyond s_max = r + 40 sqrt(2 tau)
// + 40 is dominated by a Gaussian with exponent < -400 relative to the
// retained mass and is dropped.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperlam/csv.hpp"
#include "hyperlam/errors.hpp"
#include "hyperlam/geom.hpp"
#include "hyperlam/numerics.hpp"
#include "hyperlam/rng.hpp"

namespace hyperlam {

// ---------------------------------------------------------------------------
// RadialDensity: grid-sampled density on R_+
// ---------------------------------------------------------------------------

struct RadialDensity {
  double t = 0;                // time, generator Delta/2
  std::vector<double> grid;    // increasing r values
  std::vector<double> values;  // density per unit r

  double mass() const {
    double m = 0;
    for (size_t i = 0; i + 1 < grid.size(); ++i)
      m += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
    return m;
  }

  bool uniform() const {
    if (grid.size() < 2) return false;
    const double dr = grid[1] - grid[0];
    for (size_t i = 1; i + 1 < grid.size(); ++i)
      if (std::abs((grid[i + 1] - grid[i]) - dr) > 1e-9 * dr) return false;
    return true;
  }

  // Cubic interpolation on a uniform grid; GridError outside the grid span.
  double value_at(double r) const {
    if (grid.size() < 4 || !uniform())
      throw GridError("value_at: needs a uniform grid with at least 4 points");
    if (r < grid.front() - 1e-12 || r > grid.back() + 1e-12)
      throw GridError("value_at: point outside the tabulated range");
    return cubic_interp_uniform(values, grid.front(), grid[1] - grid[0], r);
  }
};

inline void save_density(const RadialDensity& d, const std::string& path) {
  CsvWriter w(path, "r,density");
  for (size_t i = 0; i < d.grid.size(); ++i) w.row({fmt17(d.grid[i]), fmt17(d.values[i])});
}

// Bulk-coverage grid: [0, t/2 + 12 sqrt(t) + 10], spacing min(0.01, sqrt(t)/400).
inline std::vector<double> default_radial_grid(double t) {
  if (!(t > 0)) throw DomainError("default_radial_grid: need t > 0");
  const double rmax = 0.5 * t + 12.0 * std::sqrt(t) + 10.0;
  const double dr = std::min(0.01, std::sqrt(t) / 400.0);
  const size_t n = size_t(std::ceil(rmax / dr)) + 1;
  std::vector<double> g(n);
  for (size_t i = 0; i < n; ++i) g[i] = double(i) * dr;
  return g;
}

// ---------------------------------------------------------------------------
// Exact kernel evaluation
// ---------------------------------------------------------------------------

namespace detail {

// Solve 2 sinh(r + d/2) sinh(d/2) = u2 for d within the bracket [dlo, dhi],
// Newton with bisection safeguard (the left side is increasing and convex).
inline double invert_node(double r, double u2, double dlo, double dhi) {
  double d = 0.5 * (dlo + dhi);
  for (int it = 0; it < 80; ++it) {
    const double F = 2.0 * std::sinh(r + 0.5 * d) * std::sinh(0.5 * d) - u2;
    if (F > 0)
      dhi = d;
    else
      dlo = d;
    double dn = d - F / std::sinh(r + d);
    if (!(dn > dlo && dn < dhi)) dn = 0.5 * (dlo + dhi);
    if (std::abs(dn - d) < 1e-15 * (1.0 + d)) return dn;
    d = dn;
  }
  return d;
}

// Integral_0^{u(d_end)} 2 s(u) exp(-(s^2-r^2)/(4 tau)) / sinh s(u) du over
// the u-images of a geometric ladder of d = s - r panels.  The exponential
// factor decays on the scale d ~ 2 tau / r near the singular end and the
// panel widths track that, so a few dozen panels suffice at any (r, tau);
// `level` halves the first panel and the ladder ratio for the convergence
// check.  The node inversion brackets within the current panel, so Newton
// starts a few steps from the root.
inline double mckean_panels(double r, double tau, double d_end, int level) {
  const double d_first =
      std::min({0.5, 2.0 * tau / (r + 1.0), 0.25 * d_end}) / double(1 << level);
  const double ratio = std::pow(2.0, 1.0 / double(1 << level));
  double total = 0;
  double ua = 0, da = 0;
  for (double db = d_first; da < d_end; db *= ratio) {
    db = std::min(db, d_end);
    const double ub = std::sqrt(2.0 * std::sinh(r + 0.5 * db) * std::sinh(0.5 * db));
    const double dlo = da, dhi = db;
    const auto integrand = [&](double u) {
      const double d = (r == 0.0) ? 2.0 * std::asinh(u / std::sqrt(2.0))
                                  : invert_node(r, u * u, dlo, dhi);
      const double s = r + d;
      const double expo = -(d * (2.0 * r + d)) / (4.0 * tau);
      const double ratio_s = (s < 1e-6) ? (2.0 / (1.0 + s * s / 6.0))  // 2s/sinh s
                                        : (2.0 * s / std::sinh(s));
      return ratio_s * std::exp(expo);
    };
    total += gauss16(integrand, ua, ub);
    ua = ub;
    da = db;
  }
  return total;
}

inline double mckean_integral(double r, double tau) {
  const double smax = std::min(r + 40.0 * std::sqrt(2.0 * tau) + 40.0, 700.0);
  // beyond exponent 750 the factor exp(-d(2r+d)/(4 tau)) underflows to zero
  const double d_cut = -r + std::sqrt(r * r + 3000.0 * tau);
  const double d_end = std::min(smax - r, d_cut);
  double prev = 0;
  for (int level = 0; level <= 8; ++level) {
    const double cur = mckean_panels(r, tau, d_end, level);
    if (level > 0 && std::abs(cur - prev) <= 1e-9 * std::abs(cur) + 1e-300) return cur;
    prev = cur;
  }
  throw QuadratureError("heat kernel integral did not converge within the panel cap");
}

}  // namespace detail

// Point-pair heat kernel at distance r, generator Delta, time tau.
inline double heat_kernel_generator_delta(double tau, double r) {
  if (!(tau > 0) || !(r >= 0)) throw DomainError("heat_kernel: need tau > 0, r >= 0");
  const double pref =
      std::sqrt(2.0) * std::exp(-tau / 4.0) / std::pow(4.0 * kPi * tau, 1.5);
  const double gauss = std::exp(-r * r / (4.0 * tau));
  if (gauss == 0.0) return 0.0;  // below double range; the true value underflows
  return pref * gauss * detail::mckean_integral(r, tau);
}

// Point-pair heat kernel at distance r for the library's generator Delta/2.
inline double heat_kernel_point(double t, double r) {
  return heat_kernel_generator_delta(0.5 * t, r);
}

// Density per unit distance of the radius at time t (generator Delta/2),
// started at the origin: kernel times the circle length 2 pi sinh(r).
inline double radial_density_value(double t, double r) {
  if (r == 0.0) return 0.0;
  return circle_length(r) * heat_kernel_point(t, r);
}

inline RadialDensity radial_density_exact(double t, const std::vector<double>& grid,
                                          int threads = 0) {
  if (!(t > 0)) throw DomainError("radial_density_exact: need t > 0");
  if (grid.size() < 2) throw DomainError("radial_density_exact: grid too small");
  for (size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw DomainError("radial_density_exact: grid must be strictly increasing");
  RadialDensity d;
  d.t = t;
  d.grid = grid;
  d.values.assign(grid.size(), 0.0);
  parallel_for(grid.size(), threads,
               [&](size_t i) { d.values[i] = radial_density_value(t, grid[i]); });
  return d;
}

// ---------------------------------------------------------------------------
// Shift total-variation functional
// ---------------------------------------------------------------------------

struct TvEstimate {
  double value = 0;       // integral of |p(r) - p(r+s)| over the covered range
  double tail_bound = 0;  // certified bound on the truncated-tail contribution
};

inline TvEstimate tv_shift(const RadialDensity& d, double s) {
  if (!(s >= 0 && s <= 1)) throw DomainError("tv_shift: need s in [0,1]");
  if (d.grid.size() < 4 || !d.uniform())
    throw GridError("tv_shift: needs a uniform grid with at least 4 points");
  const double rmax = d.grid.back();
  if (s > rmax - d.grid.front()) throw GridError("tv_shift: shift exceeds grid coverage");
  if (s == 0.0) return TvEstimate{0.0, 0.0};
  const double dr = d.grid[1] - d.grid[0];
  // |p(r) - p(r+s)| over r in [0, rmax - s], shifted values by interpolation
  std::vector<double> diff;
  diff.reserve(d.grid.size());
  double covered_mass = 0;
  size_t count = 0;
  for (size_t i = 0; i < d.grid.size() && d.grid[i] + s <= rmax + 1e-12; ++i) {
    const double shifted = cubic_interp_uniform(d.values, d.grid.front(), dr,
                                                std::min(d.grid[i] + s, rmax));
    diff.push_back(std::abs(d.values[i] - shifted));
    ++count;
  }
  for (size_t i = 0; i + 1 < count; ++i)
    covered_mass += 0.5 * (d.values[i] + d.values[i + 1]) * dr;
  const double value = trapezoid(diff, dr);
  // Both integrands are bounded by densities whose mass beyond rmax - s is
  // at most 1 - covered_mass each.
  const double tail = 2.0 * std::max(0.0, 1.0 - covered_mass);
  return TvEstimate{value, tail};
}

// ---------------------------------------------------------------------------
// Gaussian comparison (Wiener process with drift 1/2)
// ---------------------------------------------------------------------------

// Transition density of dY = dW + dt/2 from y to z in time t.
inline double gaussian_density(double t, double y, double z) {
  if (!(t > 0)) throw DomainError("gaussian_density: need t > 0");
  const double m = z - y - 0.5 * t;
  return std::exp(-m * m / (2.0 * t)) / std::sqrt(2.0 * kPi * t);
}

// Integral over z of |p*(y,z) - p*(y,z+s)| = 2 (2 Phi(s / (2 sqrt t)) - 1).
inline double gaussian_shift_tv(double t, double s) {
  if (!(t > 0)) throw DomainError("gaussian_shift_tv: need t > 0");
  return 2.0 * std::erf(std::abs(s) / (2.0 * std::sqrt(2.0 * t)));
}

// ---------------------------------------------------------------------------
// Explicit bound ingredients
// ---------------------------------------------------------------------------

// C(R,t) = exp(t / (8 sinh^2(R/2))) / sqrt(1 - e^{-R})
inline double bound_C(double R, double t) {
  if (!(R > 0) || !(t >= 0)) throw DomainError("bound_C: need R > 0, t >= 0");
  const double sh = std::sinh(0.5 * R);
  return std::exp(t / (8.0 * sh * sh)) / std::sqrt(-std::expm1(-R));
}

enum class QMode { ClosedForm, MonteCarlo };

struct ProbabilityEstimate {
  double value = 0;
  double std_error = 0;
};

struct QMonteCarloParams {
  uint64_t n_paths = 400000;
  double horizon = 200.0;
  double h = 0.25;
  uint64_t seed = 1;
  int threads = 0;
};

// P{ min_r (W_r + r/2) < -R/2 }: closed form e^{-R/2}, or an unbiased Monte
// Carlo estimate.  Each simulated step multiplies the survival probability by
// the exact Brownian-bridge non-crossing factor 1 - e^{-2 d d'/h} for the
// distances d, d' above the barrier, and the run is closed with the analytic
// infinite-horizon crossing probability e^{-d} from the final point, so the
// estimator is unbiased at any step size (the bridge law carries no drift).
inline ProbabilityEstimate bound_Q(double R, QMode mode,
                                   const QMonteCarloParams& mc = QMonteCarloParams{}) {
  if (!(R > 0)) throw DomainError("bound_Q: need R > 0");
  if (mode == QMode::ClosedForm) return ProbabilityEstimate{std::exp(-0.5 * R), 0.0};
  if (!(mc.h > 0) || !(mc.horizon > 0) || mc.n_paths == 0)
    throw DomainError("bound_Q: bad Monte Carlo parameters");
  const uint64_t n_steps = uint64_t(std::ceil(mc.horizon / mc.h));
  const CounterRng rng(mc.seed);
  std::vector<double> vals(mc.n_paths);
  const double sqrth = std::sqrt(mc.h);
  parallel_for(mc.n_paths, mc.threads, [&](size_t p) {
    double d = 0.5 * R;  // distance of W_r + r/2 above the barrier -R/2
    double log_survival = 0.0;
    double crossing;
    CounterRng::NormalPair z{0, 0};
    for (uint64_t k = 0;; ++k) {
      if (k >= n_steps || d > 46.0) {
        // analytic tail from the current point (exact for the infinite
        // horizon; beyond d = 46 the remaining factor is below 1e-20)
        crossing = 1.0 - std::exp(log_survival) * (-std::expm1(-d));
        break;
      }
      if (k % 2 == 0) z = rng.normal_pair(uint64_t(p), k / 2, 0);
      const double xi = (k % 2 == 0) ? z.z0 : z.z1;
      const double dn = d + 0.5 * mc.h + sqrth * xi;
      if (dn <= 0.0) {
        crossing = 1.0;
        break;
      }
      const double a = 2.0 * d * dn / mc.h;
      if (a < 40.0) log_survival += std::log1p(-std::exp(-a));
      d = dn;
    }
    vals[p] = crossing;
  });
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= double(mc.n_paths);
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= double(mc.n_paths) * std::max<double>(1.0, double(mc.n_paths) - 1.0);
  return ProbabilityEstimate{mean, std::sqrt(var)};
}

}  // namespace hyperlam
