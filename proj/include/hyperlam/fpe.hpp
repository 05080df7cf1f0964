#pragma once
// Forward Kolmogorov (Fokker-Planck) solver for the radial diffusion
//
//   dp/dt = 1/2 d^2p/dy^2 - d/dy( (1/2) coth(y) p ),
//
// used as a density oracle independent of both the closed-form kernel and the
// Monte Carlo sampler.
//
// Scheme: finite volume on uniform cells with exponential-fitted face fluxes
// (Chang-Cooper weighting).  With drift b = coth(y)/2, diffusion D = 1/2 and
// face Peclet number w = b*dy/D = dy*coth(y), the flux through face j is
//
//   J_j = b_j [ (1-delta_j) p_{j-1} + delta_j p_j ] - (D/dy)(p_j - p_{j-1}),
//   delta(w) = 1/w - 1/(e^w - 1)  in (0, 1/2],
//
// which is exact on the local steady state p_j / p_{j-1} = e^w, reduces to
// central differencing as w -> 0, and upwinds as w grows.  Time stepping is
// implicit Euler; the update matrix has non-positive off-diagonal entries and
// unit column sums away from the outflow boundary, so it is an M-matrix:
// positivity is preserved and mass telescopes exactly onto the tracked
// right-boundary outflow.  The left face carries a zero-flux condition (the
// origin is an entrance boundary: nothing enters or leaves), the right face
// an outflow condition via a zero ghost cell.
//
// The coefficients do not depend on time, so the tridiagonal factorization is
// computed once per fp_evolve call and reused across all steps.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hyperlam/errors.hpp"
#include "hyperlam/kernel.hpp"
#include "hyperlam/numerics.hpp"

namespace hyperlam {

struct FPGrid {
  double y_min = 0.0;
  double y_max = 0.0;
  double dt = 1e-3;
  size_t n_cells = 0;
  std::vector<double> values;  // cell-averaged density, size n_cells
  double outflow = 0.0;        // cumulative tracked loss through y_max

  double cell_width() const { return (y_max - y_min) / double(n_cells); }
  double center(size_t i) const { return y_min + (double(i) + 0.5) * cell_width(); }
  double mass() const {
    double m = 0;
    for (double v : values) m += v;
    return m * cell_width();
  }
};

inline FPGrid fp_grid(double y_max, size_t n_cells = 8000, double dt = 1e-3,
                      double y_min = 0.0) {
  if (!(y_min >= 0) || !(y_max > y_min)) throw GridError("fp_grid: need 0 <= y_min < y_max");
  if (n_cells < 8) throw GridError("fp_grid: need at least 8 cells");
  if (!(dt > 0)) throw StabilityError("fp_grid: need dt > 0");
  FPGrid g;
  g.y_min = y_min;
  g.y_max = y_max;
  g.dt = dt;
  g.n_cells = n_cells;
  g.values.assign(n_cells, 0.0);
  return g;
}

// Unit mass concentrated in the cell covering y0.
inline FPGrid fp_point_initial(FPGrid g, double y0) {
  if (!(y0 > g.y_min && y0 < g.y_max)) throw GridError("fp_point_initial: y0 outside grid");
  std::fill(g.values.begin(), g.values.end(), 0.0);
  size_t i = size_t((y0 - g.y_min) / g.cell_width());
  if (i >= g.n_cells) i = g.n_cells - 1;
  g.values[i] = 1.0 / g.cell_width();
  g.outflow = 0.0;
  return g;
}

// Cell-averaged Gaussian profile, renormalized to unit mass on the grid.
inline FPGrid fp_gaussian_initial(FPGrid g, double center, double sigma) {
  if (!(sigma > 0)) throw DomainError("fp_gaussian_initial: need sigma > 0");
  const double w = g.cell_width();
  double total = 0;
  for (size_t i = 0; i < g.n_cells; ++i) {
    const double a = g.y_min + double(i) * w;
    const double cdf = normal_cdf((a + w - center) / sigma) - normal_cdf((a - center) / sigma);
    g.values[i] = cdf / w;
    total += cdf;
  }
  if (!(total > 0.5)) throw GridError("fp_gaussian_initial: profile not contained in grid");
  for (double& v : g.values) v /= total;
  g.outflow = 0.0;
  return g;
}

namespace detail {

// Chang-Cooper weight delta(w) = 1/w - 1/(e^w - 1), series near 0.
inline double cc_delta(double w) {
  if (w < 1e-4) return 0.5 - w / 12.0 + w * w * w / 720.0;
  return 1.0 / w - 1.0 / std::expm1(w);
}

}  // namespace detail

// Evolve the density forward by duration t_end (a whole number of dt steps).
inline FPGrid fp_evolve(FPGrid g, double t_end) {
  if (!(t_end >= 0)) throw DomainError("fp_evolve: need t_end >= 0");
  if (t_end == 0.0) return g;
  const size_t n = g.n_cells;
  const double dy = g.cell_width();
  if (!(g.dt > 0) || g.dt > dy)
    throw StabilityError("fp_evolve: dt must lie in (0, cell_width] for the accuracy contract");
  const size_t n_steps = size_t(std::llround(t_end / g.dt));
  if (std::abs(double(n_steps) * g.dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw StabilityError("fp_evolve: t_end must be a whole number of dt steps");

  // Face coefficients: J_j = A_j p_{j-1} - B_j p_j at interior faces
  // j = 1..n-1 and the ghost outflow face j = n.  Face 0 is zero-flux.
  const double D = 0.5;
  std::vector<double> A(n + 1, 0.0), B(n + 1, 0.0);
  for (size_t j = 1; j <= n; ++j) {
    const double y = g.y_min + double(j) * dy;
    const double b = 0.5 / std::tanh(y);
    const double w = dy / std::tanh(y);
    const double delta = detail::cc_delta(w);
    A[j] = b * (1.0 - delta) + D / dy;
    B[j] = D / dy - b * delta;
  }

  // Implicit Euler rows: -r A_i p_{i-1} + (1 + r(B_i + A_{i+1})) p_i
  //                      - r B_{i+1} p_{i+1} = p_i^old,  r = dt/dy,
  // with B_0 = 0 (zero-flux left) and the ghost A_n closing the last row.
  const double r = g.dt / dy;
  std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double bleft = (i == 0) ? 0.0 : B[i];
    diag[i] = 1.0 + r * (bleft + A[i + 1]);
    if (i > 0) lower[i] = -r * A[i];
    if (i + 1 < n) upper[i] = -r * B[i + 1];
  }
  // Thomas factorization (time-independent: factor once, reuse every step).
  std::vector<double> dfac(n), lfac(n);
  dfac[0] = diag[0];
  for (size_t i = 1; i < n; ++i) {
    lfac[i] = lower[i] / dfac[i - 1];
    dfac[i] = diag[i] - lfac[i] * upper[i - 1];
  }

  const double mass0 = g.mass() + g.outflow;
  std::vector<double> rhs(n);
  for (size_t s = 0; s < n_steps; ++s) {
    rhs[0] = g.values[0];
    for (size_t i = 1; i < n; ++i) rhs[i] = g.values[i] - lfac[i] * rhs[i - 1];
    g.values[n - 1] = rhs[n - 1] / dfac[n - 1];
    for (size_t i = n - 1; i-- > 0;)
      g.values[i] = (rhs[i] - upper[i] * g.values[i + 1]) / dfac[i];
    g.outflow += g.dt * A[n] * g.values[n - 1];
  }
  if (std::abs(g.mass() + g.outflow - mass0) > 1e-6)
    throw MassError("fp_evolve: mass conservation drifted beyond 1e-6");
  return g;
}

// View the cell averages as a density tabulated at the cell centers.
inline RadialDensity fp_to_radial(const FPGrid& g, double t) {
  RadialDensity d;
  d.t = t;
  d.grid.resize(g.n_cells);
  for (size_t i = 0; i < g.n_cells; ++i) d.grid[i] = g.center(i);
  d.values = g.values;
  return d;
}

// Resample a solution onto another grid (cubic through cell centers), clamping
// negatives and matching the source mass.  Used for domain hand-off.
inline FPGrid fp_regrid(const FPGrid& src, FPGrid target) {
  const double w = src.cell_width();
  const double m_src = src.mass();
  for (size_t i = 0; i < target.n_cells; ++i) {
    const double y = target.center(i);
    double v = 0.0;
    if (y >= src.center(0) && y <= src.center(src.n_cells - 1))
      v = cubic_interp_uniform(src.values, src.center(0), w, y);
    target.values[i] = std::max(0.0, v);
  }
  const double m_tgt = target.mass();
  if (!(m_tgt > 0)) throw GridError("fp_regrid: no overlap between grids");
  const double scale = m_src / m_tgt;
  for (double& v : target.values) v *= scale;
  target.outflow = src.outflow;
  return target;
}

// Density started from a narrow bump at y = 0.01 (the sampler's point-start
// convention), evolved to t_end on the bulk-coverage domain.
inline RadialDensity fp_density_from_origin(double t_end, size_t n_cells = 8000,
                                            double dt = 1e-3) {
  if (!(t_end > 0)) throw DomainError("fp_density_from_origin: need t_end > 0");
  const double y_max = 0.5 * t_end + 12.0 * std::sqrt(t_end) + 10.0;
  FPGrid g = fp_point_initial(fp_grid(y_max, n_cells, dt), 0.01);
  g = fp_evolve(std::move(g), t_end);
  return fp_to_radial(g, t_end);
}

}  // namespace hyperlam
