#pragma once
// Poisson-kernel machinery on the disk at flow-box scale: harmonic extension
// of positive boundary measures, recovery of the boundary measure from
// sampled harmonic values (a nonnegativity-constrained discretized inverse
// problem), mollified point evaluation with Richardson extrapolation, and the
// affine conditional-invariance check for product measures k(z,theta) dA dphi.
//
// Conventions fixed here once: the kernel carries the 1/(2pi) normalization,
//
//   k(z, theta) = (1/2pi) (1 - |z|^2) / |z - e^{i theta}|^2,
//
// so its theta-integral is 1 and the extension of the uniform density-one
// measure (total mass 2pi) is the constant 1.  Grid densities live on the
// uniform midpoint grid theta_j = 2pi (j + 1/2) / n; "dz" in the flow-box
// product is the hyperbolic area element dA = 4 dx dy / (1-|z|^2)^2 (the
// Euclidean reading is not affine-invariant; see the affine check below).
//
// The affine action on leaf coordinates (z, theta) is realized through the
// unit tangent bundle: lift with tangent_from_leaf, right-multiply by the
// affine matrix [[a, b], [0, 1/a]], read coordinates back.  This fixes theta
// exactly (the forward endpoint a/c is invariant under right multiplication
// by upper-triangular matrices) and moves z inside its leaf, where it
// preserves k(z, theta) dA(z).  The conditional check integrates a battery of
// compactly supported functions against the product measure before and after
// the action; for exact inputs the gap is pure quadrature error.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hyperlam/csv.hpp"
#include "hyperlam/errors.hpp"
#include "hyperlam/flows.hpp"
#include "hyperlam/geom.hpp"
#include "hyperlam/numerics.hpp"

namespace hyperlam {

// ---------------------------------------------------------------------------
// Boundary measures
// ---------------------------------------------------------------------------

struct BoundaryMeasure {
  enum class Kind { Atoms, GridDensity };
  Kind kind = Kind::Atoms;
  std::vector<std::pair<double, double>> atoms;  // (theta, mass > 0)
  std::vector<double> density;  // nonneg values at theta_j = 2pi(j+1/2)/n

  static BoundaryMeasure from_atoms(std::vector<std::pair<double, double>> list) {
    for (auto& [theta, mass] : list) {
      if (!(mass > 0)) throw DomainError("BoundaryMeasure: atom masses must be positive");
      theta = wrap_angle(theta);
    }
    BoundaryMeasure m;
    m.kind = Kind::Atoms;
    m.atoms = std::move(list);
    return m;
  }
  static BoundaryMeasure from_density(std::vector<double> values) {
    for (double v : values)
      if (!(v >= 0)) throw DomainError("BoundaryMeasure: grid density must be nonnegative");
    BoundaryMeasure m;
    m.kind = Kind::GridDensity;
    m.density = std::move(values);
    return m;
  }
  static BoundaryMeasure uniform(double total_mass, size_t grid_size) {
    return from_density(std::vector<double>(grid_size, total_mass / kTwoPi));
  }

  double grid_step() const { return kTwoPi / double(density.size()); }
  double total_mass() const {
    KahanSum s;
    if (kind == Kind::Atoms)
      for (const auto& [theta, mass] : atoms) s.add(mass);
    else
      for (double v : density) s.add(v * grid_step());
    return s.value();
  }
};

inline void save_boundary_measure(const BoundaryMeasure& m, const std::string& file) {
  if (m.kind == BoundaryMeasure::Kind::Atoms) {
    CsvWriter w(file, "theta,mass");
    for (const auto& [theta, mass] : m.atoms) w.row({fmt17(theta), fmt17(mass)});
  } else {
    CsvWriter w(file, "theta,density");
    const double dt = m.grid_step();
    for (size_t j = 0; j < m.density.size(); ++j)
      w.row({fmt17((double(j) + 0.5) * dt), fmt17(m.density[j])});
  }
}

// ---------------------------------------------------------------------------
// Poisson kernel and harmonic extension
// ---------------------------------------------------------------------------

inline double poisson_kernel(std::complex<double> z, double theta) {
  const double r2 = std::norm(z);
  if (!(r2 < 1.0)) throw DomainError("poisson_kernel: point must lie inside the disk");
  const std::complex<double> e{std::cos(theta), std::sin(theta)};
  return (1.0 - r2) / (kTwoPi * std::norm(z - e));
}

inline double harmonic_extension(const BoundaryMeasure& m, std::complex<double> z) {
  KahanSum s;
  if (m.kind == BoundaryMeasure::Kind::Atoms) {
    for (const auto& [theta, mass] : m.atoms) s.add(mass * poisson_kernel(z, theta));
  } else {
    const double dt = m.grid_step();
    for (size_t j = 0; j < m.density.size(); ++j)
      s.add(m.density[j] * dt * poisson_kernel(z, (double(j) + 0.5) * dt));
  }
  return s.value();
}

// ---------------------------------------------------------------------------
// Wasserstein-1 distance on the circle
// ---------------------------------------------------------------------------

// For measures of equal total mass this is the circular W1: both are binned
// onto a fine grid, and min_c integral |F1 - F2 - c| is attained at the
// median of the CDF difference.
inline double w1_circle(const BoundaryMeasure& a, const BoundaryMeasure& b,
                        size_t fine = 4096) {
  const double dt = kTwoPi / double(fine);
  auto bin = [&](const BoundaryMeasure& m) {
    std::vector<double> cell(fine, 0.0);
    if (m.kind == BoundaryMeasure::Kind::Atoms) {
      for (const auto& [theta, mass] : m.atoms) {
        size_t j = size_t(wrap_angle(theta) / dt);
        if (j >= fine) j = fine - 1;
        cell[j] += mass;
      }
    } else {
      const size_t n = m.density.size();
      for (size_t j = 0; j < fine; ++j) {
        const double theta = (double(j) + 0.5) * dt;
        size_t src = size_t(theta / m.grid_step());
        if (src >= n) src = n - 1;
        cell[j] = m.density[src] * dt;
      }
    }
    return cell;
  };
  const std::vector<double> ca = bin(a), cb = bin(b);
  std::vector<double> diff(fine);
  double acc = 0;
  for (size_t j = 0; j < fine; ++j) {
    acc += ca[j] - cb[j];
    diff[j] = acc;
  }
  std::vector<double> sorted = diff;
  std::nth_element(sorted.begin(), sorted.begin() + fine / 2, sorted.end());
  const double c = sorted[fine / 2];
  double w1 = 0;
  for (double d : diff) w1 += std::abs(d - c);
  return w1 * dt;
}

// ---------------------------------------------------------------------------
// Boundary-measure recovery (nonnegative least squares)
// ---------------------------------------------------------------------------

struct RecoveredMeasure {
  BoundaryMeasure measure;
  double residual = 0;   // ||A x - h||_2 at the solution
  double condition = 0;  // singular-value condition estimate of the design
};

struct RecoveryParams {
  double condition_cap = 1e12;
  size_t max_iterations = 30000;
  double tolerance = 1e-13;
};

namespace detail {

// Largest eigenvalue of the symmetric positive semidefinite m x m matrix G
// by deterministic power iteration.
inline double power_lambda_max(const std::vector<double>& G, size_t m) {
  std::vector<double> v(m, 1.0), w(m);
  double lambda = 0;
  for (int it = 0; it < 300; ++it) {
    for (size_t i = 0; i < m; ++i) {
      double acc = 0;
      for (size_t j = 0; j < m; ++j) acc += G[i * m + j] * v[j];
      w[i] = acc;
    }
    double norm = 0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0)) return 0.0;
    lambda = norm;
    for (size_t i = 0; i < m; ++i) v[i] = w[i] / norm;
  }
  return lambda;
}

// Cholesky factor (lower) of G, or false if G is not positive definite.
inline bool cholesky(std::vector<double>& G, size_t m) {
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double acc = G[i * m + j];
      for (size_t k = 0; k < j; ++k) acc -= G[i * m + k] * G[j * m + k];
      if (i == j) {
        if (!(acc > 0)) return false;
        G[i * m + i] = std::sqrt(acc);
      } else {
        G[i * m + j] = acc / G[j * m + j];
      }
    }
  }
  return true;
}

// Smallest eigenvalue of G via inverse power iteration on its Cholesky factor.
inline double inverse_power_lambda_min(const std::vector<double>& L, size_t m) {
  std::vector<double> v(m, 1.0), w(m);
  double mu = 0;
  for (int it = 0; it < 300; ++it) {
    // solve L L^T w = v
    for (size_t i = 0; i < m; ++i) {
      double acc = v[i];
      for (size_t k = 0; k < i; ++k) acc -= L[i * m + k] * w[k];
      w[i] = acc / L[i * m + i];
    }
    for (size_t i = m; i-- > 0;) {
      double acc = w[i];
      for (size_t k = i + 1; k < m; ++k) acc -= L[k * m + i] * w[k];
      w[i] = acc / L[i * m + i];
    }
    double norm = 0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0)) return 0.0;
    mu = norm;  // approximates 1/lambda_min
    for (size_t i = 0; i < m; ++i) v[i] = w[i] / norm;
  }
  return mu > 0 ? 1.0 / mu : 0.0;
}

}  // namespace detail

inline RecoveredMeasure recover_boundary_measure(
    const std::vector<std::pair<std::complex<double>, double>>& samples,
    size_t grid_size, const RecoveryParams& par = {}) {
  const size_t m = samples.size(), n = grid_size;
  if (m < 2) throw DomainError("recover_boundary_measure: need at least 2 samples");
  if (n < 8) throw GridError("recover_boundary_measure: grid too small");
  const double dt = kTwoPi / double(n);
  std::vector<double> A(m * n);
  std::vector<double> h(m);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j)
      A[i * n + j] = poisson_kernel(samples[i].first, (double(j) + 0.5) * dt) * dt;
    h[i] = samples[i].second;
    if (!(h[i] >= 0)) throw DomainError("recover_boundary_measure: harmonic values must be >= 0");
  }

  // Condition estimate of the design at coarse scale.  The full design is
  // machine-singular for any layout (Poisson coefficients decay like r^|k|,
  // so high harmonics are unobservable from interior samples); what separates
  // usable geometry from clustered samples is whether they independently pin
  // down a coarse density.  We therefore take the design restricted to a
  // 16-cell grid and report the condition of its column Gram: spread layouts
  // sit orders of magnitude below any sensible cap, while (near-)duplicated
  // points make the block singular.
  const size_t nc = std::min<size_t>(16, std::min(n, m));
  const double dtc = kTwoPi / double(nc);
  std::vector<double> B(m * nc);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < nc; ++j)
      B[i * nc + j] = poisson_kernel(samples[i].first, (double(j) + 0.5) * dtc) * dtc;
  std::vector<double> G(nc * nc);
  for (size_t i = 0; i < nc; ++i)
    for (size_t j = 0; j <= i; ++j) {
      double acc = 0;
      for (size_t k = 0; k < m; ++k) acc += B[k * nc + i] * B[k * nc + j];
      G[i * nc + j] = G[j * nc + i] = acc;
    }
  const double lmax_coarse = detail::power_lambda_max(G, nc);
  std::vector<double> L = G;
  double lmin_coarse = 0.0;
  if (detail::cholesky(L, nc)) lmin_coarse = detail::inverse_power_lambda_min(L, nc);
  const double condition = (lmin_coarse > 0)
                               ? std::sqrt(lmax_coarse / lmin_coarse)
                               : std::numeric_limits<double>::infinity();
  if (!(condition <= par.condition_cap))
    throw IllConditionedError(
        "recover_boundary_measure: sample points too clustered (condition estimate "
        "above the configured cap)");

  // FISTA step size needs sigma_max(A)^2 of the full design: power-iterate
  // on the sample Gram AA^T.
  std::vector<double> GA(m * m);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j <= i; ++j) {
      double acc = 0;
      for (size_t k = 0; k < n; ++k) acc += A[i * n + k] * A[j * n + k];
      GA[i * m + j] = GA[j * m + i] = acc;
    }
  const double lmax = detail::power_lambda_max(GA, m);

  // FISTA with nonnegativity projection; fixed step 1/sigma_max(A)^2.
  const double step = 1.0 / lmax;
  std::vector<double> x(n, 0.0), y(n, 0.0), xprev(n, 0.0), r(m), grad(n);
  double t = 1.0;
  for (size_t it = 0; it < par.max_iterations; ++it) {
    for (size_t i = 0; i < m; ++i) {
      double acc = -h[i];
      for (size_t j = 0; j < n; ++j) acc += A[i * n + j] * y[j];
      r[i] = acc;
    }
    for (size_t j = 0; j < n; ++j) {
      double acc = 0;
      for (size_t i = 0; i < m; ++i) acc += A[i * n + j] * r[i];
      grad[j] = acc;
    }
    xprev = x;
    double delta = 0, scale = 1.0;
    for (size_t j = 0; j < n; ++j) {
      x[j] = std::max(0.0, y[j] - step * grad[j]);
      delta = std::max(delta, std::abs(x[j] - xprev[j]));
      scale = std::max(scale, std::abs(x[j]));
    }
    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / tnext;
    for (size_t j = 0; j < n; ++j) y[j] = x[j] + mom * (x[j] - xprev[j]);
    t = tnext;
    if (delta <= par.tolerance * scale) break;
  }

  double res2 = 0;
  for (size_t i = 0; i < m; ++i) {
    double acc = -h[i];
    for (size_t j = 0; j < n; ++j) acc += A[i * n + j] * x[j];
    res2 += acc * acc;
  }
  RecoveredMeasure out;
  out.measure = BoundaryMeasure::from_density(std::move(x));
  out.residual = std::sqrt(res2);
  out.condition = condition;
  return out;
}

inline void save_recovery_report(const RecoveredMeasure& r, const std::string& file) {
  CsvWriter w(file, "stat,value");
  w.row({"residual", fmt17(r.residual)});
  w.row({"condition_estimate", fmt17(r.condition)});
  w.row({"total_mass", fmt17(r.measure.total_mass())});
}

// ---------------------------------------------------------------------------
// Flow-box product measures and quadrature
// ---------------------------------------------------------------------------

struct DiskRegion {
  std::complex<double> center{0, 0};
  double radius = 0;
};

struct FlowBoxMeasure {
  DiskRegion region;        // U, a Euclidean disk strictly inside |z| < 1
  BoundaryMeasure boundary; // the phi factor
};

namespace detail {

inline double hyperbolic_area_weight(std::complex<double> z) {
  const double g = 1.0 - std::norm(z);
  return 4.0 / (g * g);
}

}  // namespace detail

// Midpoint tensor quadrature of integrand(z, theta) * k(z, theta) * dA(z)
// * dphi(theta) over region x S^1.  The theta structure comes from the
// boundary measure itself (atoms exactly; grid densities on their own
// midpoint nodes).  density_tilt, if given, multiplies the density by a
// z-dependent factor (used by the non-invariant negative control).
template <class F>
double flow_box_integral(const FlowBoxMeasure& fb, const F& integrand, size_t nz,
                         int threads = 0,
                         const std::function<double(std::complex<double>)>& density_tilt = {}) {
  const DiskRegion& U = fb.region;
  if (!(U.radius > 0) || !(std::abs(U.center) + U.radius < 1.0))
    throw DomainError("flow_box_integral: region must lie strictly inside the disk");
  if (nz < 2) throw GridError("flow_box_integral: need nz >= 2");
  const double hz = 2.0 * U.radius / double(nz);
  const double rr = U.radius * U.radius;

  // theta slices with their phi-masses and precomputed boundary points
  struct Slice {
    double theta, mass, cos_t, sin_t;
  };
  std::vector<Slice> slices;
  auto add_slice = [&slices](double theta, double mass) {
    slices.push_back({theta, mass, std::cos(theta), std::sin(theta)});
  };
  if (fb.boundary.kind == BoundaryMeasure::Kind::Atoms) {
    for (const auto& [theta, mass] : fb.boundary.atoms) add_slice(theta, mass);
  } else {
    const double dt = fb.boundary.grid_step();
    slices.reserve(fb.boundary.density.size());
    for (size_t j = 0; j < fb.boundary.density.size(); ++j)
      add_slice((double(j) + 0.5) * dt, fb.boundary.density[j] * dt);
  }

  std::vector<double> row_sums(nz, 0.0);
  parallel_for(nz, threads, [&](size_t iy) {
    const double yrel = (double(iy) + 0.5) * hz - U.radius;
    double acc = 0;
    for (size_t ix = 0; ix < nz; ++ix) {
      const double xrel = (double(ix) + 0.5) * hz - U.radius;
      if (xrel * xrel + yrel * yrel >= rr) continue;
      const std::complex<double> z = U.center + std::complex<double>(xrel, yrel);
      const double one_minus = 1.0 - std::norm(z);
      const double wz = detail::hyperbolic_area_weight(z) * hz * hz *
                        (density_tilt ? density_tilt(z) : 1.0);
      for (const Slice& s : slices) {
        const double dx = z.real() - s.cos_t, dy = z.imag() - s.sin_t;
        const double kern = one_minus / (kTwoPi * (dx * dx + dy * dy));
        acc += s.mass * wz * kern * integrand(z, s.theta);
      }
    }
    row_sums[iy] = acc;
  });
  KahanSum total;
  for (double v : row_sums) total.add(v);
  return total.value();
}

// The affine action on stable-leaf coordinates, through the tangent bundle.
inline std::pair<std::complex<double>, double> leaf_affine_action(
    std::complex<double> z, double theta, double a, double b) {
  const UnitTangent u = tangent_from_leaf(LeafPoint{disk_point(z.real(), z.imag()), theta});
  const LeafPoint lp = stable_leaf_coordinates(affine_act(u, a, b));
  return {std::complex<double>(lp.z.u, lp.z.v), lp.theta};
}

// ---------------------------------------------------------------------------
// Affine conditional-invariance check
// ---------------------------------------------------------------------------

using BoxTestFunction = std::function<double(std::complex<double>, double)>;

// Gaps |int f(A(z,theta)) dnu - int f dnu| over the battery.  For an exact
// product measure k dA dphi the gap is pure quadrature error, O(mesh) and
// halving (or better) under refinement; a z-dependent density tilt breaks the
// invariance and the same quadrature reports an order-of-magnitude larger
// gap.  SupportError if any battery member or its pullback fails to vanish
// on the region boundary (sampled ring), i.e. the smallness precondition on
// (a, b) fails.
inline std::vector<double> affine_conditional_check(
    const FlowBoxMeasure& fb, double a, double b,
    const std::vector<BoxTestFunction>& fs, size_t nz = 256, int threads = 0,
    const std::function<double(std::complex<double>)>& density_tilt = {}) {
  if (!(a > 0)) throw DomainError("affine_conditional_check: need a > 0");
  // support precondition: f and f(A(.)) vanish on the region boundary ring
  const size_t ring = 64, nth = 16;
  for (const auto& f : fs) {
    for (size_t i = 0; i < ring; ++i) {
      const double phi = kTwoPi * double(i) / double(ring);
      const std::complex<double> z =
          fb.region.center +
          std::complex<double>(fb.region.radius * std::cos(phi),
                               fb.region.radius * std::sin(phi)) *
              0.999;
      for (size_t j = 0; j < nth; ++j) {
        const double theta = kTwoPi * (double(j) + 0.5) / double(nth);
        const auto [za, ta] = leaf_affine_action(z, theta, a, b);
        if (std::abs(f(z, theta)) > 1e-12 || std::abs(f(za, ta)) > 1e-12)
          throw SupportError(
              "affine_conditional_check: battery support reaches the region boundary "
              "under the action; shrink (a, b) or the supports");
      }
    }
  }
  std::vector<double> gaps;
  gaps.reserve(fs.size());
  for (const auto& f : fs) {
    const double before = flow_box_integral(fb, f, nz, threads, density_tilt);
    const double after = flow_box_integral(
        fb,
        [&](std::complex<double> z, double theta) {
          const auto [za, ta] = leaf_affine_action(z, theta, a, b);
          return f(za, ta);
        },
        nz, threads, density_tilt);
    gaps.push_back(std::abs(after - before));
  }
  return gaps;
}

// A fixed battery of compactly supported C^1 functions on U x S^1 whose
// supports keep a margin from the region boundary (fraction of the radius).
inline std::vector<BoxTestFunction> box_test_battery(const DiskRegion& U) {
  auto bump = [](double q2) {
    if (q2 >= 1.0) return 0.0;
    const double w = 1.0 - q2;
    return w * w;
  };
  const double R = U.radius;
  const std::complex<double> c = U.center;
  std::vector<BoxTestFunction> fs;
  fs.push_back([=](std::complex<double> z, double) {
    return bump(std::norm((z - c) / (0.60 * R)));
  });
  fs.push_back([=](std::complex<double> z, double theta) {
    return bump(std::norm((z - c) / (0.55 * R))) * std::cos(theta);
  });
  fs.push_back([=](std::complex<double> z, double theta) {
    const std::complex<double> c2 = c + std::complex<double>(0.15 * R, -0.1 * R);
    return bump(std::norm((z - c2) / (0.5 * R))) * std::sin(2.0 * theta + 3.0 * (z.imag() - c.imag()));
  });
  fs.push_back([=](std::complex<double> z, double theta) {
    const std::complex<double> c3 = c + std::complex<double>(-0.12 * R, 0.08 * R);
    return bump(std::norm((z - c3) / (0.45 * R))) * (0.5 + 0.3 * std::cos(theta - 1.0));
  });
  return fs;
}

// ---------------------------------------------------------------------------
// Mollified point values
// ---------------------------------------------------------------------------

struct MollifiedPointValue {
  std::vector<double> values;  // one bump average per width
  double extrapolated = 0;     // Richardson estimate from the last two widths
};

// G is a functional returning the measure's integral of a z-only test
// function.  Each width w uses the C^1 bump (1 - |z-z0|^2/w^2)^2 normalized
// to unit mass in the hyperbolic area element; the sequence converges to the
// conditional value int k(z0, theta) dphi(theta) at rate O(w^2), which the
// extrapolation accelerates.
inline MollifiedPointValue mollified_point_values(
    const std::function<double(const std::function<double(std::complex<double>)>&)>& G,
    std::complex<double> z0, const std::vector<double>& widths) {
  if (widths.empty()) throw DomainError("mollified_point_values: need at least one width");
  for (size_t i = 0; i + 1 < widths.size(); ++i)
    if (!(widths[i] > widths[i + 1]))
      throw DomainError("mollified_point_values: widths must decrease");
  MollifiedPointValue out;
  for (double w : widths) {
    if (!(w > 0)) throw DomainError("mollified_point_values: widths must be positive");
    // normalization in hyperbolic area by fine local midpoint quadrature
    const size_t nq = 400;
    const double hq = 2.0 * w / double(nq);
    double zmass = 0;
    for (size_t iy = 0; iy < nq; ++iy) {
      const double y = (double(iy) + 0.5) * hq - w;
      for (size_t ix = 0; ix < nq; ++ix) {
        const double x = (double(ix) + 0.5) * hq - w;
        const double q2 = (x * x + y * y) / (w * w);
        if (q2 >= 1.0) continue;
        const double bump = (1.0 - q2) * (1.0 - q2);
        zmass += bump * detail::hyperbolic_area_weight(z0 + std::complex<double>(x, y));
      }
    }
    zmass *= hq * hq;
    const double norm = 1.0 / zmass;
    out.values.push_back(G([=](std::complex<double> z) {
      const double q2 = std::norm(z - z0) / (w * w);
      if (q2 >= 1.0) return 0.0;
      const double bump = (1.0 - q2) * (1.0 - q2);
      return norm * bump;
    }));
  }
  if (out.values.size() == 1) {
    out.extrapolated = out.values[0];
  } else {
    const size_t k = out.values.size() - 1;
    const double rho = widths[k - 1] / widths[k];
    out.extrapolated =
        (rho * rho * out.values[k] - out.values[k - 1]) / (rho * rho - 1.0);
  }
  return out;
}

}  // namespace hyperlam
