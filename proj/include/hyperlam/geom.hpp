#pragma once
// Hyperbolic plane in three interchangeable charts:
//
//   Polar      (r, theta)   metric ds^2 = dr^2 + sinh(r)^2 dtheta^2, r >= 0
//   Disk       z = x + iy   |z| < 1 (Poincare disk)
//   HalfPlane  w = x + iy   y > 0
//
// conversions:  disk z = tanh(r/2) e^{i theta},  w = i (1+z)/(1-z),
//               z = (w - i)/(w + i).   Origin <-> 0 <-> i.
//
// Distances are always evaluated through the half-plane formula
//   d(w1, w2) = arccosh(1 + |w1-w2|^2 / (2 y1 y2)),
// which stays accurate near the ideal boundary where the disk formula's
// (1-|z|^2) factors cancel catastrophically.  The Polar -> HalfPlane
// conversion is written against the gap 1 - tanh(r/2) = 2e^{-r}/(1+e^{-r})
// so points with r ~ 50 (far beyond where tanh rounds to 1) survive intact.
//
// A discrete group of isometries is a list of unimodular real matrices
// acting by Mobius maps on the half-plane.  Reduction to the Dirichlet
// domain about the origin is greedy descent on d(origin, .) over the
// generators and their inverses; the objective is evaluated through the
// identity cosh d(i, g.i) = ||g||_F^2 / 2, which involves only sums of
// squares and is stable for any reachable point.

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlam/errors.hpp"
#include "hyperlam/mat2.hpp"
#include "hyperlam/numerics.hpp"

namespace hyperlam {

enum class Chart { Polar, Disk, HalfPlane };

struct HPoint {
  Chart chart = Chart::HalfPlane;
  double u = 0, v = 1;  // Polar: (r, theta); Disk/HalfPlane: (x, y)
};

inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  return t;
}

inline HPoint polar_point(double r, double theta) {
  if (!(r >= 0) || !std::isfinite(r)) throw DomainError("polar_point: need r >= 0");
  return HPoint{Chart::Polar, r, wrap_angle(theta)};
}

inline HPoint disk_point(double x, double y) {
  if (!(x * x + y * y < 1.0)) throw DomainError("disk_point: need |z| < 1");
  return HPoint{Chart::Disk, x, y};
}

inline HPoint disk_point(std::complex<double> z) { return disk_point(z.real(), z.imag()); }

inline HPoint halfplane_point(double x, double y) {
  if (!(y > 0) || !std::isfinite(y) || !std::isfinite(x))
    throw DomainError("halfplane_point: need Im w > 0");
  return HPoint{Chart::HalfPlane, x, y};
}

inline HPoint origin() { return HPoint{Chart::Disk, 0, 0}; }

namespace detail {

// 1 - tanh(r/2), evaluated without cancellation.
inline double boundary_gap(double r) {
  const double e = std::exp(-r);
  return 2.0 * e / (1.0 + e);
}

struct HalfPlaneXY {
  double x, y;
};

inline HalfPlaneXY polar_to_halfplane(double r, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double g = boundary_gap(r);           // 1 - |z|
  const double t = 1.0 - g;                   // |z| = tanh(r/2)
  const double one_minus_c = 2.0 * std::sin(0.5 * theta) * std::sin(0.5 * theta);
  // |1 - z|^2 with z = t e^{i theta}, grouped so the r -> inf limit is exact.
  const double re_1mz = one_minus_c + g * c;
  const double im_1mz = -s * t;
  const double B = re_1mz * re_1mz + im_1mz * im_1mz;
  const double one_minus_zz = g * (2.0 - g);  // 1 - |z|^2
  return {-2.0 * s * t / B, one_minus_zz / B};
}

}  // namespace detail

inline HPoint to_halfplane(const HPoint& p) {
  switch (p.chart) {
    case Chart::HalfPlane:
      return p;
    case Chart::Polar: {
      const auto w = detail::polar_to_halfplane(p.u, p.v);
      return HPoint{Chart::HalfPlane, w.x, w.y};
    }
    case Chart::Disk: {
      const double zz = p.u * p.u + p.v * p.v;
      const double B = (1 - p.u) * (1 - p.u) + p.v * p.v;  // |1-z|^2
      return HPoint{Chart::HalfPlane, -2.0 * p.v / B, (1.0 - zz) / B};
    }
  }
  throw DomainError("to_halfplane: bad chart");
}

inline HPoint to_polar(const HPoint& p) {
  switch (p.chart) {
    case Chart::Polar:
      return p;
    case Chart::Disk: {
      const double m = std::hypot(p.u, p.v);
      if (m == 0) return HPoint{Chart::Polar, 0, 0};
      const double r = std::log((1.0 + m) / (1.0 - m));
      return HPoint{Chart::Polar, r, wrap_angle(std::atan2(p.v, p.u))};
    }
    case Chart::HalfPlane: {
      const double x = p.u, y = p.v;
      const double q = (x * x + (y - 1) * (y - 1)) / (2.0 * y);
      const double r = std::acosh(1.0 + q);
      if (r < 1e-15) return HPoint{Chart::Polar, r, 0};
      // arg((w-i)/(w+i)) = atan2(-2x, |w|^2 - 1)
      return HPoint{Chart::Polar, r, wrap_angle(std::atan2(-2.0 * x, x * x + y * y - 1.0))};
    }
  }
  throw DomainError("to_polar: bad chart");
}

inline HPoint to_disk(const HPoint& p) {
  switch (p.chart) {
    case Chart::Disk:
      return p;
    case Chart::Polar: {
      const double t = std::tanh(0.5 * p.u);
      if (!(t < 1.0))
        throw DomainError("to_disk: point too far from origin for the disk chart");
      return HPoint{Chart::Disk, t * std::cos(p.v), t * std::sin(p.v)};
    }
    case Chart::HalfPlane: {
      const std::complex<double> w(p.u, p.v);
      const std::complex<double> z = (w - std::complex<double>(0, 1)) /
                                     (w + std::complex<double>(0, 1));
      if (!(std::norm(z) < 1.0))
        throw DomainError("to_disk: point too close to the boundary for the disk chart");
      return HPoint{Chart::Disk, z.real(), z.imag()};
    }
  }
  throw DomainError("to_disk: bad chart");
}

inline HPoint to_chart(const HPoint& p, Chart chart) {
  switch (chart) {
    case Chart::Polar:
      return to_polar(p);
    case Chart::Disk:
      return to_disk(p);
    case Chart::HalfPlane:
      return to_halfplane(p);
  }
  throw DomainError("to_chart: bad chart");
}

inline double distance(const HPoint& p1, const HPoint& p2) {
  const HPoint a = to_halfplane(p1), b = to_halfplane(p2);
  const double dx = a.u - b.u, dy = a.v - b.v;
  return std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * a.v * b.v));
}

// Circumference of the metric circle of radius r about any point.
inline double circle_length(double r) {
  if (!(r >= 0)) throw DomainError("circle_length: need r >= 0");
  return kTwoPi * std::sinh(r);
}

// Isometry moving i to the given half-plane point (w = x + iy -> y*w + x).
inline Mat2 translation_to(const HPoint& p) {
  const HPoint w = to_halfplane(p);
  const double sy = std::sqrt(w.v);
  return Mat2{sy, w.u / sy, 0, 1.0 / sy};
}

// Rotation by angle phi about i (derivative at i multiplies tangent vectors
// by e^{i phi}; corresponds to rotation by +phi about the disk origin).
inline Mat2 rotation_about_i(double phi) {
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  return Mat2{c, s, -s, c};
}

inline HPoint apply_moebius(const Mat2& m, const HPoint& p) {
  const HPoint hp = to_halfplane(p);
  const std::complex<double> w2 = moebius(m, {hp.u, hp.v});
  if (!(w2.imag() > 0)) throw DomainError("apply_moebius: image left the half-plane");
  return to_chart(HPoint{Chart::HalfPlane, w2.real(), w2.imag()}, p.chart);
}

// ---------------------------------------------------------------------------
// Discrete groups and Dirichlet reduction
// ---------------------------------------------------------------------------

struct FuchsianGroup {
  std::vector<Mat2> gens;
  std::vector<Mat2> sides;    // gens then inverses; fixed order = tie-break order
  double domain_radius = 0;   // covering radius of the Dirichlet domain (0 = unknown)
  int reduction_cap = 20000;
};

inline FuchsianGroup make_group(std::vector<Mat2> gens, double domain_radius,
                                int reduction_cap = 20000) {
  if (gens.empty()) throw DomainError("make_group: no generators");
  FuchsianGroup g;
  for (auto& m : gens) {
    if (std::abs(m.det() - 1.0) > 1e-9)
      throw DomainError("make_group: generator determinant differs from 1");
    m = renormalized(m);
  }
  g.gens = std::move(gens);
  g.sides = g.gens;
  for (const auto& m : g.gens) g.sides.push_back(m.inverse_unimodular());
  g.domain_radius = domain_radius;
  g.reduction_cap = reduction_cap;
  return g;
}

// Side-pairing translations of the regular hyperbolic octagon (genus-2
// surface): four translations of length 2*arccosh(1+sqrt 2) along the axes
// through the origin at angles k*pi/4.  The octagon is the Dirichlet domain
// about the origin; its covering radius is arccosh(3+2*sqrt 2).
inline FuchsianGroup octagon_group() {
  const double coshhalf = 1.0 + std::sqrt(2.0);                  // cosh(l/2)
  const double sinhhalf = std::sqrt(coshhalf * coshhalf - 1.0);  // sinh(l/2)
  const Mat2 boost{coshhalf + sinhhalf, 0, 0, coshhalf - sinhhalf};
  std::vector<Mat2> gens;
  for (int k = 0; k < 4; ++k) {
    const Mat2 rot = rotation_about_i(k * kPi / 4.0);
    gens.push_back(renormalized(rot * boost * rot.inverse_unimodular()));
  }
  return make_group(std::move(gens), std::acosh(3.0 + 2.0 * std::sqrt(2.0)));
}

struct ReducedPoint {
  HPoint point;
  Mat2 deck;  // deck * original = point
  int steps = 0;
};

// cosh of the distance from the origin to (position matrix).i
inline double cosh_dist_origin(const Mat2& m) { return 0.5 * m.frob2(); }

namespace detail {

// Greedy descent core shared by the point and tangent reductions: returns the
// accumulated deck transformation for position matrix M.
inline Mat2 reduce_matrix(const FuchsianGroup& G, Mat2& M, int& steps) {
  Mat2 deck = Mat2::identity();
  double cur = M.frob2();
  steps = 0;
  for (;;) {
    int best = -1;
    double bestval = cur;
    for (size_t j = 0; j < G.sides.size(); ++j) {
      const double cand = (G.sides[j] * M).frob2();
      if (cand < bestval * (1.0 - 1e-14)) {
        bestval = cand;
        best = int(j);
      }
    }
    if (best < 0) return deck;
    M = renormalized(G.sides[best] * M);
    deck = G.sides[best] * deck;
    cur = M.frob2();
    if (++steps > G.reduction_cap)
      throw IterationCapExceeded("reduce: no fixed point within the iteration cap");
  }
}

}  // namespace detail

inline ReducedPoint reduce_to_domain(const FuchsianGroup& G, const HPoint& p) {
  Mat2 M = translation_to(p);
  int steps = 0;
  const Mat2 deck = detail::reduce_matrix(G, M, steps);
  if (steps == 0) return ReducedPoint{p, Mat2::identity(), 0};
  const std::complex<double> w = moebius_at_i(M);
  const HPoint q = to_chart(HPoint{Chart::HalfPlane, w.real(), w.imag()}, p.chart);
  return ReducedPoint{q, deck, steps};
}

// ---------------------------------------------------------------------------
// Group file format: one generator per line, "a b c d", '#' starts a comment.
// ---------------------------------------------------------------------------

inline FuchsianGroup read_group(std::istream& in, double domain_radius,
                                int reduction_cap = 20000) {
  std::vector<Mat2> gens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double a, b, c, d;
    if (ss >> a >> b >> c >> d) {
      gens.push_back(Mat2{a, b, c, d});
    } else {
      std::istringstream check(line);
      std::string leftover;
      if (check >> leftover)
        throw ConfigError("group file: malformed generator line: " + line);
    }
  }
  if (gens.empty()) throw ConfigError("group file: no generators found");
  return make_group(std::move(gens), domain_radius, reduction_cap);
}

inline FuchsianGroup load_group(const std::string& path, double domain_radius,
                                int reduction_cap = 20000) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open group file: " + path);
  return read_group(in, domain_radius, reduction_cap);
}

inline void write_group(std::ostream& out, const FuchsianGroup& G) {
  char buf[200];
  for (const auto& m : G.gens) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", m.a, m.b, m.c, m.d);
    out << buf;
  }
}

}  // namespace hyperlam
