#pragma once
// Unit tangent bundle of the hyperbolic plane as the group of unimodular
// 2x2 matrices: the identity matrix is the upward unit vector at i, and a
// matrix g is the image of that vector under the isometry g.  All flows are
// right translations, so they commute with every isometry (left action) by
// construction:
//
//   geodesic time t      g . diag(e^{t/2}, e^{-t/2})
//   stable horocycle     g . [[1, s], [0, 1]]
//   unstable horocycle   g . [[1, 0], [s, 1]]
//   affine (a, b)        g . [[a, b], [0, 1/a]],  a > 0
//
// The affine action combines a geodesic translation of time 2*ln(a) with a
// stable horocycle slide of parameter b/a, and the commutation relation
// boost(t) shear(s) boost(-t) = shear(s e^t) makes the stable horocycle
// contract exponentially under the forward geodesic flow.
//
// A tangent vector also carries "stable leaf" coordinates (z, theta): z is
// the base point in the disk and theta in [0, 2pi) marks the forward ideal
// endpoint of its geodesic on the circle.  theta is constant along every
// affine orbit (the affine matrices are exactly the upper triangular ones,
// which fix the endpoint), so these coordinates flatten the stable foliation.

#include <cmath>
#include <complex>

#include "hyperlam/errors.hpp"
#include "hyperlam/geom.hpp"
#include "hyperlam/mat2.hpp"

namespace hyperlam {

struct UnitTangent {
  Mat2 rep = Mat2::identity();
};

inline Mat2 boost(double t) {
  const double e = std::exp(0.5 * t);
  return Mat2{e, 0, 0, 1.0 / e};
}

inline Mat2 shear_stable(double s) { return Mat2{1, s, 0, 1}; }
inline Mat2 shear_unstable(double s) { return Mat2{1, 0, s, 1}; }

inline UnitTangent geodesic_flow(const UnitTangent& u, double t) {
  return UnitTangent{renormalized(u.rep * boost(t))};
}

enum class HorocycleSide { Stable, Unstable };

inline UnitTangent horocycle_flow(const UnitTangent& u, double s, HorocycleSide side) {
  const Mat2 h = (side == HorocycleSide::Stable) ? shear_stable(s) : shear_unstable(s);
  return UnitTangent{renormalized(u.rep * h)};
}

// Right action of the (a, b) affine matrix; requires a > 0.
inline UnitTangent affine_act(const UnitTangent& u, double a, double b) {
  if (!(a > 0) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("affine_act: need finite a > 0");
  return UnitTangent{renormalized(u.rep * Mat2{a, b, 0, 1.0 / a})};
}

inline UnitTangent isometry_act(const Mat2& g, const UnitTangent& u) {
  return UnitTangent{renormalized(g * u.rep)};
}

// ---------------------------------------------------------------------------
// Base point / direction frame
// ---------------------------------------------------------------------------

// angle is the Euclidean direction of the vector in the half-plane chart at
// the base point; the upward vector has angle pi/2.
struct TangentFrame {
  HPoint base;
  double angle = 0;
};

inline TangentFrame frame_of(const UnitTangent& u) {
  const std::complex<double> w = moebius_at_i(u.rep);
  // derivative of the Mobius map at i is 1/(ci+d)^2; it rotates the upward
  // direction i to (2cd + i(d^2 - c^2)) / (c^2+d^2)^2.
  const double c = u.rep.c, d = u.rep.d;
  const double angle = std::atan2(d * d - c * c, 2.0 * c * d);
  return TangentFrame{HPoint{Chart::HalfPlane, w.real(), w.imag()}, angle};
}

inline UnitTangent tangent_at(const HPoint& base, double angle) {
  return UnitTangent{renormalized(translation_to(base) * rotation_about_i(angle - 0.5 * kPi))};
}

// Unit tangent at y along the geodesic through x and y, pointing away from x.
inline UnitTangent radial_tangent(const HPoint& x, const HPoint& y) {
  const double r = distance(x, y);
  if (!(r > 1e-12)) throw DegenerateError("radial_tangent: points coincide");
  const Mat2 T = translation_to(x);
  const HPoint yh = to_halfplane(y);
  const std::complex<double> w = moebius(T.inverse_unimodular(), {yh.u, yh.v});
  // direction of y seen from x = polar angle of w about i
  const double phi = std::atan2(-2.0 * w.real(), std::norm(w) - 1.0);
  return UnitTangent{renormalized(T * rotation_about_i(phi) * boost(r))};
}

// ---------------------------------------------------------------------------
// Stable leaf coordinates
// ---------------------------------------------------------------------------

struct LeafPoint {
  HPoint z;       // base point, disk chart
  double theta;   // forward ideal endpoint as a circle angle in [0, 2pi)
};

inline LeafPoint stable_leaf_coordinates(const UnitTangent& u) {
  const std::complex<double> w = moebius_at_i(u.rep);
  const HPoint z = to_disk(HPoint{Chart::HalfPlane, w.real(), w.imag()});
  const double a = u.rep.a, c = u.rep.c;
  double theta;
  if (c == 0) {
    theta = 0;  // endpoint at infinity maps to circle angle 0
  } else {
    const double f = a / c;  // forward endpoint on the real line
    theta = wrap_angle(std::atan2(-2.0 * f, f * f - 1.0));
  }
  return LeafPoint{z, theta};
}

inline UnitTangent tangent_from_leaf(const LeafPoint& lp) {
  // circle angle -> boundary point of the half-plane (theta = 0 -> infinity;
  // an infinite q propagates correctly through the affine map and atan2).
  const double q = -std::cos(0.5 * lp.theta) / std::sin(0.5 * lp.theta);
  // T = [[sqrt y, x/sqrt y], [0, 1/sqrt y]] is upper triangular, so T^{-1}
  // acts on boundary points affinely: q -> (q - x) / y.
  const Mat2 T = translation_to(lp.z);
  const double x = T.a * T.b, y = T.a * T.a;
  const double qprime = (q - x) / y;
  // tangent at i whose forward endpoint is qprime: rotation by 2*atan2(-1, q')
  const double phi = 2.0 * std::atan2(-1.0, qprime);
  return UnitTangent{renormalized(T * rotation_about_i(phi))};
}

// ---------------------------------------------------------------------------
// Reduction of tangent vectors by a discrete group (base point moved into
// the Dirichlet domain, direction carried along).
// ---------------------------------------------------------------------------

struct ReducedTangent {
  UnitTangent tangent;
  Mat2 deck;  // deck * original = tangent
  int steps = 0;
};

inline ReducedTangent reduce_tangent(const FuchsianGroup& G, const UnitTangent& u) {
  Mat2 M = u.rep;
  int steps = 0;
  const Mat2 deck = detail::reduce_matrix(G, M, steps);
  return ReducedTangent{UnitTangent{M}, deck, steps};
}

}  // namespace hyperlam
