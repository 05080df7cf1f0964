#pragma once
// Real 2x2 matrices, used throughout as elements of SL(2,R) acting on the
// upper half-plane by Mobius transformations.  A matrix and its negative
// represent the same isometry, so comparisons are made modulo sign.
//
// Handy identity used for distance bookkeeping: for unimodular g,
//   cosh d(i, g.i) = ||g||_F^2 / 2,
// since (ac+bd)^2 + (ad-bc)^2 = (a^2+b^2)(c^2+d^2).

#include <cmath>
#include <complex>

#include "hyperlam/errors.hpp"

namespace hyperlam {

struct Mat2 {
  double a = 1, b = 0, c = 0, d = 1;  // row-major [[a,b],[c,d]]

  static constexpr Mat2 identity() { return Mat2{1, 0, 0, 1}; }

  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  double frob2() const { return a * a + b * b + c * c + d * d; }

  Mat2 inverse() const {
    const double dt = det();
    if (dt == 0.0) throw DegenerateError("Mat2::inverse: singular matrix");
    return Mat2{d / dt, -b / dt, -c / dt, a / dt};
  }

  // Adjugate == inverse for det-1 matrices; avoids the division noise.
  Mat2 inverse_unimodular() const { return Mat2{d, -b, -c, a}; }

  friend Mat2 operator*(const Mat2& l, const Mat2& r) {
    return Mat2{l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
                l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }

  friend Mat2 operator-(const Mat2& l, const Mat2& r) {
    return Mat2{l.a - r.a, l.b - r.b, l.c - r.c, l.d - r.d};
  }

  friend Mat2 operator+(const Mat2& l, const Mat2& r) {
    return Mat2{l.a + r.a, l.b + r.b, l.c + r.c, l.d + r.d};
  }
};

// Rescale so det == 1 (requires det > 0; flows and deck transformations
// preserve orientation, so a nonpositive determinant is always a bug or a
// degenerate input).
inline Mat2 renormalized(const Mat2& m) {
  const double dt = m.det();
  if (!(dt > 0.0)) throw DegenerateError("renormalized: determinant not positive");
  const double s = 1.0 / std::sqrt(dt);
  return Mat2{m.a * s, m.b * s, m.c * s, m.d * s};
}

// Mobius action on the open upper half-plane.
inline std::complex<double> moebius(const Mat2& m, std::complex<double> w) {
  return (m.a * w + m.b) / (m.c * w + m.d);
}

// g.i as a half-plane point, written out to avoid complex-division noise.
inline std::complex<double> moebius_at_i(const Mat2& m) {
  const double q = m.c * m.c + m.d * m.d;
  return {(m.a * m.c + m.b * m.d) / q, m.det() / q};
}

// Frobenius distance between the projective classes (min over the sign).
inline double frob_dist_mod_sign(const Mat2& x, const Mat2& y) {
  auto norm = [](const Mat2& m) {
    return std::sqrt(m.frob2());
  };
  return std::min(norm(x - y), norm(x + y));
}

}  // namespace hyperlam
