// Boundary measures on the circle: Poisson kernel facts, harmonic extensions,
// circular W1, nonnegative recovery from interior samples, flow-box product
// quadrature with the affine conditional-invariance check, and mollified
// point values.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "hyperlam/herglotz.hpp"

using namespace hyperlam;
using Catch::Approx;

namespace {
using Samples = std::vector<std::pair<std::complex<double>, double>>;

// Interior sampling layout used by the recovery checks: half the points on
// the circle r = 0.5, half on r = 0.85 with an incommensurate phase.
Samples two_circle_samples(const BoundaryMeasure& truth, size_t count, double phase) {
  Samples s;
  const size_t inner = count / 2, outer = count - inner;
  for (size_t i = 0; i < inner; ++i) {
    const double a = kTwoPi * double(i) / double(inner);
    const std::complex<double> z{0.5 * std::cos(a), 0.5 * std::sin(a)};
    s.push_back({z, harmonic_extension(truth, z)});
  }
  for (size_t i = 0; i < outer; ++i) {
    const double a = kTwoPi * (double(i) + phase) / double(outer);
    const std::complex<double> z{0.85 * std::cos(a), 0.85 * std::sin(a)};
    s.push_back({z, harmonic_extension(truth, z)});
  }
  return s;
}
}  // namespace

TEST_CASE("Poisson kernel center value and normalization", "[herglotz]") {
  for (double theta : {0.0, 1.1, 3.9, 6.1})
    CHECK(poisson_kernel({0, 0}, theta) ==
          Approx(1.0 / kTwoPi).margin(1e-15));
  // midpoint integral over theta is 1 for any interior point
  for (std::complex<double> z : {std::complex<double>{0.3, 0.2},
                                 std::complex<double>{-0.7, 0.1},
                                 std::complex<double>{0.05, -0.9}}) {
    const size_t n = 4096;
    KahanSum s;
    for (size_t j = 0; j < n; ++j)
      s.add(poisson_kernel(z, kTwoPi * (double(j) + 0.5) / double(n)));
    CHECK(s.value() * kTwoPi / double(n) == Approx(1.0).margin(1e-12));
  }
  CHECK_THROWS_AS(poisson_kernel({1.0, 0.0}, 0.3), DomainError);
  CHECK_THROWS_AS(poisson_kernel({0.8, 0.7}, 0.3), DomainError);
}

TEST_CASE("harmonic extension coherence", "[herglotz]") {
  const BoundaryMeasure uni = BoundaryMeasure::uniform(kTwoPi, 256);
  for (std::complex<double> z : {std::complex<double>{0.0, 0.0},
                                 std::complex<double>{0.5, -0.3},
                                 std::complex<double>{-0.85, 0.2}})
    CHECK(harmonic_extension(uni, z) == Approx(1.0).margin(1e-10));

  const BoundaryMeasure atom = BoundaryMeasure::from_atoms({{2.0, 1.0}});
  const std::complex<double> zt{0.4, 0.1};
  CHECK(harmonic_extension(atom, zt) ==
        Approx(poisson_kernel(zt, 2.0)).margin(1e-15));
  CHECK(harmonic_extension(atom, {0, 0}) == Approx(1.0 / kTwoPi).margin(1e-16));

  const BoundaryMeasure pair = BoundaryMeasure::from_atoms({{1.0, 0.3}, {4.0, 0.7}});
  CHECK(harmonic_extension(pair, {0, 0}) ==
        Approx(pair.total_mass() / kTwoPi).margin(1e-15));
}

TEST_CASE("boundary measure constructors", "[herglotz]") {
  CHECK(BoundaryMeasure::uniform(kTwoPi, 64).total_mass() ==
        Approx(kTwoPi).epsilon(1e-12));
  const BoundaryMeasure wrapped = BoundaryMeasure::from_atoms({{7.0, 2.0}});
  CHECK(wrapped.atoms[0].first == Approx(7.0 - kTwoPi).margin(1e-12));
  CHECK(wrapped.total_mass() == 2.0);
  CHECK_THROWS_AS(BoundaryMeasure::from_atoms({{1.0, -0.5}}), DomainError);
  CHECK_THROWS_AS(BoundaryMeasure::from_density({0.5, -0.1}), DomainError);
}

TEST_CASE("circular W1 distances", "[herglotz]") {
  const BoundaryMeasure a1 = BoundaryMeasure::from_atoms({{1.0, 1.0}});
  const BoundaryMeasure a2 = BoundaryMeasure::from_atoms({{1.3, 1.0}});
  const BoundaryMeasure a3 = BoundaryMeasure::from_atoms({{0.1, 1.0}});
  const BoundaryMeasure a4 = BoundaryMeasure::from_atoms({{6.2, 1.0}});
  CHECK(w1_circle(a1, a1) == 0.0);
  CHECK(w1_circle(a1, a2) == Approx(0.3).margin(2e-3));
  // the short way around the circle wins
  CHECK(w1_circle(a3, a4) == Approx(0.1 + kTwoPi - 6.2).margin(2e-3));
}

TEST_CASE("uniform boundary density is recovered from two sample circles",
          "[herglotz]") {
  const BoundaryMeasure uni = BoundaryMeasure::uniform(1.0, 256);
  const RecoveredMeasure rec =
      recover_boundary_measure(two_circle_samples(uni, 64, 0.37), 256);
  CHECK(w1_circle(rec.measure, uni) <= 0.02);
  CHECK(rec.measure.total_mass() == Approx(1.0).margin(0.01));
  CHECK(rec.condition < 100.0);
  CHECK(rec.residual < 1e-5);
}

TEST_CASE("two boundary atoms are recovered from interior samples", "[herglotz]") {
  const BoundaryMeasure truth = BoundaryMeasure::from_atoms({{1.0, 0.3}, {4.0, 0.7}});
  const RecoveredMeasure rec =
      recover_boundary_measure(two_circle_samples(truth, 128, 0.41), 256);
  CHECK(w1_circle(rec.measure, truth) <= 0.05);
  CHECK(rec.measure.total_mass() == Approx(1.0).margin(0.01));
  CHECK(rec.condition < 100.0);
}

TEST_CASE("zero samples recover the zero measure", "[herglotz]") {
  Samples s = two_circle_samples(BoundaryMeasure::uniform(1.0, 64), 32, 0.37);
  for (auto& zh : s) zh.second = 0.0;
  const RecoveredMeasure rec = recover_boundary_measure(s, 64);
  for (double v : rec.measure.density) REQUIRE(v == 0.0);
  CHECK(rec.residual == 0.0);
}

TEST_CASE("clustered samples are rejected as ill-conditioned", "[herglotz]") {
  Samples bad;
  for (int i = 0; i < 16; ++i)
    bad.push_back({{0.5 + 1e-9 * i, 0.0}, 1.0});
  CHECK_THROWS_AS(recover_boundary_measure(bad, 64), IllConditionedError);
}

TEST_CASE("recovery guards", "[herglotz]") {
  const Samples one = {{{0.1, 0.1}, 0.5}};
  CHECK_THROWS_AS(recover_boundary_measure(one, 64), DomainError);
  Samples neg = two_circle_samples(BoundaryMeasure::uniform(1.0, 64), 16, 0.37);
  neg[0].second = -0.1;
  CHECK_THROWS_AS(recover_boundary_measure(neg, 4), GridError);
  CHECK_THROWS_AS(recover_boundary_measure(neg, 64), DomainError);
}

TEST_CASE("flow-box quadrature integrates the product measure", "[herglotz]") {
  // Constant integrand: the theta-average of the kernel against a uniform
  // measure of mass M is M/(2 pi) at every z, so the integral reduces to
  // M/(2 pi) times the hyperbolic area of the region.
  const FlowBoxMeasure fb{DiskRegion{{0.1, -0.05}, 0.3},
                          BoundaryMeasure::uniform(2.0, 64)};
  const double got = flow_box_integral(
      fb, [](std::complex<double>, double) { return 1.0; }, 512);
  // hyperbolic area of a Euclidean disk, by fine reference quadrature
  double area = 0;
  const size_t n = 2048;
  const double h = 2.0 * fb.region.radius / double(n);
  for (size_t iy = 0; iy < n; ++iy) {
    const double y = (double(iy) + 0.5) * h - fb.region.radius;
    for (size_t ix = 0; ix < n; ++ix) {
      const double x = (double(ix) + 0.5) * h - fb.region.radius;
      if (x * x + y * y >= fb.region.radius * fb.region.radius) continue;
      const std::complex<double> z = fb.region.center + std::complex<double>(x, y);
      const double g = 1.0 - std::norm(z);
      area += 4.0 / (g * g) * h * h;
    }
  }
  CHECK(got == Approx(2.0 * area / kTwoPi).epsilon(5e-3));
  CHECK_THROWS_AS(flow_box_integral(
                      FlowBoxMeasure{DiskRegion{{0.5, 0.5}, 0.8},
                                     BoundaryMeasure::uniform(1.0, 8)},
                      [](std::complex<double>, double) { return 1.0; }, 16),
                  DomainError);
}

TEST_CASE("affine action on leaf coordinates preserves the boundary angle",
          "[herglotz]") {
  const auto [za, ta] = leaf_affine_action({0.1, 0.05}, 1.9, 1.05, 0.02);
  CHECK(ta == 1.9);
  CHECK(std::abs(za - std::complex<double>(0.1, 0.05)) > 1e-4);
  // identity action round-trips the coordinates
  const auto [zi, ti] = leaf_affine_action({0.1, 0.05}, 1.9, 1.0, 0.0);
  CHECK(std::abs(zi - std::complex<double>(0.1, 0.05)) <= 1e-10);
  CHECK(ti == 1.9);
  CHECK_THROWS_AS(leaf_affine_action({0.1, 0.05}, 1.9, -1.0, 0.0), DomainError);
}

TEST_CASE("product measures are conditionally invariant under small affine maps",
          "[herglotz]") {
  const FlowBoxMeasure fb{DiskRegion{{0.0, 0.0}, 0.35},
                          BoundaryMeasure::uniform(1.0, 128)};
  const auto battery = box_test_battery(fb.region);
  REQUIRE(battery.size() == 4);

  const auto gaps = affine_conditional_check(fb, 1.05, 0.02, battery, 64);
  double invariant_gap = 0;
  for (double g : gaps) invariant_gap = std::max(invariant_gap, g);
  CHECK(invariant_gap < 1e-3);

  // identity action: gaps at rounding level
  for (double g : affine_conditional_check(fb, 1.0, 0.0, battery, 64))
    CHECK(g <= 1e-12);

  // a z-dependent density tilt breaks the product structure detectably
  const auto tilt = [R = fb.region.radius](std::complex<double> z) {
    return 1.0 + 0.2 * std::sin(kPi * z.imag() / R);
  };
  const auto tilted = affine_conditional_check(fb, 1.05, 0.02, battery, 64, 0, tilt);
  double control_gap = 0;
  for (double g : tilted) control_gap = std::max(control_gap, g);
  CHECK(control_gap >= 10.0 * invariant_gap);
}

TEST_CASE("battery supports must clear the region boundary", "[herglotz]") {
  const FlowBoxMeasure fb{DiskRegion{{0.0, 0.0}, 0.35},
                          BoundaryMeasure::uniform(1.0, 32)};
  const std::vector<BoxTestFunction> constant
      {[](std::complex<double>, double) { return 1.0; }};
  CHECK_THROWS_AS(affine_conditional_check(fb, 1.05, 0.02, constant, 16),
                  SupportError);
}

TEST_CASE("mollified point values converge to the conditional value",
          "[herglotz]") {
  const FlowBoxMeasure fb{DiskRegion{{0.0, 0.0}, 0.35},
                          BoundaryMeasure::uniform(kTwoPi, 128)};
  const auto G = [&fb](const std::function<double(std::complex<double>)>& f) {
    return flow_box_integral(
        fb, [&f](std::complex<double> z, double) { return f(z); }, 256);
  };
  const std::complex<double> z0{0.05, 0.02};
  const MollifiedPointValue u = mollified_point_values(G, z0, {0.16, 0.08});
  CHECK(u.extrapolated == Approx(1.0).margin(1e-3));

  const FlowBoxMeasure fba{DiskRegion{{0.0, 0.0}, 0.35},
                           BoundaryMeasure::from_atoms({{2.0, 1.0}})};
  const auto Ga = [&fba](const std::function<double(std::complex<double>)>& f) {
    return flow_box_integral(
        fba, [&f](std::complex<double> z, double) { return f(z); }, 256);
  };
  const MollifiedPointValue v = mollified_point_values(Ga, z0, {0.16, 0.08});
  CHECK(v.extrapolated == Approx(poisson_kernel(z0, 2.0)).margin(1e-3));

  // a single width reports its own value unextrapolated
  const MollifiedPointValue single = mollified_point_values(G, z0, {0.16});
  CHECK(single.extrapolated == single.values[0]);

  CHECK_THROWS_AS(mollified_point_values(G, z0, {}), DomainError);
  CHECK_THROWS_AS(mollified_point_values(G, z0, {0.08, 0.16}), DomainError);
}
