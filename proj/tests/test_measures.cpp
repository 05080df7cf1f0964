// Empirical tangent measures on the genus-2 quotient: deck-ball bookkeeping,
// quotient test functions, time-averaged means, and flow-invariance gaps.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hyperlam/kernel.hpp"
#include "hyperlam/measures.hpp"

using namespace hyperlam;
using Catch::Approx;

namespace {
const FuchsianGroup& group() {
  static const FuchsianGroup G = octagon_group();
  return G;
}

UnitTangent tangent_at(double r, double theta, double psi) {
  return UnitTangent{translation_to(polar_point(r, theta)) * rotation_about_i(psi)};
}

double diff_mod_sign(const Mat2& a, const Mat2& b) {
  auto gap = [](const Mat2& m, const Mat2& n) {
    return std::max(std::max(std::abs(m.a - n.a), std::abs(m.b - n.b)),
                    std::max(std::abs(m.c - n.c), std::abs(m.d - n.d)));
  };
  const Mat2 neg{-b.a, -b.b, -b.c, -b.d};
  return std::min(gap(a, b), gap(a, neg));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

TEST_CASE("deck ball of word length two has 65 elements", "[measures]") {
  CHECK(deck_ball_two(group()).size() == 65);
}

TEST_CASE("standard battery composition", "[measures]") {
  const auto fs = standard_battery(group());
  REQUIRE(fs.size() == 8);
  size_t bumps = 0, harmonics = 0;
  for (const auto& f : fs)
    (f.kind == TestKind::Bump ? bumps : harmonics) += 1;
  CHECK(bumps == 5);
  CHECK(harmonics == 3);
}

TEST_CASE("battery functions are deck invariant", "[measures]") {
  const FuchsianGroup& G = group();
  const auto fs = standard_battery(G);
  const UnitTangent us[] = {tangent_at(0.4, 0.9, 0.3), tangent_at(1.2, 3.0, -1.0),
                            tangent_at(0.8, 5.1, 2.2)};
  for (const UnitTangent& u : us) {
    const UnitTangent red = reduce_tangent(G, u).tangent;
    for (const Mat2& g : G.gens) {
      const UnitTangent moved = reduce_tangent(G, UnitTangent{g * u.rep}).tangent;
      for (const auto& f : fs)
        REQUIRE(f(moved) == Approx(f(red)).margin(1e-12));
    }
  }
}

TEST_CASE("reduction is deck equivariant", "[measures]") {
  const FuchsianGroup& G = group();
  const UnitTangent u = tangent_at(0.9, 2.1, 0.7);
  const Mat2 base = reduce_tangent(G, u).tangent.rep;
  for (const Mat2& g : G.gens) {
    const Mat2 moved = reduce_tangent(G, UnitTangent{g * u.rep}).tangent.rep;
    REQUIRE(diff_mod_sign(base, moved) <= 1e-12);
  }
}

TEST_CASE("time-averaged mean carries exactly unit mass", "[measures]") {
  const EmpiricalTangentMeasure m = kb_mean(origin(), 4, 50, 11, group());
  REQUIRE(m.atoms.size() == 4 * 50);
  CHECK(std::abs(m.total_weight() - 1.0) <= 1e-15);
  for (const auto& a : m.atoms) REQUIRE(a.weight > 0.0);
}

TEST_CASE("integrating the constant function returns the total mass",
          "[measures]") {
  const EmpiricalTangentMeasure m = kb_mean(origin(), 3, 40, 7, group());
  const TestFunction one =
      make_bump(group(), tangent_at(0, 0, 0), std::numeric_limits<double>::infinity());
  CHECK(integrate(m, one) == m.total_weight());
}

TEST_CASE("zero flow time gives exactly zero gaps", "[measures]") {
  const EmpiricalTangentMeasure m = kb_mean(origin(), 2, 20, 3, group());
  const auto fs = standard_battery(group());
  for (double g : invariance_gap(m, FlowKind::Geodesic, 0.0, fs, group()))
    REQUIRE(g == 0.0);
}

TEST_CASE("apply_flow dispatches to the matrix flows", "[measures]") {
  const UnitTangent u = tangent_at(0.5, 1.3, -0.4);
  const Mat2 g1 = apply_flow(u, FlowKind::Geodesic, 0.7).rep;
  const Mat2 g2 = geodesic_flow(u, 0.7).rep;
  CHECK(diff_mod_sign(g1, g2) == 0.0);
  const Mat2 s1 = apply_flow(u, FlowKind::StableHoro, 0.9).rep;
  const Mat2 s2 = horocycle_flow(u, 0.9, HorocycleSide::Stable).rep;
  CHECK(diff_mod_sign(s1, s2) == 0.0);
  const Mat2 u1 = apply_flow(u, FlowKind::UnstableHoro, -0.6).rep;
  const Mat2 u2 = horocycle_flow(u, -0.6, HorocycleSide::Unstable).rep;
  CHECK(diff_mod_sign(u1, u2) == 0.0);
}

TEST_CASE("slice radii follow the exact radial law", "[measures]") {
  // Kolmogorov-Smirnov distance between the sampled radii at t = 8 and the
  // cumulative of the tabulated exact density.
  const double t = 8.0;
  std::vector<double> radii = kb_slice_radii(t, 2000, 11);
  std::sort(radii.begin(), radii.end());
  const RadialDensity d = radial_density_exact(t, default_radial_grid(t), 0);
  const double dr = d.grid[1] - d.grid[0];
  std::vector<double> cdf(d.grid.size(), 0.0);
  for (size_t i = 0; i + 1 < d.grid.size(); ++i)
    cdf[i + 1] = cdf[i] + 0.5 * (d.values[i] + d.values[i + 1]) * dr;
  auto F = [&](double r) {
    if (r <= d.grid.front()) return 0.0;
    if (r >= d.grid.back()) return cdf.back();
    const size_t i = size_t((r - d.grid.front()) / dr);
    const double frac = (r - d.grid[i]) / dr;
    return cdf[i] + frac * (cdf[i + 1] - cdf[i]);
  };
  double ks = 0;
  const double n = double(radii.size());
  for (size_t i = 0; i < radii.size(); ++i) {
    const double Fi = F(radii[i]);
    ks = std::max(ks, std::abs(double(i) / n - Fi));
    ks = std::max(ks, std::abs(double(i + 1) / n - Fi));
  }
  CHECK(ks <= 0.05);
}

TEST_CASE("invariance gaps shrink as the averaging window grows", "[measures]") {
  const FuchsianGroup& G = group();
  const auto fs = standard_battery(G);
  const EmpiricalTangentMeasure m8 = kb_mean(origin(), 8, 500, 11, G);
  const EmpiricalTangentMeasure m64 = kb_mean(origin(), 64, 500, 11, G);
  for (FlowKind flow : {FlowKind::Geodesic, FlowKind::UnstableHoro}) {
    const double g8 = median(invariance_gap(m8, flow, 1.0, fs, G));
    const double g64 = median(invariance_gap(m64, flow, 1.0, fs, G));
    REQUIRE(g64 < g8);
  }
}

TEST_CASE("mean and test-function guards", "[measures]") {
  CHECK_THROWS_AS(kb_mean(origin(), 0, 10, 1, group()), DomainError);
  CHECK_THROWS_AS(kb_mean(origin(), 2, 0, 1, group()), DomainError);
  TestFunction bad;
  bad.scale = 0.0;
  CHECK_THROWS_AS(bad(tangent_at(0, 0, 0)), DomainError);
}
