#pragma once
// Krylov-Bogolyubov means of the leafwise diffusion, pushed to the unit
// tangent bundle of the quotient surface through the radial map, together
// with the flow-invariance gap diagnostics.
//
// Construction.  From a cover point x, run planar hyperbolic Brownian paths.
// Each path contributes, at every integer time t = 1..n-1, the unit tangent
// at the path position pointing away from x (the radial map), reduced to the
// fundamental domain by the deck action, with weight 1/(n * n_paths).  The
// time-0 term of the mean sits at x itself where the radial direction is
// undefined; it is spread uniformly over directions at x (any bounded choice
// is O(1/n) in the mean), and doubles as the launch direction of the path.
//
// Diagnostics.  For a test function f on T^1 of the quotient and a flow F_s
// (geodesic or either horocycle), the invariance gap is
//
//   gap = | sum_atoms w * ( f(reduce(F_s u)) - f(u) ) |,
//
// which tends to 0 in n for the geodesic and unstable-horocycle flows as the
// means approach their invariant limit; no trend is claimed for the stable
// horocycle.
//
// Test functions live on the quotient: both kinds window a profile by a gauge
// of distance between tangents measured after minimizing over a deck-ball of
// word length <= 2, which makes them genuinely deck-invariant as long as the
// support radius stays below the injectivity scale (supports <= 1 here, with
// covering radius ~2.45).  The gauge is
//
//   D(u, c)^2 = ||m||_F^2 - 2|tr m| + 2,   m = c^{-1} gamma u,
//
// zero exactly at m = +-Id and comparable to the square of the distance in
// T^1 near it.  Bump profile: (1 - q^2)^2 on q < 1.  Angular harmonics window
// cos(k * dalpha) with dalpha = -2 atan2(c_m, d_m), a fiber-angle difference
// that is PSL-sign-safe for integer k.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hyperlam/csv.hpp"
#include "hyperlam/errors.hpp"
#include "hyperlam/flows.hpp"
#include "hyperlam/geom.hpp"
#include "hyperlam/numerics.hpp"
#include "hyperlam/sde.hpp"

namespace hyperlam {

struct EmpiricalTangentMeasure {
  struct Atom {
    Mat2 rep;       // reduced unit tangent
    double weight;  // positive; all weights sum to 1
  };
  std::vector<Atom> atoms;

  double total_weight() const {
    KahanSum s;
    for (const auto& a : atoms) s.add(a.weight);
    return s.value();
  }
};

// ---------------------------------------------------------------------------
// Deck ball and test functions
// ---------------------------------------------------------------------------

namespace detail {

inline bool same_mod_sign(const Mat2& a, const Mat2& b) {
  return frob_dist_mod_sign(a, b) < 1e-9;
}

}  // namespace detail

// All deck words of length <= 2 (with inverses), deduplicated mod sign.
inline std::vector<Mat2> deck_ball_two(const FuchsianGroup& G) {
  std::vector<Mat2> gens1;
  for (const Mat2& g : G.gens) {
    gens1.push_back(g);
    gens1.push_back(g.inverse_unimodular());
  }
  std::vector<Mat2> ball;
  ball.push_back(Mat2{});
  auto push_unique = [&ball](const Mat2& m) {
    for (const Mat2& b : ball)
      if (detail::same_mod_sign(b, m)) return;
    ball.push_back(m);
  };
  for (const Mat2& g : gens1) push_unique(g);
  for (const Mat2& g : gens1)
    for (const Mat2& h : gens1) push_unique(g * h);
  return ball;
}

enum class TestKind { Bump, AngularHarmonic };

struct TestFunction {
  UnitTangent center;
  double scale = 1.0;  // support radius in the gauge; may be +infinity
  TestKind kind = TestKind::Bump;
  int harmonic_k = 1;  // angular frequency for AngularHarmonic
  // center.rep^{-1} * g over the deck ball, premultiplied once at setup
  std::shared_ptr<const std::vector<Mat2>> centered_ball;

  // Evaluate at a (reduced) unit tangent on the quotient: minimize the gauge
  // over the deck ball, window the profile, attach the harmonic if requested.
  double operator()(const UnitTangent& u) const {
    if (!(scale > 0)) throw DomainError("TestFunction: scale must be positive");
    double best = std::numeric_limits<double>::infinity();
    Mat2 best_m;
    static const std::vector<Mat2> trivial{Mat2{}};
    const std::vector<Mat2>& B = centered_ball ? *centered_ball : trivial;
    for (const Mat2& cg : B) {
      const Mat2 m = cg * u.rep;
      const double d2 = m.frob2() - 2.0 * std::abs(m.trace()) + 2.0;
      if (d2 < best) {
        best = d2;
        best_m = m;
      }
    }
    const double q2 = std::isinf(scale) ? 0.0 : std::max(0.0, best) / (scale * scale);
    if (q2 >= 1.0) return 0.0;
    const double window = (1.0 - q2) * (1.0 - q2);
    if (kind == TestKind::Bump) return window;
    const double dalpha = -2.0 * std::atan2(best_m.c, best_m.d);
    return window * std::cos(double(harmonic_k) * dalpha);
  }
};

inline TestFunction make_bump(const FuchsianGroup& G, const UnitTangent& center,
                              double scale) {
  TestFunction f;
  f.center = center;
  f.scale = scale;
  f.kind = TestKind::Bump;
  const Mat2 cinv = center.rep.inverse_unimodular();
  std::vector<Mat2> cb;
  for (const Mat2& g : deck_ball_two(G)) cb.push_back(cinv * g);
  f.centered_ball = std::make_shared<const std::vector<Mat2>>(std::move(cb));
  return f;
}

inline TestFunction make_harmonic(const FuchsianGroup& G, const UnitTangent& center,
                                  double scale, int k) {
  TestFunction f = make_bump(G, center, scale);
  f.kind = TestKind::AngularHarmonic;
  f.harmonic_k = k;
  return f;
}

// The fixed 8-member diagnostic battery: 5 bumps spread near the origin plus
// 3 windowed angular harmonics (k = 1, 2, 3).  Centers stay well inside the
// fundamental domain so supports clear the deck-ball continuity margin.
inline std::vector<TestFunction> standard_battery(const FuchsianGroup& G) {
  auto center_at = [](double r, double theta, double psi) {
    const Mat2 T = translation_to(polar_point(r, theta));
    return UnitTangent{T * rotation_about_i(psi)};
  };
  std::vector<TestFunction> fs;
  fs.push_back(make_bump(G, center_at(0.00, 0.0, 0.0), 0.8));
  fs.push_back(make_bump(G, center_at(0.30, 0.7, 1.1), 0.9));
  fs.push_back(make_bump(G, center_at(0.25, 2.4, -0.6), 1.0));
  fs.push_back(make_bump(G, center_at(0.35, 4.0, 2.3), 0.7));
  fs.push_back(make_bump(G, center_at(0.20, 5.5, -2.0), 0.85));
  fs.push_back(make_harmonic(G, center_at(0.00, 0.0, 0.0), 1.0, 1));
  fs.push_back(make_harmonic(G, center_at(0.15, 1.9, 0.4), 1.0, 2));
  fs.push_back(make_harmonic(G, center_at(0.25, 3.3, -1.2), 1.0, 3));
  return fs;
}

// ---------------------------------------------------------------------------
// Krylov-Bogolyubov means
// ---------------------------------------------------------------------------

struct KbParams {
  double h = 5e-3;       // diffusion step size
  double start_r = 0.01; // point-start convention shared with the sampler
  int threads = 0;
};

// Pre-reduction radii of the construction at integer slice time t: these are
// bit-identical to the radial marginals the mean uses (same seed, path and
// stream mapping), exposed for distributional checks against the kernel.
inline std::vector<double> kb_slice_radii(double t, uint64_t n_paths, uint64_t seed,
                                          const KbParams& par = {}) {
  return radial_terminals(par.start_r, t, par.h, n_paths, seed, par.threads);
}

inline EmpiricalTangentMeasure kb_mean(const HPoint& x, uint64_t n, uint64_t n_paths,
                                       uint64_t seed, const FuchsianGroup& G,
                                       const KbParams& par = {}) {
  if (n < 1) throw DomainError("kb_mean: need n >= 1");
  if (n_paths < 1) throw DomainError("kb_mean: need n_paths >= 1");
  const Mat2 T = translation_to(x);
  const double weight = 1.0 / (double(n) * double(n_paths));
  EmpiricalTangentMeasure m;
  m.atoms.resize(n * n_paths);
  const CounterRng rng(seed);
  parallel_for(n_paths, par.threads, [&](size_t p) {
    // launch direction = the time-0 uniform atom (stream 2)
    const double alpha = kTwoPi * rng.uniform01(uint64_t(p), 0, 2);
    m.atoms[p * n] = {reduce_tangent(G, UnitTangent{T * rotation_about_i(alpha)}).tangent.rep,
                      weight};
    if (n == 1) return;
    PathSample path = simulate_planar(par.start_r, alpha, double(n - 1), par.h, seed,
                                      uint64_t(p));
    const uint64_t steps_per_unit = uint64_t(std::llround(1.0 / par.h));
    for (uint64_t t = 1; t < n; ++t) {
      const size_t k = size_t(t * steps_per_unit);
      const double r = path.x[k];
      const double theta = path.theta[k];
      if (!(r > 0)) throw DegenerateError("kb_mean: path returned to the start point");
      const UnitTangent u{T * rotation_about_i(theta) * boost(r)};
      m.atoms[p * n + t] = {reduce_tangent(G, u).tangent.rep, weight};
    }
  });
  return m;
}

// ---------------------------------------------------------------------------
// Integration and invariance gaps
// ---------------------------------------------------------------------------

inline double integrate(const EmpiricalTangentMeasure& m, const TestFunction& f) {
  KahanSum s;
  for (const auto& a : m.atoms) s.add(a.weight * f(UnitTangent{a.rep}));
  return s.value();
}

enum class FlowKind { Geodesic, StableHoro, UnstableHoro };

inline UnitTangent apply_flow(const UnitTangent& u, FlowKind flow, double s) {
  switch (flow) {
    case FlowKind::Geodesic: return geodesic_flow(u, s);
    case FlowKind::StableHoro: return horocycle_flow(u, s, HorocycleSide::Stable);
    default: return horocycle_flow(u, s, HorocycleSide::Unstable);
  }
}

// |integral of f along the flow-pushed atoms minus integral of f|, one value
// per test function.  Atoms are flowed by matrix product and re-reduced; the
// contract range for the geodesic flow is s in [-1, 1], horocycles any s.
inline std::vector<double> invariance_gap(const EmpiricalTangentMeasure& m, FlowKind flow,
                                          double s, const std::vector<TestFunction>& fs,
                                          const FuchsianGroup& G, int threads = 0) {
  if (s == 0.0) return std::vector<double>(fs.size(), 0.0);
  std::vector<double> diffs(m.atoms.size());
  std::vector<double> gaps(fs.size());
  std::vector<Mat2> flowed(m.atoms.size());
  parallel_for(m.atoms.size(), threads, [&](size_t i) {
    flowed[i] = reduce_tangent(G, apply_flow(UnitTangent{m.atoms[i].rep}, flow, s))
                    .tangent.rep;
  });
  for (size_t j = 0; j < fs.size(); ++j) {
    const TestFunction& f = fs[j];
    parallel_for(m.atoms.size(), threads, [&](size_t i) {
      diffs[i] = m.atoms[i].weight *
                 (f(UnitTangent{flowed[i]}) - f(UnitTangent{m.atoms[i].rep}));
    });
    KahanSum acc;
    for (double d : diffs) acc.add(d);
    gaps[j] = std::abs(acc.value());
  }
  return gaps;
}

// ---------------------------------------------------------------------------
// CSV dumps
// ---------------------------------------------------------------------------

inline void save_measure(const EmpiricalTangentMeasure& m, const std::string& file) {
  CsvWriter w(file, "a,b,c,d,weight");
  for (const auto& a : m.atoms)
    w.row({fmt17(a.rep.a), fmt17(a.rep.b), fmt17(a.rep.c), fmt17(a.rep.d),
           fmt17(a.weight)});
}

struct GapRecord {
  FlowKind flow;
  double s;
  size_t f_id;
  uint64_t n;
  double gap;
};

inline const char* flow_name(FlowKind f) {
  switch (f) {
    case FlowKind::Geodesic: return "geodesic";
    case FlowKind::StableHoro: return "stable_horocycle";
    default: return "unstable_horocycle";
  }
}

inline void save_gaps(const std::vector<GapRecord>& records, const std::string& file) {
  CsvWriter w(file, "flow,s,f_id,n,gap");
  for (const auto& r : records)
    w.row({flow_name(r.flow), fmt17(r.s), std::to_string(r.f_id), std::to_string(r.n),
           fmt17(r.gap)});
}

}  // namespace hyperlam
