// Acceptance battery: one line per criterion, each checked at its stated
// tolerance and (where stated) within its runtime budget, plus the
// reproducibility harness that drives the command-line tool end to end.
//
// Exit code 0 iff every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlam/fpe.hpp"
#include "hyperlam/geom.hpp"
#include "hyperlam/herglotz.hpp"
#include "hyperlam/kernel.hpp"
#include "hyperlam/measures.hpp"
#include "hyperlam/sde.hpp"

namespace fs = std::filesystem;
using namespace hyperlam;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int g_failures = 0;

// Runs one criterion body; the body returns pass/fail and may append a short
// note.  A positive budget makes the runtime part of the criterion.
template <class Body>
void criterion(int id, const char* name, double budget_s, Body&& body) {
  const double t0 = now_s();
  bool pass = false;
  std::string note;
  try {
    pass = body(note);
  } catch (const std::exception& e) {
    pass = false;
    note = std::string("exception: ") + e.what();
  }
  const double dt = now_s() - t0;
  if (budget_s > 0 && dt > budget_s) {
    pass = false;
    note += (note.empty() ? "" : "; ") + std::string("over budget ") +
            std::to_string(budget_s) + " s";
  }
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %2d: %s (%.1f s)%s%s\n", pass ? "PASS" : "FAIL", id,
              name, dt, note.empty() ? "" : " -- ", note.c_str());
  std::fflush(stdout);
}

std::string fmtnum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Helpers for the reproducibility harness
// ---------------------------------------------------------------------------

int run_cli(const std::string& cmdline) {
  const int rc = std::system(cmdline.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

std::map<std::string, std::string> dir_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

size_t line_count(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

// Interior sampling layout shared with the recovery checks: half the points
// on the circle r = 0.5, half on r = 0.85 with an incommensurate phase.
std::vector<std::pair<std::complex<double>, double>> two_circle_samples(
    const BoundaryMeasure& truth, size_t count, double phase) {
  std::vector<std::pair<std::complex<double>, double>> s;
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

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main() {
  unsetenv("HYPERLAM_OUT");
  std::printf("acceptance battery\n");
  std::printf("==================\n");

  // -------------------------------------------------------------------
  // 1. Shift total variation of the exact density decays in time:
  //    strictly decreasing over t = 5,10,20,40 for s = 0.25, 0.5, 1,
  //    with I_40 < I_5 / 2, inside 2 minutes.
  // -------------------------------------------------------------------
  criterion(1, "shift-TV decay ladder", 120.0, [](std::string& note) {
    const double times[4] = {5.0, 10.0, 20.0, 40.0};
    std::vector<RadialDensity> dens;
    for (double t : times)
      dens.push_back(radial_density_exact(t, default_radial_grid(t), 0));
    bool ok = true;
    for (double s : {0.25, 0.5, 1.0}) {
      std::vector<TvEstimate> I;
      I.reserve(4);
      for (const auto& d : dens) I.push_back(tv_shift(d, s));
      for (int k = 0; k + 1 < 4; ++k)
        ok = ok && (I[k + 1].value + I[k + 1].tail_bound <
                    I[k].value - I[k].tail_bound);
      ok = ok && (I[3].value + I[3].tail_bound <
                  0.5 * (I[0].value - I[0].tail_bound));
      note += (note.empty() ? "I40/I5 = " : ", ") + fmtnum(I[3].value / I[0].value);
    }
    return ok;
  });

  // -------------------------------------------------------------------
  // 2. Three-way density agreement at t = 5: integral formula vs forward
  //    equation vs Monte Carlo histogram (1e5 paths, h = 1e-3), all
  //    pairwise L1 distances at most 0.02, inside 5 minutes.
  // -------------------------------------------------------------------
  criterion(2, "three-way density agreement at t = 5", 300.0, [](std::string& note) {
    const RadialDensity fpe = fp_density_from_origin(5.0, 8000, 1e-3);
    const RadialDensity exact = radial_density_exact(5.0, fpe.grid, 0);
    const RadialDensity hist =
        mc_radial_histogram(0.01, 5.0, 1e-3, 100000, 2026, 0.25, 0);
    const double l_ef = l1_same_grid(exact, fpe);
    const double l_em = l1_histogram_vs_density(hist, exact);
    const double l_fm = l1_histogram_vs_density(hist, fpe);
    note = "L1 = " + fmtnum(l_ef) + ", " + fmtnum(l_em) + ", " + fmtnum(l_fm);
    return l_ef <= 0.02 && l_em <= 0.02 && l_fm <= 0.02;
  });

  // -------------------------------------------------------------------
  // 3. Zero-noise mode reproduces cosh X_t = cosh(x0) e^{t/2} to relative
  //    1e-10 at t = 10 for x0 = 0.1, 1, 5 and any step at most 0.1.
  // -------------------------------------------------------------------
  criterion(3, "zero-noise exact drift flow", 0.0, [](std::string& note) {
    double worst = 0;
    for (double x0 : {0.1, 1.0, 5.0}) {
      for (double h : {0.1, 0.025, 0.001}) {
        const PathSample p = simulate_radial(x0, 10.0, h, 0, NoiseMode::Zero);
        const double expect = std::cosh(x0) * std::exp(5.0);
        worst = std::max(worst, std::abs(std::cosh(p.x.back()) - expect) / expect);
      }
    }
    note = "max rel err = " + fmtnum(worst);
    return worst <= 1e-10;
  });

  // -------------------------------------------------------------------
  // 4. Weight ratios: 1e4 paths from y = 6, floor 3, t = 4, h = 1e-3;
  //    every never-crossing path's ratio lies in
  //    [(1 - e^{-6})^{1/2}, C(6, 4)].
  // -------------------------------------------------------------------
  criterion(4, "pathwise weight-ratio bounds", 0.0, [](std::string& note) {
    const double lower = std::sqrt(-std::expm1(-6.0));
    const double upper = bound_C(6.0, 4.0);
    uint64_t crossed = 0, violated = 0, surviving = 0;
    for (uint64_t p = 0; p < 10000; ++p) {
      const PathStats s = radial_path_stats(6.0, 4.0, 1e-3, 31, p);
      if (s.min_x < 3.0) {
        ++crossed;
        continue;
      }
      ++surviving;
      const GirsanovWeight w = girsanov_from_stats(s, 4.0);
      const double ratio = std::exp(w.logZ - w.logZstar);
      if (!(ratio >= lower && ratio <= upper)) ++violated;
    }
    note = "in-bounds fraction = " +
           fmtnum(double(surviving - violated) / double(surviving)) +
           ", crossed = " + std::to_string(crossed);
    return violated == 0 && surviving > 0;
  });

  // -------------------------------------------------------------------
  // 5. Drift domination: the coupled comparison holds at every step on
  //    all 1e3 paths over t = 10 (fraction exactly 1).
  // -------------------------------------------------------------------
  criterion(5, "drift domination fraction", 0.0, [](std::string& note) {
    const double frac = drift_domination_check(1000, 10.0, 11);
    note = "fraction = " + fmtnum(frac);
    return frac == 1.0;
  });

  // -------------------------------------------------------------------
  // 6. Barrier-crossing probability: Monte Carlo at 1e6 paths (horizon
  //    200) matches e^{-R/2} within 3 standard errors for R = 2, 4, 6.
  // -------------------------------------------------------------------
  criterion(6, "barrier-crossing probability vs closed form", 0.0,
            [](std::string& note) {
    bool ok = true;
    for (double R : {2.0, 4.0, 6.0}) {
      const ProbabilityEstimate est = bound_Q(
          R, QMode::MonteCarlo, QMonteCarloParams{1000000, 200.0, 0.25, 1, 0});
      const double target = std::exp(-R / 2.0);
      const double sig = std::abs(est.value - target) / est.std_error;
      ok = ok && sig <= 3.0;
      note += (note.empty() ? "sigmas = " : ", ") + fmtnum(sig);
    }
    return ok;
  });

  // -------------------------------------------------------------------
  // 7. Gaussian shift bound: tv(t, s) <= s sqrt(2 / (pi t)) on 100
  //    sampled (t, s) in [0.1, 100] x [0, 1].
  // -------------------------------------------------------------------
  criterion(7, "Gaussian shift-TV bound", 0.0, [](std::string& note) {
    const CounterRng rng(7);
    double worst = -1.0;
    for (uint64_t i = 0; i < 100; ++i) {
      const double t = 0.1 + 99.9 * rng.uniform01(i, 0, 0);
      const double s = rng.uniform01(i, 1, 0);
      const double excess = gaussian_shift_tv(t, s) - s * std::sqrt(2.0 / (kPi * t));
      worst = std::max(worst, excess);
    }
    note = "max excess = " + fmtnum(worst);
    return worst <= 1e-15;
  });

  // -------------------------------------------------------------------
  // 8. Averaged-measure invariance on the genus-2 quotient, 2000 paths:
  //    geodesic and unstable-horocycle gaps at s = 1 decrease from
  //    n = 8 to n = 64 for at least 4 of the 5 bump functions each, and
  //    the battery median drops below half; inside 10 minutes.
  // -------------------------------------------------------------------
  criterion(8, "averaged-measure invariance trend", 600.0, [](std::string& note) {
    const FuchsianGroup G = octagon_group();
    const auto battery = standard_battery(G);
    const EmpiricalTangentMeasure m8 = kb_mean(origin(), 8, 2000, 11, G);
    const EmpiricalTangentMeasure m64 = kb_mean(origin(), 64, 2000, 11, G);
    bool ok = true;
    for (FlowKind flow : {FlowKind::Geodesic, FlowKind::UnstableHoro}) {
      const auto g8 = invariance_gap(m8, flow, 1.0, battery, G);
      const auto g64 = invariance_gap(m64, flow, 1.0, battery, G);
      int decreasing = 0;
      for (size_t j = 0; j < 5; ++j)
        if (g64[j] < g8[j]) ++decreasing;
      const double med8 = median_of(g8), med64 = median_of(g64);
      ok = ok && decreasing >= 4 && med64 < 0.5 * med8;
      note += (note.empty() ? "" : "; ") +
              std::string(flow == FlowKind::Geodesic ? "geodesic" : "unstable") +
              ": " + std::to_string(decreasing) + "/5, median ratio " +
              fmtnum(med64 / med8);
    }
    return ok;
  });

  // -------------------------------------------------------------------
  // 9. Boundary-measure recovery: the two-atom measure (0.3 at 1,
  //    0.7 at 4) comes back within W1 <= 0.05 from 128 samples, and the
  //    uniform measure within W1 <= 0.02 from 64 samples (grid 256).
  // -------------------------------------------------------------------
  criterion(9, "boundary-measure recovery", 0.0, [](std::string& note) {
    const BoundaryMeasure uni = BoundaryMeasure::uniform(1.0, 256);
    const RecoveredMeasure rec_u =
        recover_boundary_measure(two_circle_samples(uni, 64, 0.37), 256);
    const double w1u = w1_circle(rec_u.measure, uni);

    const BoundaryMeasure atoms =
        BoundaryMeasure::from_atoms({{1.0, 0.3}, {4.0, 0.7}});
    const RecoveredMeasure rec_a =
        recover_boundary_measure(two_circle_samples(atoms, 128, 0.41), 256);
    const double w1a = w1_circle(rec_a.measure, atoms);

    note = "uniform W1 = " + fmtnum(w1u) + ", two-atom W1 = " + fmtnum(w1a);
    return w1u <= 0.02 && w1a <= 0.05;
  });

  // -------------------------------------------------------------------
  // 10. Affine conditional invariance of the exact product measure:
  //     battery gap below 1e-3 at 256^2 quadrature, halving at 512^2,
  //     with the tilted negative control at least 10x larger.
  // -------------------------------------------------------------------
  criterion(10, "flow-box affine invariance", 0.0, [](std::string& note) {
    const FlowBoxMeasure fb{DiskRegion{{0.0, 0.0}, 0.35},
                            BoundaryMeasure::uniform(1.0, 128)};
    const auto battery = box_test_battery(fb.region);
    auto max_of = [](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m = std::max(m, x);
      return m;
    };
    const double g256 = max_of(affine_conditional_check(fb, 1.05, 0.02, battery, 256));
    const double g512 = max_of(affine_conditional_check(fb, 1.05, 0.02, battery, 512));
    const auto tilt = [R = fb.region.radius](std::complex<double> z) {
      return 1.0 + 0.2 * std::sin(kPi * z.imag() / R);
    };
    const double gtilt =
        max_of(affine_conditional_check(fb, 1.05, 0.02, battery, 256, 0, tilt));
    note = "gap = " + fmtnum(g256) + ", refined = " + fmtnum(g512) +
           ", control/invariant = " + fmtnum(gtilt / g256);
    return g256 < 1e-3 && g512 <= 0.5 * g256 && gtilt >= 10.0 * g256;
  });

  // -------------------------------------------------------------------
  // 11. Reproducibility of the command-line tool: for every subcommand,
  //     identical seed and config give bit-identical artifacts and stdout
  //     regardless of the thread count, with equal exit codes in {0, 1};
  //     plus the documented flag/config/exit-code contract.
  // -------------------------------------------------------------------
  criterion(11, "command-line reproducibility and contract", 0.0,
            [](std::string& note) {
    const std::string cli = HYPERLAM_CLI_PATH;
    const fs::path root = fs::temp_directory_path() / "hyperlam-acceptance";
    std::error_code ec;
    fs::remove_all(root, ec);
    fs::create_directories(root);

    const std::pair<std::string, std::string> runs[] = {
        {"theorem2-decay", "--times 5 --shifts 0.25,0.5"},
        {"oracle-agreement",
         "--t 5 --paths 2000 --h 0.01 --fpe-cells 1000 --fpe-dt 0.004 --ode-h 0.1"},
        {"girsanov-bounds", "--paths 300 --h 0.01 --dd-paths 100 --dd-t 5"},
        {"bound-terms", "--qr-paths 20000 --horizon 50 --pairs 20"},
        {"kb-invariance", "--paths 50 --n 16"},
        {"herglotz-recover",
         "--grid 128 --uniform-samples 32 --atom-samples 48 --quad 64"},
    };

    bool ok = true;
    for (const auto& [sub, flags] : runs) {
      int codes[3];
      std::map<std::string, std::string> snap[3];
      for (int k = 0; k < 3; ++k) {
        const fs::path out = root / sub / ("run" + std::to_string(k));
        fs::create_directories(out);
        const int threads = (k == 1) ? 3 : 1;
        const std::string cmd = "'" + cli + "' " + sub + " " + flags +
                                " --seed 123 --threads " + std::to_string(threads) +
                                " --out '" + out.string() + "' > '" +
                                (out / "stdout.txt").string() + "' 2>/dev/null";
        codes[k] = run_cli(cmd);
        snap[k] = dir_contents(out);
      }
      const bool code_ok = codes[0] == codes[1] && codes[1] == codes[2] &&
                           (codes[0] == 0 || codes[0] == 1);
      const bool bytes_ok = snap[0] == snap[1] && snap[1] == snap[2] &&
                            !snap[0].empty();
      if (!code_ok || !bytes_ok) {
        ok = false;
        note += (note.empty() ? "" : "; ") + sub +
                (code_ok ? "" : " exit codes " + std::to_string(codes[0]) + "/" +
                                    std::to_string(codes[1]) + "/" +
                                    std::to_string(codes[2])) +
                (bytes_ok ? "" : " output bytes differ");
      }
    }

    // contract: unknown flag is a config error (exit 2)
    {
      const int rc = run_cli("'" + cli + "' theorem2-decay --nonsense 1 "
                             ">/dev/null 2>&1");
      if (rc != 2) {
        ok = false;
        note += (note.empty() ? "" : "; ") +
                std::string("unknown flag exit = ") + std::to_string(rc);
      }
    }

    // contract: a single averaging window still runs and reports gaps,
    // with no trend rows in the summary
    {
      const fs::path out = root / "degenerate";
      fs::create_directories(out);
      const int rc = run_cli("'" + cli + "' kb-invariance --n 1 --paths 5 --seed 123 "
                             "--out '" + out.string() + "' >/dev/null 2>&1");
      const fs::path sub = out / "kb-invariance";
      const bool good = rc == 0 && fs::exists(sub / "gaps.csv") &&
                        line_count(sub / "summary.csv") == 1;
      if (!good) {
        ok = false;
        note += (note.empty() ? "" : "; ") +
                std::string("degenerate window run broke the contract");
      }
    }

    // contract: HYPERLAM_OUT overrides --out
    {
      const fs::path envdir = root / "env-out";
      const fs::path flagdir = root / "flag-out";
      fs::create_directories(envdir);
      const int rc = run_cli("HYPERLAM_OUT='" + envdir.string() + "' '" + cli +
                             "' girsanov-bounds --paths 50 --h 0.01 --dd-paths 20 "
                             "--dd-t 2 --seed 123 --out '" + flagdir.string() +
                             "' >/dev/null 2>&1");
      const bool good = (rc == 0 || rc == 1) &&
                        fs::exists(envdir / "girsanov-bounds" / "summary.csv") &&
                        !fs::exists(flagdir / "girsanov-bounds");
      if (!good) {
        ok = false;
        note += (note.empty() ? "" : "; ") +
                std::string("environment output override failed");
      }
    }

    // contract: explicit flags win over config-file values
    {
      const fs::path cfg = root / "run.cfg";
      std::ofstream(cfg) << "paths=300\nh=0.01\ndd-paths=50\ndd-t=2\n";
      const fs::path out = root / "config-out";
      fs::create_directories(out);
      const int rc = run_cli("'" + cli + "' girsanov-bounds --config '" +
                             cfg.string() + "' --paths 150 --seed 123 --out '" +
                             out.string() + "' >/dev/null 2>&1");
      const bool good = (rc == 0 || rc == 1) &&
                        line_count(out / "girsanov-bounds" / "ratios.csv") == 151;
      if (!good) {
        ok = false;
        note += (note.empty() ? "" : "; ") +
                std::string("config-file precedence failed");
      }
    }

    // contract: unknown config key is a config error (exit 2)
    {
      const fs::path cfg = root / "bad.cfg";
      std::ofstream(cfg) << "mystery=1\n";
      const int rc = run_cli("'" + cli + "' girsanov-bounds --config '" +
                             cfg.string() + "' >/dev/null 2>&1");
      if (rc != 2) {
        ok = false;
        note += (note.empty() ? "" : "; ") +
                std::string("unknown config key exit = ") + std::to_string(rc);
      }
    }

    if (ok) note = "6 subcommands x 3 runs bit-identical; contract checks pass";
    return ok;
  });

  std::printf("==================\n");
  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
