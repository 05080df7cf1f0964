// Counter RNG, CSV plumbing, and small numeric helpers.

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperlam/csv.hpp"
#include "hyperlam/numerics.hpp"
#include "hyperlam/rng.hpp"

using namespace hyperlam;
using Catch::Approx;

TEST_CASE("philox block matches the published test vectors", "[rng-csv]") {
  // Known-answer vectors for Philox4x32-10.
  {
    const auto out = philox::block({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    const auto out = philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                   {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    const auto out = philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                   {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("counter rng draws are pure functions of the counters", "[rng-csv]") {
  const CounterRng a(42), b(42), c(43);
  CHECK(a.uniform01(7, 9, 2) == b.uniform01(7, 9, 2));
  CHECK(a.normal(1, 2, 3) == b.normal(1, 2, 3));
  CHECK(a.uniform01(7, 9, 2) != c.uniform01(7, 9, 2));
  CHECK(a.uniform01(7, 9, 2) != a.uniform01(7, 9, 3));  // streams separate
  CHECK(a.uniform01(7, 9, 2) != a.uniform01(8, 9, 2));  // paths separate

  for (uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform01(i, 0, 0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal pairs have unit scale", "[rng-csv]") {
  const CounterRng rng(7);
  const size_t n = 20000;
  double mean = 0, var = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto z = rng.normal_pair(i, 0, 0);
    mean += z.z0 + z.z1;
    var += z.z0 * z.z0 + z.z1 * z.z1;
  }
  mean /= double(2 * n);
  var /= double(2 * n);
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == Approx(1.0).margin(0.03));
}

TEST_CASE("fmt17 round-trips doubles exactly", "[rng-csv]") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.626070150e-34, -271828.1828,
                   123456789.123456789}) {
    CHECK(std::stod(fmt17(x)) == x);
  }
}

TEST_CASE("csv writer and reader round trip", "[rng-csv]") {
  const auto path = std::filesystem::temp_directory_path() / "hyperlam_csv_test.csv";
  {
    CsvWriter w(path, "a,b");
    w.row({fmt17(0.1), "x"});
    w.row({fmt17(-2.5), "y"});
  }
  const auto rows = read_csv(path);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "a");
  CHECK(std::stod(rows[1][0]) == 0.1);
  CHECK(rows[2][1] == "y");
  std::filesystem::remove(path);
}

TEST_CASE("kahan summation keeps cancelling terms", "[rng-csv]") {
  KahanSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
}

TEST_CASE("trapezoid and interpolation helpers", "[rng-csv]") {
  // trapezoid of a linear function is exact
  std::vector<double> lin;
  for (int i = 0; i <= 100; ++i) lin.push_back(2.0 + 3.0 * (0.01 * i));
  CHECK(trapezoid(lin, 0.01) == Approx(2.0 + 1.5).epsilon(1e-14));

  // 4-point interpolation reproduces cubics exactly away from the ends
  std::vector<double> cub;
  auto f = [](double x) { return ((x - 0.3) * x + 2.0) * x - 1.0; };
  for (int i = 0; i <= 50; ++i) cub.push_back(f(0.1 * i));
  for (double x : {0.37, 1.9, 3.33, 4.51})
    CHECK(cubic_interp_uniform(cub, 0.0, 0.1, x) == Approx(f(x)).epsilon(1e-12));

  CHECK(normal_cdf(0.0) == Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.3) + normal_cdf(-1.3) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("parallel_for covers every index and propagates exceptions", "[rng-csv]") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 3, [&](size_t i) { hits[i] = int(i) + 1; });
  for (size_t i = 0; i < hits.size(); ++i) REQUIRE(hits[i] == int(i) + 1);

  CHECK_THROWS_AS(parallel_for(16, 2,
                               [](size_t i) {
                                 if (i == 7) throw DomainError("boom");
                               }),
                  DomainError);
}
