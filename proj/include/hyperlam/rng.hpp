#pragma once
// Counter-based random numbers (Philox 4x32, 10 rounds).  Every draw is a
// pure function of (seed, path index, step index, stream), so simulations
// can be sharded across threads in any order and still produce bit-identical
// ensembles: path i always sees the same increments no matter which thread
// runs it or how many paths run beside it.
//
// Streams used by the simulators:
//   0 radial Wiener increment      1 angular Wiener increment
//   2 initial-direction uniform    3 auxiliary uniforms

#include <array>
#include <cmath>
#include <cstdint>

namespace hyperlam {

namespace philox {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                     std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = uint64_t(kMul0) * ctr[0];
    const uint64_t p1 = uint64_t(kMul1) * ctr[2];
    const uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
    const uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

// Two 32-bit words -> double in (0,1), strictly inside the open interval.
inline double u01_from_bits(uint32_t hi, uint32_t lo) {
  const uint64_t bits = (uint64_t(hi) << 32) | lo;
  return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

struct CounterRng {
  uint64_t seed = 1;

  std::array<uint32_t, 4> raw(uint64_t path, uint64_t step, uint32_t stream) const {
    const std::array<uint32_t, 2> key{uint32_t(seed), uint32_t(seed >> 32)};
    const std::array<uint32_t, 4> ctr{uint32_t(path), uint32_t(path >> 32),
                                      uint32_t(step), stream};
    return philox::block(ctr, key);
  }

  // One Box-Muller pair per counter; the two outputs are independent normals.
  struct NormalPair {
    double z0, z1;
  };

  NormalPair normal_pair(uint64_t path, uint64_t step, uint32_t stream) const {
    const auto x = raw(path, step, stream);
    const double u1 = u01_from_bits(x[0], x[1]);
    const double u2 = u01_from_bits(x[2], x[3]);
    const double rho = std::sqrt(-2.0 * std::log(u1));
    const double phi = 6.283185307179586476925286766559 * u2;
    return {rho * std::cos(phi), rho * std::sin(phi)};
  }

  double normal(uint64_t path, uint64_t step, uint32_t stream) const {
    return normal_pair(path, step, stream).z0;
  }

  double uniform01(uint64_t path, uint64_t step, uint32_t stream) const {
    const auto x = raw(path, step, stream);
    return u01_from_bits(x[0], x[1]);
  }
};

}  // namespace hyperlam
