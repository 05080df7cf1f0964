#pragma once
// Small shared numerics: fixed-order Gauss-Legendre panels, trapezoids,
// local cubic interpolation on uniform grids, the normal CDF, and a
// deterministic parallel-for (results are written to per-index slots, so the
// outcome is independent of the thread count and schedule).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "hyperlam/errors.hpp"

namespace hyperlam {

inline constexpr double kPi = 3.14159265358979323846264338328;
inline constexpr double kTwoPi = 6.28318530717958647692528676656;

// 16-point Gauss-Legendre rule on [-1,1], positive half (nodes symmetric).
inline constexpr int kGaussOrder = 16;
inline constexpr double kGaussNode[8] = {
    0.09501250983763744019, 0.28160355077925891323, 0.45801677765722738634,
    0.61787624440264374845, 0.75540440835500303390, 0.86563120238783174388,
    0.94457502307323257608, 0.98940093499164993260};
inline constexpr double kGaussWeight[8] = {
    0.18945061045506849629, 0.18260341504492358887, 0.16915651939500253819,
    0.14959598881657673208, 0.12462897125553387205, 0.09515851168249278481,
    0.06225352393864789286, 0.02715245941175409485};

template <class F>
double gauss16(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int j = 0; j < 8; ++j) {
    const double dx = half * kGaussNode[j];
    acc += kGaussWeight[j] * (f(mid - dx) + f(mid + dx));
  }
  return acc * half;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// Compensated accumulator (Kahan with the Neumaier correction, so the
// compensation survives even when an addend exceeds the running sum) for
// sums whose rounding drift would exceed the tolerance of an exact-mass or
// exact-linearity contract.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

inline double trapezoid(const std::vector<double>& v, double dx) {
  if (v.size() < 2) return 0.0;
  double acc = 0.5 * (v.front() + v.back());
  for (size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * dx;
}

// Local 4-point (cubic Lagrange) interpolation on the uniform grid
// x0 + i*dx, clamped at the ends.  Callers must keep x within the grid span.
inline double cubic_interp_uniform(const std::vector<double>& v, double x0, double dx,
                                   double x) {
  const std::ptrdiff_t n = std::ptrdiff_t(v.size());
  if (n < 2) throw GridError("cubic_interp_uniform: grid too small");
  double s = (x - x0) / dx;
  std::ptrdiff_t i = std::ptrdiff_t(std::floor(s));
  i = std::clamp<std::ptrdiff_t>(i, 0, n - 2);
  std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(i - 1, 0, n - 4);
  if (n < 4) {  // fall back to linear on tiny grids
    const double w = s - double(i);
    return v[i] * (1 - w) + v[i + 1] * w;
  }
  const double u = s - double(lo);  // position in [0,3] relative to the stencil
  const double c0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
  const double c1 = u * (u - 2) * (u - 3) / 2.0;
  const double c2 = -u * (u - 1) * (u - 3) / 2.0;
  const double c3 = u * (u - 1) * (u - 2) / 6.0;
  return c0 * v[lo] + c1 * v[lo + 1] + c2 * v[lo + 2] + c3 * v[lo + 3];
}

inline unsigned resolve_threads(int requested) {
  if (requested > 0) return unsigned(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs body(i) for i in [0, n).  Each index writes only its own outputs,
// which makes the result independent of how indices are split over threads.
// The first exception thrown by any worker is rethrown on the calling thread.
template <class Body>
void parallel_for(size_t n, int threads_requested, const Body& body) {
  const unsigned nt = std::min<size_t>(resolve_threads(threads_requested), n ? n : 1);
  if (nt <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const size_t chunk = (n + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    const size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> guard(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hyperlam
