#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace nonlocal_flow::detail {

// Dormand-Prince 5(4) tableau. The 5th-order solution is propagated; the
// embedded 4th-order one only feeds the error estimate.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                          c5 = 8.0 / 9.0;

  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0,
                          a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                          a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;

  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0,
                          b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                          b6 = 11.0 / 84.0;

  // b (5th order) minus b* (4th order); the 7th stage enters only here.
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                          e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                          e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

// Scratch space for one attempt, reused across steps.
struct DormandPrinceWork {
  explicit DormandPrinceWork(std::size_t n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), stage(n), next(n) {}
  std::vector<double> k1, k2, k3, k4, k5, k6, k7, stage, next;
};

// One trial step from (t, y) of size h. `rhs(t, y, dy)` may throw; the
// exception propagates. On return work.next holds the 5th-order solution and
// the result is max_i |y5_i - y4_i|.
template <typename Rhs>
double dormand_prince_attempt(Rhs&& rhs, double t, std::span<const double> y,
                              double h, DormandPrinceWork& w) {
  using T = DormandPrince;
  const std::size_t n = y.size();
  auto stage = [&](auto&& combine) {
    for (std::size_t i = 0; i < n; ++i) w.stage[i] = y[i] + h * combine(i);
  };

  rhs(t, y, std::span<double>(w.k1));
  stage([&](std::size_t i) { return T::a21 * w.k1[i]; });
  rhs(t + T::c2 * h, std::span<const double>(w.stage), std::span<double>(w.k2));
  stage([&](std::size_t i) { return T::a31 * w.k1[i] + T::a32 * w.k2[i]; });
  rhs(t + T::c3 * h, std::span<const double>(w.stage), std::span<double>(w.k3));
  stage([&](std::size_t i) {
    return T::a41 * w.k1[i] + T::a42 * w.k2[i] + T::a43 * w.k3[i];
  });
  rhs(t + T::c4 * h, std::span<const double>(w.stage), std::span<double>(w.k4));
  stage([&](std::size_t i) {
    return T::a51 * w.k1[i] + T::a52 * w.k2[i] + T::a53 * w.k3[i] +
           T::a54 * w.k4[i];
  });
  rhs(t + T::c5 * h, std::span<const double>(w.stage), std::span<double>(w.k5));
  stage([&](std::size_t i) {
    return T::a61 * w.k1[i] + T::a62 * w.k2[i] + T::a63 * w.k3[i] +
           T::a64 * w.k4[i] + T::a65 * w.k5[i];
  });
  rhs(t + h, std::span<const double>(w.stage), std::span<double>(w.k6));
  for (std::size_t i = 0; i < n; ++i) {
    w.next[i] = y[i] + h * (T::b1 * w.k1[i] + T::b3 * w.k3[i] +
                            T::b4 * w.k4[i] + T::b5 * w.k5[i] +
                            T::b6 * w.k6[i]);
  }
  rhs(t + h, std::span<const double>(w.next), std::span<double>(w.k7));

  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = h * (T::e1 * w.k1[i] + T::e3 * w.k3[i] + T::e4 * w.k4[i] +
                          T::e5 * w.k5[i] + T::e6 * w.k6[i] + T::e7 * w.k7[i]);
    err = std::max(err, std::abs(e));
  }
  return err;
}

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace nonlocal_flow::detail
