#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace qsync::detail {

// Scalar self-consistency R = (1/N) sum_j sqrt(1 - (u_j/R)^2) on the branch
// with all cosines >= 0, where u_j = omega_j / coupling. The map
// h(R) = Phi(R) - R is concave on [max|u|, 1], so it has at most two roots;
// the larger one is the stable branch, the smaller the unstable one.
//
// Strategy: damped fixed-point iteration from R = 1 (monotone descent onto
// the largest root). If it stalls or escapes below max|u| without
// converging, fall back to a ternary search for the maximum of h followed
// by bisection; a maximum below zero means no locked solution exists.

struct ScalarLockResult {
  double R = 0.0;
  double residual = 0.0;  // |Phi(R) - R|
  bool tangent = false;   // root found at the concave maximum (saddle-node)
};

class ScalarLock {
 public:
  explicit ScalarLock(std::vector<double> u) : u_(std::move(u)) {
    floor_ = 0.0;
    for (double v : u_) floor_ = std::max(floor_, std::abs(v));
  }

  double floor() const { return floor_; }

  // Phi(R) - R; R must satisfy R >= floor().
  double h(double R) const {
    double acc = 0.0;
    for (double v : u_) {
      const double t = v / R;
      acc += std::sqrt(std::max(1.0 - t * t, 0.0));
    }
    return acc / static_cast<double>(u_.size()) - R;
  }

  // dh/dR, strictly decreasing on (floor, 1]; +inf at R = floor.
  double dh(double R) const {
    double acc = 0.0;
    for (double v : u_) {
      const double t = v / R;
      acc += (v * v) / (R * R * R * std::sqrt(std::max(1.0 - t * t, 0.0)));
    }
    return acc / static_cast<double>(u_.size()) - 1.0;
  }

  // Location of the concave maximum of h on [floor, 1]. Bisection on the
  // monotone derivative; a direct search on h itself would stall on the
  // flat quadratic top at rounding scale ~sqrt(eps).
  double argmax() const {
    if (dh(1.0) >= 0.0) return 1.0;
    double lo = floor_, hi = 1.0;  // dh(lo) = +inf, dh(hi) < 0
    for (int i = 0; i < 120; ++i) {
      const double m = 0.5 * (lo + hi);
      if (dh(m) > 0.0)
        lo = m;
      else
        hi = m;
    }
    return 0.5 * (lo + hi);
  }

  std::optional<ScalarLockResult> stable() const {
    if (floor_ > 1.0) return std::nullopt;
    if (floor_ == 0.0) return ScalarLockResult{1.0, 0.0, false};

    double R = 1.0;
    for (int it = 0; it < 10000; ++it) {
      if (R < floor_) break;  // passed every possible root
      const double hr = h(R);
      const double Rn = R + 0.5 * hr;
      if (std::abs(Rn - R) < 5e-16)
        return ScalarLockResult{Rn, std::abs(h(Rn)), false};
      R = Rn;
    }

    // Stalled near a tangency or escaped: locate the concave maximum.
    const double Rm = argmax();
    const double hm = h(Rm);
    if (hm < -1e-13) return std::nullopt;
    if (hm <= 1e-13) return ScalarLockResult{Rm, std::abs(hm), true};
    double a = Rm, b = 1.0;  // h(a) > 0 >= h(b)
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      if (h(m) > 0.0)
        a = m;
      else
        b = m;
    }
    const double root = 0.5 * (a + b);
    return ScalarLockResult{root, std::abs(h(root)), false};
  }

  // Smaller root (largest-angle branch); exists only when h(floor) < 0 and
  // the maximum of h is positive.
  std::optional<ScalarLockResult> unstable() const {
    if (floor_ > 1.0 || floor_ == 0.0) return std::nullopt;
    const double Rm = argmax();
    const double hm = h(Rm);
    if (hm < -1e-13) return std::nullopt;
    if (hm <= 1e-13) return ScalarLockResult{Rm, std::abs(hm), true};
    if (h(floor_) >= 0.0) return std::nullopt;
    double a = floor_, b = Rm;  // h(a) < 0 < h(b)
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      if (h(m) < 0.0)
        a = m;
      else
        b = m;
    }
    const double root = 0.5 * (a + b);
    return ScalarLockResult{root, std::abs(h(root)), false};
  }

 private:
  std::vector<double> u_;
  double floor_ = 0.0;
};

}  // namespace qsync::detail
