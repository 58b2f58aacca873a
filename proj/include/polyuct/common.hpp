#pragma once

#include <cmath>
#include <stdexcept>

namespace polyuct {

/// Thrown when a configured budget (tree nodes, cover centers, search caps)
/// is exhausted. Distinct from std::invalid_argument so callers can map the
/// two failure classes to different exit codes.
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compensated accumulator. Cumulative reward statistics are long sums of
/// bounded terms; plain summation drifts by O(n*eps) which is visible at the
/// tolerances the tree-consistency checks use.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

/// ceil() that snaps near-integers first. Schedule formulas are often
/// mathematically integral (e.g. log_{1/2}(1/16) = 4); a stray ulp must not
/// round them up.
inline double snap_ceil(double x, double rel_tol = 1e-9) {
  const double r = std::round(x);
  if (std::abs(x - r) <= rel_tol * std::max(1.0, std::abs(r))) return r;
  return std::ceil(x);
}

}  // namespace polyuct
