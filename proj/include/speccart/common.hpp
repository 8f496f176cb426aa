#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace speccart {

/// Contract violation: bad arguments, inconsistent shapes, invalid configs.
/// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure at runtime (singular systems, diverged iterations).
/// The CLI maps this to exit code 1.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

/// Compensated accumulator; keeps reduction order-independent sums stable
/// to ~1e-16 regardless of term count.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

constexpr double kPi = 3.14159265358979323846;

}  // namespace speccart
