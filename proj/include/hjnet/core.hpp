#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>
#include <string>

namespace hjnet {

enum class ErrorCode {
  SelfLoop,
  Disconnected,
  LengthMismatch,
  DanglingReference,
  OutOfRange,
  EmptyGrid,
  TooFewPoints,
  NonMonotoneAbscissae,
  SuperlinearityScanFailed,
  NonConvexSlice,
  ScanFailed,
  StepTooLarge,
  EmptyControlInterval,
  NonFiniteValue,
  NotArcBranch,
  ReferenceUndefined,
  OutsideValidityWindow,
  TooFewNodes,
  InvalidArgument,
  Inadmissible,
  ParseError,
  ValidationError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Real number extended by +infinity, used for running costs outside their
/// effective domain. Arithmetic saturates at infinity instead of overflowing.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }

  /// Finite value; throws when called on the infinite sentinel.
  double value() const {
    if (infinite_) throw Error(ErrorCode::NonFiniteValue, "value() of infinite cost");
    return value_;
  }

  /// IEEE view: +inf for the sentinel.
  constexpr double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedReal(a.value_ + b.value_);
  }

  /// Scaling by a nonnegative factor; 0 * inf is taken as inf.
  friend constexpr ExtendedReal operator*(double k, ExtendedReal a) {
    if (a.infinite_) return infinity();
    return ExtendedReal(k * a.value_);
  }

  friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  friend constexpr std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
    if (a.infinite_) return std::partial_ordering::greater;
    if (b.infinite_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline ExtendedReal min(ExtendedReal a, ExtendedReal b) { return b < a ? b : a; }

/// Closed interval [lo, hi] of the real line.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return lo <= x && x <= hi; }

  /// Same center, half-width scaled by (1 + margin).
  Interval widened(double margin) const {
    const double half = 0.5 * width() * (1.0 + margin);
    return {center() - half, center() + half};
  }
};

}  // namespace hjnet
