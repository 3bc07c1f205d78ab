/// @file    interval.hpp
/// @brief   Closed real intervals with the arithmetic and order relations
///          used to compare predicted delay costs.
///
/// Two order relations are provided. `lt_certain` is Moore's strict order
/// (A < B iff a.hi < b.lo), meaningful only for disjoint intervals.
/// `prec_uncertain` is the Ishibuchi-Tanaka dominance order for overlapping
/// intervals (A ≺ B iff a.lo <= b.lo, a.hi <= b.hi and A != B). Together
/// they satisfy A < B and C ≺ A  =>  C < B, which the action selection
/// procedure relies on.

#pragma once

#include <ostream>
#include <stdexcept>
#include <string>

namespace sotc {

class Interval {
public:
  constexpr Interval() = default;

  /// Throws std::invalid_argument when lo > hi.
  constexpr Interval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo <= hi)) {
      throw std::invalid_argument("Interval: lower endpoint " + std::to_string(lo) +
                                  " exceeds upper endpoint " + std::to_string(hi));
    }
  }

  /// Degenerate interval [x, x].
  static constexpr Interval point(double x) { return Interval(x, x); }

  constexpr double lo() const noexcept { return lo_; }
  constexpr double hi() const noexcept { return hi_; }
  constexpr double width() const noexcept { return hi_ - lo_; }
  constexpr double center() const noexcept { return 0.5 * (lo_ + hi_); }
  constexpr bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }

  constexpr bool operator==(const Interval&) const = default;

private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

inline constexpr Interval make_interval(double lo, double hi) { return Interval(lo, hi); }

inline constexpr Interval operator+(const Interval& a, const Interval& b) {
  return Interval(a.lo() + b.lo(), a.hi() + b.hi());
}

/// k * [lo, hi] for k >= 0.
inline constexpr Interval scale(const Interval& a, double k) {
  if (k < 0.0) {
    throw std::invalid_argument("Interval scale: negative factor");
  }
  return Interval(k * a.lo(), k * a.hi());
}

/// Endpoint product, restricted to nonnegative operands.
inline constexpr Interval operator*(const Interval& a, const Interval& b) {
  if (a.lo() < 0.0 || b.lo() < 0.0) {
    throw std::invalid_argument("Interval product: operands must be nonnegative");
  }
  return Interval(a.lo() * b.lo(), a.hi() * b.hi());
}

inline constexpr double center(const Interval& a) noexcept { return a.center(); }

/// Moore order: every point of `a` lies strictly below every point of `b`.
inline constexpr bool lt_certain(const Interval& a, const Interval& b) noexcept {
  return a.hi() < b.lo();
}

inline constexpr bool eq(const Interval& a, const Interval& b) noexcept { return a == b; }

/// a.lo <= b.lo and a.hi <= b.hi.
inline constexpr bool prec_or_eq(const Interval& a, const Interval& b) noexcept {
  return a.lo() <= b.lo() && a.hi() <= b.hi();
}

/// Ishibuchi-Tanaka order: `a` is possibly, not certainly, better than `b`.
inline constexpr bool prec_uncertain(const Interval& a, const Interval& b) noexcept {
  return prec_or_eq(a, b) && !eq(a, b);
}

inline std::ostream& operator<<(std::ostream& os, const Interval& a) {
  return os << '[' << a.lo() << ", " << a.hi() << ']';
}

}  // namespace sotc
