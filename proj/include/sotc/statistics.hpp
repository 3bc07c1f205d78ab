/// @file    statistics.hpp
/// @brief   Replication statistics: mean, unbiased standard deviation and
///          the Student-t 95% confidence half-width.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace sotc {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;           ///< sample standard deviation (n - 1 denominator), 0 for n = 1
  double ci95_half = 0.0;    ///< t(0.975, n-1) · sd / sqrt(n); NaN for n = 1

  double ci_lo() const noexcept { return mean - ci95_half; }
  double ci_hi() const noexcept { return mean + ci95_half; }
};

/// Throws std::invalid_argument on empty input. The result does not depend
/// on the order of `values`.
inline Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  Summary s;
  s.n = v.size();
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n == 1) {
    s.sd = 0.0;
    s.ci95_half = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  const boost::math::students_t dist(static_cast<double>(s.n - 1));
  s.ci95_half = boost::math::quantile(dist, 0.975) * s.sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

/// True when the two 95% intervals share no point.
inline bool ci_disjoint(const Summary& a, const Summary& b) {
  return a.ci_hi() < b.ci_lo() || b.ci_hi() < a.ci_lo();
}

}  // namespace sotc
