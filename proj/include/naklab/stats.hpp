#pragma once

#include <cstdint>
#include <span>

namespace naklab {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for `successes` out of `n` Bernoulli trials.
Interval wilson_interval(std::int64_t successes, std::int64_t n, double z = kZ95);

// Least-squares slope of ys against xs.
double ols_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace naklab
