#pragma once

#include <cstdint>
#include <span>

namespace heavyrisk {

/// Compensated summation for addends spanning many orders of magnitude.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
/// With zero hits the lower end is 0 and the upper end is the exact
/// one-sided bound 1 - (1 - level)^(1/n).
Interval wilson_interval(std::uint64_t hits, std::uint64_t n, double z = 1.959963984540054);

/// Kendall's tau-a for continuous data, O(n log n) via inversion counting.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic two-sample KS critical value at significance level `alpha`.
double ks_critical_value(std::size_t n1, std::size_t n2, double alpha = 0.01);

}  // namespace heavyrisk
