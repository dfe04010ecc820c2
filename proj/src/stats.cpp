#include "heavyrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "heavyrisk/error.hpp"

namespace heavyrisk {

Interval wilson_interval(std::uint64_t hits, std::uint64_t n, double z) {
  if (n == 0) throw InvalidArgument("wilson_interval: n must be positive");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  if (hits == 0) {
    // Wilson collapses at zero hits; use the exact one-sided bound instead.
    const double miss = std::erfc(z / std::sqrt(2.0));
    return {0.0, 1.0 - std::pow(miss, 1.0 / nn)};
  }
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

// Counts inversions of v while merge-sorting it.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("kendall_tau: need two equally sized samples of length >= 2");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const double discordant = static_cast<double>(count_inversions(ys, buf, 0, n));
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return (pairs - 2.0 * discordant) / pairs;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_statistic: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n1, std::size_t n2, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  return c * std::sqrt((a + b) / (a * b));
}

}  // namespace heavyrisk
