#pragma once

// Fixed-order reductions. Means and variances everywhere in the library go
// through pairwise summation over a deterministic index order, so results do
// not depend on how sampling was scheduled.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace compgrad {

namespace detail {

inline double pairwise_sum_impl(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(x.first(half)) + pairwise_sum_impl(x.subspan(half));
}

}  // namespace detail

inline double pairwise_sum(std::span<const double> x) {
  return detail::pairwise_sum_impl(x);
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty input");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

// Unbiased (1/(n-1)) sample variance.
inline double sample_variance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need n >= 2");
  const double m = mean(x);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

inline double sample_stddev(std::span<const double> x) {
  return std::sqrt(sample_variance(x));
}

}  // namespace compgrad
