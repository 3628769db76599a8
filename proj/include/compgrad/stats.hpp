#pragma once

// Precision comparison of the two discontinuity-test statistics on the
// linear toy objective f(x) = sum_j x_j with x ~ N(0, sigma^2 I_d):
//
//   value-variance statistic   Z = |x|^2 / sigma^2           (mean d)
//   score-function statistic   g = f(x) x / sigma^2          (mean 1-vector)
//
// Z aggregates the per-coordinate squared values the same way the gate's
// gradient-variance statistic sums squared deviations over dimensions; it is
// chi-squared with d dof per sample, so its batch mean has CoV sqrt(2/(n d)).
// Using the squared scalar value f(x)^2 instead would leave the CoV at
// sqrt(2/n) for every d and erase the dimension gap the comparison is about.
//
// Each trial averages a batch of n samples; the coefficient of variation of
// the batch statistic over m trials measures how noisy each test is. The
// score statistic is a d-vector, so its CoV is taken in the vector sense:
// sqrt of the summed per-component variance over the norm of the mean
// vector. (Reducing the vector to its component mean first collapses it to
// a multiple of Z and hides the gap.)
//
// Also here: the closed-form variance of the two-point random gradient that
// takes value G/p with probability p, the textbook infinite-variance
// construction.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "compgrad/errors.hpp"
#include "compgrad/reduce.hpp"
#include "compgrad/rng.hpp"

namespace compgrad {

struct CoVReport {
  int d = 0;
  int n = 0;
  int m = 0;
  double cov_ddcg = 0.0;
  double cov_aobg = 0.0;
  double ratio = 0.0;
};

// Closed forms: CoV of the value-variance statistic is sqrt(2/(n d)); the
// score statistic has total variance d(d+1), giving sqrt((d+1)/n), usually
// quoted as ~sqrt(d/n).
inline std::pair<double, double> analytic_cov(int d, int n) {
  if (d < 1 || n < 1) throw ConfigError("analytic_cov: d, n must be >= 1");
  const double nd = static_cast<double>(n) * d;
  return {std::sqrt(2.0 / nd),
          std::sqrt(static_cast<double>(d) / static_cast<double>(n))};
}

inline CoVReport cov_experiment(int d, int n, int m, double sigma,
                                std::uint64_t seed) {
  if (d < 1 || n < 1 || m < 1)
    throw ConfigError("cov_experiment: d, n, m must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("cov_experiment: sigma must be > 0");

  const double inv_s2 = 1.0 / (sigma * sigma);
  std::vector<double> vhat(m);                              // per-trial Z mean
  std::vector<double> gmean(static_cast<std::size_t>(m) * d);  // per-trial g mean

  std::vector<double> x(d);
  for (int j = 0; j < m; ++j) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(j)));
    double zsum = 0.0;
    double* gacc = gmean.data() + static_cast<std::size_t>(j) * d;
    for (int a = 0; a < d; ++a) gacc[a] = 0.0;
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      double norm_sq = 0.0;
      for (int a = 0; a < d; ++a) {
        x[a] = sigma * rng.normal();
        s += x[a];
        norm_sq += x[a] * x[a];
      }
      zsum += norm_sq * inv_s2;
      const double w = s * inv_s2;
      for (int a = 0; a < d; ++a) gacc[a] += w * x[a];
    }
    vhat[j] = zsum / n;
    for (int a = 0; a < d; ++a) gacc[a] /= n;
  }

  CoVReport rep;
  rep.d = d;
  rep.n = n;
  rep.m = m;
  rep.cov_ddcg = sample_stddev(vhat) / mean(vhat);

  // Vector CoV of the score statistic over trials.
  double var_total = 0.0;
  double mean_sq = 0.0;
  std::vector<double> col(m);
  for (int a = 0; a < d; ++a) {
    for (int j = 0; j < m; ++j)
      col[j] = gmean[static_cast<std::size_t>(j) * d + a];
    const double mu = mean(col);
    var_total += sample_variance(col);
    mean_sq += mu * mu;
  }
  rep.cov_aobg = std::sqrt(var_total) / std::sqrt(mean_sq);
  rep.ratio = rep.cov_ddcg > 0.0 ? rep.cov_aobg / rep.cov_ddcg : 0.0;
  return rep;
}

// Variance of the random gradient taking value G/p with probability p and 0
// otherwise: G^2 (1/p - 1). Unbounded as p -> 0.
inline double two_point_gradient_variance(double g_mean, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::domain_error("two_point_gradient_variance: p must be in (0,1]");
  return g_mean * g_mean * (1.0 / p - 1.0);
}

}  // namespace compgrad
