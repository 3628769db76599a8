#pragma once

// Elementary gradient estimation under Gaussian randomized smoothing.
//
// A batch draws N perturbations eps_i ~ N(0, I), evaluates the objective and
// its gradient at zeta_i = theta + sigma * eps_i, and remembers the baseline
// value at theta. The 0th-order (score-function) and 1st-order (pathwise)
// estimates are then pure reductions over the batch.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compgrad/errors.hpp"
#include "compgrad/objective.hpp"
#include "compgrad/reduce.hpp"
#include "compgrad/rng.hpp"

namespace compgrad {

struct SmoothingDistribution {
  std::vector<double> theta;  // mean parameter
  double sigma = 1.0;         // isotropic scale, > 0

  SmoothingDistribution(std::vector<double> mean, double scale)
      : theta(std::move(mean)), sigma(scale) {
    if (!(sigma > 0.0)) throw ConfigError("SmoothingDistribution: sigma must be > 0");
    if (theta.empty()) throw ConfigError("SmoothingDistribution: dimension must be >= 1");
  }

  int dim() const { return static_cast<int>(theta.size()); }
};

struct SampleBatch {
  std::vector<double> epsilons;  // N x D, row-major standard-normal draws
  std::vector<double> values;    // N objective values f(zeta_i)
  std::vector<double> grads;     // N x D gradients at zeta_i
  double baseline = 0.0;         // f(theta)
  int n = 0;
  int dim = 0;

  std::span<const double> eps_row(int i) const {
    return {epsilons.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> grad_row(int i) const {
    return {grads.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
};

struct GradEstimate {
  std::vector<double> mean;         // length D
  std::vector<double> var_per_dim;  // length D, 1/(N-1) normalization
  double var_scalar = 0.0;          // sum over dimensions of var_per_dim
  int n = 0;
};

// Unbiased per-dimension variance of M row vectors plus its scalar
// (summed-over-dimensions) form.
inline std::pair<std::vector<double>, double> empirical_variance(
    std::span<const double> samples, int m, int dim) {
  if (m < 2) throw InsufficientSamples("empirical_variance: need M >= 2");
  std::vector<double> per_dim(dim, 0.0);
  std::vector<double> col(m);
  for (int d = 0; d < dim; ++d) {
    for (int i = 0; i < m; ++i)
      col[i] = samples[static_cast<std::size_t>(i) * dim + d];
    per_dim[d] = sample_variance(col);
  }
  const double scalar = pairwise_sum(per_dim);
  return {per_dim, scalar};
}

namespace detail {

inline GradEstimate reduce_per_sample(std::span<const double> rows, int n,
                                      int dim) {
  GradEstimate est;
  est.n = n;
  est.mean.resize(dim);
  std::vector<double> col(n);
  for (int d = 0; d < dim; ++d) {
    for (int i = 0; i < n; ++i)
      col[i] = rows[static_cast<std::size_t>(i) * dim + d];
    est.mean[d] = mean(col);
  }
  auto [per_dim, scalar] = empirical_variance(rows, n, dim);
  est.var_per_dim = std::move(per_dim);
  est.var_scalar = scalar;
  return est;
}

}  // namespace detail

// Draws N samples zeta_i = theta + sigma * eps_i and evaluates the objective
// and its gradient at each. The per-sample noise stream depends only on
// (seed, i), so the batch is identical however evaluation is scheduled.
inline SampleBatch sample_batch(const SmoothingDistribution& dist,
                                const DifferentiableObjective& objective,
                                int n, std::uint64_t seed) {
  if (n < 2) throw InsufficientSamples("sample_batch: need n >= 2");
  if (objective.dim != dist.dim())
    throw ConfigError("sample_batch: objective dimension " +
                      std::to_string(objective.dim) +
                      " != distribution dimension " +
                      std::to_string(dist.dim()));

  const int dim = dist.dim();
  SampleBatch batch;
  batch.n = n;
  batch.dim = dim;
  batch.epsilons.resize(static_cast<std::size_t>(n) * dim);
  batch.values.resize(n);
  batch.grads.resize(static_cast<std::size_t>(n) * dim);
  batch.baseline = objective.eval(dist.theta);
  if (!std::isfinite(batch.baseline))
    throw NumericError("sample_batch: non-finite baseline value at theta");

  std::vector<double> zeta(dim);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    double* eps = batch.epsilons.data() + static_cast<std::size_t>(i) * dim;
    for (int d = 0; d < dim; ++d) {
      eps[d] = rng.normal();
      zeta[d] = dist.theta[d] + dist.sigma * eps[d];
    }
    const double v = objective.eval(zeta);
    if (!std::isfinite(v))
      throw NumericError("sample_batch: non-finite value at sample " +
                         std::to_string(i));
    batch.values[i] = v;
    const std::vector<double> g = objective.grad(zeta);
    for (int d = 0; d < dim; ++d) {
      if (!std::isfinite(g[d]))
        throw NumericError("sample_batch: non-finite gradient at sample " +
                           std::to_string(i));
      batch.grads[static_cast<std::size_t>(i) * dim + d] = g[d];
    }
  }
  return batch;
}

// Score-function estimate: per-sample g0_i = (eps_i / sigma) (f(zeta_i) - b),
// reduced to mean and empirical variances.
inline GradEstimate estimate_g0(const SampleBatch& batch,
                                const SmoothingDistribution& dist) {
  if (batch.n < 2) throw InsufficientSamples("estimate_g0: need N >= 2");
  const int dim = batch.dim;
  std::vector<double> per_sample(static_cast<std::size_t>(batch.n) * dim);
  for (int i = 0; i < batch.n; ++i) {
    const double w = (batch.values[i] - batch.baseline) / dist.sigma;
    const auto eps = batch.eps_row(i);
    for (int d = 0; d < dim; ++d)
      per_sample[static_cast<std::size_t>(i) * dim + d] = eps[d] * w;
  }
  return detail::reduce_per_sample(per_sample, batch.n, dim);
}

// Pathwise estimate: per-sample g1_i = grad f(zeta_i) (the smoothing map has
// unit Jacobian in theta), reduced to mean and empirical variances.
inline GradEstimate estimate_g1(const SampleBatch& batch) {
  if (batch.n < 2) throw InsufficientSamples("estimate_g1: need N >= 2");
  return detail::reduce_per_sample(batch.grads, batch.n, batch.dim);
}

}  // namespace compgrad
