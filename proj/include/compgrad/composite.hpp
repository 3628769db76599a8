#pragma once

// Estimator combination. The 0th- and 1st-order estimates are mixed as
// alpha * g1 + (1 - alpha) * g0, with alpha chosen by inverse-variance
// weighting, by the AoBG interpolation rule, or by the DDCG gate: a
// statistical test that falls back to the 0th-order estimate when the
// empirical gradient variance is implausibly small for the observed value
// variance, the signature of a discontinuity.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compgrad/errors.hpp"
#include "compgrad/estimators.hpp"
#include "compgrad/reduce.hpp"
#include "compgrad/special.hpp"

namespace compgrad {

enum class MixKind { Zeroth, First, IVW, AoBG, DDCG };
enum class VarianceMode { Scalar, PerDimension };

struct MixPolicy {
  MixKind kind = MixKind::IVW;
  double gamma = 1.0;   // AoBG precision threshold, > 0
  double c = 0.3;       // DDCG quadratic-relaxation constant, in [0, 1]
  double delta = 0.05;  // confidence level, in (0, 1)
  VarianceMode variance_mode = VarianceMode::Scalar;

  void validate() const {
    if (kind == MixKind::AoBG && !(gamma > 0.0))
      throw ConfigError("MixPolicy: AoBG requires gamma > 0");
    if (kind == MixKind::DDCG && !(c >= 0.0 && c <= 1.0))
      throw ConfigError("MixPolicy: DDCG requires c in [0,1]");
    if ((kind == MixKind::DDCG || kind == MixKind::AoBG) &&
        !(delta > 0.0 && delta < 1.0))
      throw ConfigError("MixPolicy: delta must be in (0,1)");
  }

  std::string name() const {
    switch (kind) {
      case MixKind::Zeroth: return "zeroth";
      case MixKind::First: return "first";
      case MixKind::IVW: return "ivw";
      case MixKind::AoBG: return "aobg";
      case MixKind::DDCG: return "ddcg";
    }
    return "?";
  }
};

struct MixDiagnostics {
  double v0 = 0.0;        // scalar empirical variance of g0 per-sample estimates
  double v1 = 0.0;        // scalar empirical variance of g1 per-sample estimates
  double eps_v = 0.0;     // chi-squared allowance on v1 (DDCG)
  double test_lhs = 0.0;  // v1 + eps_v
  double test_rhs = 0.0;  // 2(1-c) Vf/sigma^2 - 2 |mean g1|^2
  double bias_proxy = 0.0;  // B = |g1.mean - g0.mean|
  double eps_conf = 0.0;    // AoBG confidence term
};

struct MixResult {
  std::vector<double> gradient;
  std::vector<double> alpha;  // length 1 (scalar mode) or D (per-dimension)
  bool gate_passed = true;    // meaningful for DDCG only
  MixDiagnostics diagnostics;

  double alpha_scalar() const {
    return alpha.size() == 1 ? alpha[0] : mean(alpha);
  }
};

// Optimal inverse-variance weight v0 / (v0 + v1). Both variances zero means
// the 1st-order estimate is locally exact, so the degenerate case returns 1.
inline double ivw_alpha(double v0, double v1) {
  if (v0 < 0.0 || v1 < 0.0)
    throw std::invalid_argument("ivw_alpha: variances must be nonnegative");
  const double s = v0 + v1;
  if (s == 0.0) return 1.0;
  return v0 / s;
}

// Elementwise alpha * g1 + (1 - alpha) * g0. alpha has length 1 or D.
inline std::vector<double> combine(const GradEstimate& g0,
                                   const GradEstimate& g1,
                                   std::span<const double> alpha) {
  const std::size_t dim = g0.mean.size();
  if (g1.mean.size() != dim)
    throw ConfigError("combine: estimate dimensions differ");
  if (alpha.size() != 1 && alpha.size() != dim)
    throw ConfigError("combine: alpha must be scalar or length D");
  std::vector<double> out(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double a = alpha.size() == 1 ? alpha[0] : alpha[d];
    if (a == 0.0) {
      out[d] = g0.mean[d];
    } else if (a == 1.0) {
      out[d] = g1.mean[d];
    } else {
      out[d] = a * g1.mean[d] + (1.0 - a) * g0.mean[d];
    }
  }
  return out;
}

inline double l2_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// One-sided chi-squared allowance on an empirical variance: with confidence
// 1 - delta the true variance is at most v_hat * (n-1) / q_delta, so the
// upward slack is eps_v = v_hat * ((n-1)/q_delta - 1).
inline double variance_bound_epsilon(double v_hat, int n, double delta) {
  if (n < 2) throw InsufficientSamples("variance_bound_epsilon: need n >= 2");
  if (v_hat < 0.0)
    throw std::invalid_argument("variance_bound_epsilon: v_hat must be >= 0");
  if (v_hat == 0.0) return 0.0;
  const double q = chi_squared_quantile(delta, static_cast<double>(n - 1));
  return v_hat * (static_cast<double>(n - 1) / q - 1.0);
}

// AoBG: start from the IVW-optimal weight, then cap the admitted bias
// alpha * B at gamma minus a confidence term on the 0th-order estimate.
inline MixResult aobg_alpha(const GradEstimate& g0, const GradEstimate& g1,
                            double gamma, double delta = 0.05) {
  if (!(gamma > 0.0)) throw ConfigError("aobg_alpha: gamma must be > 0");
  MixResult res;
  res.diagnostics.v0 = g0.var_scalar;
  res.diagnostics.v1 = g1.var_scalar;

  const double alpha_opt = ivw_alpha(g0.var_scalar, g1.var_scalar);
  std::vector<double> diff(g0.mean.size());
  for (std::size_t d = 0; d < diff.size(); ++d)
    diff[d] = g1.mean[d] - g0.mean[d];
  const double bias_proxy = l2_norm(diff);

  // Normal-approximation bound on the error of the mean 0th-order gradient.
  const double z = normal_quantile(1.0 - delta / 2.0);
  const double eps_conf =
      z * std::sqrt(g0.var_scalar / static_cast<double>(g0.n));
  res.diagnostics.bias_proxy = bias_proxy;
  res.diagnostics.eps_conf = eps_conf;

  const double budget = gamma - eps_conf;
  double a;
  if (budget <= 0.0) {
    a = 0.0;
  } else if (alpha_opt * bias_proxy <= budget) {
    a = alpha_opt;
  } else {
    a = std::min(1.0, std::max(0.0, budget / bias_proxy));
  }
  res.alpha = {a};
  res.gradient = combine(g0, g1, res.alpha);
  return res;
}

// The DDCG gate. Under local smoothness and a reliable variance estimate,
// the gradient variance cannot fall much below the value-variance proxy
// 2(1-c) Vf / sigma^2 - 2 |mean grad|^2; failing that inequality flags a
// discontinuity.
struct DdcgTest {
  bool passed = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double eps_v = 0.0;
  double value_variance = 0.0;
};

inline DdcgTest ddcg_test(const SampleBatch& batch, const GradEstimate& g1,
                          const SmoothingDistribution& dist, double c,
                          double delta) {
  DdcgTest t;
  t.value_variance = sample_variance(batch.values);
  t.eps_v = variance_bound_epsilon(g1.var_scalar, batch.n, delta);
  t.lhs = g1.var_scalar + t.eps_v;
  const double mean_norm = l2_norm(g1.mean);
  t.rhs = 2.0 * (1.0 - c) * t.value_variance / (dist.sigma * dist.sigma) -
          2.0 * mean_norm * mean_norm;
  t.passed = t.lhs >= t.rhs;
  return t;
}

inline MixResult ddcg_mix(const GradEstimate& g0, const GradEstimate& g1,
                          const SampleBatch& batch,
                          const SmoothingDistribution& dist, double c,
                          double delta,
                          VarianceMode mode = VarianceMode::Scalar) {
  const DdcgTest t = ddcg_test(batch, g1, dist, c, delta);
  MixResult res;
  res.gate_passed = t.passed;
  res.diagnostics.v0 = g0.var_scalar;
  res.diagnostics.v1 = g1.var_scalar;
  res.diagnostics.eps_v = t.eps_v;
  res.diagnostics.test_lhs = t.lhs;
  res.diagnostics.test_rhs = t.rhs;

  if (!t.passed) {
    res.alpha = {0.0};
  } else if (mode == VarianceMode::Scalar) {
    res.alpha = {ivw_alpha(g0.var_scalar, g1.var_scalar)};
  } else {
    res.alpha.resize(g0.mean.size());
    for (std::size_t d = 0; d < res.alpha.size(); ++d)
      res.alpha[d] = ivw_alpha(g0.var_per_dim[d], g1.var_per_dim[d]);
  }
  res.gradient = combine(g0, g1, res.alpha);
  return res;
}

// Applies a mixing policy to a pair of estimates from a shared batch.
inline MixResult apply_mix(const MixPolicy& policy, const GradEstimate& g0,
                           const GradEstimate& g1, const SampleBatch& batch,
                           const SmoothingDistribution& dist) {
  policy.validate();
  MixResult res;
  switch (policy.kind) {
    case MixKind::Zeroth:
      res.alpha = {0.0};
      res.gradient = combine(g0, g1, res.alpha);
      break;
    case MixKind::First:
      res.alpha = {1.0};
      res.gradient = combine(g0, g1, res.alpha);
      break;
    case MixKind::IVW:
      if (policy.variance_mode == VarianceMode::Scalar) {
        res.alpha = {ivw_alpha(g0.var_scalar, g1.var_scalar)};
      } else {
        res.alpha.resize(g0.mean.size());
        for (std::size_t d = 0; d < res.alpha.size(); ++d)
          res.alpha[d] = ivw_alpha(g0.var_per_dim[d], g1.var_per_dim[d]);
      }
      res.gradient = combine(g0, g1, res.alpha);
      break;
    case MixKind::AoBG:
      res = aobg_alpha(g0, g1, policy.gamma, policy.delta);
      break;
    case MixKind::DDCG:
      res = ddcg_mix(g0, g1, batch, dist, policy.c, policy.delta,
                     policy.variance_mode);
      break;
  }
  res.diagnostics.v0 = g0.var_scalar;
  res.diagnostics.v1 = g1.var_scalar;
  return res;
}

}  // namespace compgrad
