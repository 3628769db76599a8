#pragma once

// Experiment orchestration: landscape error sweeps against the smoothed
// oracle, seeded gradient-descent comparisons, sensitivity sweeps over the
// gate constant c and the AoBG threshold gamma, and the test-statistic
// precision table. Every cell (grid point x trial) derives its own random
// stream, cells may run on any number of threads without changing a single
// bit of output, and all CSV numbers are printed with round-trip precision.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "compgrad/composite.hpp"
#include "compgrad/config.hpp"
#include "compgrad/envs.hpp"
#include "compgrad/estimators.hpp"
#include "compgrad/ivwh.hpp"
#include "compgrad/stats.hpp"

namespace compgrad {

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Index-sharded parallel loop; each item writes only its own slot, so the
// schedule cannot affect results.
inline void parallel_for(int count, int jobs,
                         const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  const int n_threads = std::min(jobs, count);
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w]() {
      for (int i = w; i < count; i += n_threads) body(i);
    });
  }
  for (auto& t : workers) t.join();
}

inline DifferentiableObjective task_for_point(const ExperimentConfig& cfg,
                                              double point) {
  std::map<std::string, double> overrides;
  if (!cfg.env_config.empty()) overrides = load_env_params(cfg.env_config);
  if (cfg.sweep == "temperature") {
    overrides["temperature"] = point;
    return make_env(cfg.task.rfind("sigmoid", 0) == 0 ? cfg.task : "sigmoid",
                    overrides);
  }
  return make_env(cfg.task, overrides);
}

}  // namespace detail

struct LandscapeRecord {
  double point = 0.0;  // theta, temperature, or sample count
  std::string estimator;
  double sqrt_error = 0.0;
  double variance = 0.0;
  double bias = 0.0;
  double alpha_mean = 0.0;
  int trials = 0;
  bool oracle_flagged = false;  // oracle stderr above 10% of its norm
};

// ---------------------------------------------------------------------------
// Oracle cache: ground-truth smoothed gradients are expensive, so they are
// stored on disk keyed by (task, theta, sigma, n_oracle, seed).
// ---------------------------------------------------------------------------

inline OracleGradient cached_oracle_gradient(const DifferentiableObjective& env,
                                             std::span<const double> theta,
                                             double sigma, long long n_oracle,
                                             std::uint64_t seed,
                                             const std::string& cache_dir) {
  std::string key = env.name;
  for (const auto& [k, v] : env.params) key += ";" + k + "=" + detail::fmt(v);
  for (double t : theta) key += ";theta=" + detail::fmt(t);
  key += ";sigma=" + detail::fmt(sigma);
  key += ";n=" + std::to_string(n_oracle);
  key += ";seed=" + std::to_string(seed);

  std::filesystem::path file;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.txt",
                  static_cast<unsigned long long>(fnv1a(key)));
    file = std::filesystem::path(cache_dir) / name;
    std::ifstream in(file);
    if (in) {
      std::string stored_key;
      std::getline(in, stored_key);
      if (stored_key == key) {
        OracleGradient out;
        const std::size_t dim = theta.size();
        out.grad.resize(dim);
        out.std_error.resize(dim);
        for (auto& v : out.grad) in >> v;
        for (auto& v : out.std_error) in >> v;
        if (in) return out;
      }
    }
  }

  SmoothedOracle oracle{env, sigma, n_oracle};
  const auto out = oracle_gradient(oracle, theta, seed);
  if (!cache_dir.empty()) {
    std::ofstream os(file);
    os << key << "\n";
    for (double v : out.grad) os << detail::fmt(v) << " ";
    os << "\n";
    for (double v : out.std_error) os << detail::fmt(v) << " ";
    os << "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Landscape sweep: per grid point and estimator, the error of the estimated
// gradient against the smoothed-oracle ground truth, decomposed into bias
// and variance over seeded trials. Batches are shared across estimators.
// ---------------------------------------------------------------------------

inline std::vector<LandscapeRecord> landscape_sweep(
    const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string cache =
      cfg.cache_dir.empty() ? cfg.out_dir + "/oracle_cache" : cfg.cache_dir;
  const int n_points = static_cast<int>(cfg.grid.size());
  const int n_est = static_cast<int>(cfg.estimators.size());
  std::vector<LandscapeRecord> records(
      static_cast<std::size_t>(n_points) * n_est);

  detail::parallel_for(n_points, cfg.jobs, [&](int gi) {
    const double point = cfg.grid[gi];
    const auto env = detail::task_for_point(cfg, point);
    const double theta0 = cfg.sweep == "theta" ? point : cfg.theta0;
    const int n_samples =
        cfg.sweep == "n" ? static_cast<int>(point) : cfg.n_samples;
    const std::vector<double> theta(env.dim, theta0);

    const auto oracle = cached_oracle_gradient(
        env, theta, cfg.sigma, cfg.oracle_samples,
        derive_stream(cfg.seed, 0xFACE), cache);
    const double oracle_norm = l2_norm(oracle.grad);
    const double oracle_se = l2_norm(oracle.std_error);
    const bool flagged = oracle_se > 0.1 * std::max(oracle_norm, 1e-12);

    SmoothingDistribution dist(theta, cfg.sigma);
    // grads[e][trial * dim + d], alphas[e][trial]
    std::vector<std::vector<double>> grads(n_est), alphas(n_est);
    for (int e = 0; e < n_est; ++e) {
      grads[e].resize(static_cast<std::size_t>(cfg.trials) * env.dim);
      alphas[e].resize(cfg.trials);
    }
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const auto batch = sample_batch(
          dist, env, n_samples,
          derive_stream(cfg.seed, static_cast<std::uint64_t>(gi),
                        static_cast<std::uint64_t>(trial)));
      const auto g0 = estimate_g0(batch, dist);
      const auto g1 = estimate_g1(batch);
      for (int e = 0; e < n_est; ++e) {
        const auto res = apply_mix(cfg.estimators[e], g0, g1, batch, dist);
        for (int d = 0; d < env.dim; ++d)
          grads[e][static_cast<std::size_t>(trial) * env.dim + d] =
              res.gradient[d];
        alphas[e][trial] = res.alpha_scalar();
      }
    }

    for (int e = 0; e < n_est; ++e) {
      LandscapeRecord rec;
      rec.point = point;
      rec.estimator = cfg.estimators[e].name();
      rec.trials = cfg.trials;
      rec.oracle_flagged = flagged;
      rec.alpha_mean = mean(alphas[e]);

      std::vector<double> sq_err(cfg.trials);
      for (int trial = 0; trial < cfg.trials; ++trial) {
        double s = 0.0;
        for (int d = 0; d < env.dim; ++d) {
          const double diff =
              grads[e][static_cast<std::size_t>(trial) * env.dim + d] -
              oracle.grad[d];
          s += diff * diff;
        }
        sq_err[trial] = s;
      }
      rec.sqrt_error = std::sqrt(mean(sq_err));

      double bias_sq = 0.0, var_total = 0.0;
      std::vector<double> col(cfg.trials);
      for (int d = 0; d < env.dim; ++d) {
        for (int trial = 0; trial < cfg.trials; ++trial)
          col[trial] =
              grads[e][static_cast<std::size_t>(trial) * env.dim + d];
        const double m = mean(col);
        bias_sq += (m - oracle.grad[d]) * (m - oracle.grad[d]);
        if (cfg.trials >= 2) var_total += sample_variance(col);
      }
      rec.bias = std::sqrt(bias_sq);
      rec.variance = var_total;
      records[static_cast<std::size_t>(gi) * n_est + e] = rec;
    }
  });
  return records;
}

inline void write_landscape_csv(const std::vector<LandscapeRecord>& records,
                                std::ostream& os,
                                const std::string& extra_col = "",
                                double extra_val = 0.0) {
  os << (extra_col.empty() ? "" : extra_col + ",")
     << "point,estimator,sqrt_error,variance,bias,alpha_mean,trials,"
        "oracle_flagged\n";
  for (const auto& r : records) {
    if (!extra_col.empty()) os << detail::fmt(extra_val) << ",";
    os << detail::fmt(r.point) << "," << r.estimator << ","
       << detail::fmt(r.sqrt_error) << "," << detail::fmt(r.variance) << ","
       << detail::fmt(r.bias) << "," << detail::fmt(r.alpha_mean) << ","
       << r.trials << "," << (r.oracle_flagged ? 1 : 0) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Optimization runs: plain gradient descent with a fixed learning rate,
// identical seeds across estimators.
// ---------------------------------------------------------------------------

struct OptimizeRecord {
  std::string estimator;
  int trial = 0;
  int iteration = 0;
  double cost = 0.0;
  double alpha = 0.0;
  bool flagged = false;  // NaN abort
};

inline std::vector<OptimizeRecord> optimize(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.iterations < 1) throw ConfigError("optimize: iterations missing");
  const auto env = cfg.env_config.empty()
                       ? make_env(cfg.task)
                       : make_env(cfg.task, load_env_params(cfg.env_config));
  const int n_est = static_cast<int>(cfg.estimators.size());
  const int cells = n_est * cfg.trials;
  std::vector<std::vector<OptimizeRecord>> per_cell(cells);

  detail::parallel_for(cells, cfg.jobs, [&](int cell) {
    const int e = cell / cfg.trials;
    const int trial = cell % cfg.trials;
    const auto& policy = cfg.estimators[e];
    std::vector<double> theta(env.dim, cfg.theta0);
    auto& recs = per_cell[cell];
    recs.reserve(cfg.iterations);
    for (int it = 0; it < cfg.iterations; ++it) {
      OptimizeRecord rec;
      rec.estimator = policy.name();
      rec.trial = trial;
      rec.iteration = it;
      rec.cost = env.eval(theta);
      if (!std::isfinite(rec.cost)) {
        rec.flagged = true;
        recs.push_back(rec);
        break;
      }
      SmoothingDistribution dist(theta, cfg.sigma);
      const auto batch = sample_batch(
          dist, env, cfg.n_samples,
          derive_stream(cfg.seed, static_cast<std::uint64_t>(trial),
                        static_cast<std::uint64_t>(it)));
      const auto g0 = estimate_g0(batch, dist);
      const auto g1 = estimate_g1(batch);
      const auto res = apply_mix(policy, g0, g1, batch, dist);
      rec.alpha = res.alpha_scalar();
      recs.push_back(rec);
      for (int d = 0; d < env.dim; ++d)
        theta[d] -= cfg.learning_rate * res.gradient[d];
    }
    OptimizeRecord final_rec;
    final_rec.estimator = policy.name();
    final_rec.trial = trial;
    final_rec.iteration = cfg.iterations;
    final_rec.cost = env.eval(theta);
    final_rec.alpha = recs.empty() ? 0.0 : recs.back().alpha;
    final_rec.flagged = !std::isfinite(final_rec.cost);
    recs.push_back(final_rec);
  });

  std::vector<OptimizeRecord> records;
  for (auto& cell : per_cell)
    records.insert(records.end(), cell.begin(), cell.end());
  return records;
}

inline void write_optimize_csv(const std::vector<OptimizeRecord>& records,
                               std::ostream& os,
                               const std::string& extra_col = "",
                               double extra_val = 0.0) {
  os << (extra_col.empty() ? "" : extra_col + ",")
     << "estimator,trial,iteration,cost,alpha,flagged\n";
  for (const auto& r : records) {
    if (!extra_col.empty()) os << detail::fmt(extra_val) << ",";
    os << r.estimator << "," << r.trial << "," << r.iteration << ","
       << detail::fmt(r.cost) << "," << detail::fmt(r.alpha) << ","
       << (r.flagged ? 1 : 0) << "\n";
  }
}

// Median cost at the final recorded iteration, per estimator.
inline double median_final_cost(const std::vector<OptimizeRecord>& records,
                                const std::string& estimator) {
  std::vector<double> finals;
  int last_iter = 0;
  for (const auto& r : records)
    if (r.estimator == estimator) last_iter = std::max(last_iter, r.iteration);
  for (const auto& r : records)
    if (r.estimator == estimator && r.iteration == last_iter)
      finals.push_back(r.cost);
  if (finals.empty()) throw ConfigError("no records for " + estimator);
  std::sort(finals.begin(), finals.end());
  return finals[finals.size() / 2];
}

// ---------------------------------------------------------------------------
// Sensitivity sweeps: the same landscape or optimization experiment
// repeated for each value of c (DDCG) or gamma (AoBG).
// ---------------------------------------------------------------------------

struct SweepResult {
  double value = 0.0;  // the swept c or gamma
  std::vector<LandscapeRecord> landscape;
  std::vector<OptimizeRecord> optimize;
};

inline std::vector<SweepResult> sensitivity_sweep_c(
    const ExperimentConfig& cfg, std::span<const double> c_grid) {
  std::vector<SweepResult> results;
  for (double c : c_grid) {
    ExperimentConfig sub = cfg;
    for (auto& p : sub.estimators)
      if (p.kind == MixKind::DDCG) p.c = c;
    SweepResult res;
    res.value = c;
    if (cfg.iterations > 0) {
      res.optimize = optimize(sub);
    } else {
      res.landscape = landscape_sweep(sub);
    }
    results.push_back(std::move(res));
  }
  return results;
}

inline std::vector<SweepResult> sensitivity_sweep_gamma(
    const ExperimentConfig& cfg, std::span<const double> gamma_grid) {
  std::vector<SweepResult> results;
  for (double gamma : gamma_grid) {
    ExperimentConfig sub = cfg;
    for (auto& p : sub.estimators)
      if (p.kind == MixKind::AoBG) p.gamma = gamma;
    SweepResult res;
    res.value = gamma;
    if (cfg.iterations > 0) {
      res.optimize = optimize(sub);
    } else {
      res.landscape = landscape_sweep(sub);
    }
    results.push_back(std::move(res));
  }
  return results;
}

// ---------------------------------------------------------------------------
// Test-statistic precision table.
// ---------------------------------------------------------------------------

inline std::vector<CoVReport> table1_experiment(const ExperimentConfig& cfg) {
  std::vector<CoVReport> reports;
  for (double d : cfg.table1_dims)
    reports.push_back(cov_experiment(static_cast<int>(d), cfg.table1_n,
                                     cfg.table1_m, 1.0,
                                     derive_stream(cfg.seed, 0x7AB1)));
  return reports;
}

inline void write_table1_csv(const std::vector<CoVReport>& reports,
                             std::ostream& os) {
  os << "d,n,m,cov_ddcg,cov_aobg,ratio\n";
  for (const auto& r : reports)
    os << r.d << "," << r.n << "," << r.m << "," << detail::fmt(r.cov_ddcg)
       << "," << detail::fmt(r.cov_aobg) << "," << detail::fmt(r.ratio)
       << "\n";
}

inline void write_table1_json(const std::vector<CoVReport>& reports,
                              std::ostream& os) {
  os << "[\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    os << "  {\"d\": " << r.d << ", \"n\": " << r.n << ", \"m\": " << r.m
       << ", \"cov_ddcg\": " << detail::fmt(r.cov_ddcg)
       << ", \"cov_aobg\": " << detail::fmt(r.cov_aobg)
       << ", \"ratio\": " << detail::fmt(r.ratio) << "}"
       << (i + 1 < reports.size() ? "," : "") << "\n";
  }
  os << "]\n";
}

// ---------------------------------------------------------------------------
// IVW-H training runs over seeds and fusion modes.
// ---------------------------------------------------------------------------

struct IvwhRunRecord {
  std::string mode;
  int trial = 0;
  TrainRecord rec;
};

inline std::vector<IvwhRunRecord> ivwh_train_experiment(
    const ExperimentConfig& cfg) {
  const int n_modes = static_cast<int>(cfg.modes.size());
  const int cells = n_modes * cfg.trials;
  std::vector<std::vector<IvwhRunRecord>> per_cell(cells);
  detail::parallel_for(cells, cfg.jobs, [&](int cell) {
    const int mi = cell / cfg.trials;
    const int trial = cell % cfg.trials;
    const std::string& mode_name = cfg.modes[mi];
    FusionMode mode;
    if (mode_name == "first") mode = FusionMode::First;
    else if (mode_name == "zeroth") mode = FusionMode::Zeroth;
    else if (mode_name == "ivwh") mode = FusionMode::IVWH;
    else throw ConfigError("unknown fusion mode: " + mode_name);

    auto env = make_trajectory_env(cfg.task);
    auto policy = GaussianPolicy::zeros(env.state_dim, env.action_dim, -1.0);
    TrainConfig tc;
    tc.mode = mode;
    tc.iterations = cfg.iterations;
    tc.n_actors = cfg.n_actors;
    tc.learning_rate = cfg.learning_rate;
    tc.seed = derive_stream(cfg.seed, static_cast<std::uint64_t>(trial));
    const auto records = train(env, policy, tc);
    for (const auto& r : records)
      per_cell[cell].push_back({mode_name, trial, r});
  });
  std::vector<IvwhRunRecord> out;
  for (auto& cell : per_cell)
    out.insert(out.end(), cell.begin(), cell.end());
  return out;
}

inline void write_ivwh_csv(const std::vector<IvwhRunRecord>& records,
                           std::ostream& os) {
  os << "mode,trial,iteration,return_mean,return_stderr,mean_alpha,"
        "grad_norm,sim_steps,diverged\n";
  for (const auto& r : records)
    os << r.mode << "," << r.trial << "," << r.rec.iteration << ","
       << detail::fmt(r.rec.return_mean) << ","
       << detail::fmt(r.rec.return_stderr) << ","
       << detail::fmt(r.rec.mean_alpha) << "," << detail::fmt(r.rec.grad_norm)
       << "," << r.rec.sim_steps << "," << (r.rec.diverged ? 1 : 0) << "\n";
}

inline double median_final_return(const std::vector<IvwhRunRecord>& records,
                                  const std::string& mode) {
  int last_iter = 0;
  for (const auto& r : records)
    if (r.mode == mode) last_iter = std::max(last_iter, r.rec.iteration);
  std::vector<double> finals;
  for (const auto& r : records)
    if (r.mode == mode && r.rec.iteration == last_iter)
      finals.push_back(r.rec.return_mean);
  if (finals.empty()) throw ConfigError("no records for mode " + mode);
  std::sort(finals.begin(), finals.end());
  return finals[finals.size() / 2];
}

// ---------------------------------------------------------------------------
// Run manifest: configuration hash, seed, library version, wall time, and
// the reduction convention for the score-statistic CoV.
// ---------------------------------------------------------------------------

inline constexpr const char* kVersion = "0.1.0";

inline void write_manifest(const ExperimentConfig& cfg, double wall_seconds,
                           std::ostream& os) {
  os << "{\n"
     << "  \"config_hash\": \"" << std::hex << fnv1a(cfg.raw_text) << std::dec
     << "\",\n"
     << "  \"seed\": " << cfg.seed << ",\n"
     << "  \"version\": \"" << kVersion << "\",\n"
     << "  \"wall_seconds\": " << detail::fmt(wall_seconds) << ",\n"
     << "  \"aobg_reduction\": \"vector_norm\"\n"
     << "}\n";
}

}  // namespace compgrad
