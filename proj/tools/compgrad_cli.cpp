// compgrad command-line interface.
//
// Subcommands map one-to-one onto harness experiments:
//   landscape | optimize | sweep-c | sweep-gamma | table1 | ivwh-train
// plus `gradcheck` (finite-difference verification of an environment) and
// `plot` (SVG chart from a result CSV). Config files are key = value text;
// bare config names are resolved against $COMPGRAD_PRESETS or ./presets.
//
// Exit codes: 0 ok, 2 usage/unknown task, 3 malformed config, 4 numeric
// abort, 1 anything else. Failures print a JSON error record to stderr.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "compgrad/harness.hpp"
#include "compgrad/plot.hpp"

namespace {

namespace fs = std::filesystem;
using namespace compgrad;

std::string resolve_config_path(const std::string& name) {
  if (fs::exists(name)) return name;
  if (const char* presets = std::getenv("COMPGRAD_PRESETS")) {
    const fs::path p = fs::path(presets) / name;
    if (fs::exists(p)) return p.string();
  }
  const fs::path local = fs::path("presets") / name;
  if (fs::exists(local)) return local.string();
  throw ConfigError("config not found: " + name);
}

struct CommonOpts {
  std::string config;
  std::string out_dir = "out";
  std::int64_t seed = -1;  // -1 keeps the config seed
  int jobs = 0;            // 0 keeps the config jobs
};

ExperimentConfig load_with_overrides(const CommonOpts& opts,
                                     const std::string& expected_experiment) {
  auto cfg = load_config(resolve_config_path(opts.config));
  if (cfg.experiment != expected_experiment)
    throw ConfigError("config experiment is '" + cfg.experiment +
                      "', expected '" + expected_experiment + "'");
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.jobs > 0) cfg.jobs = opts.jobs;
  cfg.out_dir = opts.out_dir;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

void finish_run(const ExperimentConfig& cfg,
                std::chrono::steady_clock::time_point start) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ofstream manifest(fs::path(cfg.out_dir) / "manifest.json");
  write_manifest(cfg, wall, manifest);
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opts.config,
                            "config file or preset name");
  if (needs_config) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "seed override");
  cmd->add_option("--jobs", opts.jobs, "worker threads");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"composite policy-gradient estimator benchmarks"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string task, metric = "sqrt_error", input, plot_out = "plot.svg";
  bool log_scale = false;

  auto* landscape = app.add_subcommand("landscape", "estimator error sweep");
  add_common(landscape, opts);
  auto* optimize_cmd =
      app.add_subcommand("optimize", "seeded gradient-descent comparison");
  add_common(optimize_cmd, opts);
  auto* sweep_c = app.add_subcommand("sweep-c", "DDCG c sensitivity");
  add_common(sweep_c, opts);
  auto* sweep_gamma =
      app.add_subcommand("sweep-gamma", "AoBG gamma sensitivity");
  add_common(sweep_gamma, opts);
  auto* table1 = app.add_subcommand("table1", "test-statistic precision");
  add_common(table1, opts);
  auto* ivwh = app.add_subcommand("ivwh-train", "stepwise fusion training");
  add_common(ivwh, opts);

  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck_cmd->add_option("--task", task, "environment name")->required();
  gradcheck_cmd->add_option("--seed", opts.seed, "seed override");

  auto* plot = app.add_subcommand("plot", "emit an SVG chart from a CSV");
  plot->add_option("--input", input, "input CSV")->required();
  plot->add_option("--metric", metric, "column to plot");
  plot->add_option("--out", plot_out, "output SVG path");
  plot->add_flag("--log", log_scale, "log-scale vertical axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const auto start = std::chrono::steady_clock::now();

  if (landscape->parsed()) {
    const auto cfg = load_with_overrides(opts, "landscape");
    const auto records = landscape_sweep(cfg);
    std::ofstream os(fs::path(cfg.out_dir) / "landscape.csv");
    write_landscape_csv(records, os);
    finish_run(cfg, start);
    std::cout << "wrote " << records.size() << " records to " << cfg.out_dir
              << "/landscape.csv\n";
  } else if (optimize_cmd->parsed()) {
    const auto cfg = load_with_overrides(opts, "optimize");
    const auto records = optimize(cfg);
    std::ofstream os(fs::path(cfg.out_dir) / "optimize.csv");
    write_optimize_csv(records, os);
    finish_run(cfg, start);
    for (const auto& p : cfg.estimators)
      std::cout << p.name() << " median final cost "
                << median_final_cost(records, p.name()) << "\n";
  } else if (sweep_c->parsed()) {
    const auto cfg = load_with_overrides(opts, "sweep-c");
    const auto sweeps = sensitivity_sweep_c(cfg, cfg.c_grid);
    std::ofstream os(fs::path(cfg.out_dir) / "sweep_c.csv");
    bool header = true;
    for (const auto& s : sweeps) {
      std::ostringstream block;
      if (cfg.iterations > 0) {
        write_optimize_csv(s.optimize, block, "c", s.value);
      } else {
        write_landscape_csv(s.landscape, block, "c", s.value);
      }
      std::string text = block.str();
      if (!header) text = text.substr(text.find('\n') + 1);
      os << text;
      header = false;
    }
    finish_run(cfg, start);
    std::cout << "wrote sweep over " << sweeps.size() << " c values\n";
  } else if (sweep_gamma->parsed()) {
    const auto cfg = load_with_overrides(opts, "sweep-gamma");
    if (cfg.gamma_grid.empty())
      throw ConfigError("sweep-gamma requires gamma_grid");
    const auto sweeps = sensitivity_sweep_gamma(cfg, cfg.gamma_grid);
    std::ofstream os(fs::path(cfg.out_dir) / "sweep_gamma.csv");
    bool header = true;
    for (const auto& s : sweeps) {
      std::ostringstream block;
      if (cfg.iterations > 0) {
        write_optimize_csv(s.optimize, block, "gamma", s.value);
      } else {
        write_landscape_csv(s.landscape, block, "gamma", s.value);
      }
      std::string text = block.str();
      if (!header) text = text.substr(text.find('\n') + 1);
      os << text;
      header = false;
    }
    finish_run(cfg, start);
    std::cout << "wrote sweep over " << sweeps.size() << " gamma values\n";
  } else if (table1->parsed()) {
    const auto cfg = load_with_overrides(opts, "table1");
    const auto reports = table1_experiment(cfg);
    {
      std::ofstream os(fs::path(cfg.out_dir) / "table1.csv");
      write_table1_csv(reports, os);
    }
    {
      std::ofstream os(fs::path(cfg.out_dir) / "table1.json");
      write_table1_json(reports, os);
    }
    finish_run(cfg, start);
    for (const auto& r : reports)
      std::cout << "d=" << r.d << " cov_ddcg=" << r.cov_ddcg
                << " cov_aobg=" << r.cov_aobg << " ratio=" << r.ratio << "\n";
  } else if (ivwh->parsed()) {
    const auto cfg = load_with_overrides(opts, "ivwh-train");
    const auto records = ivwh_train_experiment(cfg);
    std::ofstream os(fs::path(cfg.out_dir) / "ivwh_train.csv");
    write_ivwh_csv(records, os);
    finish_run(cfg, start);
    for (const auto& mode : cfg.modes)
      std::cout << mode << " median final return "
                << median_final_return(records, mode) << "\n";
  } else if (gradcheck_cmd->parsed()) {
    const auto env = make_env(task);
    const auto report = gradcheck(
        env, 100, opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : 7);
    std::cout << "task=" << env.name << " checked=" << report.checked
              << " excluded=" << report.excluded
              << " max_rel_error=" << report.max_rel_error << "\n";
    if (report.max_rel_error > 1e-5) {
      std::cerr << "{\"error\": \"gradient check failed\", \"code\": 4}\n";
      return 4;
    }
  } else if (plot->parsed()) {
    emit_plot(input, metric, plot_out, log_scale);
    std::cout << "wrote " << plot_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const UnknownTaskError& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\", \"code\": 2}\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\", \"code\": 3}\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\", \"code\": 4}\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\", \"code\": 1}\n";
    return 1;
  }
}
