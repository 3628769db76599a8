#pragma once

// Plain-text experiment configuration: `key = value` lines, `#` comments.
// Grids are either comma lists or start:stop:step ranges; estimator lists
// name each policy with optional parameters, e.g.
//   estimators = zeroth,first,ivw,aobg:gamma=0.005,ddcg:c=0.3
// Presets shipped under presets/ use exactly this format.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "compgrad/composite.hpp"
#include "compgrad/errors.hpp"

namespace compgrad {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace detail

inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3)
      throw ConfigError("grid range must be start:stop:step, got: " + text);
    const double start = std::stod(parts[0]);
    const double stop = std::stod(parts[1]);
    const double step = std::stod(parts[2]);
    if (!(step > 0.0)) throw ConfigError("grid step must be positive");
    for (double v = start; v <= stop + 0.5 * step; v += step)
      grid.push_back(v);
  } else {
    for (const auto& item : detail::split(text, ','))
      if (!item.empty()) grid.push_back(std::stod(item));
  }
  if (grid.empty()) throw ConfigError("grid is empty: " + text);
  return grid;
}

inline MixPolicy parse_policy(const std::string& text) {
  MixPolicy policy;
  const auto colon = text.find(':');
  const std::string name = detail::trim(text.substr(0, colon));
  if (name == "zeroth") {
    policy.kind = MixKind::Zeroth;
  } else if (name == "first") {
    policy.kind = MixKind::First;
  } else if (name == "ivw") {
    policy.kind = MixKind::IVW;
  } else if (name == "aobg") {
    policy.kind = MixKind::AoBG;
  } else if (name == "ddcg") {
    policy.kind = MixKind::DDCG;
  } else {
    throw ConfigError("unknown estimator: " + name);
  }
  if (colon != std::string::npos) {
    for (const auto& kv : detail::split(text.substr(colon + 1), ';')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("estimator parameter must be key=value: " + kv);
      const std::string key = detail::trim(kv.substr(0, eq));
      const double value = std::stod(kv.substr(eq + 1));
      if (key == "gamma") {
        policy.gamma = value;
      } else if (key == "c") {
        policy.c = value;
      } else if (key == "delta") {
        policy.delta = value;
      } else {
        throw ConfigError("unknown estimator parameter: " + key);
      }
    }
  }
  policy.validate();
  return policy;
}

struct ExperimentConfig {
  std::string experiment;  // landscape | optimize | sweep-c | sweep-gamma |
                           // table1 | ivwh-train
  std::string task;
  std::string sweep = "theta";  // theta | temperature | n
  std::vector<double> grid;
  std::vector<MixPolicy> estimators;
  int n_samples = 100;
  double sigma = 0.1;
  int trials = 100;
  int iterations = 0;
  double learning_rate = 0.0;
  double theta0 = 0.0;
  long long oracle_samples = 10000000;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
  std::string cache_dir;  // oracle cache; defaults to out_dir/oracle_cache
  std::string env_config;  // optional plain-text environment constants

  // sensitivity sweeps
  std::vector<double> c_grid = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
  std::vector<double> gamma_grid;

  // table1
  std::vector<double> table1_dims = {1, 16, 64, 128};
  int table1_n = 1000;
  int table1_m = 10000;

  // ivwh-train
  std::vector<std::string> modes = {"first", "zeroth", "ivwh"};
  int n_actors = 32;

  std::string raw_text;  // for the manifest hash

  void validate() const {
    if (experiment.empty()) throw ConfigError("config: experiment missing");
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    for (const auto& p : estimators) p.validate();
    if (experiment == "landscape" || experiment == "optimize" ||
        experiment == "sweep-c" || experiment == "sweep-gamma") {
      if (task.empty()) throw ConfigError("config: task missing");
      if (estimators.empty()) throw ConfigError("config: estimators missing");
    }
    if (experiment == "landscape" && grid.empty())
      throw ConfigError("config: grid missing");
  }
};

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.raw_text = text;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line is not key = value: " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "experiment") cfg.experiment = value;
    else if (key == "task") cfg.task = value;
    else if (key == "sweep") cfg.sweep = value;
    else if (key == "grid") cfg.grid = parse_grid(value);
    else if (key == "estimators") {
      cfg.estimators.clear();
      for (const auto& e : detail::split(value, ','))
        cfg.estimators.push_back(parse_policy(e));
    } else if (key == "n_samples") cfg.n_samples = std::stoi(value);
    else if (key == "sigma") cfg.sigma = std::stod(value);
    else if (key == "trials") cfg.trials = std::stoi(value);
    else if (key == "iterations") cfg.iterations = std::stoi(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "theta0") cfg.theta0 = std::stod(value);
    else if (key == "oracle_samples") cfg.oracle_samples = std::stoll(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "jobs") cfg.jobs = std::stoi(value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "cache_dir") cfg.cache_dir = value;
    else if (key == "env_config") cfg.env_config = value;
    else if (key == "c_grid") cfg.c_grid = parse_grid(value);
    else if (key == "gamma_grid") cfg.gamma_grid = parse_grid(value);
    else if (key == "table1_dims") cfg.table1_dims = parse_grid(value);
    else if (key == "table1_n") cfg.table1_n = std::stoi(value);
    else if (key == "table1_m") cfg.table1_m = std::stoi(value);
    else if (key == "modes") cfg.modes = detail::split(value, ',');
    else if (key == "n_actors") cfg.n_actors = std::stoi(value);
    else throw ConfigError("unknown config key: " + key);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

// FNV-1a content hash, used in run manifests.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace compgrad
