#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "compgrad/harness.hpp"

using namespace compgrad;

namespace {

const LandscapeRecord& find_record(const std::vector<LandscapeRecord>& recs,
                                   double point, const std::string& est) {
  for (const auto& r : recs)
    if (std::fabs(r.point - point) < 1e-12 && r.estimator == est) return r;
  throw std::runtime_error("record not found");
}

ExperimentConfig sigmoid_sweep_config() {
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "sigmoid";
  cfg.sweep = "temperature";
  cfg.grid = {1.0, 1e-3, 1e-5};
  cfg.estimators = {parse_policy("zeroth"), parse_policy("ivw"),
                    parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 100;
  cfg.sigma = 1.0;
  cfg.theta0 = 1.0;
  cfg.trials = 300;
  cfg.oracle_samples = 1000000;
  cfg.seed = 11;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_land").string();
  return cfg;
}

}  // namespace

TEST_CASE("config parsing round trip") {
  const auto cfg = parse_config(
      "# comment line\n"
      "experiment = landscape\n"
      "task = ball_with_wall\n"
      "sweep = theta\n"
      "grid = 0.1:0.3:0.1\n"
      "estimators = zeroth, ddcg:c=0.4;delta=0.1, aobg:gamma=0.005\n"
      "n_samples = 1000\n"
      "sigma = 0.1\n"
      "trials = 7\n"
      "seed = 99\n");
  CHECK(cfg.task == "ball_with_wall");
  REQUIRE(cfg.grid.size() == 3);
  CHECK(cfg.grid[1] == doctest::Approx(0.2));
  REQUIRE(cfg.estimators.size() == 3);
  CHECK(cfg.estimators[1].kind == MixKind::DDCG);
  CHECK(cfg.estimators[1].c == 0.4);
  CHECK(cfg.estimators[1].delta == 0.1);
  CHECK(cfg.estimators[2].gamma == 0.005);
  CHECK(cfg.trials == 7);
  CHECK(cfg.seed == 99);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("experiment = landscape\ntask = sigmoid\n"
                               "bogus_key = 3\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = landscape\ntask = sigmoid\n"
                               "estimators = warp\ngrid = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = landscape\ntask = sigmoid\n"
                               "estimators = ddcg:c=2\ngrid = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("quadratic landscape: pathwise estimator is unbiased") {
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "quadratic";
  cfg.grid = {1.5};
  cfg.estimators = {parse_policy("first")};
  cfg.n_samples = 100;
  cfg.sigma = 0.5;
  cfg.trials = 600;
  cfg.oracle_samples = 1000000;
  cfg.seed = 5;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_quad").string();
  const auto recs = landscape_sweep(cfg);
  REQUIRE(recs.size() == 1);
  // Smoothed gradient is exactly 2 theta = 3; the pathwise mean over 600
  // trials of 100 samples has standard error ~2 sigma/sqrt(60000).
  const double se = 2.0 * cfg.sigma / std::sqrt(600.0 * 100.0) + 1e-3;
  CHECK(recs[0].bias < 3.0 * se + 0.01);
  CHECK_FALSE(recs[0].oracle_flagged);

  // Bias-variance closure at >= 500 trials.
  const double mse = recs[0].sqrt_error * recs[0].sqrt_error;
  const double closure = recs[0].bias * recs[0].bias + recs[0].variance;
  CHECK(std::fabs(mse - closure) <= 0.1 * mse);
}

TEST_CASE("zero-gradient oracle points get flagged") {
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "quadratic";
  cfg.grid = {0.0};  // smoothed gradient is exactly zero here
  cfg.estimators = {parse_policy("first")};
  cfg.n_samples = 16;
  cfg.sigma = 0.5;
  cfg.trials = 5;
  cfg.oracle_samples = 10000;
  cfg.seed = 6;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_flag").string();
  const auto recs = landscape_sweep(cfg);
  CHECK(recs[0].oracle_flagged);
}

TEST_CASE("sigmoid temperature sweep reproduces the estimator ordering") {
  const auto cfg = sigmoid_sweep_config();
  const auto recs = landscape_sweep(cfg);

  const double ivw_smooth = find_record(recs, 1.0, "ivw").sqrt_error;
  const double ivw_sharp = find_record(recs, 1e-5, "ivw").sqrt_error;
  const double zeroth_sharp = find_record(recs, 1e-5, "zeroth").sqrt_error;
  const double ddcg_sharp = find_record(recs, 1e-5, "ddcg").sqrt_error;

  // IVW degrades badly as the transition sharpens; DDCG stays glued to the
  // 0th-order error.
  CHECK(ivw_sharp > 10.0 * ivw_smooth);
  CHECK(ivw_sharp > 3.0 * zeroth_sharp);
  CHECK(ddcg_sharp < 1.5 * zeroth_sharp);
  CHECK(find_record(recs, 1e-5, "ddcg").alpha_mean < 0.1);
  CHECK(find_record(recs, 1.0, "ddcg").alpha_mean > 0.8);
}

TEST_CASE("landscape csv output is byte-stable across reruns and jobs") {
  auto cfg = sigmoid_sweep_config();
  cfg.trials = 50;
  cfg.oracle_samples = 100000;
  auto run = [&](int jobs) {
    ExperimentConfig c = cfg;
    c.jobs = jobs;
    std::ostringstream os;
    write_landscape_csv(landscape_sweep(c), os);
    return os.str();
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(2);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("oracle cache returns identical values from disk") {
  const auto dir =
      (std::filesystem::temp_directory_path() / "cg_cache").string();
  std::filesystem::remove_all(dir);
  const auto env = quadratic_env();
  const std::vector<double> theta{2.0};
  const auto fresh =
      cached_oracle_gradient(env, theta, 0.5, 50000, 3, dir);
  const auto cached =
      cached_oracle_gradient(env, theta, 0.5, 50000, 3, dir);
  CHECK(fresh.grad == cached.grad);
  CHECK(fresh.std_error == cached.std_error);
  // The key changes with sigma, so this is a fresh computation.
  const auto other =
      cached_oracle_gradient(env, theta, 0.6, 50000, 3, dir);
  CHECK(other.grad != fresh.grad);
}

TEST_CASE("quadratic optimization converges for every estimator") {
  ExperimentConfig cfg;
  cfg.experiment = "optimize";
  cfg.task = "quadratic";
  cfg.estimators = {parse_policy("zeroth"), parse_policy("first"),
                    parse_policy("ivw"), parse_policy("aobg:gamma=1.4"),
                    parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 100;
  cfg.sigma = 0.1;
  cfg.trials = 3;
  cfg.iterations = 200;
  cfg.learning_rate = 0.05;
  cfg.theta0 = 5.0;
  cfg.seed = 8;
  const auto recs = optimize(cfg);
  for (const auto& policy : cfg.estimators) {
    // |theta| < 0.1 means final cost < 0.01.
    CHECK(median_final_cost(recs, policy.name()) < 0.01);
  }
  for (const auto& r : recs) CHECK_FALSE(r.flagged);
}

TEST_CASE("zero learning rate keeps the cost constant") {
  ExperimentConfig cfg;
  cfg.experiment = "optimize";
  cfg.task = "quadratic";
  cfg.estimators = {parse_policy("ivw")};
  cfg.n_samples = 16;
  cfg.sigma = 0.1;
  cfg.trials = 1;
  cfg.iterations = 20;
  cfg.learning_rate = 0.0;
  cfg.theta0 = 2.0;
  cfg.seed = 9;
  const auto recs = optimize(cfg);
  for (const auto& r : recs) CHECK(r.cost == doctest::Approx(4.0));
}

TEST_CASE("friction optimization stalls the pathwise estimator") {
  ExperimentConfig cfg;
  cfg.experiment = "optimize";
  cfg.task = "friction";
  cfg.estimators = {parse_policy("zeroth"), parse_policy("first"),
                    parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 100;
  cfg.sigma = 0.1;
  cfg.trials = 5;
  cfg.iterations = 50;
  cfg.learning_rate = 1.0;
  cfg.theta0 = 11.9;
  cfg.seed = 13;
  cfg.jobs = 2;
  const auto recs = optimize(cfg);
  const double first = median_final_cost(recs, "first");
  CHECK(median_final_cost(recs, "zeroth") < 0.95 * first);
  CHECK(median_final_cost(recs, "ddcg") < 0.95 * first);
}

TEST_CASE("ddcg with c = 1 equals ivw across a sweep") {
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "sigmoid";
  cfg.sweep = "temperature";
  cfg.grid = {1.0, 0.01};
  cfg.estimators = {parse_policy("ivw"), parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 50;
  cfg.sigma = 1.0;
  cfg.theta0 = 1.0;
  cfg.trials = 40;
  cfg.oracle_samples = 100000;
  cfg.seed = 14;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_c1").string();
  const auto sweeps = sensitivity_sweep_c(cfg, std::vector<double>{1.0});
  REQUIRE(sweeps.size() == 1);
  for (const auto& rec : sweeps[0].landscape) {
    if (rec.estimator != "ddcg") continue;
    const auto& ivw = find_record(sweeps[0].landscape, rec.point, "ivw");
    CHECK(rec.alpha_mean == ivw.alpha_mean);
    CHECK(rec.sqrt_error == ivw.sqrt_error);
    CHECK(rec.bias == ivw.bias);
  }
}

TEST_CASE("c = 0 falls back more often than c = 0.3 on the quadratic") {
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "quadratic";
  cfg.grid = {1.0};
  cfg.estimators = {parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 100;
  cfg.sigma = 0.5;
  cfg.trials = 300;
  cfg.oracle_samples = 100000;
  cfg.seed = 15;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_c0").string();
  const auto sweeps =
      sensitivity_sweep_c(cfg, std::vector<double>{0.0, 0.3});
  CHECK(sweeps[0].landscape[0].alpha_mean <
        sweeps[1].landscape[0].alpha_mean);
}

TEST_CASE("the major ball discontinuity is detected for every c") {
  const auto env = ball_with_wall_env();
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "ball_with_wall";
  cfg.grid = {env.jump_loci[0]};
  cfg.estimators = {parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 1000;
  cfg.sigma = 0.1;
  cfg.trials = 100;
  cfg.oracle_samples = 200000;
  cfg.seed = 16;
  cfg.jobs = 2;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_cball").string();
  const std::vector<double> c_grid{0.1, 0.3, 0.5, 0.7, 0.9};
  for (const auto& sweep : sensitivity_sweep_c(cfg, c_grid))
    CHECK(sweep.landscape[0].alpha_mean < 0.1);
}

TEST_CASE("gamma extremes pin aobg to its limits") {
  ExperimentConfig cfg;
  cfg.experiment = "landscape";
  cfg.task = "sigmoid";
  cfg.sweep = "temperature";
  cfg.grid = {1.0, 0.01};
  cfg.estimators = {parse_policy("zeroth"), parse_policy("ivw"),
                    parse_policy("aobg:gamma=1")};
  cfg.n_samples = 50;
  cfg.sigma = 1.0;
  cfg.theta0 = 1.0;
  cfg.trials = 40;
  cfg.oracle_samples = 100000;
  cfg.seed = 17;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "cg_gam").string();
  const auto sweeps = sensitivity_sweep_gamma(
      cfg, std::vector<double>{1e-12, 1e12});
  for (const auto& rec : sweeps[0].landscape) {
    if (rec.estimator == "aobg") {
      const auto& z = find_record(sweeps[0].landscape, rec.point, "zeroth");
      CHECK(rec.alpha_mean == 0.0);
      CHECK(rec.sqrt_error == z.sqrt_error);
    }
  }
  for (const auto& rec : sweeps[1].landscape) {
    if (rec.estimator == "aobg") {
      const auto& ivw = find_record(sweeps[1].landscape, rec.point, "ivw");
      CHECK(rec.alpha_mean == ivw.alpha_mean);
      CHECK(rec.sqrt_error == ivw.sqrt_error);
    }
  }
}

TEST_CASE("table1 experiment writes the expected csv shape") {
  ExperimentConfig cfg;
  cfg.experiment = "table1";
  cfg.table1_dims = {1, 4};
  cfg.table1_n = 200;
  cfg.table1_m = 500;
  cfg.seed = 18;
  const auto reports = table1_experiment(cfg);
  REQUIRE(reports.size() == 2);
  std::ostringstream os;
  write_table1_csv(reports, os);
  const std::string csv = os.str();
  CHECK(csv.find("d,n,m,cov_ddcg,cov_aobg,ratio") == 0);
  // One header plus one row per dimension.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  std::ostringstream js;
  write_table1_json(reports, js);
  CHECK(js.str().find("\"cov_ddcg\"") != std::string::npos);
}

TEST_CASE("ivwh training harness runs all modes deterministically") {
  ExperimentConfig cfg;
  cfg.experiment = "ivwh-train";
  cfg.task = "point_mass";
  cfg.modes = {"first", "zeroth", "ivwh"};
  cfg.trials = 2;
  cfg.iterations = 5;
  cfg.n_actors = 16;
  cfg.learning_rate = 0.05;
  cfg.seed = 19;
  cfg.jobs = 2;
  const auto a = ivwh_train_experiment(cfg);
  const auto b = ivwh_train_experiment(cfg);
  REQUIRE(a.size() == 3 * 2 * 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rec.return_mean == b[i].rec.return_mean);
    CHECK(a[i].rec.sim_steps == 16LL * 20);
  }
}

TEST_CASE("manifest carries the config hash and reduction convention") {
  ExperimentConfig cfg;
  cfg.experiment = "table1";
  cfg.raw_text = "experiment = table1\n";
  cfg.seed = 77;
  std::ostringstream os;
  write_manifest(cfg, 1.25, os);
  const std::string manifest = os.str();
  CHECK(manifest.find("\"seed\": 77") != std::string::npos);
  CHECK(manifest.find("vector_norm") != std::string::npos);
  CHECK(manifest.find("config_hash") != std::string::npos);
}

TEST_CASE("environment constants load from plain-text files") {
  const auto path =
      (std::filesystem::temp_directory_path() / "cg_envcfg.txt").string();
  {
    std::ofstream out(path);
    out << "# taller wall moves the grazing angles\n"
        << "wall_height = 3.0\n"
        << "speed = 10\n";
  }
  const auto params = load_env_params(path);
  CHECK(params.at("wall_height") == 3.0);

  const auto base = make_env("ball_with_wall");
  const auto tall = make_env("ball_with_wall", params);
  CHECK(tall.params.at("wall_height") == 3.0);
  REQUIRE(base.jump_loci.size() == 2);
  REQUIRE(tall.jump_loci.size() == 2);
  // A taller wall narrows the clearing window.
  CHECK(tall.jump_loci[0] > base.jump_loci[0]);
  CHECK(tall.jump_loci[1] < base.jump_loci[1]);

  const auto stiff = make_env("pushing_soft", {{"stiffness", 500.0}});
  CHECK(stiff.params.at("stiffness") == 500.0);

  CHECK_THROWS_AS(load_env_params("/no/such/env.txt"), ConfigError);
}

TEST_CASE("experiment configs can reference an env constants file") {
  const auto dir = std::filesystem::temp_directory_path() / "cg_envwire";
  std::filesystem::create_directories(dir);
  const auto env_path = (dir / "env.txt").string();
  {
    std::ofstream out(env_path);
    out << "goal = 1.0\n";
  }
  ExperimentConfig cfg = parse_config(
      "experiment = optimize\n"
      "task = friction\n"
      "estimators = zeroth\n"
      "n_samples = 8\n"
      "sigma = 0.1\n"
      "trials = 1\n"
      "iterations = 1\n"
      "learning_rate = 0\n"
      "theta0 = 0\n"
      "env_config = " + env_path + "\n");
  const auto recs = optimize(cfg);
  // Zero control, goal overridden to 1: the cost is goal^2 = 1.
  CHECK(recs[0].cost == doctest::Approx(1.0));
}

TEST_CASE("workable gamma ranges sit orders of magnitude apart across tasks") {
  // Largest gamma whose median final cost stays within 5% of the best on a
  // shared grid; the permissive frontier differs by >= 100x between the
  // collision task and the friction task.
  const std::vector<double> gammas{1e-4, 1e-3, 1e-2, 1e-1, 1.0,
                                   10.0, 100.0, 10000.0};
  auto frontier = [&](const ExperimentConfig& cfg) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> finals;
    for (const auto& sweep : sensitivity_sweep_gamma(cfg, gammas)) {
      finals.push_back(median_final_cost(sweep.optimize, "aobg"));
      best = std::min(best, finals.back());
    }
    const double threshold = best + 0.05 * std::fabs(best);
    double widest = 0.0;
    for (std::size_t i = 0; i < gammas.size(); ++i)
      if (finals[i] <= threshold) widest = gammas[i];
    return widest;
  };

  ExperimentConfig ball;
  ball.experiment = "optimize";
  ball.task = "ball_with_wall";
  ball.estimators = {parse_policy("aobg:gamma=1")};
  ball.n_samples = 50;
  ball.sigma = 0.1;
  ball.trials = 5;
  ball.iterations = 400;
  ball.learning_rate = 0.002;
  ball.theta0 = 0.7;
  ball.seed = 73;
  ball.jobs = 2;

  ExperimentConfig friction;
  friction.experiment = "optimize";
  friction.task = "friction";
  friction.estimators = {parse_policy("aobg:gamma=1")};
  friction.n_samples = 100;
  friction.sigma = 0.1;
  friction.trials = 5;
  friction.iterations = 50;
  friction.learning_rate = 1.0;
  friction.theta0 = 11.9;
  friction.seed = 71;
  friction.jobs = 2;

  const double ball_frontier = frontier(ball);
  const double friction_frontier = frontier(friction);
  CHECK(ball_frontier / friction_frontier >= 100.0);
}

TEST_CASE("collision-region ball optimization escapes via the 0th channel") {
  ExperimentConfig cfg;
  cfg.experiment = "optimize";
  cfg.task = "ball_with_wall";
  cfg.estimators = {parse_policy("zeroth"), parse_policy("first"),
                    parse_policy("ivw"), parse_policy("aobg:gamma=0.014"),
                    parse_policy("ddcg:c=0.3")};
  cfg.n_samples = 50;
  cfg.sigma = 0.1;
  cfg.trials = 7;
  cfg.iterations = 400;
  cfg.learning_rate = 0.002;
  cfg.theta0 = 0.7;
  cfg.seed = 73;
  cfg.jobs = 2;
  const auto recs = optimize(cfg);
  const double first = median_final_cost(recs, "first");
  const double ivw = median_final_cost(recs, "ivw");
  // The 0th-order channel and the gated/capped mixes cross the jump; the
  // pure pathwise estimator and plain IVW stay trapped in the hit branch.
  CHECK(median_final_cost(recs, "zeroth") < first - 2.0);
  CHECK(median_final_cost(recs, "ddcg") < first - 2.0);
  CHECK(median_final_cost(recs, "aobg") < first - 2.0);
  CHECK(median_final_cost(recs, "zeroth") < ivw - 2.0);
}
