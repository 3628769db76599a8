#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "compgrad/harness.hpp"

#ifndef COMPGRAD_CLI_PATH
#error "COMPGRAD_CLI_PATH must be defined by the build"
#endif

namespace {

namespace fs = std::filesystem;
using namespace compgrad;

int run(const std::string& args) {
  const std::string cmd = std::string(COMPGRAD_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "cg_cli";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const auto path = (work_dir() / name).string();
  std::ofstream out(path);
  out << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("table1 runs are byte-identical for a fixed seed") {
  const auto cfg = write_config("t1.cfg",
                                "experiment = table1\n"
                                "table1_dims = 1,2\n"
                                "table1_n = 200\n"
                                "table1_m = 300\n");
  const auto out_a = work_dir() / "t1a";
  const auto out_b = work_dir() / "t1b";
  REQUIRE(run("table1 --config " + cfg + " --seed 7 --out " +
              out_a.string()) == 0);
  REQUIRE(run("table1 --config " + cfg + " --seed 7 --out " +
              out_b.string()) == 0);
  const auto a = slurp(out_a / "table1.csv");
  const auto b = slurp(out_b / "table1.csv");
  CHECK(a == b);
  CHECK(!a.empty());
  CHECK(fs::exists(out_a / "manifest.json"));
  CHECK(fs::exists(out_a / "table1.json"));
}

TEST_CASE("gradcheck subcommand passes on a shipped environment") {
  CHECK(run("gradcheck --task ball_with_wall") == 0);
  CHECK(run("gradcheck --task friction") == 0);
}

TEST_CASE("error paths use distinct exit codes") {
  CHECK(run("gradcheck --task warp_drive") == 2);       // unknown task
  CHECK(run("landscape --config /no/such/file.cfg") == 3);
  const auto bad = write_config("bad.cfg", "experiment = landscape\nbogus = 1\n");
  CHECK(run("landscape --config " + bad) == 3);
}

TEST_CASE("cli landscape output matches a direct harness call") {
  const std::string cfg_text =
      "experiment = landscape\n"
      "task = quadratic\n"
      "sweep = theta\n"
      "grid = 0.5,1.0\n"
      "estimators = zeroth,ivw\n"
      "n_samples = 50\n"
      "sigma = 0.5\n"
      "trials = 40\n"
      "oracle_samples = 100000\n"
      "seed = 33\n";
  const auto cfg_path = write_config("land.cfg", cfg_text);
  const auto out = work_dir() / "land_out";
  REQUIRE(run("landscape --config " + cfg_path + " --out " + out.string()) ==
          0);

  auto cfg = parse_config(cfg_text);
  cfg.out_dir = out.string();
  std::ostringstream direct;
  write_landscape_csv(landscape_sweep(cfg), direct);
  CHECK(slurp(out / "landscape.csv") == direct.str());
}

TEST_CASE("plot subcommand emits series per estimator") {
  const std::string cfg_text =
      "experiment = landscape\n"
      "task = quadratic\n"
      "grid = 0.5,1.0,1.5\n"
      "estimators = zeroth,first,ivw\n"
      "n_samples = 30\n"
      "sigma = 0.5\n"
      "trials = 20\n"
      "oracle_samples = 50000\n"
      "seed = 3\n";
  const auto cfg_path = write_config("plot_src.cfg", cfg_text);
  const auto out = work_dir() / "plot_out";
  REQUIRE(run("landscape --config " + cfg_path + " --out " + out.string()) ==
          0);
  const auto svg = (out / "err.svg").string();
  REQUIRE(run("plot --input " + (out / "landscape.csv").string() +
              " --metric sqrt_error --out " + svg) == 0);
  const auto content = slurp(svg);
  std::size_t paths = 0, pos = 0;
  while ((pos = content.find("<path ", pos)) != std::string::npos) {
    ++paths;
    pos += 6;
  }
  CHECK(paths == 3);

  // Missing column in the CSV is a config-class error.
  CHECK(run("plot --input " + (out / "landscape.csv").string() +
            " --metric nope --out " + svg) == 3);
}

TEST_CASE("presets resolve through the environment variable") {
  const auto dir = work_dir() / "presets_env";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "mini_table1.cfg");
    out << "experiment = table1\ntable1_dims = 1\ntable1_n = 100\n"
           "table1_m = 100\n";
  }
  const auto out = work_dir() / "preset_out";
  const std::string cmd = "COMPGRAD_PRESETS=" + dir.string() + " " +
                          COMPGRAD_CLI_PATH +
                          " table1 --config mini_table1.cfg --out " +
                          out.string() + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(out / "table1.csv"));
}

TEST_CASE("every shipped preset parses and validates") {
#ifdef COMPGRAD_PRESETS_DIR
  int count = 0;
  for (const auto& entry :
       fs::directory_iterator(fs::path(COMPGRAD_PRESETS_DIR))) {
    if (entry.path().extension() != ".cfg") continue;
    INFO(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
    ++count;
  }
  CHECK(count >= 15);
#endif
}
