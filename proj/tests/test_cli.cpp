#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

// Runs the CLI with stderr captured to a file.
Run tvcn_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + TVCN_CLI_PATH + "\" " + args + " > \"" +
                          (dir / "stdout.txt").string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run run;
  run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  run.err = ss.str();
  return run;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("analyze on a simulated case") {
  const auto dir = tvcn::test::scratch_dir("cli_analyze");
  const std::string common = "analyze --case 1 --n 450 --seed 7 --B 500 --rule bh --alpha 0.1 ";
  REQUIRE(tvcn_cli(common + "--out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(tvcn_cli(common + "--out " + (dir / "b").string(), dir).code == 0);

  std::ifstream in(dir / "a" / "networks.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["p"] == 6);
  CHECK(j["snapshots"].size() > 0);
  CHECK(slurp(dir / "a" / "networks.json") == slurp(dir / "b" / "networks.json"));
  CHECK(slurp(dir / "a" / "pvalues.csv") == slurp(dir / "b" / "pvalues.csv"));
  // Columns j, t and one per pair.
  std::ifstream pv(dir / "a" / "pvalues.csv");
  std::string header;
  std::getline(pv, header);
  CHECK(std::count(header.begin(), header.end(), ',') == 16);
  CHECK(fs::exists(dir / "a" / "tuning.txt"));
  CHECK(fs::exists(dir / "a" / "evaluation.csv"));

  std::ifstream mf(dir / "a" / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  CHECK(manifest["subcommand"] == "analyze");
  CHECK(manifest["seed"] == 7);

  REQUIRE(tvcn_cli("analyze --case 1 --n 450 --seed 8 --B 500 --out " + (dir / "c").string(), dir).code == 0);
  CHECK(slurp(dir / "a" / "pvalues.csv") != slurp(dir / "c" / "pvalues.csv"));
}

TEST_CASE("usage and runtime errors") {
  const auto dir = tvcn::test::scratch_dir("cli_errors");
  const std::string out = " --out " + (dir / "o").string();
  auto run = tvcn_cli("analyze --case 1 --alpha 1.5" + out, dir);
  CHECK(run.code == 2);
  CHECK(run.err.find("\"error\":\"usage\"") != std::string::npos);
  CHECK(std::count(run.err.begin(), run.err.end(), '\n') == 1);
  CHECK(nlohmann::json::parse(run.err)["error"] == "usage");

  CHECK(tvcn_cli("" + out, dir).code == 2);
  CHECK(tvcn_cli("frobnicate" + out, dir).code == 2);
  CHECK(tvcn_cli("analyze --rule holm --case 1" + out, dir).code == 2);
  CHECK(tvcn_cli("analyze --case 1 --B 50" + out, dir).code == 2);

  run = tvcn_cli("analyze --input " + (dir / "missing.csv").string() + out, dir);
  CHECK(run.code == 1);
  CHECK(nlohmann::json::parse(run.err)["error"] == "runtime");
  CHECK(tvcn_cli("--help", dir).code == 0);
}

TEST_CASE("simulate then analyze the written panel") {
  const auto dir = tvcn::test::scratch_dir("cli_roundtrip");
  REQUIRE(tvcn_cli("simulate --case 2 --n 450 --seed 3 --out " + (dir / "sim").string(), dir).code == 0);
  CHECK(count_lines(dir / "sim" / "panel.csv") == 451);
  CHECK(fs::exists(dir / "sim" / "truth.csv"));
  REQUIRE(tvcn_cli("analyze --input " + (dir / "sim" / "panel.csv").string() + " --B 200 --emit estimates,svg --out " +
                       (dir / "an").string(),
                   dir)
              .code == 0);
  std::ifstream in(dir / "an" / "networks.json");
  CHECK(nlohmann::json::parse(in)["p"] == 9);
  CHECK(fs::exists(dir / "an" / "estimates.csv"));
  CHECK(fs::exists(dir / "an" / "edges.svg"));
  CHECK_FALSE(fs::exists(dir / "an" / "evaluation.csv"));

  REQUIRE(tvcn_cli("tune --input " + (dir / "sim" / "panel.csv").string() + " --out " + (dir / "tu").string(), dir)
              .code == 0);
  CHECK(slurp(dir / "tu" / "tuning.txt").find("w = ") != std::string::npos);
}

TEST_CASE("experiment and baseline tables") {
  const auto dir = tvcn::test::scratch_dir("cli_experiment");
  REQUIRE(tvcn_cli("experiment --case 1 --reps 5 --n 450 --B 200 --emit trajectories --out " +
                       (dir / "ex").string(),
                   dir)
              .code == 0);
  CHECK(count_lines(dir / "ex" / "experiment_bh.csv") == 1 + 5 + 1);
  CHECK(count_lines(dir / "ex" / "experiment_by.csv") == 1 + 5 + 1);
  CHECK(fs::exists(dir / "ex" / "trajectory_bh.csv"));

  REQUIRE(tvcn_cli("baseline --case 1 --threshold 0.3 --out " + (dir / "bl").string(), dir).code == 0);
  std::ifstream summary(dir / "bl" / "summary.txt");
  std::string header, row;
  std::getline(summary, header);
  std::getline(summary, row);
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  REQUIRE(cells.size() == 7);
  MESSAGE("baseline threshold 0.3 average FDP (%): " << cells[2]);
  CHECK(std::stod(cells[2]) < 2.0);
}

TEST_CASE("config file values yield to flags") {
  const auto dir = tvcn::test::scratch_dir("cli_config");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# flat key = value\ncase = 1\nn = 450\nalpha = 0.05\nseed = 3\nB = 200\n";
  }
  REQUIRE(tvcn_cli("analyze --config " + (dir / "run.cfg").string() + " --seed 4 --out " + (dir / "o").string(), dir)
              .code == 0);
  std::ifstream mf(dir / "o" / "manifest.json");
  CHECK(nlohmann::json::parse(mf)["seed"] == 4);
  std::ifstream net(dir / "o" / "networks.json");
  CHECK(nlohmann::json::parse(net)["alpha"] == 0.05);

  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "colour = blue\n";
  }
  CHECK(tvcn_cli("analyze --config " + (dir / "bad.cfg").string() + " --out " + (dir / "p").string(), dir).code == 2);
}
