#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjhom/harness.hpp"

using namespace hjhom;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hjhom_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig small_suite(ExperimentConfig c) {
  c.budgets = SuiteBudgets{4, 3, 4, 2, 10, 10, 2, 300};
  return c;
}

std::map<std::string, bool> verdicts(const SuiteReport& r) {
  std::map<std::string, bool> m;
  for (const auto& c : r.checks) m[c.name] = c.passed;
  return m;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HJHOM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("default config") {
  auto c = ExperimentConfig::defaults();
  CHECK_NOTHROW(c.validate());
  CHECK(c.eps == std::vector<double>{0.2, 0.1, 0.05, 0.025});
  CHECK(c.grid_n(0.2) == 160);
  CHECK(c.grid_n(0.025) == 1280);
  CHECK(c.resolved_base_n() == 160);
  CHECK(c.resolved_homogenized_n() == 1280);
  auto again = ExperimentConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"default", "example_b", "broken_coupling", "y_independent", "table_source"}) {
    CAPTURE(name);
    auto c = ExperimentConfig::load(std::string(HJHOM_CONFIGS) + "/" + name + ".json");
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("config errors") {
  const json base = ExperimentConfig::defaults().to_json();
  auto with = [&](const char* key, json value) {
    json j = base;
    j[key] = std::move(value);
    return j;
  };
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("eps", {0.3})), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("eps", {0.1, 0.2})), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("bogus", 1)), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("u0", {"sin(2*pi*x)", "0"})), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("u0", "sin(2*pi*y)")), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("T", -1.0)), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("domain", {{"L", 1.0}, {"cells_per_eps", 16}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("domain", {{"L", 1.0}, {"base_n", 100}})), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("hbar", {{"source", "magic"}})), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("hbar", {{"source", "file"}, {"path", "/nonexistent.hbar"}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(with("system_file", "x.json")), std::invalid_argument);
  CHECK_THROWS(ExperimentConfig::load("/nonexistent/config.json"));
}

TEST_CASE("system_file is resolved next to the config") {
  auto dir = scratch("sysfile");
  {
    std::ofstream(dir / "sys.json") << example_system_json("example_a").dump();
    json cfg = {{"system_file", "sys.json"}, {"eps", {0.5, 0.25}}, {"T", 0.1}};
    std::ofstream(dir / "cfg.json") << cfg.dump();
  }
  auto c = ExperimentConfig::load((dir / "cfg.json").string());
  CHECK(c.system->M() == 1);
  CHECK(c.system_json == example_system_json("example_a"));
}

TEST_CASE("y-independent sweep: errors at scheme-noise level, independent of eps") {
  auto c = ExperimentConfig::load(std::string(HJHOM_CONFIGS) + "/y_independent.json");
  auto report = run_convergence(c, 1);
  REQUIRE(report.runs.size() == c.eps.size());
  const double h = c.L / report.base_n;
  for (double e : report.errors()) CHECK(e <= 5 * std::sqrt(h) * (1 + c.T));
  CHECK(report.hbar_source == "y_independent");
}

TEST_CASE("plot data round trip and empty report") {
  auto c = ExperimentConfig::defaults();
  c.eps = {0.5, 0.25};
  c.T = 0.2;
  auto report = run_convergence(c, 1);
  SliceTable slice{{-1.0, 0.0, 1.0}, {3.0, 3.0, 3.0}};
  auto dir = scratch("plot");
  emit_plot_data(report, slice, dir);

  auto rows = read_rows(dir / "eps_error.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"eps", "error", "ratio"});
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::stod(rows[k + 1][0]) == report.runs[k].eps);
    CHECK(std::stod(rows[k + 1][1]) == report.runs[k].error);
  }
  CHECK(std::stod(rows[2][2]) == report.errors()[0] / report.errors()[1]);

  auto srows = read_rows(dir / "hbar_slice.csv");
  REQUIRE(srows.size() == 4);
  CHECK(srows[0] == std::vector<std::string>{"p", "hbar"});
  CHECK(std::stod(srows[1][0]) == -1.0);
  CHECK(std::stod(srows[3][1]) == 3.0);

  auto prows = read_rows(dir / "solution_profiles.csv");
  REQUIRE(prows.size() == static_cast<std::size_t>(report.base_n) + 1);
  CHECK(prows[0].size() == 2 + report.runs.size());
  for (std::size_t k = 0; k < static_cast<std::size_t>(report.base_n); ++k) {
    CHECK(std::stod(prows[k + 1][1]) == report.homogenized_profile->values()[k]);
    CHECK(std::stod(prows[k + 1][2]) == report.runs[0].profile.values()[k]);
  }

  auto empty_dir = scratch("plot_empty");
  emit_plot_data(ConvergenceReport{}, SliceTable{}, empty_dir);
  for (const char* f : {"eps_error.csv", "hbar_slice.csv", "solution_profiles.csv"}) {
    CAPTURE(f);
    CHECK(read_rows(empty_dir / f).size() == 1);
  }
}

TEST_CASE("example slice exposes the flat part") {
  auto slice = example_slice(0);
  REQUIRE(slice.p.size() == 61);
  for (std::size_t k = 0; k < slice.p.size(); ++k) {
    if (std::abs(slice.p[k]) <= 1.0) CHECK(std::abs(slice.hbar[k] - 3.0) <= 2e-2);
  }
  CHECK(check_flat_part(slice, 2e-2, 0.05).passed);
  CHECK(check_coercivity(slice, 2e-2).passed);
}

TEST_CASE("suite is deterministic and seed changes keep the verdicts") {
  auto c = small_suite(ExperimentConfig::defaults());
  auto a = run_property_suite(c, 0);
  auto b = run_property_suite(c, 1);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.passed());
  for (std::uint64_t seed : {2u, 3u}) {
    c.seed = seed;
    auto other = run_property_suite(c, 0);
    CHECK(verdicts(other) == verdicts(a));
  }
}

TEST_CASE("broken coupling is reported") {
  auto c = small_suite(ExperimentConfig::load(std::string(HJHOM_CONFIGS) + "/broken_coupling.json"));
  auto r = run_property_suite(c, 0);
  CHECK_FALSE(r.passed());
  auto v = verdicts(r);
  REQUIRE(v.count("system_A1") == 1);
  CHECK_FALSE(v["system_A1"]);
  CHECK(r.summary().find("FAIL system_A1") != std::string::npos);
}

TEST_CASE("CLI exit codes and reproducible verify output") {
  auto dir = scratch("cli");
  const std::string cfg = std::string(HJHOM_CONFIGS) + "/broken_coupling.json";
  CHECK(run_cli("--config " + cfg + " --out-dir " + (dir / "b").string() + " verify") == 1);
  CHECK(run_cli("evolve --eps 0.3 --T 0.1") == 2);
  CHECK(run_cli("table --axes q9:0:1:2 --out " + (dir / "t.hbar").string()) == 2);
  CHECK(run_cli("cell --r 1 --p 0.5 --n 64") == 0);
  CHECK(run_cli("evolve --eps 0.25 --T 0.1 --out " + (dir / "e" / "u.csv").string()) == 0);
  CHECK(fs::exists(dir / "e" / "u.csv"));
  CHECK(run_cli("--out-dir " + (dir / "c").string() + " converge") == 0);
  CHECK(fs::exists(dir / "c" / "eps_error.csv"));
  CHECK(fs::exists(dir / "c" / "convergence.json"));
}
