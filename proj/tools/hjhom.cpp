// hjhom: cell problems, effective-Hamiltonian tables, evolution runs and the
// homogenization convergence study from the command line.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hjhom/harness.hpp"

namespace fs = std::filesystem;
using namespace hjhom;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned workers = 0;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig::defaults() : ExperimentConfig::load(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  return c;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

std::string time_tag(double t) {
  std::ostringstream os;
  os << std::setprecision(6) << t;
  return os.str();
}

// ------------------------------------------------------------------ cell

struct CellArgs {
  int component = 1;
  std::vector<double> x;
  std::vector<double> r;
  std::vector<double> p;
  int n = 0;
  std::vector<double> alphas;
  double tol = 1e-8;
  std::size_t max_iters = 2'000'000;
  std::string corrector;
};

int run_cell(const Globals& g, const CellArgs& a) {
  const ExperimentConfig config = load_config(g);
  const auto& sys = config.system;
  CellProblemSpec spec;
  spec.sys = sys;
  spec.component = a.component - 1;
  for (std::size_t d = 0; d < std::min<std::size_t>(2, a.x.size()); ++d) spec.x[d] = a.x[d];
  spec.r = a.r.empty() ? std::vector<double>(static_cast<std::size_t>(sys->M()), 0.0) : a.r;
  spec.p = a.p.empty() ? std::vector<double>(static_cast<std::size_t>(sys->N()), 0.0) : a.p;
  spec.grid = a.n > 0 ? TorusGrid(sys->N(), a.n, 1.0) : CellProblemSpec::default_grid(sys->N());
  if (!a.alphas.empty()) spec.alphas = a.alphas;
  spec.residual_tol = a.tol;
  spec.max_iters = a.max_iters;
  const CellSolution sol = effective_hamiltonian(spec);
  nlohmann::json out = sol.diagnostics();
  out["lambda"] = sol.lambda;
  out["component"] = a.component;
  out["r"] = spec.r;
  out["p"] = spec.p;
  std::cout << out.dump(2) << '\n';
  if (!a.corrector.empty()) {
    ensure_parent(a.corrector);
    write_csv(a.corrector, sol.corrector);
  }
  return 0;
}

// ------------------------------------------------------------------ table

struct TableArgs {
  std::string axes;
  std::string out;
  bool csv = false;
  std::vector<int> components;
  int n = 0;
  std::vector<double> alphas;
  double tol = 1e-8;
};

int run_table(const Globals& g, const TableArgs& a) {
  const ExperimentConfig config = load_config(g);
  const auto& sys = config.system;
  std::vector<int> comps;
  for (int c : a.components) comps.push_back(c - 1);
  if (comps.empty())
    for (int i = 0; i < sys->M(); ++i) comps.push_back(i);
  CellParams params = config.hbar.cell;
  if (a.n > 0) params.n = a.n;
  if (!a.alphas.empty()) params.alphas = a.alphas;
  params.residual_tol = a.tol;
  const auto axes = parse_axes(a.axes, sys->M(), sys->N());
  try {
    const HBarTable table = build_table(sys, comps, axes, params, g.workers);
    ensure_parent(a.out);
    save_table(table, a.out);
    if (a.csv) export_table_csv(table, a.out + ".csv");
    nlohmann::json summary = {{"path", a.out}, {"nodes", table.node_count()}, {"components", std::vector<int>{}}};
    for (int c : table.components()) summary["components"].push_back(c + 1);
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const TableBuildError& e) {
    std::cout << nlohmann::json{{"error", e.what()}, {"failed_nodes", e.failed_nodes()}}.dump(2) << '\n';
    return 1;
  }
}

// ------------------------------------------------------------------ evolve

struct EvolveArgs {
  std::string eps = "none";
  double L = 0.0;
  int n = 0;
  double T = 0.0;
  double cfl = 0.0;
  std::vector<std::string> u0;
  std::string snapshots;
  std::string out;
  std::string hbar_table;
};

int run_evolve(const Globals& g, const EvolveArgs& a) {
  const ExperimentConfig config = load_config(g);
  const auto& sys = config.system;
  const double L = a.L > 0.0 ? a.L : config.L;
  EvolutionProblem problem;
  int n = a.n;
  if (a.eps == "none") {
    std::shared_ptr<const HBarProvider> hbar;
    if (!a.hbar_table.empty()) {
      hbar = std::make_shared<const TableProvider>(std::make_shared<const HBarTable>(load_table(a.hbar_table)));
    } else {
      hbar = make_provider(config, g.workers);
    }
    problem.source = HomogenizedSource{hbar};
    if (n == 0) n = config.resolved_base_n();
  } else {
    const double eps = std::stod(a.eps);
    problem.source = OscillatingSource{sys, eps};
    if (n == 0) n = static_cast<int>(std::lround(32.0 * L / eps));
  }
  std::vector<Expression> exprs;
  for (const auto& t : a.u0.empty() ? config.u0 : a.u0) exprs.push_back(Expression::parse(t));
  problem.u0 = sample_expressions(TorusGrid(sys->N(), n, L), exprs);
  problem.T = a.T > 0.0 ? a.T : config.T;
  problem.cfl = a.cfl > 0.0 ? a.cfl : config.cfl;
  problem.snapshots = parse_list(a.snapshots);
  const EvolutionResult res = solve(problem);

  nlohmann::json out = {{"diagnostics", res.diagnostics.to_json()}, {"n", n}, {"L", L}, {"T", problem.T},
                        {"eps", a.eps}};
  if (!a.out.empty()) {
    const fs::path path(a.out);
    ensure_parent(path);
    write_csv(a.out, res.final);
    std::vector<std::string> files;
    for (const auto& s : res.snapshots) {
      const fs::path snap = path.parent_path() / (path.stem().string() + "_t" + time_tag(s.t) + path.extension().string());
      write_csv(snap.string(), s.field);
      files.push_back(snap.string());
    }
    out["final"] = a.out;
    out["snapshots"] = files;
  }
  std::cout << out.dump(2) << '\n';
  return res.diagnostics.linfini_ok ? 0 : 1;
}

// ------------------------------------------------------------------ converge / verify / plotdata

int run_converge(const Globals& g) {
  const ExperimentConfig config = load_config(g);
  const ConvergenceReport report = run_convergence(config, g.workers);
  const auto checks = convergence_checks(report, config.reduction_factor, config.slope_variation);
  nlohmann::json out = report.to_json(true);
  bool ok = true;
  std::vector<nlohmann::json> cj;
  for (const auto& c : checks) {
    cj.push_back(c.to_json());
    ok = ok && c.passed;
  }
  out["checks"] = cj;
  out["passed"] = ok;
  const fs::path dir(config.out_dir);
  write_json(dir / "convergence.json", out);
  write_eps_error_csv(report, dir / "eps_error.csv");
  write_solution_profiles_csv(report, dir / "solution_profiles.csv");
  std::cout << out.dump(2) << '\n';
  return ok ? 0 : 1;
}

int run_verify(const Globals& g) {
  const ExperimentConfig config = load_config(g);
  const SuiteReport report = run_property_suite(config, g.workers);
  const nlohmann::json j = report.to_json();
  write_json(fs::path(config.out_dir) / "verify.json", j);
  std::cout << j.dump(2) << '\n';
  std::cerr << report.summary();
  return report.passed() ? 0 : 1;
}

int run_plotdata(const Globals& g) {
  const ExperimentConfig config = load_config(g);
  const ConvergenceReport report = run_convergence(config, g.workers);
  const SliceTable slice = config_slice(config, g.workers);
  const fs::path dir(config.out_dir);
  emit_plot_data(report, slice, dir);
  std::cout << nlohmann::json{{"out_dir", dir.string()},
                              {"files", {"eps_error.csv", "hbar_slice.csv", "solution_profiles.csv"}}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective Hamiltonians and homogenization of monotone Hamilton-Jacobi systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "seed for sampled checks");
  app.add_option("--out-dir", g.out_dir, "directory for reports and plot data");
  app.add_option("--workers", g.workers, "worker threads (0 = all cores)");

  CellArgs cell;
  auto* cell_cmd = app.add_subcommand("cell", "solve one cell problem");
  cell_cmd->add_option("--component", cell.component, "component index (1-based)");
  cell_cmd->add_option("--x", cell.x, "slow variable")->delimiter(',');
  cell_cmd->add_option("--r", cell.r, "frozen values of u")->delimiter(',');
  cell_cmd->add_option("--p", cell.p, "frozen gradient")->delimiter(',');
  cell_cmd->add_option("--n", cell.n, "cell grid nodes per axis");
  cell_cmd->add_option("--alphas", cell.alphas, "discount schedule")->delimiter(',');
  cell_cmd->add_option("--tol", cell.tol, "residual tolerance");
  cell_cmd->add_option("--max-iters", cell.max_iters, "iteration cap");
  cell_cmd->add_option("--corrector-out", cell.corrector, "write the corrector as CSV");

  TableArgs table;
  auto* table_cmd = app.add_subcommand("table", "tabulate the effective Hamiltonian");
  table_cmd->add_option("--axes", table.axes, "name:min:max:count,...")->required();
  table_cmd->add_option("--out", table.out, "HBAR1 output path")->required();
  table_cmd->add_flag("--csv", table.csv, "also write <out>.csv");
  table_cmd->add_option("--components", table.components, "components to tabulate (1-based)")->delimiter(',');
  table_cmd->add_option("--n", table.n, "cell grid nodes per axis");
  table_cmd->add_option("--alphas", table.alphas, "discount schedule")->delimiter(',');
  table_cmd->add_option("--tol", table.tol, "residual tolerance");

  EvolveArgs evolve;
  auto* evolve_cmd = app.add_subcommand("evolve", "run the oscillating or the homogenized evolution");
  evolve_cmd->add_option("--eps", evolve.eps, "oscillation scale, or none for the homogenized system");
  evolve_cmd->add_option("--L", evolve.L, "torus side");
  evolve_cmd->add_option("--n", evolve.n, "nodes per axis");
  evolve_cmd->add_option("--T", evolve.T, "final time");
  evolve_cmd->add_option("--cfl", evolve.cfl, "Courant factor");
  evolve_cmd->add_option("--u0", evolve.u0, "initial data, one expression per component");
  evolve_cmd->add_option("--snapshots", evolve.snapshots, "t1,t2,...");
  evolve_cmd->add_option("--out", evolve.out, "CSV path for the final state");
  evolve_cmd->add_option("--hbar-table", evolve.hbar_table, "HBAR1 table for homogenized runs")
      ->check(CLI::ExistingFile);

  auto* converge_cmd = app.add_subcommand("converge", "eps-sweep convergence study");
  auto* verify_cmd = app.add_subcommand("verify", "run the property suite");
  auto* plot_cmd = app.add_subcommand("plotdata", "write eps_error, hbar_slice and solution_profiles CSVs");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*cell_cmd) return run_cell(g, cell);
    if (*table_cmd) return run_table(g, table);
    if (*evolve_cmd) return run_evolve(g, evolve);
    if (*converge_cmd) return run_converge(g);
    if (*verify_cmd) return run_verify(g);
    if (*plot_cmd) return run_plotdata(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
