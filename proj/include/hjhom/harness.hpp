#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjhom/cell.hpp"
#include "hjhom/check_report.hpp"
#include "hjhom/efftable.hpp"
#include "hjhom/evolve.hpp"
#include "hjhom/hamiltonian.hpp"

namespace hjhom {

/// Where the homogenized Hamiltonian comes from.
struct HBarSourceConfig {
  std::string kind = "closed_form";  // closed_form | table | file | y_independent
  std::string axes;                  // table: axes spec
  CellParams cell;                   // table: per-node solve parameters
  std::string path;                  // file: HBAR1 table
};

struct SliceConfig {
  int component = 0;
  Point x{0.0, 0.0};
  std::vector<double> r{1.0};
  double p_min = -2.0;
  double p_max = 2.0;
  int count = 41;
};

struct SuiteBudgets {
  int oracle_samples = 20;
  int trivial_samples = 10;
  int coupling_samples = 20;
  int piecewise_random = 10;
  int a3_pairs = 50;
  int convex_triples = 50;
  int comparison_pairs = 5;
  int system_samples = 2000;
};

struct ExperimentConfig {
  nlohmann::json system_json;
  std::shared_ptr<const HamiltonianSystem> system;
  double L = 1.0;
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  int cells_per_eps = 32;
  int base_n = 0;         // measurement grid; 0 = grid of the largest eps
  int homogenized_n = 0;  // homogenized solve; 0 = grid of the smallest eps
  double T = 0.5;
  double cfl = 0.5;
  std::vector<std::string> u0{"sin(2*pi*x)"};
  HBarSourceConfig hbar;
  SliceConfig slice;
  SuiteBudgets budgets;
  double reduction_factor = 0.6;  // error(last eps) <= factor * error(first eps)
  double slope_variation = 0.1;   // (max - min)/max of final slopes across the sweep
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::filesystem::path base_dir = ".";

  /// Throws std::invalid_argument on schema errors and on an eps that does not divide L.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
  static ExperimentConfig load(const std::string& path);
  /// The built-in default: the oscillating-coefficient example with M = 1.
  static ExperimentConfig defaults();

  int grid_n(double eps) const;
  int resolved_base_n() const;
  int resolved_homogenized_n() const;
  std::filesystem::path resolve(const std::string& path) const;
  /// Throws std::invalid_argument when eps does not divide L, grids are not
  /// nested or referenced files are missing.
  void validate() const;
  nlohmann::json to_json() const;
};

/// H-bar provider selected by the config (builds the table when asked to).
std::shared_ptr<const HBarProvider> make_provider(const ExperimentConfig& config, unsigned workers = 0);

struct ConvergenceRun {
  double eps = 0.0;
  int n = 0;
  double error = 0.0;
  double runtime = 0.0;
  double slope = 0.0;
  EvolutionDiagnostics diagnostics;
  GridField profile{TorusGrid(1, 4), 1};  // final state restricted to the base grid
};

struct ConvergenceReport {
  std::vector<ConvergenceRun> runs;
  int base_n = 0;
  int homogenized_n = 0;
  std::string hbar_source;
  double homogenized_runtime = 0.0;
  EvolutionDiagnostics homogenized;
  std::optional<GridField> homogenized_profile;
  double slope_bound = 0.0;

  std::vector<double> eps() const;
  std::vector<double> errors() const;
  /// errors[k] / errors[k+1]
  std::vector<double> ratios() const;
  nlohmann::json to_json(bool include_runtimes = true) const;
};

/// Homogenized solve once on the homogenized grid, then one oscillating solve per
/// eps (concurrently, up to `workers`), errors measured on the base grid at T.
ConvergenceReport run_convergence(const ExperimentConfig& config, unsigned workers = 0);
ConvergenceReport run_convergence(const ExperimentConfig& config, std::shared_ptr<const HBarProvider> hbar,
                                  unsigned workers = 0);

/// Strict decrease, final reduction, a-priori sup bound per run and slope persistence.
std::vector<CheckReport> convergence_checks(const ConvergenceReport& report, double reduction_factor,
                                            double slope_variation);

// Individual checks with explicit tolerances; each is deterministic for a given seed.

/// |p| + c(y) r with c = 2 + cos(2 pi y): cell solver against the closed form.
CheckReport check_closed_form_oracle(int samples, std::uint64_t seed, double tol);
/// y-independent Hamiltonians: lambda equals H and the corrector vanishes.
CheckReport check_trivial_corrector(int samples, std::uint64_t seed, double tol);
/// M = 2 constant coupling [[1,-1],[-1,1]].
CheckReport check_constant_coupling(int samples, std::uint64_t seed, double tol);
/// c = 1 + cos(2 pi y)/2 at p = 1: the three branch values plus random r against the closed form.
CheckReport check_piecewise_branches(int random_samples, std::uint64_t seed, double tol);

/// Example slice table of |p| + (2 + cos 2 pi y) r at r = 1 over p in [-3, 3].
struct SliceTable {
  std::vector<double> p;
  std::vector<double> hbar;
};
SliceTable example_slice(unsigned workers = 0);
/// |hbar - 3| <= tol for |p| <= 0.9 and hbar >= 3 + rise at |p| = 1.5.
CheckReport check_flat_part(const SliceTable& slice, double tol, double rise);
/// Along each p-ray from the centre: the ray reaches past the flat width and the
/// boundary value exceeds the centre value by more than tol.
CheckReport check_coercivity(const SliceTable& slice, double tol);

/// Monotonicity of hbar in r on sampled pairs, for the M = 2 y-dependent example.
CheckReport check_hbar_a3(int pairs, std::uint64_t seed, double tol);
/// Midpoint convexity of hbar in p for convex examples.
CheckReport check_hbar_convexity(int triples, std::uint64_t seed, double tol);

/// check_comparison on seeded data pairs for the M = 2 weakly coupled example.
/// Every run is also checked against the a-priori sup bound (second report).
std::pair<CheckReport, CheckReport> check_comparison_pairs(int pairs, std::uint64_t seed);

/// The shipped example systems, by name: example_a, example_b, piecewise,
/// constant_coupling, y_independent, y_independent_2d.
nlohmann::json example_system_json(const std::string& name);
std::shared_ptr<const HamiltonianSystem> example_system(const std::string& name);

struct SuiteReport {
  std::uint64_t seed = 0;
  std::vector<CheckReport> checks;
  bool passed() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

/// Hypothesis checks on the config system, every oracle/property check above and
/// the convergence checks of the config sweep. Deterministic in (config, seed).
SuiteReport run_property_suite(const ExperimentConfig& config, unsigned workers = 0);

void write_eps_error_csv(const ConvergenceReport& report, const std::filesystem::path& path);
void write_hbar_slice_csv(const SliceTable& slice, const std::filesystem::path& path);
void write_solution_profiles_csv(const ConvergenceReport& report, const std::filesystem::path& path);
/// eps_error.csv, hbar_slice.csv and solution_profiles.csv under `dir`.
void emit_plot_data(const ConvergenceReport& report, const SliceTable& slice, const std::filesystem::path& dir);

/// cell-solver slice of hbar over p at the config's (component, x, r).
SliceTable config_slice(const ExperimentConfig& config, unsigned workers = 0);

}  // namespace hjhom
