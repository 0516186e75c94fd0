#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hjhom/check_report.hpp"
#include "hjhom/efftable.hpp"
#include "hjhom/expr.hpp"
#include "hjhom/grid.hpp"
#include "hjhom/hamiltonian.hpp"

namespace hjhom {

struct OscillatingSource {
  std::shared_ptr<const HamiltonianSystem> sys;
  double eps = 1.0;
};

struct HomogenizedSource {
  std::shared_ptr<const HBarProvider> hbar;
};

struct EvolutionProblem {
  std::variant<OscillatingSource, HomogenizedSource> source;
  GridField u0{TorusGrid(1, 4), 1};
  double T = 1.0;
  double cfl = 0.5;
  /// Times in (0, T) at which the state is recorded; hit exactly.
  std::vector<double> snapshots;

  int M() const;
  int N() const;
  const TorusGrid& grid() const { return u0.grid(); }
  bool oscillating() const { return std::holds_alternative<OscillatingSource>(source); }

  /// Throws std::invalid_argument when L/eps is not an integer, h > eps/32,
  /// the component counts disagree, u0 is not finite or T, cfl are out of range.
  void validate() const;
};

class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dissipation and coupling slopes used for one step.
struct StepBounds {
  double theta = 0.0;     // per-axis Lipschitz bound in p
  double lambda_r = 0.0;  // per-coordinate Lipschitz bound in r
  double radius = 0.0;    // max(sup |u|, max upwind slope) the bounds were taken at

  /// Largest dt with dt <= cfl h/(2 N theta) and dt lambda_r <= 1/2.
  double max_dt(double cfl, double h, int dim) const;
};

/// Bounds at the radius of `state`.
StepBounds step_bounds(const EvolutionProblem& problem, const GridField& state);

/// One explicit step with explicitly supplied bounds; the caller is responsible
/// for dt <= bounds.max_dt. Throws std::domain_error on a non-finite update and
/// OutOfHullError from a table-backed source.
GridField step(const EvolutionProblem& problem, const GridField& state, double dt, const StepBounds& bounds);

/// One explicit step; bounds are computed from `state` and CflError is raised if
/// dt exceeds them.
GridField step(const EvolutionProblem& problem, const GridField& state, double dt);

struct Snapshot {
  double t = 0.0;
  GridField field;
};

struct EvolutionDiagnostics {
  std::size_t steps = 0;
  double dt_min = 0.0;
  double dt_max = 0.0;
  double theta_max = 0.0;
  double lambda_r_max = 0.0;
  double max_abs_u = 0.0;
  double sup_u0 = 0.0;
  /// Sampled sup of |H_i(x, x/eps, r, 0)| over nodes, components and |r| <= sup |u0|.
  double c_bound = 0.0;
  double linfini_bound = 0.0;  // sup |u0| + C T
  bool linfini_ok = true;
  double final_slope = 0.0;

  nlohmann::json to_json() const;
};

struct EvolutionResult {
  GridField final;
  std::vector<Snapshot> snapshots;
  EvolutionDiagnostics diagnostics;
};

/// Steps to T with dt recomputed each step (nonincreasing), then shortened so
/// that snapshot times and T are hit exactly.
EvolutionResult solve(const EvolutionProblem& problem);

/// Sampled sup of |H_i(x, x/eps, r, p)| over grid nodes, components, |r| <= r_radius
/// (box) and |p| <= p_radius (p = 0 when p_radius == 0).
double sampled_sup_h(const EvolutionProblem& problem, double r_radius, double p_radius);

/// Coercivity radius: smallest L with H_i(x, x/eps, r, q) > level for every node,
/// component, sampled |r| <= r_radius and probe direction with |q| = L.
/// Throws std::runtime_error if no radius up to 1e6 works.
double coercivity_radius(const EvolutionProblem& problem, double level, double r_radius);

/// Lipschitz persistence bound for problem.u0: C from sup |u0| and max slope of u0,
/// then the coercivity radius at level C over |r| <= sup |u0| + c_bound T.
struct SlopeBound {
  double c_lip = 0.0;
  double radius = 0.0;
};
SlopeBound slope_bound(const EvolutionProblem& problem);

/// Both data must share one grid, which replaces problem.u0's grid.
/// Evolves both data in lockstep with shared dt and shared bounds and checks
/// max_j sup (u_j - v_j) <= max_j sup (u0_low_j - u0_high_j)^+ + 1e-6 after every step.
CheckReport check_comparison(const EvolutionProblem& problem, const GridField& u0_low,
                             const GridField& u0_high, double T);

/// u0 from one expression per component in x1, x2.
GridField sample_expressions(const TorusGrid& grid, const std::vector<Expression>& exprs);

}  // namespace hjhom
