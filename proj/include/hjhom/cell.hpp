#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjhom/grid.hpp"
#include "hjhom/hamiltonian.hpp"

namespace hjhom {

/// Frozen (i, x, r, p) for one cell problem plus the discretization parameters.
struct CellProblemSpec {
  std::shared_ptr<const HamiltonianSystem> sys;
  int component = 0;  // 0-based
  Point x{0.0, 0.0};
  std::vector<double> r;
  std::vector<double> p;
  TorusGrid grid{1, 256, 1.0};
  std::vector<double> alphas{0.02, 0.01};
  double residual_tol = 1e-8;
  std::size_t max_iters = 2'000'000;

  /// Default grid: n = 256 in 1-D and n = 64 in 2-D.
  static TorusGrid default_grid(int dim) { return TorusGrid(dim, dim == 1 ? 256 : 64, 1.0); }

  /// Throws std::invalid_argument when the schedule or tolerances are malformed.
  void validate() const;
};

/// Raised when the pseudo-time iteration does not reach residual_tol.
class CellSolveError : public std::runtime_error {
 public:
  CellSolveError(const std::string& what, double final_residual, std::size_t iterations)
      : std::runtime_error(what), final_residual_(final_residual), iterations_(iterations) {}
  double final_residual() const { return final_residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double final_residual_;
  std::size_t iterations_;
};

/// Scheme constants derived from the frozen data: C (sup |H_i| at q = p over the
/// cell), the coercivity radius L (|q - p| >= L forces H_i > C) and the
/// Lax-Friedrichs dissipation theta.
struct CellScheme {
  double sup_h = 0.0;
  double lipschitz_radius = 0.0;
  double theta = 0.0;
};

CellScheme cell_scheme(const CellProblemSpec& spec);

struct DiscountedSolution {
  GridField w;
  double alpha = 0.0;
  double lambda_alpha = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct CellSolution {
  double lambda = 0.0;
  GridField corrector;
  GridField w_alpha;
  CellScheme scheme;
  std::vector<double> alphas;
  std::vector<double> lambda_alphas;
  std::vector<std::size_t> iterations;
  std::vector<double> residuals;
  /// max - min of alpha * w over the grid, per alpha.
  std::vector<double> oscillations;
  /// sup of |alpha * w|, per alpha.
  std::vector<double> discount_sups;

  nlohmann::json diagnostics() const;
};

/// Fixed point of alpha w + H^LF(y, p + Dw) = 0 by damped pseudo-time iteration.
/// `initial` (optional) warm-starts the iteration.
DiscountedSolution solve_discounted(const CellProblemSpec& spec, double alpha,
                                    const CellScheme& scheme, const GridField* initial = nullptr);
DiscountedSolution solve_discounted(const CellProblemSpec& spec, double alpha);

/// Runs the discount schedule and extracts lambda by linear extrapolation in alpha
/// from the last two schedule entries.
CellSolution effective_hamiltonian(const CellProblemSpec& spec);

/// sup over nodes of |H^LF(y, p + Dv) - lambda|.
double residual(const CellProblemSpec& spec, double lambda, const GridField& v);
double residual(const CellProblemSpec& spec, const CellScheme& scheme, double lambda,
                const GridField& v);

}  // namespace hjhom
