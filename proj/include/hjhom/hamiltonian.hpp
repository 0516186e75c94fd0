#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjhom/check_report.hpp"
#include "hjhom/expr.hpp"
#include "hjhom/grid.hpp"

namespace hjhom {

/// Reduce every coordinate of y into [0, 1).
Point reduce_to_cell(const Point& y, int dim);

/// Coefficient c(x, y), 1-periodic in y: a constant, an analytic expression in
/// x1, x2, y1, y2, or a table sampled on the unit y-cell (periodic multilinear).
class Coefficient {
 public:
  Coefficient() = default;

  static Coefficient constant(double value);
  /// Throws std::invalid_argument if the expression reads p or r variables.
  static Coefficient expression(Expression expr);
  static Coefficient expression(std::string_view text);
  static Coefficient table(int dim, int n, std::vector<double> values);

  /// y must already be reduced to the unit cell.
  double operator()(const Point& x, const Point& y) const;

  bool is_constant() const { return kind_ == Kind::Constant; }
  bool depends_on_x() const;
  bool depends_on_y() const;
  double constant_value() const { return value_; }
  std::string describe() const;

 private:
  enum class Kind { Constant, Expr, Table };
  Kind kind_ = Kind::Constant;
  double value_ = 0.0;
  Expression expr_;
  std::shared_ptr<const GridField> table_;
};

/// Coefficients c_{ji}; H_i couples to u_j through c_{ji}. Stored as a square
/// matrix with c_{ji} in row j, column i, so the column sums are sum_j c_{ji}.
struct CouplingMatrix {
  int M = 0;
  int N = 1;
  double x_period = 1.0;
  std::vector<Coefficient> entries;  // row-major, entries[j * M + i] = c_{ji}

  CouplingMatrix() = default;
  CouplingMatrix(int m, int dim, std::vector<Coefficient> row_major, double period = 1.0);
  static CouplingMatrix constants(const std::vector<std::vector<double>>& rows, int dim = 1);

  const Coefficient& c(int j, int i) const { return entries[static_cast<std::size_t>(j * M + i)]; }
  bool all_constant() const;
};

enum class ComponentKind { EikonalCoupled, WeaklyCoupled, Custom };

using CustomHamiltonian = std::function<double(const Point& x, const Point& y,
                                               std::span<const double> r,
                                               std::span<const double> p)>;

/// One H_i. EikonalCoupled: a(x,y)|p| + F(r). WeaklyCoupled: G(x,y,p) plus the
/// system coupling column sum_j c_{ji}(x,y) r_j. Custom: opaque callback.
struct HamiltonianComponent {
  ComponentKind kind = ComponentKind::Custom;
  Coefficient speed;            // EikonalCoupled a(x, y)
  Expression coupling_term;     // EikonalCoupled F(r)
  double delta = 0.0;           // EikonalCoupled: declared lower bound of a
  Expression base;              // WeaklyCoupled G(x, y, p)
  CustomHamiltonian custom;     // Custom
  std::string custom_text;      // Custom, when built from an expression
  bool convex_in_p = false;

  static HamiltonianComponent eikonal(Coefficient speed, Expression coupling, double delta);
  static HamiltonianComponent weakly_coupled(Expression base, bool convex = false);
  static HamiltonianComponent custom_fn(CustomHamiltonian fn, bool convex = false);
  static HamiltonianComponent custom_expr(Expression expr, bool convex = false);
};

/// M coupled Hamiltonians in dimension N, periodic in y.
class HamiltonianSystem {
 public:
  HamiltonianSystem(int m, int dim, std::vector<HamiltonianComponent> components,
                    std::optional<CouplingMatrix> coupling = std::nullopt, double x_period = 1.0);

  HamiltonianSystem(const HamiltonianSystem& other);
  HamiltonianSystem& operator=(const HamiltonianSystem& other);
  HamiltonianSystem(HamiltonianSystem&&) noexcept;
  HamiltonianSystem& operator=(HamiltonianSystem&&) noexcept;
  ~HamiltonianSystem();

  int M() const { return m_; }
  int N() const { return dim_; }
  double x_period() const { return x_period_; }
  const HamiltonianComponent& component(int i) const { return components_.at(static_cast<std::size_t>(i)); }
  const std::optional<CouplingMatrix>& coupling() const { return coupling_; }
  bool convex_in_p(int i) const { return component(i).convex_in_p; }

  /// H_i(x, y, r, p) with 0-based i; y is reduced modulo 1 first.
  /// Throws std::out_of_range for a bad index and std::domain_error for non-finite input.
  double eval(int i, const Point& x, const Point& y, std::span<const double> r,
              std::span<const double> p) const;

  /// Same as eval without argument validation; y must already lie in the unit cell.
  double eval_unchecked(int i, const Point& x, const Point& y, std::span<const double> r,
                        std::span<const double> p) const;

  /// True if no component depends on y.
  bool y_independent() const;
  /// True if no component depends on x.
  bool x_independent() const;

  /// Declared bounds on the per-axis Lipschitz constants in p and r over |r|,|p| <= R.
  /// Uses the declared values when given, otherwise a sampled estimate cached per
  /// power-of-two radius.
  double lip_p_bound(double radius) const;
  double lip_r_bound(double radius) const;
  void declare_lip_p(double value) { declared_lip_p_ = value; }
  void declare_lip_r(double value) { declared_lip_r_ = value; }

  /// Original JSON description, when the system came from a config document.
  const nlohmann::json& description() const { return description_; }
  void set_description(nlohmann::json j) { description_ = std::move(j); }

 private:
  struct BoundCache;

  int m_;
  int dim_;
  double x_period_;
  std::vector<HamiltonianComponent> components_;
  std::optional<CouplingMatrix> coupling_;
  std::optional<double> declared_lip_p_;
  std::optional<double> declared_lip_r_;
  nlohmann::json description_;
  std::unique_ptr<BoundCache> cache_;
};

/// Evaluates H_i at a fixed set of (x, y) nodes with coefficients precomputed.
/// Used by the grid solvers; no argument validation in the hot path.
class NodeEvaluator {
 public:
  NodeEvaluator(const HamiltonianSystem& sys, int i, std::vector<Point> xs, std::vector<Point> ys);

  std::size_t size() const { return xs_.size(); }
  double operator()(std::size_t k, std::span<const double> r, std::span<const double> q) const;

  /// Precompute the r-dependent part for a fixed r; afterwards frozen() is valid.
  void freeze_r(std::span<const double> r);
  double frozen(std::size_t k, std::span<const double> q) const;

 private:
  double base_term(std::size_t k, std::span<const double> r, std::span<const double> q) const;

  const HamiltonianSystem* sys_;
  int i_;
  ComponentKind kind_;
  std::vector<Point> xs_;
  std::vector<Point> ys_;
  std::vector<double> speed_;     // eikonal a at nodes
  std::vector<double> coupling_;  // weakly: c_{ji} at nodes, k * M + j
  std::vector<double> shift_;     // frozen r-dependent part
  std::vector<double> frozen_r_;
  bool frozen_ = false;
};

/// Sampled sup of |dH_i/dp_a| over |r|,|p| <= radius, inflated by 1.1.
/// Throws std::domain_error if a sample is non-finite.
double estimate_lip_p(const HamiltonianSystem& sys, int i, double radius, int resolution);
/// Same in r (per coordinate of r).
double estimate_lip_r(const HamiltonianSystem& sys, int i, double radius, int resolution);

/// Sampled monotonicity check: for pairs with r_j - s_j = max_k (r_k - s_k) >= 0,
/// H_j(x,y,r,p) >= H_j(x,y,s,p).
CheckReport check_A3(const HamiltonianSystem& sys, std::size_t sample_count, std::uint64_t seed,
                     double radius);

/// Sign pattern c_ii >= 0, c_ji <= 0 (j != i) and column sums >= 0 at sampled (x, y).
CheckReport check_A1_coefficients(const CouplingMatrix& c, std::size_t sample_count,
                                  std::uint64_t seed);

/// H_i(x, y + k, ...) == H_i(x, y, ...) for integer shifts k on sampled inputs.
CheckReport check_periodicity(const HamiltonianSystem& sys, std::size_t sample_count,
                              std::uint64_t seed, double radius);

/// Sampled p-slopes never exceed lip_p_bound(radius).
CheckReport check_lip_p_bound(const HamiltonianSystem& sys, std::size_t sample_count,
                              std::uint64_t seed, double radius);

/// Build a system from the JSON configuration document (see README for the schema).
/// Throws std::invalid_argument on schema errors.
HamiltonianSystem system_from_json(const nlohmann::json& j);
HamiltonianSystem load_system(const std::string& path);

}  // namespace hjhom
