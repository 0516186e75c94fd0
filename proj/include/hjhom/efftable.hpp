#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjhom/cell.hpp"
#include "hjhom/hamiltonian.hpp"

namespace hjhom {

/// One lattice coordinate: `count` equispaced values on [min, max]. count == 1 freezes it.
struct Axis {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  double at(int k) const {
    return count == 1 ? min : min + (max - min) * static_cast<double>(k) / (count - 1);
  }
  bool frozen() const { return count == 1; }
  bool operator==(const Axis&) const = default;
};

/// Parse `name:min:max:count` entries separated by commas, semicolons or spaces.
/// Names come from {x1, x2, r1..rM, p1, p2}; unspecified coordinates are frozen at 0.
/// The result is ordered x1..xN, r1..rM, p1..pN.
std::vector<Axis> parse_axes(const std::string& text, int m, int dim);
std::vector<Axis> default_axes(int m, int dim);

/// Discretization parameters shared by every node solve of a table.
struct CellParams {
  int n = 0;  // 0 selects the default per dimension
  std::vector<double> alphas{0.02, 0.01};
  double residual_tol = 1e-8;
  std::size_t max_iters = 2'000'000;

  nlohmann::json to_json() const;
  static CellParams from_json(const nlohmann::json& j);
};

class OutOfHullError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class TableBuildError : public std::runtime_error {
 public:
  TableBuildError(const std::string& what, std::vector<nlohmann::json> failed)
      : std::runtime_error(what), failed_(std::move(failed)) {}
  const std::vector<nlohmann::json>& failed_nodes() const { return failed_; }

 private:
  std::vector<nlohmann::json> failed_;
};

/// Lattice of effective-Hamiltonian values over (x, r, p) for a set of components.
class HBarTable {
 public:
  HBarTable() = default;
  HBarTable(int m, int dim, std::vector<Axis> axes, std::vector<int> components,
            std::vector<double> values, nlohmann::json provenance = nlohmann::json::object());

  int M() const { return m_; }
  int N() const { return dim_; }
  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<int>& components() const { return components_; }
  const std::vector<double>& values() const { return values_; }
  const nlohmann::json& provenance() const { return provenance_; }
  std::size_t node_count() const { return node_count_; }

  /// Coordinates (x1..xN, r1..rM, p1..pN) of a flat lattice node.
  std::vector<double> node_coords(std::size_t flat) const;
  /// Stored value for component slot `slot` (index into components()) at a flat node.
  double node_value(std::size_t slot, std::size_t flat) const {
    return values_[slot * node_count_ + flat];
  }
  bool has_component(int i) const;

  /// Multilinear interpolation over the non-frozen axes; frozen coordinates are ignored.
  /// Throws OutOfHullError outside the lattice hull and std::out_of_range for an
  /// untabulated component.
  double query(int i, const Point& x, std::span<const double> r, std::span<const double> p) const;
  /// Query with all 2N+M coordinates in axis order.
  double query_coords(int i, std::span<const double> coords) const;

  bool operator==(const HBarTable& other) const;

 private:
  int m_ = 0;
  int dim_ = 1;
  std::vector<Axis> axes_;
  std::vector<int> components_;
  std::vector<double> values_;
  nlohmann::json provenance_ = nlohmann::json::object();
  std::size_t node_count_ = 0;
};

/// Runs effective_hamiltonian at every lattice node for every component in
/// `components`, with a bounded worker pool (0 = hardware concurrency).
HBarTable build_table(std::shared_ptr<const HamiltonianSystem> sys, const std::vector<int>& components,
                      const std::vector<Axis>& axes, const CellParams& params, unsigned workers = 0);

/// Binary layout: magic `HBAR1`, u32 version, u32 M, u32 N, axes, components,
/// provenance JSON, values. Native little-endian doubles.
void save_table(const HBarTable& table, const std::string& path);
void save_table(const HBarTable& table, std::ostream& out);
HBarTable load_table(const std::string& path);
HBarTable load_table(std::istream& in);
void export_table_csv(const HBarTable& table, std::ostream& out);
void export_table_csv(const HBarTable& table, const std::string& path);

/// Closed form for H_i = |p| + sum_j c_{ji}(y) r_j in 1-D:
/// max{ -min f, |p| - mean f } with f = -sum_j c_{ji} r_j on an audit grid.
double closed_form_eikonal_weakly_coupled(const CouplingMatrix& c, int i, std::span<const double> r,
                                          double p, int audit_n = 4096, double x = 0.0);

/// hbar_base_i(p) + sum_j c_{ji} r_j for constant coefficients; throws
/// std::invalid_argument when c is not constant.
double closed_form_constant_coupling(const std::function<double(int, std::span<const double>)>& hbar_base,
                                     const CouplingMatrix& c, int i, std::span<const double> r,
                                     std::span<const double> p);

/// Branch values of effective Hamiltonian 1 at r = (r1, 0, ..., 0) when c11 has
/// max a, min b and mean g with a > g > b >= 0: b r1, g r1 + |p| or a r1.
/// Throws std::domain_error for degenerate a == g or b == g.
double closed_form_piecewise_r1(const std::function<double(double)>& c11, double r1, double p,
                                int audit_n = 4096);

/// Source of effective Hamiltonian values for the homogenized evolution.
class HBarProvider {
 public:
  virtual ~HBarProvider() = default;
  virtual int M() const = 0;
  virtual int N() const = 0;
  virtual double value(int i, const Point& x, std::span<const double> r,
                       std::span<const double> p) const = 0;
  /// Bounds on per-axis slopes in p and r over |r|, |p| <= radius.
  virtual double lip_p_bound(double radius) const = 0;
  virtual double lip_r_bound(double radius) const = 0;
  virtual std::string describe() const = 0;
};

/// Table-backed provider; slopes are taken from lattice differences (times 1.1).
class TableProvider final : public HBarProvider {
 public:
  explicit TableProvider(std::shared_ptr<const HBarTable> table);
  int M() const override { return table_->M(); }
  int N() const override { return table_->N(); }
  double value(int i, const Point& x, std::span<const double> r, std::span<const double> p) const override;
  double lip_p_bound(double) const override { return lip_p_; }
  double lip_r_bound(double) const override { return lip_r_; }
  std::string describe() const override { return "table"; }
  const HBarTable& table() const { return *table_; }

 private:
  std::shared_ptr<const HBarTable> table_;
  double lip_p_ = 0.0;
  double lip_r_ = 0.0;
};

/// Closed form for 1-D weakly coupled systems with base |p| and y-only coefficients.
class WeaklyCoupledClosedForm final : public HBarProvider {
 public:
  explicit WeaklyCoupledClosedForm(const CouplingMatrix& c, int audit_n = 4096);
  int M() const override { return m_; }
  int N() const override { return 1; }
  double value(int i, const Point& x, std::span<const double> r, std::span<const double> p) const override;
  double lip_p_bound(double) const override { return 1.1; }
  double lip_r_bound(double) const override { return lip_r_; }
  std::string describe() const override { return "closed_form"; }

 private:
  int m_;
  int audit_n_;
  std::vector<double> samples_;  // (i * M + j) * audit_n + k: c_{ji}(y_k)
  std::vector<double> means_;    // i * M + j
  std::vector<double> min_;      // M == 1: extremes of c_11
  std::vector<double> max_;
  double lip_r_ = 0.0;
};

/// H-bar = H for systems without y-dependence.
class YIndependentProvider final : public HBarProvider {
 public:
  explicit YIndependentProvider(std::shared_ptr<const HamiltonianSystem> sys);
  int M() const override { return sys_->M(); }
  int N() const override { return sys_->N(); }
  double value(int i, const Point& x, std::span<const double> r, std::span<const double> p) const override;
  double lip_p_bound(double radius) const override { return sys_->lip_p_bound(radius); }
  double lip_r_bound(double radius) const override { return sys_->lip_r_bound(radius); }
  std::string describe() const override { return "y_independent"; }

 private:
  std::shared_ptr<const HamiltonianSystem> sys_;
};

}  // namespace hjhom
