#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hjhom {

using Point = std::array<double, 2>;

/// Uniform periodic grid on [0, L)^N, N in {1, 2}, with n nodes per axis.
class TorusGrid {
 public:
  TorusGrid(int dim, int n, double length = 1.0);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double length() const { return length_; }
  double h() const { return length_ / n_; }
  std::size_t size() const { return size_; }

  /// Node coordinate along one axis, computed as L*k/n.
  double coord(int k) const { return length_ * static_cast<double>(k) / n_; }
  Point node(std::size_t flat) const;
  std::array<int, 2> index(std::size_t flat) const;
  std::size_t flat(int i0, int i1 = 0) const;
  /// Flat index of the neighbour shifted by `offset` along `axis`, with wraparound.
  std::size_t neighbor(std::size_t flat, int axis, int offset) const;

  bool operator==(const TorusGrid& other) const;

 private:
  int dim_;
  int n_;
  double length_;
  std::size_t size_;
};

/// M-component field sampled on a TorusGrid. Values are stored component-major:
/// value(c, k) lives at c * grid.size() + k.
class GridField {
 public:
  GridField(TorusGrid grid, int components = 1);
  GridField(TorusGrid grid, int components, std::vector<double> values);

  const TorusGrid& grid() const { return grid_; }
  int components() const { return components_; }

  double& at(int c, std::size_t k) { return values_[static_cast<std::size_t>(c) * grid_.size() + k]; }
  double at(int c, std::size_t k) const {
    return values_[static_cast<std::size_t>(c) * grid_.size() + k];
  }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<double> component(int c);
  std::span<const double> component(int c) const;
  GridField component_field(int c) const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool all_finite() const;

 private:
  TorusGrid grid_;
  int components_;
  std::vector<double> values_;
};

/// values[k] = f(x_k); throws std::domain_error on a non-finite sample.
GridField sample(const TorusGrid& grid, const std::function<double(const Point&)>& f);
/// Multi-component sample: f(c, x).
GridField sample(const TorusGrid& grid, int components,
                 const std::function<double(int, const Point&)>& f);

/// Periodic one-sided differences (u_k - u_{k-1})/h and (u_{k+1} - u_k)/h along `axis`,
/// applied to every component.
std::pair<GridField, GridField> upwind_diffs(const GridField& field, int axis);

double sup_norm(const GridField& field);
/// Max |a - b| over all values; throws std::invalid_argument on grid/component mismatch.
double sup_diff(const GridField& a, const GridField& b);

/// Periodic multilinear interpolation of component c at x (reduced modulo the cell).
double interpolate(const GridField& field, const Point& x, int c = 0);

/// Injection onto a coarser nested grid; throws std::invalid_argument if n_fine % n_coarse != 0
/// or the cells differ.
GridField restrict_to(const GridField& fine, const TorusGrid& coarse);

/// Largest one-sided difference magnitude over all axes and components.
double max_upwind_slope(const GridField& field);

/// CSV persistence: header `# grid n=<n> N=<N> L=<L> M=<M>`, then one row per node
/// `i1,(i2,)v1..vM`.
void write_csv(std::ostream& out, const GridField& field);
void write_csv(const std::string& path, const GridField& field);
GridField read_csv(std::istream& in);
GridField read_csv(const std::string& path);

}  // namespace hjhom
