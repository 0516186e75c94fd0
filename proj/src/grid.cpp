#include "hjhom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hjhom {

TorusGrid::TorusGrid(int dim, int n, double length) : dim_(dim), n_(n), length_(length) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("TorusGrid: dimension must be 1 or 2");
  if (n < 4) throw std::invalid_argument("TorusGrid: need at least 4 points per axis");
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("TorusGrid: cell length must be positive and finite");
  size_ = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
}

Point TorusGrid::node(std::size_t flat) const {
  const auto idx = index(flat);
  return {coord(idx[0]), dim_ == 2 ? coord(idx[1]) : 0.0};
}

std::array<int, 2> TorusGrid::index(std::size_t flat) const {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat % n_), static_cast<int>(flat / n_)};
}

std::size_t TorusGrid::flat(int i0, int i1) const {
  return static_cast<std::size_t>(i0) + (dim_ == 2 ? static_cast<std::size_t>(i1) * n_ : 0);
}

std::size_t TorusGrid::neighbor(std::size_t flat_index, int axis, int offset) const {
  auto idx = index(flat_index);
  idx[axis] = ((idx[axis] + offset) % n_ + n_) % n_;
  return flat(idx[0], idx[1]);
}

bool TorusGrid::operator==(const TorusGrid& other) const {
  return dim_ == other.dim_ && n_ == other.n_ && length_ == other.length_;
}

GridField::GridField(TorusGrid grid, int components)
    : grid_(grid), components_(components),
      values_(static_cast<std::size_t>(components) * grid.size(), 0.0) {
  if (components < 1) throw std::invalid_argument("GridField: need at least one component");
}

GridField::GridField(TorusGrid grid, int components, std::vector<double> values)
    : grid_(grid), components_(components), values_(std::move(values)) {
  if (components < 1) throw std::invalid_argument("GridField: need at least one component");
  if (values_.size() != static_cast<std::size_t>(components) * grid_.size())
    throw std::invalid_argument("GridField: value count does not match grid and components");
}

std::span<double> GridField::component(int c) {
  return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * grid_.size(),
                                            grid_.size());
}

std::span<const double> GridField::component(int c) const {
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(c) * grid_.size(),
                                                  grid_.size());
}

GridField GridField::component_field(int c) const {
  const auto src = component(c);
  return GridField(grid_, 1, std::vector<double>(src.begin(), src.end()));
}

bool GridField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridField sample(const TorusGrid& grid, const std::function<double(const Point&)>& f) {
  return sample(grid, 1, [&](int, const Point& x) { return f(x); });
}

GridField sample(const TorusGrid& grid, int components,
                 const std::function<double(int, const Point&)>& f) {
  GridField out(grid, components);
  for (int c = 0; c < components; ++c) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double v = f(c, grid.node(k));
      if (!std::isfinite(v)) throw std::domain_error("sample: non-finite value at node " +
                                                     std::to_string(k));
      out.at(c, k) = v;
    }
  }
  return out;
}

std::pair<GridField, GridField> upwind_diffs(const GridField& field, int axis) {
  const auto& grid = field.grid();
  if (axis < 0 || axis >= grid.dim()) throw std::invalid_argument("upwind_diffs: bad axis");
  GridField minus(grid, field.components());
  GridField plus(grid, field.components());
  const double inv_h = 1.0 / grid.h();
  for (int c = 0; c < field.components(); ++c) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double u = field.at(c, k);
      minus.at(c, k) = (u - field.at(c, grid.neighbor(k, axis, -1))) * inv_h;
      plus.at(c, k) = (field.at(c, grid.neighbor(k, axis, +1)) - u) * inv_h;
    }
  }
  return {std::move(minus), std::move(plus)};
}

double sup_norm(const GridField& field) {
  double m = 0.0;
  for (double v : field.values()) m = std::max(m, std::abs(v));
  return m;
}

double sup_diff(const GridField& a, const GridField& b) {
  if (!(a.grid() == b.grid()) || a.components() != b.components())
    throw std::invalid_argument("sup_diff: fields live on different grids");
  double m = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k) m = std::max(m, std::abs(va[k] - vb[k]));
  return m;
}

double interpolate(const GridField& field, const Point& x, int c) {
  const auto& grid = field.grid();
  const int n = grid.n();
  std::array<int, 2> lo{0, 0};
  std::array<double, 2> frac{0.0, 0.0};
  for (int a = 0; a < grid.dim(); ++a) {
    double s = x[a] * n / grid.length();
    s -= std::floor(s / n) * n;
    // snap rounding noise so that nodes reproduce nodal values exactly
    if (const double r = std::round(s); std::abs(s - r) < 1e-10 * n) s = r;
    int i = static_cast<int>(std::floor(s));
    double t = s - i;
    if (i >= n) {
      i -= n;
    }
    lo[a] = i;
    frac[a] = t;
  }
  auto value = [&](int i0, int i1) {
    return field.at(c, grid.flat(((i0 % n) + n) % n, ((i1 % n) + n) % n));
  };
  if (grid.dim() == 1) {
    const double a = value(lo[0], 0);
    if (frac[0] == 0.0) return a;
    return (1.0 - frac[0]) * a + frac[0] * value(lo[0] + 1, 0);
  }
  const double v00 = value(lo[0], lo[1]);
  const double v10 = value(lo[0] + 1, lo[1]);
  const double v01 = value(lo[0], lo[1] + 1);
  const double v11 = value(lo[0] + 1, lo[1] + 1);
  const double tx = frac[0];
  const double ty = frac[1];
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

GridField restrict_to(const GridField& fine, const TorusGrid& coarse) {
  const auto& fg = fine.grid();
  if (fg.dim() != coarse.dim() || fg.length() != coarse.length() || fg.n() % coarse.n() != 0)
    throw std::invalid_argument("restrict_to: grids are not nested");
  const int stride = fg.n() / coarse.n();
  GridField out(coarse, fine.components());
  for (int c = 0; c < fine.components(); ++c) {
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      const auto idx = coarse.index(k);
      out.at(c, k) = fine.at(c, fg.flat(idx[0] * stride, idx[1] * stride));
    }
  }
  return out;
}

double max_upwind_slope(const GridField& field) {
  double m = 0.0;
  for (int axis = 0; axis < field.grid().dim(); ++axis) {
    const auto [minus, plus] = upwind_diffs(field, axis);
    m = std::max({m, sup_norm(minus), sup_norm(plus)});
  }
  return m;
}

void write_csv(std::ostream& out, const GridField& field) {
  const auto& g = field.grid();
  out << "# grid n=" << g.n() << " N=" << g.dim() << " L=" << std::setprecision(17) << g.length()
      << " M=" << field.components() << '\n';
  out << std::setprecision(17);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto idx = g.index(k);
    out << idx[0];
    if (g.dim() == 2) out << ',' << idx[1];
    for (int c = 0; c < field.components(); ++c) out << ',' << field.at(c, k);
    out << '\n';
  }
}

void write_csv(const std::string& path, const GridField& field) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, field);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

GridField read_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("grid csv: missing header");
  int n = 0, dim = 0, m = 0;
  double length = 0.0;
  {
    std::istringstream hs(header);
    std::string hash, word;
    hs >> hash >> word;
    if (hash != "#" || word != "grid") throw std::runtime_error("grid csv: bad header");
    std::string kv;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::runtime_error("grid csv: bad header field " + kv);
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "n") n = std::stoi(val);
      else if (key == "N") dim = std::stoi(val);
      else if (key == "L") length = std::stod(val);
      else if (key == "M") m = std::stoi(val);
    }
  }
  TorusGrid grid(dim, n, length);
  GridField out(grid, m);
  std::vector<bool> seen(grid.size(), false);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != static_cast<std::size_t>(dim + m))
      throw std::runtime_error("grid csv: wrong column count in row " + std::to_string(rows));
    const int i0 = std::stoi(cells[0]);
    const int i1 = dim == 2 ? std::stoi(cells[1]) : 0;
    if (i0 < 0 || i0 >= n || i1 < 0 || i1 >= n) throw std::runtime_error("grid csv: bad index");
    const std::size_t k = grid.flat(i0, i1);
    for (int c = 0; c < m; ++c) out.at(c, k) = std::stod(cells[static_cast<std::size_t>(dim + c)]);
    seen[k] = true;
    ++rows;
  }
  if (rows != grid.size() || !std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
    throw std::runtime_error("grid csv: expected " + std::to_string(grid.size()) + " rows");
  return out;
}

GridField read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace hjhom
