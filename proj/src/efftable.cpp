#include "hjhom/efftable.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace hjhom {

namespace {

std::string axis_name(char kind, int index) { return std::string(1, kind) + std::to_string(index); }

std::vector<std::string> axis_names(int m, int dim) {
  std::vector<std::string> names;
  for (int a = 1; a <= dim; ++a) names.push_back(axis_name('x', a));
  for (int j = 1; j <= m; ++j) names.push_back(axis_name('r', j));
  for (int a = 1; a <= dim; ++a) names.push_back(axis_name('p', a));
  return names;
}

}  // namespace

std::vector<Axis> default_axes(int m, int dim) {
  std::vector<Axis> axes;
  for (const auto& name : axis_names(m, dim)) axes.push_back({name, 0.0, 0.0, 1});
  return axes;
}

std::vector<Axis> parse_axes(const std::string& text, int m, int dim) {
  auto axes = default_axes(m, dim);
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::replace(normalized.begin(), normalized.end(), ';', ' ');
  std::istringstream in(normalized);
  std::string token;
  while (in >> token) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = token.find(':', start)) != std::string::npos; start = pos + 1)
      parts.push_back(token.substr(start, pos - start));
    parts.push_back(token.substr(start));
    if (parts.size() != 4) throw std::invalid_argument("axis spec '" + token + "' is not name:min:max:count");
    auto it = std::find_if(axes.begin(), axes.end(), [&](const Axis& a) { return a.name == parts[0]; });
    if (it == axes.end()) throw std::invalid_argument("unknown axis name '" + parts[0] + "'");
    Axis axis;
    try {
      axis = {parts[0], std::stod(parts[1]), std::stod(parts[2]), std::stoi(parts[3])};
    } catch (const std::exception&) {
      throw std::invalid_argument("axis spec '" + token + "' has a malformed number");
    }
    if (axis.count < 1) throw std::invalid_argument("axis '" + axis.name + "' needs count >= 1");
    if (axis.count > 1 && !(axis.max > axis.min))
      throw std::invalid_argument("axis '" + axis.name + "' needs max > min");
    if (axis.count == 1) axis.max = axis.min;
    *it = axis;
  }
  return axes;
}

nlohmann::json CellParams::to_json() const {
  return {{"n", n}, {"alphas", alphas}, {"residual_tol", residual_tol}, {"max_iters", max_iters}};
}

CellParams CellParams::from_json(const nlohmann::json& j) {
  CellParams p;
  p.n = j.value("n", 0);
  if (j.contains("alphas")) p.alphas = j.at("alphas").get<std::vector<double>>();
  p.residual_tol = j.value("residual_tol", p.residual_tol);
  p.max_iters = j.value("max_iters", p.max_iters);
  return p;
}

// ----------------------------------------------------------------- HBarTable

HBarTable::HBarTable(int m, int dim, std::vector<Axis> axes, std::vector<int> components,
                     std::vector<double> values, nlohmann::json provenance)
    : m_(m), dim_(dim), axes_(std::move(axes)), components_(std::move(components)),
      values_(std::move(values)), provenance_(std::move(provenance)) {
  const auto names = axis_names(m, dim);
  if (axes_.size() != names.size()) throw std::invalid_argument("HBarTable: wrong number of axes");
  node_count_ = 1;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a].name != names[a]) throw std::invalid_argument("HBarTable: axes out of order");
    if (axes_[a].count < 1) throw std::invalid_argument("HBarTable: axis count must be >= 1");
    node_count_ *= static_cast<std::size_t>(axes_[a].count);
  }
  if (components_.empty()) throw std::invalid_argument("HBarTable: empty component list");
  if (values_.size() != node_count_ * components_.size())
    throw std::invalid_argument("HBarTable: value count does not match lattice");
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("HBarTable: non-finite values");
}

std::vector<double> HBarTable::node_coords(std::size_t flat) const {
  std::vector<double> coords(axes_.size());
  for (std::size_t a = axes_.size(); a-- > 0;) {
    const auto count = static_cast<std::size_t>(axes_[a].count);
    coords[a] = axes_[a].at(static_cast<int>(flat % count));
    flat /= count;
  }
  return coords;
}

bool HBarTable::has_component(int i) const {
  return std::find(components_.begin(), components_.end(), i) != components_.end();
}

double HBarTable::query(int i, const Point& x, std::span<const double> r,
                        std::span<const double> p) const {
  if (r.size() != static_cast<std::size_t>(m_) || p.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("HBarTable::query: wrong r or p size");
  std::array<double, 2 + 16 + 2> coords{};
  std::size_t a = 0;
  for (int d = 0; d < dim_; ++d) coords[a++] = x[d];
  for (double v : r) coords[a++] = v;
  for (double v : p) coords[a++] = v;
  return query_coords(i, std::span<const double>(coords.data(), a));
}

double HBarTable::query_coords(int i, std::span<const double> coords) const {
  const auto slot_it = std::find(components_.begin(), components_.end(), i);
  if (slot_it == components_.end())
    throw std::out_of_range("HBarTable: component " + std::to_string(i + 1) + " not tabulated");
  const auto slot = static_cast<std::size_t>(slot_it - components_.begin());
  if (coords.size() != axes_.size()) throw std::invalid_argument("HBarTable: wrong coordinate count");

  struct Active {
    std::size_t stride;
    std::size_t lo;
    double t;
  };
  std::array<Active, 20> active{};
  std::size_t n_active = 0;
  std::size_t base = 0;
  std::size_t stride = 1;
  for (std::size_t a = axes_.size(); a-- > 0;) {
    const Axis& axis = axes_[a];
    if (!axis.frozen()) {
      const double span = axis.max - axis.min;
      const double tol = 1e-9 * span;
      const double v = coords[a];
      if (!(v >= axis.min - tol && v <= axis.max + tol)) {
        std::ostringstream os;
        os << "HBarTable: " << axis.name << " = " << v << " outside [" << axis.min << ", " << axis.max << "]";
        throw OutOfHullError(os.str());
      }
      double s = std::clamp((v - axis.min) / span * (axis.count - 1), 0.0, static_cast<double>(axis.count - 1));
      if (const double rs = std::round(s); std::abs(s - rs) < 1e-10 * axis.count) s = rs;
      auto lo = static_cast<std::size_t>(std::floor(s));
      if (lo >= static_cast<std::size_t>(axis.count - 1)) lo = static_cast<std::size_t>(axis.count - 2);
      const double t = s - static_cast<double>(lo);
      base += lo * stride;
      if (t != 0.0) active[n_active++] = {stride, lo, t};
    }
    stride *= static_cast<std::size_t>(axis.count);
  }
  const double* vals = values_.data() + slot * node_count_;
  double acc = 0.0;
  const std::size_t corners = std::size_t{1} << n_active;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    double weight = 1.0;
    std::size_t offset = base;
    for (std::size_t b = 0; b < n_active; ++b) {
      if (mask & (std::size_t{1} << b)) {
        weight *= active[b].t;
        offset += active[b].stride;
      } else {
        weight *= 1.0 - active[b].t;
      }
    }
    acc += weight * vals[offset];
  }
  return acc;
}

bool HBarTable::operator==(const HBarTable& other) const {
  if (m_ != other.m_ || dim_ != other.dim_ || axes_ != other.axes_ || components_ != other.components_ ||
      values_.size() != other.values_.size())
    return false;
  return std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0;
}

// ----------------------------------------------------------------- building

HBarTable build_table(std::shared_ptr<const HamiltonianSystem> sys, const std::vector<int>& components,
                      const std::vector<Axis>& axes, const CellParams& params, unsigned workers) {
  if (!sys) throw std::invalid_argument("build_table: no system");
  if (components.empty()) throw std::invalid_argument("build_table: empty component list");
  for (int i : components)
    if (i < 0 || i >= sys->M()) throw std::out_of_range("build_table: component index out of range");
  const int m = sys->M();
  const int dim = sys->N();
  // shape check through the constructor on a dummy value block
  std::size_t nodes = 1;
  for (const auto& a : axes) nodes *= static_cast<std::size_t>(std::max(a.count, 1));
  std::vector<double> values(nodes * components.size(), 0.0);
  nlohmann::json provenance = {{"system", sys->description()},
                               {"cell", params.to_json()},
                               {"components", components}};
  HBarTable shape(m, dim, axes, components, values, provenance);

  const TorusGrid grid = params.n > 0 ? TorusGrid(dim, params.n, 1.0) : CellProblemSpec::default_grid(dim);
  const std::size_t jobs = nodes * components.size();
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::vector<std::pair<std::size_t, nlohmann::json>> failures;
  auto work = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < jobs;) {
      const std::size_t slot = job / nodes;
      const std::size_t flat = job % nodes;
      const auto coords = shape.node_coords(flat);
      CellProblemSpec spec;
      spec.sys = sys;
      spec.component = components[slot];
      for (int d = 0; d < dim; ++d) spec.x[static_cast<std::size_t>(d)] = coords[static_cast<std::size_t>(d)];
      spec.r.assign(coords.begin() + dim, coords.begin() + dim + m);
      spec.p.assign(coords.begin() + dim + m, coords.end());
      spec.grid = grid;
      spec.alphas = params.alphas;
      spec.residual_tol = params.residual_tol;
      spec.max_iters = params.max_iters;
      try {
        values[job] = effective_hamiltonian(spec).lambda;
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        failures.emplace_back(job, nlohmann::json{{"component", components[slot] + 1},
                                                  {"coords", coords},
                                                  {"error", e.what()}});
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<nlohmann::json> failed;
    for (auto& f : failures) failed.push_back(std::move(f.second));
    const std::string what = "build_table: " + std::to_string(failed.size()) +
                             " node solve(s) failed; first: " + failed.front().dump();
    throw TableBuildError(what, std::move(failed));
  }
  return HBarTable(m, dim, axes, components, std::move(values), std::move(provenance));
}

// ----------------------------------------------------------------- persistence

namespace {

constexpr char kMagic[5] = {'H', 'B', 'A', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) throw std::runtime_error("HBAR: truncated file");
  return v;
}

std::string get_string(std::istream& in, std::uint64_t limit) {
  const auto len = get<std::uint64_t>(in);
  if (len > limit) throw std::runtime_error("HBAR: malformed string length");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len)) throw std::runtime_error("HBAR: truncated file");
  return s;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

void save_table(const HBarTable& table, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.M()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.N()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.axes().size()));
  for (const auto& a : table.axes()) {
    put_string(out, a.name);
    put<double>(out, a.min);
    put<double>(out, a.max);
    put<std::int32_t>(out, a.count);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.components().size()));
  for (int c : table.components()) put<std::int32_t>(out, c);
  put_string(out, table.provenance().dump());
  put<std::uint64_t>(out, table.values().size());
  out.write(reinterpret_cast<const char*>(table.values().data()),
            static_cast<std::streamsize>(table.values().size() * sizeof(double)));
  if (!out) throw std::runtime_error("HBAR: write failed");
}

void save_table(const HBarTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_table(table, out);
}

HBarTable load_table(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(magic))) throw std::runtime_error("HBAR: truncated file");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("HBAR: bad magic / version tag");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("HBAR: unsupported version " + std::to_string(version));
  const auto m = get<std::uint32_t>(in);
  const auto dim = get<std::uint32_t>(in);
  const auto n_axes = get<std::uint32_t>(in);
  if (m < 1 || m > 16 || dim < 1 || dim > 2 || n_axes != 2 * dim + m)
    throw std::runtime_error("HBAR: malformed header");
  std::vector<Axis> axes;
  for (std::uint32_t a = 0; a < n_axes; ++a) {
    Axis axis;
    axis.name = get_string(in, 16);
    axis.min = get<double>(in);
    axis.max = get<double>(in);
    axis.count = get<std::int32_t>(in);
    axes.push_back(axis);
  }
  const auto n_comp = get<std::uint32_t>(in);
  if (n_comp < 1 || n_comp > m) throw std::runtime_error("HBAR: malformed component list");
  std::vector<int> comps;
  for (std::uint32_t c = 0; c < n_comp; ++c) comps.push_back(get<std::int32_t>(in));
  nlohmann::json provenance;
  try {
    provenance = nlohmann::json::parse(get_string(in, std::uint64_t{1} << 32));
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("HBAR: malformed provenance block");
  }
  const auto n_values = get<std::uint64_t>(in);
  if (n_values > (std::uint64_t{1} << 34)) throw std::runtime_error("HBAR: malformed value count");
  std::vector<double> values(n_values);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n_values * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n_values * sizeof(double)))
    throw std::runtime_error("HBAR: truncated file");
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("HBAR: trailing bytes");
  try {
    return HBarTable(static_cast<int>(m), static_cast<int>(dim), std::move(axes), std::move(comps),
                     std::move(values), std::move(provenance));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("HBAR: ") + e.what());
  }
}

HBarTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_table(in);
}

void export_table_csv(const HBarTable& table, std::ostream& out) {
  out << "# HBAR1 csv export M=" << table.M() << " N=" << table.N() << '\n';
  out << "component";
  for (const auto& a : table.axes()) out << ',' << a.name;
  out << ",hbar\n" << std::setprecision(17);
  for (std::size_t s = 0; s < table.components().size(); ++s) {
    for (std::size_t k = 0; k < table.node_count(); ++k) {
      out << table.components()[s] + 1;
      for (double c : table.node_coords(k)) out << ',' << c;
      out << ',' << table.node_value(s, k) << '\n';
    }
  }
}

void export_table_csv(const HBarTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  export_table_csv(table, out);
}

// ----------------------------------------------------------------- closed forms

double closed_form_eikonal_weakly_coupled(const CouplingMatrix& c, int i, std::span<const double> r,
                                          double p, int audit_n, double x) {
  if (c.N != 1) throw std::invalid_argument("closed form requires N = 1");
  if (i < 0 || i >= c.M) throw std::out_of_range("closed form: component index out of range");
  if (r.size() != static_cast<std::size_t>(c.M)) throw std::invalid_argument("closed form: r must have M entries");
  audit_n = std::max(audit_n, 4096);
  double min_f = std::numeric_limits<double>::infinity();
  double sum_f = 0.0;
  for (int k = 0; k < audit_n; ++k) {
    const Point y{static_cast<double>(k) / audit_n, 0.0};
    double f = 0.0;
    for (int j = 0; j < c.M; ++j) f -= c.c(j, i)({x, 0.0}, y) * r[static_cast<std::size_t>(j)];
    min_f = std::min(min_f, f);
    sum_f += f;
  }
  // periodic trapezoid rule on the uniform audit grid
  const double integral = sum_f / audit_n;
  return std::max(-min_f, std::abs(p) - integral);
}

double closed_form_constant_coupling(const std::function<double(int, std::span<const double>)>& hbar_base,
                                     const CouplingMatrix& c, int i, std::span<const double> r,
                                     std::span<const double> p) {
  if (!c.all_constant()) throw std::invalid_argument("closed_form_constant_coupling: coefficients are not constant");
  if (i < 0 || i >= c.M) throw std::out_of_range("closed form: component index out of range");
  double value = hbar_base(i, p);
  for (int j = 0; j < c.M; ++j) value += c.c(j, i).constant_value() * r[static_cast<std::size_t>(j)];
  return value;
}

double closed_form_piecewise_r1(const std::function<double(double)>& c11, double r1, double p, int audit_n) {
  audit_n = std::max(audit_n, 4096);
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int k = 0; k < audit_n; ++k) {
    const double v = c11(static_cast<double>(k) / audit_n);
    hi = std::max(hi, v);
    lo = std::min(lo, v);
    sum += v;
  }
  const double mean = sum / audit_n;
  const double gap = 1e-12 * (1.0 + std::abs(hi) + std::abs(lo));
  if (!(hi - mean > gap) || !(mean - lo > gap))
    throw std::domain_error("closed_form_piecewise_r1: degenerate coefficient (max or min equals mean)");
  if (lo < 0.0) throw std::domain_error("closed_form_piecewise_r1: coefficient minimum must be >= 0");
  const double ap = std::abs(p);
  if (r1 <= ap / (lo - mean)) return lo * r1;
  if (r1 >= ap / (hi - mean)) return hi * r1;
  return mean * r1 + ap;
}

// ----------------------------------------------------------------- providers

TableProvider::TableProvider(std::shared_ptr<const HBarTable> table) : table_(std::move(table)) {
  if (!table_) throw std::invalid_argument("TableProvider: null table");
  const auto& axes = table_->axes();
  const int dim = table_->N();
  const int m = table_->M();
  std::vector<std::size_t> strides(axes.size());
  std::size_t stride = 1;
  for (std::size_t a = axes.size(); a-- > 0;) {
    strides[a] = stride;
    stride *= static_cast<std::size_t>(axes[a].count);
  }
  auto slope_along = [&](std::size_t a) {
    const Axis& axis = axes[a];
    if (axis.frozen()) return 0.0;
    const double step = (axis.max - axis.min) / (axis.count - 1);
    double s = 0.0;
    for (std::size_t slot = 0; slot < table_->components().size(); ++slot) {
      for (std::size_t k = 0; k < table_->node_count(); ++k) {
        const auto idx = (k / strides[a]) % static_cast<std::size_t>(axis.count);
        if (idx + 1 >= static_cast<std::size_t>(axis.count)) continue;
        s = std::max(s, std::abs(table_->node_value(slot, k + strides[a]) - table_->node_value(slot, k)) / step);
      }
    }
    return s;
  };
  for (int d = 0; d < dim; ++d) lip_p_ = std::max(lip_p_, slope_along(static_cast<std::size_t>(dim + m + d)));
  for (int j = 0; j < m; ++j) lip_r_ = std::max(lip_r_, slope_along(static_cast<std::size_t>(dim + j)));
  lip_p_ *= 1.1;
  lip_r_ *= 1.1;
}

double TableProvider::value(int i, const Point& x, std::span<const double> r, std::span<const double> p) const {
  return table_->query(i, x, r, p);
}

WeaklyCoupledClosedForm::WeaklyCoupledClosedForm(const CouplingMatrix& c, int audit_n)
    : m_(c.M), audit_n_(audit_n) {
  if (c.N != 1) throw std::invalid_argument("closed form provider requires N = 1");
  for (const auto& e : c.entries)
    if (e.depends_on_x()) throw std::invalid_argument("closed form provider requires y-only coefficients");
  const auto mm = static_cast<std::size_t>(m_);
  samples_.resize(mm * mm * static_cast<std::size_t>(audit_n_));
  means_.resize(mm * mm);
  for (int i = 0; i < m_; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < m_; ++j) {
      double sum = 0.0;
      double sup = 0.0;
      for (int k = 0; k < audit_n_; ++k) {
        const double v = c.c(j, i)({0.0, 0.0}, {static_cast<double>(k) / audit_n_, 0.0});
        samples_[(static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(j)) * static_cast<std::size_t>(audit_n_) +
                 static_cast<std::size_t>(k)] = v;
        sum += v;
        sup = std::max(sup, std::abs(v));
      }
      means_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(j)] = sum / audit_n_;
      if (m_ == 1) {
        const auto first = samples_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * static_cast<std::size_t>(audit_n_));
        const auto [lo, hi] = std::minmax_element(first, first + audit_n_);
        min_.push_back(*lo);
        max_.push_back(*hi);
      }
      row_sum = std::max(row_sum, sup);
    }
    lip_r_ = std::max(lip_r_, 1.1 * row_sum);
  }
}

double WeaklyCoupledClosedForm::value(int i, const Point&, std::span<const double> r,
                                      std::span<const double> p) const {
  const auto mm = static_cast<std::size_t>(m_);
  const auto n = static_cast<std::size_t>(audit_n_);
  const double* base = samples_.data() + static_cast<std::size_t>(i) * mm * n;
  double transport = std::abs(p[0]);
  for (std::size_t j = 0; j < mm; ++j) transport += r[j] * means_[static_cast<std::size_t>(i) * mm + j];
  double top = -std::numeric_limits<double>::infinity();
  if (m_ == 1) {
    top = r[0] >= 0.0 ? r[0] * max_[static_cast<std::size_t>(i)] : r[0] * min_[static_cast<std::size_t>(i)];
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < mm; ++j) s += base[j * n + k] * r[j];
      top = std::max(top, s);
    }
  }
  return std::max(top, transport);
}

YIndependentProvider::YIndependentProvider(std::shared_ptr<const HamiltonianSystem> sys) : sys_(std::move(sys)) {
  if (!sys_ || !sys_->y_independent())
    throw std::invalid_argument("YIndependentProvider requires a y-independent system");
}

double YIndependentProvider::value(int i, const Point& x, std::span<const double> r,
                                   std::span<const double> p) const {
  return sys_->eval_unchecked(i, x, {0.0, 0.0}, r, p);
}

}  // namespace hjhom
