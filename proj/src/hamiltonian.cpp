#include "hjhom/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hjhom {

namespace {

constexpr int kMaxComponents = 16;
using SlotArray = std::array<double, slot::r1 + kMaxComponents>;

double p_norm(std::span<const double> p, int dim) {
  return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

void fill_slots(SlotArray& s, const Point& x, const Point& y, std::span<const double> r,
                std::span<const double> p) {
  s[slot::x1] = x[0];
  s[slot::x2] = x[1];
  s[slot::y1] = y[0];
  s[slot::y2] = y[1];
  s[slot::p1] = p.size() > 0 ? p[0] : 0.0;
  s[slot::p2] = p.size() > 1 ? p[1] : 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) s[slot::r1 + j] = r[j];
}

bool component_depends_on_y(const HamiltonianSystem& sys, int i) {
  const auto& comp = sys.component(i);
  switch (comp.kind) {
    case ComponentKind::EikonalCoupled: {
      return comp.speed.depends_on_y();
    }
    case ComponentKind::WeaklyCoupled: {
      if (comp.base.uses_range(slot::y1, slot::y2 + 1)) return true;
      if (!sys.coupling()) return false;
      for (int j = 0; j < sys.M(); ++j) {
        if (sys.coupling()->c(j, i).depends_on_y()) return true;
      }
      return false;
    }
    case ComponentKind::Custom:
      if (!comp.custom_text.empty())
        return Expression::parse(comp.custom_text).uses_range(slot::y1, slot::y2 + 1);
      return true;
  }
  return true;
}

bool component_depends_on_x(const HamiltonianSystem& sys, int i) {
  const auto& comp = sys.component(i);
  switch (comp.kind) {
    case ComponentKind::EikonalCoupled:
      return comp.speed.depends_on_x();
    case ComponentKind::WeaklyCoupled: {
      if (comp.base.uses_range(slot::x1, slot::x2 + 1)) return true;
      if (!sys.coupling()) return false;
      for (int j = 0; j < sys.M(); ++j)
        if (sys.coupling()->c(j, i).depends_on_x()) return true;
      return false;
    }
    case ComponentKind::Custom:
      if (!comp.custom_text.empty())
        return Expression::parse(comp.custom_text).uses_range(slot::x1, slot::x2 + 1);
      return true;
  }
  return true;
}

std::vector<Point> lattice(int dim, int per_axis, double extent) {
  std::vector<Point> out;
  for (int a = 0; a < per_axis; ++a) {
    const double u = extent * a / per_axis;
    if (dim == 1) {
      out.push_back({u, 0.0});
    } else {
      for (int b = 0; b < per_axis; ++b) out.push_back({u, extent * b / per_axis});
    }
  }
  return out;
}

nlohmann::json point_json(const Point& p, int dim) {
  return dim == 1 ? nlohmann::json::array({p[0]}) : nlohmann::json::array({p[0], p[1]});
}

}  // namespace

Point reduce_to_cell(const Point& y, int dim) {
  Point out{0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    double v = y[a] - std::floor(y[a]);
    if (v >= 1.0) v = 0.0;
    out[a] = v;
  }
  return out;
}

// ---------------------------------------------------------------- Coefficient

Coefficient Coefficient::constant(double value) {
  Coefficient c{};
  c.kind_ = Kind::Constant;
  c.value_ = value;
  return c;
}

Coefficient Coefficient::expression(Expression expr) {
  if (expr.uses_range(slot::p1, slot::p2 + 1) || expr.slots_required() > slot::r1)
    throw std::invalid_argument("coefficient '" + expr.text() +
                                "' may only depend on x1, x2, y1, y2");
  Coefficient c = constant(0.0);
  if (expr.is_constant()) {
    c.value_ = expr.eval({});
    return c;
  }
  c.kind_ = Kind::Expr;
  c.expr_ = std::move(expr);
  return c;
}

Coefficient Coefficient::expression(std::string_view text) {
  return expression(Expression::parse(text));
}

Coefficient Coefficient::table(int dim, int n, std::vector<double> values) {
  Coefficient c = constant(0.0);
  c.kind_ = Kind::Table;
  c.table_ = std::make_shared<const GridField>(TorusGrid(dim, n, 1.0), 1, std::move(values));
  if (!c.table_->all_finite()) throw std::invalid_argument("coefficient table has non-finite entries");
  return c;
}

double Coefficient::operator()(const Point& x, const Point& y) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Expr: {
      const std::array<double, slot::p1> s{x[0], x[1], y[0], y[1]};
      return expr_.eval(s);
    }
    case Kind::Table:
      return interpolate(*table_, y);
  }
  return value_;
}

bool Coefficient::depends_on_x() const {
  return kind_ == Kind::Expr && expr_.uses_range(slot::x1, slot::x2 + 1);
}

bool Coefficient::depends_on_y() const {
  return kind_ == Kind::Table || (kind_ == Kind::Expr && expr_.uses_range(slot::y1, slot::y2 + 1));
}

std::string Coefficient::describe() const {
  switch (kind_) {
    case Kind::Constant: {
      std::ostringstream os;
      os << value_;
      return os.str();
    }
    case Kind::Expr:
      return expr_.text();
    case Kind::Table:
      return "table(y)";
  }
  return {};
}

// ------------------------------------------------------------- CouplingMatrix

CouplingMatrix::CouplingMatrix(int m, int dim, std::vector<Coefficient> row_major, double period)
    : M(m), N(dim), x_period(period), entries(std::move(row_major)) {
  if (entries.size() != static_cast<std::size_t>(m * m))
    throw std::invalid_argument("coupling matrix must be M x M");
}

CouplingMatrix CouplingMatrix::constants(const std::vector<std::vector<double>>& rows, int dim) {
  const int m = static_cast<int>(rows.size());
  std::vector<Coefficient> entries;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != m) throw std::invalid_argument("coupling matrix must be square");
    for (double v : row) entries.push_back(Coefficient::constant(v));
  }
  return CouplingMatrix(m, dim, std::move(entries));
}

bool CouplingMatrix::all_constant() const {
  return std::all_of(entries.begin(), entries.end(), [](const Coefficient& c) { return c.is_constant(); });
}

// -------------------------------------------------------- HamiltonianComponent

HamiltonianComponent HamiltonianComponent::eikonal(Coefficient speed, Expression coupling,
                                                   double delta) {
  HamiltonianComponent c;
  c.kind = ComponentKind::EikonalCoupled;
  c.speed = std::move(speed);
  c.coupling_term = coupling.empty() ? Expression::constant(0.0) : std::move(coupling);
  c.delta = delta;
  c.convex_in_p = true;
  if (c.coupling_term.uses_range(0, slot::r1))
    throw std::invalid_argument("eikonal coupling F may only depend on r1..rM");
  return c;
}

HamiltonianComponent HamiltonianComponent::weakly_coupled(Expression base, bool convex) {
  HamiltonianComponent c;
  c.kind = ComponentKind::WeaklyCoupled;
  if (base.slots_required() > slot::r1)
    throw std::invalid_argument("weakly coupled base G may not depend on r");
  c.base = std::move(base);
  c.convex_in_p = convex;
  return c;
}

HamiltonianComponent HamiltonianComponent::custom_fn(CustomHamiltonian fn, bool convex) {
  HamiltonianComponent c;
  c.kind = ComponentKind::Custom;
  c.custom = std::move(fn);
  c.convex_in_p = convex;
  return c;
}

HamiltonianComponent HamiltonianComponent::custom_expr(Expression expr, bool convex) {
  auto shared = std::make_shared<const Expression>(std::move(expr));
  auto c = custom_fn(
      [shared](const Point& x, const Point& y, std::span<const double> r, std::span<const double> p) {
        SlotArray s{};
        fill_slots(s, x, y, r, p);
        return shared->eval(std::span<const double>(s.data(), slot::count(r.size())));
      },
      convex);
  c.custom_text = shared->text();
  return c;
}

// ----------------------------------------------------------- HamiltonianSystem

struct HamiltonianSystem::BoundCache {
  std::mutex mutex;
  std::map<int, double> lip_p;
  std::map<int, double> lip_r;
};

HamiltonianSystem::HamiltonianSystem(int m, int dim, std::vector<HamiltonianComponent> components,
                                     std::optional<CouplingMatrix> coupling, double x_period)
    : m_(m), dim_(dim), x_period_(x_period), components_(std::move(components)),
      coupling_(std::move(coupling)), cache_(std::make_unique<BoundCache>()) {
  if (m < 1 || m > kMaxComponents)
    throw std::invalid_argument("M must lie in [1, " + std::to_string(kMaxComponents) + "]");
  if (dim != 1 && dim != 2) throw std::invalid_argument("N must be 1 or 2");
  if (!(x_period > 0.0)) throw std::invalid_argument("x_period must be positive");
  if (components_.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("expected " + std::to_string(m) + " components");
  for (int i = 0; i < m; ++i) {
    const auto& c = components_[static_cast<std::size_t>(i)];
    switch (c.kind) {
      case ComponentKind::EikonalCoupled:
        if (!(c.delta > 0.0))
          throw std::invalid_argument("eikonal component " + std::to_string(i + 1) +
                                      ": delta must be positive");
        if (c.coupling_term.slots_required() > slot::count(static_cast<std::size_t>(m)))
          throw std::invalid_argument("eikonal component refers to r beyond M");
        break;
      case ComponentKind::WeaklyCoupled:
        if (!coupling_)
          throw std::invalid_argument("weakly coupled component requires a coupling matrix");
        break;
      case ComponentKind::Custom:
        if (!c.custom) throw std::invalid_argument("custom component without evaluation callback");
        break;
    }
  }
  if (coupling_ && coupling_->M != m) throw std::invalid_argument("coupling matrix size differs from M");
  if (coupling_) {
    coupling_->N = dim;
    coupling_->x_period = x_period;
  }
}

HamiltonianSystem::HamiltonianSystem(const HamiltonianSystem& other)
    : m_(other.m_), dim_(other.dim_), x_period_(other.x_period_), components_(other.components_),
      coupling_(other.coupling_), declared_lip_p_(other.declared_lip_p_),
      declared_lip_r_(other.declared_lip_r_), description_(other.description_),
      cache_(std::make_unique<BoundCache>()) {}

HamiltonianSystem& HamiltonianSystem::operator=(const HamiltonianSystem& other) {
  if (this != &other) {
    HamiltonianSystem copy(other);
    *this = std::move(copy);
  }
  return *this;
}

HamiltonianSystem::HamiltonianSystem(HamiltonianSystem&&) noexcept = default;
HamiltonianSystem& HamiltonianSystem::operator=(HamiltonianSystem&&) noexcept = default;
HamiltonianSystem::~HamiltonianSystem() = default;

double HamiltonianSystem::eval(int i, const Point& x, const Point& y, std::span<const double> r,
                               std::span<const double> p) const {
  if (i < 0 || i >= m_) throw std::out_of_range("component index " + std::to_string(i + 1) +
                                                " outside 1.." + std::to_string(m_));
  if (r.size() != static_cast<std::size_t>(m_)) throw std::invalid_argument("r must have M entries");
  if (p.size() != static_cast<std::size_t>(dim_)) throw std::invalid_argument("p must have N entries");
  auto finite = [](double v) { return std::isfinite(v); };
  for (int a = 0; a < dim_; ++a)
    if (!finite(x[a]) || !finite(y[a])) throw std::domain_error("non-finite x or y");
  if (!std::all_of(r.begin(), r.end(), finite) || !std::all_of(p.begin(), p.end(), finite))
    throw std::domain_error("non-finite r or p");
  return eval_unchecked(i, x, reduce_to_cell(y, dim_), r, p);
}

double HamiltonianSystem::eval_unchecked(int i, const Point& x, const Point& y,
                                         std::span<const double> r,
                                         std::span<const double> p) const {
  const auto& comp = components_[static_cast<std::size_t>(i)];
  switch (comp.kind) {
    case ComponentKind::EikonalCoupled: {
      SlotArray s{};
      fill_slots(s, x, y, r, p);
      return comp.speed(x, y) * p_norm(p, dim_) +
             comp.coupling_term.eval(std::span<const double>(s.data(), slot::count(r.size())));
    }
    case ComponentKind::WeaklyCoupled: {
      SlotArray s{};
      fill_slots(s, x, y, r, p);
      double h = comp.base.eval(std::span<const double>(s.data(), slot::r1));
      for (int j = 0; j < m_; ++j) h += coupling_->c(j, i)(x, y) * r[static_cast<std::size_t>(j)];
      return h;
    }
    case ComponentKind::Custom:
      return comp.custom(x, y, r, p);
  }
  return 0.0;
}

bool HamiltonianSystem::y_independent() const {
  for (int i = 0; i < m_; ++i)
    if (component_depends_on_y(*this, i)) return false;
  return true;
}

bool HamiltonianSystem::x_independent() const {
  for (int i = 0; i < m_; ++i)
    if (component_depends_on_x(*this, i)) return false;
  return true;
}

namespace {
int radius_key(double radius) {
  return static_cast<int>(std::ceil(std::log2(std::max(radius, 1.0 / 1024.0))));
}
}  // namespace

double HamiltonianSystem::lip_p_bound(double radius) const {
  if (declared_lip_p_) return *declared_lip_p_;
  const int key = radius_key(radius);
  std::lock_guard lock(cache_->mutex);
  if (auto it = cache_->lip_p.find(key); it != cache_->lip_p.end()) return it->second;
  double bound = 0.0;
  const int resolution = dim_ == 1 ? 64 : 24;
  for (int i = 0; i < m_; ++i)
    bound = std::max(bound, estimate_lip_p(*this, i, std::ldexp(1.0, key), resolution));
  cache_->lip_p.emplace(key, bound);
  return bound;
}

double HamiltonianSystem::lip_r_bound(double radius) const {
  if (declared_lip_r_) return *declared_lip_r_;
  const int key = radius_key(radius);
  std::lock_guard lock(cache_->mutex);
  if (auto it = cache_->lip_r.find(key); it != cache_->lip_r.end()) return it->second;
  double bound = 0.0;
  const int resolution = dim_ == 1 ? 32 : 16;
  for (int i = 0; i < m_; ++i)
    bound = std::max(bound, estimate_lip_r(*this, i, std::ldexp(1.0, key), resolution));
  cache_->lip_r.emplace(key, bound);
  return bound;
}

// --------------------------------------------------------------- NodeEvaluator

NodeEvaluator::NodeEvaluator(const HamiltonianSystem& sys, int i, std::vector<Point> xs,
                             std::vector<Point> ys)
    : sys_(&sys), i_(i), kind_(sys.component(i).kind), xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size()) throw std::invalid_argument("NodeEvaluator: xs/ys size mismatch");
  for (auto& y : ys_) y = reduce_to_cell(y, sys.N());
  const auto& comp = sys.component(i);
  const std::size_t m = static_cast<std::size_t>(sys.M());
  if (kind_ == ComponentKind::EikonalCoupled) {
    speed_.resize(xs_.size());
    for (std::size_t k = 0; k < xs_.size(); ++k) speed_[k] = comp.speed(xs_[k], ys_[k]);
  } else if (kind_ == ComponentKind::WeaklyCoupled) {
    coupling_.resize(xs_.size() * m);
    for (std::size_t k = 0; k < xs_.size(); ++k)
      for (std::size_t j = 0; j < m; ++j)
        coupling_[k * m + j] = sys.coupling()->c(static_cast<int>(j), i)(xs_[k], ys_[k]);
  }
}

double NodeEvaluator::base_term(std::size_t k, std::span<const double> r,
                                std::span<const double> q) const {
  const int dim = sys_->N();
  switch (kind_) {
    case ComponentKind::EikonalCoupled:
      return speed_[k] * p_norm(q, dim);
    case ComponentKind::WeaklyCoupled: {
      SlotArray s{};
      fill_slots(s, xs_[k], ys_[k], {}, q);
      return sys_->component(i_).base.eval(std::span<const double>(s.data(), slot::r1));
    }
    case ComponentKind::Custom:
      return sys_->component(i_).custom(xs_[k], ys_[k], r, q);
  }
  return 0.0;
}

double NodeEvaluator::operator()(std::size_t k, std::span<const double> r,
                                 std::span<const double> q) const {
  switch (kind_) {
    case ComponentKind::EikonalCoupled: {
      SlotArray s{};
      for (std::size_t j = 0; j < r.size(); ++j) s[slot::r1 + j] = r[j];
      return base_term(k, r, q) +
             sys_->component(i_).coupling_term.eval(std::span<const double>(s.data(), slot::count(r.size())));
    }
    case ComponentKind::WeaklyCoupled: {
      double h = base_term(k, r, q);
      const std::size_t m = r.size();
      for (std::size_t j = 0; j < m; ++j) h += coupling_[k * m + j] * r[j];
      return h;
    }
    case ComponentKind::Custom:
      return base_term(k, r, q);
  }
  return 0.0;
}

void NodeEvaluator::freeze_r(std::span<const double> r) {
  frozen_r_.assign(r.begin(), r.end());
  shift_.assign(xs_.size(), 0.0);
  if (kind_ == ComponentKind::EikonalCoupled) {
    SlotArray s{};
    for (std::size_t j = 0; j < r.size(); ++j) s[slot::r1 + j] = r[j];
    const double f =
        sys_->component(i_).coupling_term.eval(std::span<const double>(s.data(), slot::count(r.size())));
    std::fill(shift_.begin(), shift_.end(), f);
  } else if (kind_ == ComponentKind::WeaklyCoupled) {
    const std::size_t m = r.size();
    for (std::size_t k = 0; k < xs_.size(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += coupling_[k * m + j] * r[j];
      shift_[k] = acc;
    }
  }
  frozen_ = true;
}

double NodeEvaluator::frozen(std::size_t k, std::span<const double> q) const {
  return base_term(k, frozen_r_, q) + shift_[k];
}

// ----------------------------------------------------------- sampled estimates

double estimate_lip_p(const HamiltonianSystem& sys, int i, double radius, int resolution) {
  if (!(radius > 0.0)) throw std::invalid_argument("estimate_lip_p: radius must be positive");
  if (i < 0 || i >= sys.M()) throw std::out_of_range("estimate_lip_p: bad component index");
  resolution = std::max(resolution, 4);
  const int dim = sys.N();
  const int m = sys.M();
  const auto xs = component_depends_on_x(sys, i) ? lattice(dim, 4, sys.x_period())
                                                 : std::vector<Point>{{0.0, 0.0}};
  const auto ys = component_depends_on_y(sys, i) ? lattice(dim, resolution, 1.0)
                                                 : std::vector<Point>{{0.0, 0.0}};
  std::vector<std::vector<double>> rs{std::vector<double>(static_cast<std::size_t>(m), 0.0),
                                      std::vector<double>(static_cast<std::size_t>(m), radius),
                                      std::vector<double>(static_cast<std::size_t>(m), -radius)};
  const std::vector<double> others = dim == 1 ? std::vector<double>{0.0}
                                              : std::vector<double>{0.0, 0.5 * radius, -0.5 * radius};
  const double step = 2.0 * radius / resolution;
  double slope = 0.0;
  std::vector<double> p(static_cast<std::size_t>(dim), 0.0);
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      for (const auto& r : rs) {
        for (int axis = 0; axis < dim; ++axis) {
          for (double other : others) {
            if (dim == 2) p[static_cast<std::size_t>(1 - axis)] = other;
            p[static_cast<std::size_t>(axis)] = -radius;
            double prev = sys.eval_unchecked(i, x, y, r, p);
            if (!std::isfinite(prev)) throw std::domain_error("estimate_lip_p: non-finite evaluation");
            for (int s = 1; s <= resolution; ++s) {
              p[static_cast<std::size_t>(axis)] = -radius + s * step;
              const double cur = sys.eval_unchecked(i, x, y, r, p);
              if (!std::isfinite(cur)) throw std::domain_error("estimate_lip_p: non-finite evaluation");
              slope = std::max(slope, std::abs(cur - prev) / step);
              prev = cur;
            }
          }
        }
      }
    }
  }
  return 1.1 * slope;
}

double estimate_lip_r(const HamiltonianSystem& sys, int i, double radius, int resolution) {
  if (!(radius > 0.0)) throw std::invalid_argument("estimate_lip_r: radius must be positive");
  if (i < 0 || i >= sys.M()) throw std::out_of_range("estimate_lip_r: bad component index");
  resolution = std::max(resolution, 4);
  const int dim = sys.N();
  const int m = sys.M();
  const auto xs = component_depends_on_x(sys, i) ? lattice(dim, 4, sys.x_period())
                                                 : std::vector<Point>{{0.0, 0.0}};
  const auto ys = component_depends_on_y(sys, i) ? lattice(dim, resolution, 1.0)
                                                 : std::vector<Point>{{0.0, 0.0}};
  std::vector<std::vector<double>> ps{std::vector<double>(static_cast<std::size_t>(dim), 0.0),
                                      std::vector<double>(static_cast<std::size_t>(dim), radius)};
  const std::vector<double> others{0.0, 0.5 * radius, -0.5 * radius};
  const double step = 2.0 * radius / resolution;
  double slope = 0.0;
  std::vector<double> r(static_cast<std::size_t>(m), 0.0);
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      for (const auto& p : ps) {
        for (int axis = 0; axis < m; ++axis) {
          for (double other : others) {
            for (int b = 0; b < m; ++b) r[static_cast<std::size_t>(b)] = other;
            r[static_cast<std::size_t>(axis)] = -radius;
            double prev = sys.eval_unchecked(i, x, y, r, p);
            if (!std::isfinite(prev)) throw std::domain_error("estimate_lip_r: non-finite evaluation");
            for (int s = 1; s <= resolution; ++s) {
              r[static_cast<std::size_t>(axis)] = -radius + s * step;
              const double cur = sys.eval_unchecked(i, x, y, r, p);
              if (!std::isfinite(cur)) throw std::domain_error("estimate_lip_r: non-finite evaluation");
              slope = std::max(slope, std::abs(cur - prev) / step);
              prev = cur;
            }
          }
        }
      }
    }
  }
  return 1.1 * slope;
}

// -------------------------------------------------------------- sampled checks

CheckReport check_A3(const HamiltonianSystem& sys, std::size_t sample_count, std::uint64_t seed,
                     double radius) {
  CheckReport report;
  report.name = "A3_monotonicity";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const int dim = sys.N();
  const auto m = static_cast<std::size_t>(sys.M());
  std::vector<double> r(m), s(m), p(static_cast<std::size_t>(dim));
  for (std::size_t n = 0; n < sample_count; ++n) {
    Point x{0.0, 0.0}, y{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      x[a] = sys.x_period() * unit(rng);
      y[a] = unit(rng);
    }
    for (auto& v : p) v = radius * sym(rng);
    for (auto& v : r) v = radius * sym(rng);
    if (n % 2 == 0) {
      for (auto& v : s) v = radius * sym(rng);
    } else {
      // structured pair: s = r - d with d_j the (possibly tied) maximum
      const std::size_t jmax = static_cast<std::size_t>(unit(rng) * static_cast<double>(m)) % m;
      const double top = radius * unit(rng);
      for (std::size_t k = 0; k < m; ++k) {
        double d = k == jmax ? top : top - radius * unit(rng);
        if (k != jmax && unit(rng) < 0.25) d = top;
        s[k] = r[k] - d;
      }
    }
    std::size_t j = 0;
    double best = r[0] - s[0];
    for (std::size_t k = 1; k < m; ++k) {
      if (r[k] - s[k] > best) {
        best = r[k] - s[k];
        j = k;
      }
    }
    if (best < 0.0) {
      std::swap(r, s);
      j = 0;
      best = r[0] - s[0];
      for (std::size_t k = 1; k < m; ++k) {
        if (r[k] - s[k] > best) {
          best = r[k] - s[k];
          j = k;
        }
      }
    }
    const double hr = sys.eval_unchecked(static_cast<int>(j), x, y, r, p);
    const double hs = sys.eval_unchecked(static_cast<int>(j), x, y, s, p);
    const double tol = 1e-12 * (1.0 + std::abs(hr) + std::abs(hs));
    report.record(hr - hs, tol,
                  {{"j", j + 1}, {"x", point_json(x, dim)}, {"y", point_json(y, dim)},
                   {"r", r}, {"s", s}, {"p", p}, {"difference", hr - hs}});
  }
  return report;
}

CheckReport check_A1_coefficients(const CouplingMatrix& c, std::size_t sample_count,
                                  std::uint64_t seed) {
  CheckReport report;
  report.name = "A1_coupling_signs";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int dim = c.N;
  auto test_point = [&](const Point& x, const Point& y) {
    double worst = std::numeric_limits<double>::infinity();
    nlohmann::json why;
    for (int i = 0; i < c.M; ++i) {
      double column = 0.0;
      for (int j = 0; j < c.M; ++j) {
        const double v = c.c(j, i)(x, y);
        column += v;
        const double margin = j == i ? v : -v;
        if (margin < worst) {
          worst = margin;
          why = {{"entry", {j + 1, i + 1}}, {"value", v},
                 {"rule", j == i ? "diagonal must be >= 0" : "off-diagonal must be <= 0"}};
        }
      }
      if (column < worst) {
        worst = column;
        why = {{"column", i + 1}, {"sum", column}, {"rule", "column sum must be >= 0"}};
      }
    }
    why["x"] = point_json(x, dim);
    why["y"] = point_json(y, dim);
    report.record(worst, 1e-14, why);
  };
  // the fundamental-cell lattice first so extrema at nodes are always seen
  for (const auto& y : lattice(dim, dim == 1 ? 64 : 16, 1.0)) test_point({0.0, 0.0}, y);
  for (std::size_t n = 0; n < sample_count; ++n) {
    Point x{0.0, 0.0}, y{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      x[a] = c.x_period * unit(rng);
      y[a] = unit(rng);
    }
    test_point(x, y);
  }
  return report;
}

CheckReport check_periodicity(const HamiltonianSystem& sys, std::size_t sample_count,
                              std::uint64_t seed, double radius) {
  CheckReport report;
  report.name = "y_periodicity";
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dyadic(0, (1 << 20) - 1);
  std::uniform_int_distribution<int> shift(-3, 3);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int dim = sys.N();
  const auto m = static_cast<std::size_t>(sys.M());
  std::vector<double> r(m), p(static_cast<std::size_t>(dim));
  for (std::size_t n = 0; n < sample_count; ++n) {
    Point x{0.0, 0.0}, y{0.0, 0.0}, yk{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      x[a] = sys.x_period() * unit(rng);
      // dyadic samples keep y + k exact in floating point
      y[a] = std::ldexp(static_cast<double>(dyadic(rng)), -20);
      yk[a] = y[a] + shift(rng);
    }
    for (auto& v : r) v = radius * sym(rng);
    for (auto& v : p) v = radius * sym(rng);
    for (int i = 0; i < sys.M(); ++i) {
      const double a = sys.eval(i, x, y, r, p);
      const double b = sys.eval(i, x, yk, r, p);
      report.record(-std::abs(a - b), 0.0,
                    {{"i", i + 1}, {"y", point_json(y, dim)}, {"y_shifted", point_json(yk, dim)},
                     {"difference", a - b}});
    }
  }
  return report;
}

CheckReport check_lip_p_bound(const HamiltonianSystem& sys, std::size_t sample_count,
                              std::uint64_t seed, double radius) {
  CheckReport report;
  report.name = "lip_p_bound";
  const double bound = sys.lip_p_bound(radius);
  report.details["bound"] = bound;
  report.details["radius"] = radius;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int dim = sys.N();
  const auto m = static_cast<std::size_t>(sys.M());
  std::vector<double> r(m), p(static_cast<std::size_t>(dim)), q(static_cast<std::size_t>(dim));
  for (std::size_t n = 0; n < sample_count; ++n) {
    Point x{0.0, 0.0}, y{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      x[a] = sys.x_period() * unit(rng);
      y[a] = unit(rng);
    }
    for (auto& v : r) v = radius * sym(rng);
    for (auto& v : p) v = radius * sym(rng);
    const int axis = dim == 1 ? 0 : static_cast<int>(unit(rng) * 2.0) % 2;
    q = p;
    const double step = 1e-3 * radius * (0.5 + unit(rng));
    q[static_cast<std::size_t>(axis)] = std::clamp(p[static_cast<std::size_t>(axis)] + step, -radius, radius);
    const double dp = q[static_cast<std::size_t>(axis)] - p[static_cast<std::size_t>(axis)];
    if (dp == 0.0) continue;
    for (int i = 0; i < sys.M(); ++i) {
      const double slope = std::abs(sys.eval(i, x, y, r, q) - sys.eval(i, x, y, r, p)) / std::abs(dp);
      report.record(bound - slope, 1e-9 * (1.0 + bound),
                    {{"i", i + 1}, {"p", p}, {"axis", axis + 1}, {"slope", slope}});
    }
  }
  return report;
}

// ------------------------------------------------------------------------ JSON

namespace {

Coefficient coefficient_from_json(const nlohmann::json& j, int dim) {
  if (j.is_number()) return Coefficient::constant(j.get<double>());
  if (j.is_string()) return Coefficient::expression(j.get<std::string>());
  if (j.is_object() && j.contains("table")) {
    const auto values = j.at("table").get<std::vector<double>>();
    int n = j.value("n", 0);
    if (n == 0) {
      n = dim == 1 ? static_cast<int>(values.size())
                   : static_cast<int>(std::lround(std::sqrt(static_cast<double>(values.size()))));
    }
    return Coefficient::table(dim, n, values);
  }
  throw std::invalid_argument("coefficient must be a number, an expression string or {\"table\": [...]}");
}

}  // namespace

HamiltonianSystem system_from_json(const nlohmann::json& j) {
  try {
    const int m = j.at("M").get<int>();
    const int dim = j.value("N", 1);
    const double x_period = j.value("x_period", 1.0);
    std::optional<CouplingMatrix> coupling;
    if (j.contains("coupling")) {
      const auto& rows = j.at("coupling");
      if (!rows.is_array() || static_cast<int>(rows.size()) != m)
        throw std::invalid_argument("coupling must be an M x M array");
      std::vector<Coefficient> entries;
      for (const auto& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != m)
          throw std::invalid_argument("coupling must be an M x M array");
        for (const auto& e : row) entries.push_back(coefficient_from_json(e, dim));
      }
      coupling = CouplingMatrix(m, dim, std::move(entries), x_period);
    }
    std::vector<HamiltonianComponent> components;
    for (const auto& cj : j.at("components")) {
      const std::string kind = cj.at("kind").get<std::string>();
      HamiltonianComponent comp;
      if (kind == "eikonal_coupled" || kind == "EikonalCoupled") {
        Expression f = cj.contains("F") ? Expression::parse(cj.at("F").get<std::string>())
                                        : Expression::constant(0.0);
        comp = HamiltonianComponent::eikonal(coefficient_from_json(cj.at("speed"), dim), std::move(f),
                                             cj.at("delta").get<double>());
      } else if (kind == "weakly_coupled" || kind == "WeaklyCoupled") {
        comp = HamiltonianComponent::weakly_coupled(Expression::parse(cj.at("G").get<std::string>()),
                                                    cj.value("convex", false));
      } else if (kind == "custom" || kind == "Custom") {
        comp = HamiltonianComponent::custom_expr(Expression::parse(cj.at("H").get<std::string>()),
                                                 cj.value("convex", false));
      } else {
        throw std::invalid_argument("unknown component kind '" + kind + "'");
      }
      if (cj.contains("convex")) comp.convex_in_p = cj.at("convex").get<bool>();
      components.push_back(std::move(comp));
    }
    HamiltonianSystem sys(m, dim, std::move(components), std::move(coupling), x_period);
    if (j.contains("lip_p")) sys.declare_lip_p(j.at("lip_p").get<double>());
    if (j.contains("lip_r")) sys.declare_lip_r(j.at("lip_r").get<double>());
    sys.set_description(j);
    return sys;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("hamiltonian config: ") + e.what());
  }
}

HamiltonianSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
  if (j.contains("system")) return system_from_json(j.at("system"));
  return system_from_json(j);
}

}  // namespace hjhom
