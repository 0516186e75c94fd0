#include "hjhom/evolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace hjhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integer_ratio(double a, double b) {
  const double q = a / b;
  return q >= 1.0 - 1e-9 && std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

/// Evaluates H_i at grid node k for either source.
class Stepper {
 public:
  explicit Stepper(const EvolutionProblem& problem) : problem_(problem), grid_(problem.grid()) {
    xs_.reserve(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) xs_.push_back(grid_.node(k));
    if (const auto* osc = std::get_if<OscillatingSource>(&problem.source)) {
      std::vector<Point> ys;
      ys.reserve(xs_.size());
      for (const auto& x : xs_) ys.push_back(reduce_to_cell({x[0] / osc->eps, x[1] / osc->eps}, grid_.dim()));
      for (int i = 0; i < osc->sys->M(); ++i) evals_.emplace_back(*osc->sys, i, xs_, ys);
    } else {
      hbar_ = std::get<HomogenizedSource>(problem.source).hbar.get();
    }
  }

  double eval(int i, std::size_t k, std::span<const double> r, std::span<const double> p) const {
    if (hbar_) return hbar_->value(i, xs_[k], r, p);
    return evals_[static_cast<std::size_t>(i)](k, r, p);
  }

  void apply(const GridField& u, double dt, double theta, GridField& out) const {
    const int m = u.components();
    const int dim = grid_.dim();
    const double inv_h = 1.0 / grid_.h();
    std::array<double, 16> r{};
    std::array<double, 2> p{};
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      for (int j = 0; j < m; ++j) r[static_cast<std::size_t>(j)] = u.at(j, k);
      for (int i = 0; i < m; ++i) {
        const double uk = u.at(i, k);
        double diss = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double dm = (uk - u.at(i, grid_.neighbor(k, a, -1))) * inv_h;
          const double dp = (u.at(i, grid_.neighbor(k, a, 1)) - uk) * inv_h;
          p[static_cast<std::size_t>(a)] = 0.5 * (dm + dp);
          diss += 0.5 * theta * (dp - dm);
        }
        const double h_val = eval(i, k, std::span<const double>(r.data(), static_cast<std::size_t>(m)),
                                  std::span<const double>(p.data(), static_cast<std::size_t>(dim)));
        const double next = uk - dt * (h_val - diss);
        if (!std::isfinite(next)) {
          throw std::domain_error("evolve: non-finite update at component " + std::to_string(i + 1) +
                                  ", node " + std::to_string(k));
        }
        out.at(i, k) = next;
      }
    }
  }

 private:
  const EvolutionProblem& problem_;
  const TorusGrid& grid_;
  std::vector<Point> xs_;
  std::vector<NodeEvaluator> evals_;
  const HBarProvider* hbar_ = nullptr;
};

std::vector<std::vector<double>> r_samples(int m, double radius) {
  std::vector<double> levels;
  if (m <= 3) {
    levels = {-radius, -0.5 * radius, 0.0, 0.5 * radius, radius};
  } else {
    levels = {-radius, 0.0, radius};
  }
  std::vector<std::vector<double>> out;
  if (m <= 6) {
    std::size_t total = 1;
    for (int j = 0; j < m; ++j) total *= levels.size();
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> r(static_cast<std::size_t>(m));
      std::size_t c = code;
      for (int j = 0; j < m; ++j) {
        r[static_cast<std::size_t>(j)] = levels[c % levels.size()];
        c /= levels.size();
      }
      out.push_back(std::move(r));
    }
    return out;
  }
  // larger systems: zero, the two diagonal corners and a fixed pseudo-random set of corners
  out.emplace_back(static_cast<std::size_t>(m), 0.0);
  out.emplace_back(static_cast<std::size_t>(m), radius);
  out.emplace_back(static_cast<std::size_t>(m), -radius);
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;
  for (int s = 0; s < 256; ++s) {
    std::vector<double> r(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      r[static_cast<std::size_t>(j)] = (state & 1) ? radius : -radius;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::array<double, 2>> probe_directions(int dim) {
  if (dim == 1) return {{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<std::array<double, 2>> dirs;
  for (int a = 0; a < 32; ++a) {
    const double phi = 2.0 * std::numbers::pi * a / 32.0;
    dirs.push_back({std::cos(phi), std::sin(phi)});
  }
  return dirs;
}

std::size_t node_stride(std::size_t nodes) { return std::max<std::size_t>(1, (nodes + 4095) / 4096); }

std::vector<double> targets_for(const std::vector<double>& snapshots, double T) {
  std::vector<double> targets;
  for (double s : snapshots)
    if (s > 0.0 && s < T) targets.push_back(s);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(T);
  return targets;
}

/// dt for the next step towards `target`: the candidate is clamped by the previous
/// candidate, then shortened so that an integer number of steps reaches the target.
double next_dt(double candidate, double remaining, bool& last) {
  if (!(candidate < remaining)) {
    last = true;
    return remaining;
  }
  const double steps = std::ceil(remaining / candidate);
  last = steps <= 1.0;
  return remaining / steps;
}

}  // namespace

int EvolutionProblem::M() const {
  if (const auto* osc = std::get_if<OscillatingSource>(&source)) return osc->sys ? osc->sys->M() : 0;
  const auto& hom = std::get<HomogenizedSource>(source);
  return hom.hbar ? hom.hbar->M() : 0;
}

int EvolutionProblem::N() const {
  if (const auto* osc = std::get_if<OscillatingSource>(&source)) return osc->sys ? osc->sys->N() : 0;
  const auto& hom = std::get<HomogenizedSource>(source);
  return hom.hbar ? hom.hbar->N() : 0;
}

void EvolutionProblem::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("evolution: T must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("evolution: cfl must lie in (0, 1]");
  if (M() == 0) throw std::invalid_argument("evolution: missing Hamiltonian source");
  if (u0.components() != M()) throw std::invalid_argument("evolution: u0 has the wrong number of components");
  if (grid().dim() != N()) throw std::invalid_argument("evolution: u0 grid dimension does not match the system");
  if (!u0.all_finite()) throw std::invalid_argument("evolution: u0 is not finite");
  for (double s : snapshots)
    if (!(s > 0.0 && s <= T)) throw std::invalid_argument("evolution: snapshot times must lie in (0, T]");
  if (const auto* osc = std::get_if<OscillatingSource>(&source)) {
    const double L = grid().length();
    if (!(osc->eps > 0.0)) throw std::invalid_argument("evolution: eps must be positive");
    if (!is_integer_ratio(L, osc->eps)) throw std::invalid_argument("evolution: L/eps must be a positive integer");
    if (grid().h() > osc->eps / 32.0 * (1.0 + 1e-12))
      throw std::invalid_argument("evolution: grid spacing must satisfy h <= eps/32");
    if (!osc->sys->x_independent() && !is_integer_ratio(L, osc->sys->x_period()))
      throw std::invalid_argument("evolution: L must be a multiple of the system's x period");
  }
}

double StepBounds::max_dt(double cfl, double h, int dim) const {
  const double a = theta > 0.0 ? cfl * h / (2.0 * dim * theta) : kInf;
  const double b = lambda_r > 0.0 ? 0.5 / lambda_r : kInf;
  return std::min(a, b);
}

StepBounds step_bounds(const EvolutionProblem& problem, const GridField& state) {
  StepBounds b;
  b.radius = std::max(sup_norm(state), max_upwind_slope(state));
  if (const auto* osc = std::get_if<OscillatingSource>(&problem.source)) {
    b.theta = osc->sys->lip_p_bound(b.radius);
    b.lambda_r = osc->sys->lip_r_bound(b.radius);
  } else {
    const auto& hbar = *std::get<HomogenizedSource>(problem.source).hbar;
    b.theta = hbar.lip_p_bound(b.radius);
    b.lambda_r = hbar.lip_r_bound(b.radius);
  }
  return b;
}

GridField step(const EvolutionProblem& problem, const GridField& state, double dt, const StepBounds& bounds) {
  if (!(state.grid() == problem.grid()) || state.components() != problem.M())
    throw std::invalid_argument("step: state does not match the problem grid");
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  Stepper stepper(problem);
  GridField out(state.grid(), state.components());
  stepper.apply(state, dt, bounds.theta, out);
  return out;
}

GridField step(const EvolutionProblem& problem, const GridField& state, double dt) {
  const StepBounds bounds = step_bounds(problem, state);
  const double limit = bounds.max_dt(problem.cfl, problem.grid().h(), problem.grid().dim());
  if (dt > limit * (1.0 + 1e-12)) {
    throw CflError("step: dt = " + std::to_string(dt) + " exceeds the stability limit " + std::to_string(limit));
  }
  return step(problem, state, dt, bounds);
}

nlohmann::json EvolutionDiagnostics::to_json() const {
  return {{"steps", steps},         {"dt_min", dt_min},       {"dt_max", dt_max},
          {"theta_max", theta_max}, {"lambda_r_max", lambda_r_max},
          {"max_abs_u", max_abs_u}, {"sup_u0", sup_u0},       {"C", c_bound},
          {"linfini_bound", linfini_bound},    {"linfini_ok", linfini_ok},
          {"final_slope", final_slope}};
}

EvolutionResult solve(const EvolutionProblem& problem) {
  problem.validate();
  const Stepper stepper(problem);
  const TorusGrid& grid = problem.grid();
  EvolutionDiagnostics diag;
  diag.sup_u0 = sup_norm(problem.u0);
  diag.max_abs_u = diag.sup_u0;
  diag.c_bound = sampled_sup_h(problem, diag.sup_u0, 0.0);
  diag.dt_min = kInf;

  GridField u = problem.u0;
  GridField next(grid, u.components());
  std::vector<Snapshot> snaps;
  double t = 0.0;
  double candidate_cap = kInf;
  for (double target : targets_for(problem.snapshots, problem.T)) {
    bool last = false;
    while (!last) {
      const StepBounds b = step_bounds(problem, u);
      diag.theta_max = std::max(diag.theta_max, b.theta);
      diag.lambda_r_max = std::max(diag.lambda_r_max, b.lambda_r);
      candidate_cap = std::min(candidate_cap, b.max_dt(problem.cfl, grid.h(), grid.dim()));
      const double dt = next_dt(candidate_cap, target - t, last);
      stepper.apply(u, dt, b.theta, next);
      std::swap(u, next);
      t = last ? target : t + dt;
      ++diag.steps;
      diag.dt_min = std::min(diag.dt_min, dt);
      diag.dt_max = std::max(diag.dt_max, dt);
      diag.max_abs_u = std::max(diag.max_abs_u, sup_norm(u));
    }
    if (target < problem.T ||
        std::find(problem.snapshots.begin(), problem.snapshots.end(), problem.T) != problem.snapshots.end())
      snaps.push_back({target, u});
  }
  diag.linfini_bound = diag.sup_u0 + diag.c_bound * problem.T;
  diag.linfini_ok = diag.max_abs_u <= diag.linfini_bound + 1e-6;
  diag.final_slope = max_upwind_slope(u);
  return {std::move(u), std::move(snaps), diag};
}

double sampled_sup_h(const EvolutionProblem& problem, double r_radius, double p_radius) {
  const Stepper stepper(problem);
  const int dim = problem.grid().dim();
  std::vector<std::array<double, 2>> ps{{0.0, 0.0}};
  if (p_radius > 0.0) {
    for (const auto& d : probe_directions(dim)) {
      ps.push_back({0.5 * p_radius * d[0], 0.5 * p_radius * d[1]});
      ps.push_back({p_radius * d[0], p_radius * d[1]});
    }
  }
  const auto rs = r_samples(problem.M(), r_radius);
  const std::size_t nodes = problem.grid().size();
  const std::size_t stride = dim == 1 ? 1 : node_stride(nodes * rs.size() * ps.size() / 64);
  double sup = 0.0;
  for (int i = 0; i < problem.M(); ++i)
    for (std::size_t k = 0; k < nodes; k += stride)
      for (const auto& r : rs)
        for (const auto& p : ps)
          sup = std::max(sup, std::abs(stepper.eval(i, k, r, std::span<const double>(p.data(), static_cast<std::size_t>(dim)))));
  return sup;
}

double coercivity_radius(const EvolutionProblem& problem, double level, double r_radius) {
  const Stepper stepper(problem);
  const int dim = problem.grid().dim();
  const auto dirs = probe_directions(dim);
  const auto rs = r_samples(problem.M(), r_radius);
  const std::size_t nodes = problem.grid().size();
  const std::size_t stride = node_stride(nodes);
  auto clears = [&](double radius) {
    for (int i = 0; i < problem.M(); ++i)
      for (std::size_t k = 0; k < nodes; k += stride)
        for (const auto& r : rs)
          for (const auto& d : dirs) {
            const std::array<double, 2> q{radius * d[0], radius * d[1]};
            if (!(stepper.eval(i, k, r, std::span<const double>(q.data(), static_cast<std::size_t>(dim))) > level))
              return false;
          }
    return true;
  };
  double hi = 1.0;
  while (!clears(hi)) {
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("coercivity_radius: no radius up to 1e6 exceeds the level");
  }
  double lo = 0.0;
  for (int it = 0; it < 50 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clears(mid) ? hi : lo) = mid;
  }
  return hi;
}

SlopeBound slope_bound(const EvolutionProblem& problem) {
  const double r0 = sup_norm(problem.u0);
  const double p0 = max_upwind_slope(problem.u0);
  SlopeBound b;
  b.c_lip = sampled_sup_h(problem, r0, p0);
  const double c = sampled_sup_h(problem, r0, 0.0);
  b.radius = coercivity_radius(problem, b.c_lip, r0 + c * problem.T);
  return b;
}

CheckReport check_comparison(const EvolutionProblem& problem, const GridField& u0_low, const GridField& u0_high,
                             double T) {
  CheckReport report;
  report.name = "comparison";
  if (!(u0_low.grid() == u0_high.grid()) || u0_low.components() != problem.M() ||
      u0_high.components() != problem.M()) {
    report.fail({{"error", "data not on a common grid"}});
    return report;
  }
  EvolutionProblem pb = problem;
  pb.u0 = u0_low;
  pb.T = T;
  pb.validate();
  const Stepper stepper(pb);
  const TorusGrid& grid = pb.grid();

  auto max_diff = [](const GridField& a, const GridField& b) {
    double d = -kInf;
    for (std::size_t k = 0; k < a.values().size(); ++k) d = std::max(d, a[k] - b[k]);
    return d;
  };
  const double rhs = std::max(0.0, max_diff(u0_low, u0_high));
  GridField u = u0_low;
  GridField v = u0_high;
  GridField next(grid, u.components());
  report.record(rhs - max_diff(u, v), 1e-6, {{"t", 0.0}});

  double t = 0.0;
  double cap = kInf;
  for (double target : targets_for(pb.snapshots, T)) {
    bool last = false;
    while (!last) {
      const StepBounds bu = step_bounds(pb, u);
      const StepBounds bv = step_bounds(pb, v);
      const StepBounds b{std::max(bu.theta, bv.theta), std::max(bu.lambda_r, bv.lambda_r),
                         std::max(bu.radius, bv.radius)};
      cap = std::min(cap, b.max_dt(pb.cfl, grid.h(), grid.dim()));
      const double dt = next_dt(cap, target - t, last);
      stepper.apply(u, dt, b.theta, next);
      std::swap(u, next);
      stepper.apply(v, dt, b.theta, next);
      std::swap(v, next);
      t = last ? target : t + dt;
      const double lhs = max_diff(u, v);
      report.record(rhs - lhs, 1e-6, {{"t", t}, {"lhs", lhs}, {"rhs", rhs}});
    }
  }
  report.details = {{"rhs", rhs}, {"T", T}, {"steps", report.samples - 1}};
  return report;
}

GridField sample_expressions(const TorusGrid& grid, const std::vector<Expression>& exprs) {
  if (exprs.empty()) throw std::invalid_argument("initial data: no expressions");
  for (const auto& e : exprs)
    if (e.uses_range(slot::y1, std::max(e.slots_required(), slot::y1)))
      throw std::invalid_argument("initial data may only use x1, x2: '" + e.text() + "'");
  std::vector<double> slots(slot::count(0), 0.0);
  return sample(grid, static_cast<int>(exprs.size()), [&](int c, const Point& x) {
    std::vector<double> s = slots;
    s[slot::x1] = x[0];
    s[slot::x2] = x[1];
    return exprs[static_cast<std::size_t>(c)].eval(s);
  });
}

}  // namespace hjhom
