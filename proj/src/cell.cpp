#include "hjhom/cell.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hjhom {

namespace {

NodeEvaluator frozen_evaluator(const CellProblemSpec& spec) {
  const auto& grid = spec.grid;
  std::vector<Point> xs(grid.size(), spec.x);
  std::vector<Point> ys(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) ys[k] = grid.node(k);
  NodeEvaluator eval(*spec.sys, spec.component, std::move(xs), std::move(ys));
  eval.freeze_r(spec.r);
  return eval;
}

std::vector<std::array<double, 2>> probe_directions(int dim) {
  if (dim == 1) return {{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<std::array<double, 2>> dirs;
  constexpr int kDirs = 32;
  for (int d = 0; d < kDirs; ++d) {
    const double t = 2.0 * std::numbers::pi * d / kDirs;
    dirs.push_back({std::cos(t), std::sin(t)});
  }
  return dirs;
}

/// Lax-Friedrichs numerical Hamiltonian at every node, written into `out`.
/// Returns nothing; `out[k] = H(y_k, p + central Dw) - theta * sum_axes (D+ - D-)/2`.
void lf_hamiltonian(const NodeEvaluator& eval, const TorusGrid& grid, std::span<const double> p,
                    double theta, std::span<const double> w, std::span<double> out) {
  const double inv_h = 1.0 / grid.h();
  const int n = grid.n();
  std::array<double, 2> q{0.0, 0.0};
  if (grid.dim() == 1) {
    for (int k = 0; k < n; ++k) {
      const double wk = w[static_cast<std::size_t>(k)];
      const double wl = w[static_cast<std::size_t>(k == 0 ? n - 1 : k - 1)];
      const double wr = w[static_cast<std::size_t>(k == n - 1 ? 0 : k + 1)];
      const double dm = (wk - wl) * inv_h;
      const double dp = (wr - wk) * inv_h;
      q[0] = p[0] + 0.5 * (dm + dp);
      out[static_cast<std::size_t>(k)] =
          eval.frozen(static_cast<std::size_t>(k), std::span<const double>(q.data(), 1)) -
          0.5 * theta * (dp - dm);
    }
    return;
  }
  for (int j = 0; j < n; ++j) {
    const int jl = j == 0 ? n - 1 : j - 1;
    const int jr = j == n - 1 ? 0 : j + 1;
    for (int i = 0; i < n; ++i) {
      const int il = i == 0 ? n - 1 : i - 1;
      const int ir = i == n - 1 ? 0 : i + 1;
      const std::size_t k = grid.flat(i, j);
      const double wk = w[k];
      const double dmx = (wk - w[grid.flat(il, j)]) * inv_h;
      const double dpx = (w[grid.flat(ir, j)] - wk) * inv_h;
      const double dmy = (wk - w[grid.flat(i, jl)]) * inv_h;
      const double dpy = (w[grid.flat(i, jr)] - wk) * inv_h;
      q[0] = p[0] + 0.5 * (dmx + dpx);
      q[1] = p[1] + 0.5 * (dmy + dpy);
      out[k] = eval.frozen(k, std::span<const double>(q.data(), 2)) -
               0.5 * theta * ((dpx - dmx) + (dpy - dmy));
    }
  }
}

/// One Gauss-Seidel pass of the monotone scheme. The Lax-Friedrichs residual at
/// node k is affine in w_k with slope alpha + N theta / h, so each local update
/// solves its own equation exactly. `ordering` selects one of the 2^N sweep
/// directions.
void gauss_seidel_sweep(const NodeEvaluator& eval, const TorusGrid& grid, std::span<const double> p,
                        double theta, double alpha, double local_gain, int ordering,
                        std::span<double> w) {
  const double inv_h = 1.0 / grid.h();
  const int n = grid.n();
  std::array<double, 2> q{0.0, 0.0};
  if (grid.dim() == 1) {
    const bool forward = ordering % 2 == 0;
    for (int s = 0; s < n; ++s) {
      const int k = forward ? s : n - 1 - s;
      const double wk = w[static_cast<std::size_t>(k)];
      const double wl = w[static_cast<std::size_t>(k == 0 ? n - 1 : k - 1)];
      const double wr = w[static_cast<std::size_t>(k == n - 1 ? 0 : k + 1)];
      q[0] = p[0] + 0.5 * (wr - wl) * inv_h;
      const double r = alpha * wk +
                       eval.frozen(static_cast<std::size_t>(k), std::span<const double>(q.data(), 1)) -
                       0.5 * theta * (wr - 2.0 * wk + wl) * inv_h;
      w[static_cast<std::size_t>(k)] = wk - local_gain * r;
    }
    return;
  }
  const bool fx = ordering % 2 == 0;
  const bool fy = (ordering / 2) % 2 == 0;
  for (int sj = 0; sj < n; ++sj) {
    const int j = fy ? sj : n - 1 - sj;
    const int jl = j == 0 ? n - 1 : j - 1;
    const int jr = j == n - 1 ? 0 : j + 1;
    for (int si = 0; si < n; ++si) {
      const int i = fx ? si : n - 1 - si;
      const int il = i == 0 ? n - 1 : i - 1;
      const int ir = i == n - 1 ? 0 : i + 1;
      const std::size_t k = grid.flat(i, j);
      const double wk = w[k];
      const double wxl = w[grid.flat(il, j)], wxr = w[grid.flat(ir, j)];
      const double wyl = w[grid.flat(i, jl)], wyr = w[grid.flat(i, jr)];
      q[0] = p[0] + 0.5 * (wxr - wxl) * inv_h;
      q[1] = p[1] + 0.5 * (wyr - wyl) * inv_h;
      const double r = alpha * wk + eval.frozen(k, std::span<const double>(q.data(), 2)) -
                       0.5 * theta * ((wxr - 2.0 * wk + wxl) + (wyr - 2.0 * wk + wyl)) * inv_h;
      w[k] = wk - local_gain * r;
    }
  }
}

double euclid(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return std::sqrt(s);
}

}  // namespace

void CellProblemSpec::validate() const {
  if (!sys) throw std::invalid_argument("cell problem: no Hamiltonian system");
  if (component < 0 || component >= sys->M())
    throw std::out_of_range("cell problem: component index out of range");
  if (r.size() != static_cast<std::size_t>(sys->M()))
    throw std::invalid_argument("cell problem: r must have M entries");
  if (p.size() != static_cast<std::size_t>(sys->N()))
    throw std::invalid_argument("cell problem: p must have N entries");
  if (grid.dim() != sys->N()) throw std::invalid_argument("cell problem: grid dimension differs from N");
  if (grid.length() != 1.0) throw std::invalid_argument("cell problem: grid must cover the unit cell");
  if (alphas.empty()) throw std::invalid_argument("cell problem: empty discount schedule");
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (!(alphas[a] > 0.0)) throw std::invalid_argument("cell problem: discount rates must be positive");
    if (a > 0 && !(alphas[a] < alphas[a - 1]))
      throw std::invalid_argument("cell problem: discount schedule must be strictly decreasing");
  }
  if (!(residual_tol > 0.0)) throw std::invalid_argument("cell problem: residual_tol must be positive");
  if (max_iters == 0) throw std::invalid_argument("cell problem: max_iters must be positive");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(r.begin(), r.end(), finite) || !std::all_of(p.begin(), p.end(), finite) ||
      !std::isfinite(x[0]) || !std::isfinite(x[1]))
    throw std::domain_error("cell problem: non-finite frozen data");
}

CellScheme cell_scheme(const CellProblemSpec& spec) {
  spec.validate();
  const auto eval = frozen_evaluator(spec);
  const auto& grid = spec.grid;
  const int dim = grid.dim();
  CellScheme scheme;
  for (std::size_t k = 0; k < grid.size(); ++k)
    scheme.sup_h = std::max(scheme.sup_h, std::abs(eval.frozen(k, spec.p)));

  const auto dirs = probe_directions(dim);
  // all nodes see the same H when nothing depends on y
  const std::size_t probe_nodes = spec.sys->y_independent() ? 1 : grid.size();
  std::vector<double> q(static_cast<std::size_t>(dim));
  auto margin = [&](double radius) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& d : dirs) {
      for (int a = 0; a < dim; ++a)
        q[static_cast<std::size_t>(a)] = spec.p[static_cast<std::size_t>(a)] + radius * d[static_cast<std::size_t>(a)];
      for (std::size_t k = 0; k < probe_nodes; ++k) lowest = std::min(lowest, eval.frozen(k, q));
    }
    return lowest - scheme.sup_h;
  };
  double hi = 1.0 / 64.0;
  while (margin(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e8) throw std::domain_error("cell problem: Hamiltonian is not coercive in p");
  }
  double lo = hi / 2.0;
  if (margin(lo) > 0.0) lo = 0.0;
  for (int it = 0; it < 48 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) > 0.0 ? hi : lo) = mid;
  }
  scheme.lipschitz_radius = hi;
  const double radius = euclid(spec.p) + scheme.lipschitz_radius + 1.0;
  scheme.theta = estimate_lip_p(*spec.sys, spec.component, radius, dim == 1 ? 64 : 24);
  return scheme;
}

DiscountedSolution solve_discounted(const CellProblemSpec& spec, double alpha,
                                    const CellScheme& scheme, const GridField* initial) {
  spec.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_discounted: alpha must be positive");
  const auto eval = frozen_evaluator(spec);
  const auto& grid = spec.grid;
  const std::size_t n = grid.size();
  const double h = grid.h();
  const double theta = scheme.theta;

  DiscountedSolution out{GridField(grid, 1), alpha, 0.0, 0, 0.0};
  auto w = out.w.values();
  if (initial != nullptr) {
    if (!(initial->grid() == grid)) throw std::invalid_argument("solve_discounted: warm start on wrong grid");
    std::copy(initial->values().begin(), initial->values().begin() + static_cast<std::ptrdiff_t>(n), w.begin());
  }
  std::vector<double> res(n);
  const double local_gain = 1.0 / (alpha + grid.dim() * theta / h);
  for (std::size_t it = 0;; ++it) {
    lf_hamiltonian(eval, grid, spec.p, theta, w, res);
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      res[k] += alpha * w[k];
      mean += res[k];
    }
    mean /= static_cast<double>(n);
    // The constant part of the residual is an exact eigenmode (rate alpha) of the
    // linearized operator because H^LF only sees differences; remove it in one shot.
    const double shift = mean / alpha;
    double sup = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      w[k] -= shift;
      sup = std::max(sup, std::abs(res[k] - mean));
    }
    if (!std::isfinite(sup)) throw CellSolveError("solve_discounted: non-finite update", sup, it);
    out.residual = sup;
    out.iterations = it;
    if (sup <= spec.residual_tol) break;
    if (it >= spec.max_iters)
      throw CellSolveError("solve_discounted: no convergence within " + std::to_string(spec.max_iters) +
                               " sweeps (residual " + std::to_string(sup) + ")",
                           sup, it);
    gauss_seidel_sweep(eval, grid, spec.p, theta, alpha, local_gain, static_cast<int>(it % 4), w);
  }
  const double mean_w = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
  out.lambda_alpha = -alpha * mean_w;
  return out;
}

DiscountedSolution solve_discounted(const CellProblemSpec& spec, double alpha) {
  return solve_discounted(spec, alpha, cell_scheme(spec));
}

CellSolution effective_hamiltonian(const CellProblemSpec& spec) {
  const CellScheme scheme = cell_scheme(spec);
  CellSolution sol{0.0, GridField(spec.grid, 1), GridField(spec.grid, 1), scheme, {}, {}, {}, {}, {}, {}};
  const GridField* warm = nullptr;
  DiscountedSolution last{GridField(spec.grid, 1), 0.0, 0.0, 0, 0.0};
  for (double alpha : spec.alphas) {
    last = solve_discounted(spec, alpha, scheme, warm);
    sol.alphas.push_back(alpha);
    sol.lambda_alphas.push_back(last.lambda_alpha);
    sol.iterations.push_back(last.iterations);
    sol.residuals.push_back(last.residual);
    const auto vals = last.w.values();
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    sol.oscillations.push_back(alpha * (*hi - *lo));
    sol.discount_sups.push_back(alpha * std::max(std::abs(*lo), std::abs(*hi)));
    sol.w_alpha = last.w;
    warm = &sol.w_alpha;
  }
  const std::size_t m = sol.alphas.size();
  if (m == 1) {
    sol.lambda = sol.lambda_alphas[0];
  } else {
    const double a1 = sol.alphas[m - 2], a2 = sol.alphas[m - 1];
    const double l1 = sol.lambda_alphas[m - 2], l2 = sol.lambda_alphas[m - 1];
    sol.lambda = l2 - a2 * (l1 - l2) / (a1 - a2);
  }
  const double anchor = sol.w_alpha[0];
  for (std::size_t k = 0; k < spec.grid.size(); ++k) sol.corrector[k] = sol.w_alpha[k] - anchor;
  return sol;
}

double residual(const CellProblemSpec& spec, const CellScheme& scheme, double lambda,
                const GridField& v) {
  if (!(v.grid() == spec.grid)) throw std::invalid_argument("residual: corrector on wrong grid");
  const auto eval = frozen_evaluator(spec);
  std::vector<double> h(spec.grid.size());
  lf_hamiltonian(eval, spec.grid, spec.p, scheme.theta, v.component(0), h);
  double sup = 0.0;
  for (double value : h) sup = std::max(sup, std::abs(value - lambda));
  return sup;
}

double residual(const CellProblemSpec& spec, double lambda, const GridField& v) {
  return residual(spec, cell_scheme(spec), lambda, v);
}

nlohmann::json CellSolution::diagnostics() const {
  nlohmann::json j;
  j["lambda"] = lambda;
  j["alphas"] = alphas;
  j["lambda_alphas"] = lambda_alphas;
  j["iterations"] = iterations;
  j["final_residuals"] = residuals;
  j["oscillations"] = oscillations;
  j["discount_sups"] = discount_sups;
  j["sup_h"] = scheme.sup_h;
  j["lipschitz_radius"] = scheme.lipschitz_radius;
  j["theta"] = scheme.theta;
  return j;
}

}  // namespace hjhom
