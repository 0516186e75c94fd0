#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

#include "hjhom/harness.hpp"

namespace hjhom {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Expression> parse_all(const std::vector<std::string>& texts) {
  std::vector<Expression> out;
  for (const auto& t : texts) out.push_back(Expression::parse(t));
  return out;
}

unsigned resolve_workers(unsigned workers, std::size_t jobs) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, jobs)));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<double> ConvergenceReport::eps() const {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.eps);
  return out;
}

std::vector<double> ConvergenceReport::errors() const {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.error);
  return out;
}

std::vector<double> ConvergenceReport::ratios() const {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) out.push_back(runs[k].error / runs[k + 1].error);
  return out;
}

nlohmann::json ConvergenceReport::to_json(bool include_runtimes) const {
  nlohmann::json j;
  j["eps"] = eps();
  j["errors"] = errors();
  j["ratios"] = ratios();
  std::vector<int> ns;
  std::vector<double> dts;
  std::vector<double> thetas;
  std::vector<double> slopes;
  std::vector<std::size_t> steps;
  std::vector<nlohmann::json> diags;
  for (const auto& r : runs) {
    ns.push_back(r.n);
    dts.push_back(r.diagnostics.dt_max);
    thetas.push_back(r.diagnostics.theta_max);
    slopes.push_back(r.slope);
    steps.push_back(r.diagnostics.steps);
    diags.push_back(r.diagnostics.to_json());
  }
  j["n"] = ns;
  j["dt"] = dts;
  j["theta"] = thetas;
  j["steps"] = steps;
  j["slopes"] = slopes;
  j["slope_bound"] = slope_bound;
  j["base_n"] = base_n;
  j["homogenized_n"] = homogenized_n;
  j["hbar_source"] = hbar_source;
  j["homogenized"] = homogenized.to_json();
  j["runs"] = diags;
  if (include_runtimes) {
    std::vector<double> times;
    for (const auto& r : runs) times.push_back(r.runtime);
    j["runtimes"] = times;
    j["homogenized_runtime"] = homogenized_runtime;
  }
  return j;
}

ConvergenceReport run_convergence(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  return run_convergence(config, make_provider(config, workers), workers);
}

ConvergenceReport run_convergence(const ExperimentConfig& config, std::shared_ptr<const HBarProvider> hbar,
                                  unsigned workers) {
  config.validate();
  const auto exprs = parse_all(config.u0);
  const int dim = config.system->N();
  const TorusGrid base(dim, config.resolved_base_n(), config.L);

  ConvergenceReport report;
  report.base_n = base.n();
  report.homogenized_n = config.resolved_homogenized_n();
  report.hbar_source = hbar->describe();

  // homogenized baseline, computed once and reused for every eps
  EvolutionProblem hp;
  hp.source = HomogenizedSource{hbar};
  hp.u0 = sample_expressions(TorusGrid(dim, report.homogenized_n, config.L), exprs);
  hp.T = config.T;
  hp.cfl = config.cfl;
  auto t0 = std::chrono::steady_clock::now();
  const EvolutionResult hom = solve(hp);
  report.homogenized_runtime = seconds_since(t0);
  report.homogenized = hom.diagnostics;
  report.homogenized_profile = restrict_to(hom.final, base);

  report.runs.resize(config.eps.size());
  std::vector<double> bounds(config.eps.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < config.eps.size();) {
      try {
        ConvergenceRun& run = report.runs[k];
        run.eps = config.eps[k];
        run.n = config.grid_n(run.eps);
        EvolutionProblem p;
        p.source = OscillatingSource{config.system, run.eps};
        p.u0 = sample_expressions(TorusGrid(dim, run.n, config.L), exprs);
        p.T = config.T;
        p.cfl = config.cfl;
        const auto start = std::chrono::steady_clock::now();
        const EvolutionResult res = solve(p);
        run.runtime = seconds_since(start);
        run.diagnostics = res.diagnostics;
        run.slope = res.diagnostics.final_slope;
        run.profile = restrict_to(res.final, base);
        run.error = sup_diff(run.profile, *report.homogenized_profile);
        bounds[k] = slope_bound(p).radius;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n_workers = resolve_workers(workers, config.eps.size());
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  report.slope_bound = *std::max_element(bounds.begin(), bounds.end());
  return report;
}

std::vector<CheckReport> convergence_checks(const ConvergenceReport& report, double reduction_factor,
                                            double slope_variation) {
  const auto errors = report.errors();
  const auto eps = report.eps();

  CheckReport monotone;
  monotone.name = "convergence_monotone";
  if (errors.size() < 2) monotone.fail({{"error", "fewer than two eps values"}});
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    const double margin = errors[k] - errors[k + 1];
    monotone.record(margin, 0.0, {{"eps", {eps[k], eps[k + 1]}}, {"errors", {errors[k], errors[k + 1]}}});
    if (margin == 0.0) monotone.fail({{"eps", {eps[k], eps[k + 1]}}, {"errors", {errors[k], errors[k + 1]}}});
  }
  for (double e : errors)
    if (!std::isfinite(e) || e < 0.0) monotone.fail({{"error", e}});
  monotone.details = {{"errors", errors}, {"eps", eps}};

  CheckReport reduction;
  reduction.name = "convergence_reduction";
  if (errors.empty()) {
    reduction.fail({{"error", "no runs"}});
  } else {
    reduction.record(reduction_factor * errors.front() - errors.back(), 0.0,
                     {{"first", errors.front()}, {"last", errors.back()}, {"factor", reduction_factor}});
    reduction.details = {{"first", errors.front()}, {"last", errors.back()}, {"factor", reduction_factor}};
  }

  CheckReport linfini;
  linfini.name = "linfini_bound";
  auto add = [&](const EvolutionDiagnostics& d, const nlohmann::json& label) {
    linfini.record(d.linfini_bound - d.max_abs_u, 1e-6,
                   {{"run", label}, {"max_abs_u", d.max_abs_u}, {"bound", d.linfini_bound}});
  };
  add(report.homogenized, "homogenized");
  for (const auto& r : report.runs) add(r.diagnostics, r.eps);

  CheckReport slopes;
  slopes.name = "slope_persistence";
  if (report.runs.empty()) {
    slopes.fail({{"error", "no runs"}});
  } else {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& r : report.runs) {
      slopes.record(report.slope_bound - r.slope, 0.0, {{"eps", r.eps}, {"slope", r.slope}, {"bound", report.slope_bound}});
      lo = std::min(lo, r.slope);
      hi = std::max(hi, r.slope);
    }
    const double variation = hi > 0.0 ? (hi - lo) / hi : 0.0;
    slopes.record(slope_variation - variation, 0.0, {{"variation", variation}, {"allowed", slope_variation}});
    std::vector<double> s;
    for (const auto& r : report.runs) s.push_back(r.slope);
    slopes.details = {{"slopes", s}, {"bound", report.slope_bound}, {"variation", variation}};
  }
  return {monotone, reduction, linfini, slopes};
}

SliceTable config_slice(const ExperimentConfig& config, unsigned workers) {
  const auto& sys = config.system;
  const int m = sys->M();
  const int dim = sys->N();
  std::vector<Axis> axes = default_axes(m, dim);
  for (int a = 0; a < dim; ++a) axes[static_cast<std::size_t>(a)].min = axes[static_cast<std::size_t>(a)].max = config.slice.x[static_cast<std::size_t>(a)];
  for (int j = 0; j < m; ++j) {
    auto& ax = axes[static_cast<std::size_t>(dim + j)];
    ax.min = ax.max = config.slice.r[static_cast<std::size_t>(j)];
  }
  auto& p1 = axes[static_cast<std::size_t>(dim + m)];
  p1.min = config.slice.p_min;
  p1.max = config.slice.count > 1 ? config.slice.p_max : config.slice.p_min;
  p1.count = config.slice.count;
  const HBarTable table = build_table(sys, {config.slice.component}, axes, config.hbar.cell, workers);
  SliceTable out;
  for (std::size_t k = 0; k < table.node_count(); ++k) {
    out.p.push_back(table.node_coords(k)[static_cast<std::size_t>(dim + m)]);
    out.hbar.push_back(table.node_value(0, k));
  }
  return out;
}

SliceTable example_slice(unsigned workers) {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.slice.r = {1.0};
  c.slice.p_min = -3.0;
  c.slice.p_max = 3.0;
  c.slice.count = 61;
  return config_slice(c, workers);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_eps_error_csv(const ConvergenceReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "eps,error,ratio\n";
  for (std::size_t k = 0; k < report.runs.size(); ++k) {
    out << fmt(report.runs[k].eps) << ',' << fmt(report.runs[k].error) << ',';
    if (k > 0) out << fmt(report.runs[k - 1].error / report.runs[k].error);
    out << '\n';
  }
}

void write_hbar_slice_csv(const SliceTable& slice, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "p,hbar\n";
  for (std::size_t k = 0; k < slice.p.size(); ++k) out << fmt(slice.p[k]) << ',' << fmt(slice.hbar[k]) << '\n';
}

void write_solution_profiles_csv(const ConvergenceReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  if (!report.homogenized_profile) {
    out << "x\n";
    return;
  }
  const GridField& hom = *report.homogenized_profile;
  const TorusGrid& grid = hom.grid();
  const int m = hom.components();
  out << (grid.dim() == 1 ? "x" : "x1,x2");
  for (int c = 1; c <= m; ++c) out << ",hom_c" << c;
  for (const auto& r : report.runs)
    for (int c = 1; c <= m; ++c) out << ",eps_" << fmt(r.eps) << "_c" << c;
  out << '\n';
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point x = grid.node(k);
    out << fmt(x[0]);
    if (grid.dim() == 2) out << ',' << fmt(x[1]);
    for (int c = 0; c < m; ++c) out << ',' << fmt(hom.at(c, k));
    for (const auto& r : report.runs)
      for (int c = 0; c < m; ++c) out << ',' << fmt(r.profile.at(c, k));
    out << '\n';
  }
}

void emit_plot_data(const ConvergenceReport& report, const SliceTable& slice, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_eps_error_csv(report, dir / "eps_error.csv");
  write_hbar_slice_csv(slice, dir / "hbar_slice.csv");
  write_solution_profiles_csv(report, dir / "solution_profiles.csv");
}

}  // namespace hjhom
