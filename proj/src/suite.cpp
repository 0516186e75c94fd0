#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "hjhom/harness.hpp"

namespace hjhom {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

 private:
  std::mt19937_64 rng_;
};

CellProblemSpec make_spec(std::shared_ptr<const HamiltonianSystem> sys, int i, const Point& x,
                          std::vector<double> r, std::vector<double> p) {
  CellProblemSpec spec;
  spec.grid = CellProblemSpec::default_grid(sys->N());
  spec.sys = std::move(sys);
  spec.component = i;
  spec.x = x;
  spec.r = std::move(r);
  spec.p = std::move(p);
  return spec;
}

double hbar_at(const std::shared_ptr<const HamiltonianSystem>& sys, int i, std::vector<double> r,
               std::vector<double> p) {
  return effective_hamiltonian(make_spec(sys, i, {0.0, 0.0}, std::move(r), std::move(p))).lambda;
}

CheckReport guarded(const std::string& name, const std::function<void(CheckReport&)>& body) {
  CheckReport report;
  report.name = name;
  try {
    body(report);
  } catch (const std::exception& e) {
    report.fail({{"exception", e.what()}});
  }
  return report;
}

void merge(CheckReport& into, const CheckReport& from, const nlohmann::json& label) {
  into.samples += from.samples;
  into.violation_count += from.violation_count;
  into.worst_margin = std::min(into.worst_margin, from.worst_margin);
  if (!from.passed) into.passed = false;
  for (const auto& w : from.witnesses)
    if (into.witnesses.size() < CheckReport::kMaxWitnesses) into.witnesses.push_back({{"case", label}, {"witness", w}});
}

}  // namespace

CheckReport check_closed_form_oracle(int samples, std::uint64_t seed, double tol) {
  return guarded("closed_form_oracle", [&](CheckReport& report) {
    const auto sys = example_system("example_a");
    Sampler s(seed);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
      const double r = s.uniform(-3.0, 3.0);
      const double p = s.uniform(-4.0, 4.0);
      const double lambda = hbar_at(sys, 0, {r}, {p});
      const std::vector<double> rv{r};
      const double ref = closed_form_eikonal_weakly_coupled(*sys->coupling(), 0, rv, p);
      worst = std::max(worst, std::abs(lambda - ref));
      report.record(tol - std::abs(lambda - ref), 0.0, {{"r", r}, {"p", p}, {"lambda", lambda}, {"closed_form", ref}});
    }
    report.details = {{"max_error", worst}, {"tolerance", tol}};
  });
}

CheckReport check_trivial_corrector(int samples, std::uint64_t seed, double tol) {
  return guarded("trivial_corrector", [&](CheckReport& report) {
    const std::array<std::shared_ptr<const HamiltonianSystem>, 2> systems{example_system("y_independent"),
                                                                           example_system("y_independent_2d")};
    Sampler s(seed);
    for (int k = 0; k < samples; ++k) {
      const auto& sys = systems[static_cast<std::size_t>(k % 2)];
      const int i = s.index(sys->M());
      Point x{0.0, 0.0};
      for (int a = 0; a < sys->N(); ++a) x[static_cast<std::size_t>(a)] = s.uniform(0.0, 1.0);
      std::vector<double> r(static_cast<std::size_t>(sys->M()));
      for (auto& v : r) v = s.uniform(-2.0, 2.0);
      std::vector<double> p(static_cast<std::size_t>(sys->N()));
      for (auto& v : p) v = s.uniform(-3.0, 3.0);
      const CellSolution sol = effective_hamiltonian(make_spec(sys, i, x, r, p));
      const double h = sys->eval(i, x, {0.0, 0.0}, r, p);
      const double err = std::max(std::abs(sol.lambda - h), sup_norm(sol.corrector));
      report.record(tol - err, 0.0,
                    {{"N", sys->N()}, {"component", i + 1}, {"lambda", sol.lambda}, {"H", h},
                     {"corrector_sup", sup_norm(sol.corrector)}});
    }
  });
}

CheckReport check_constant_coupling(int samples, std::uint64_t seed, double tol) {
  return guarded("constant_coupling", [&](CheckReport& report) {
    const auto sys = example_system("constant_coupling");
    const auto base = [](int, std::span<const double> p) { return std::abs(p[0]); };
    Sampler s(seed);
    for (int k = 0; k < samples; ++k) {
      const std::vector<double> r{s.uniform(-3.0, 3.0), s.uniform(-3.0, 3.0)};
      const std::vector<double> p{s.uniform(-4.0, 4.0)};
      for (int i = 0; i < 2; ++i) {
        const double lambda = hbar_at(sys, i, r, p);
        const double ref = closed_form_constant_coupling(base, *sys->coupling(), i, r, p);
        report.record(tol - std::abs(lambda - ref), 0.0,
                      {{"component", i + 1}, {"r", r}, {"p", p[0]}, {"lambda", lambda}, {"closed_form", ref}});
      }
    }
  });
}

CheckReport check_piecewise_branches(int random_samples, std::uint64_t seed, double tol) {
  return guarded("piecewise_branches", [&](CheckReport& report) {
    const auto sys = example_system("piecewise");
    const CouplingMatrix& c = *sys->coupling();
    const auto c11 = [&](double y) { return c.c(0, 0)({0.0, 0.0}, {y, 0.0}); };
    const std::array<std::pair<double, double>, 3> branches{{{-4.0, -2.0}, {0.0, 1.0}, {4.0, 6.0}}};
    for (const auto& [r, expected] : branches) {
      const double lambda = hbar_at(sys, 0, {r}, {1.0});
      report.record(tol - std::abs(lambda - expected), 0.0, {{"r", r}, {"lambda", lambda}, {"expected", expected}});
    }
    Sampler s(seed);
    for (int k = 0; k < random_samples; ++k) {
      const double r = s.uniform(-5.0, 5.0);
      const double lambda = hbar_at(sys, 0, {r}, {1.0});
      const double ref = closed_form_piecewise_r1(c11, r, 1.0);
      report.record(tol - std::abs(lambda - ref), 0.0, {{"r", r}, {"lambda", lambda}, {"closed_form", ref}});
    }
  });
}

CheckReport check_flat_part(const SliceTable& slice, double tol, double rise) {
  return guarded("flat_part", [&](CheckReport& report) {
    int outer = 0;
    for (std::size_t k = 0; k < slice.p.size(); ++k) {
      const double ap = std::abs(slice.p[k]);
      if (ap <= 0.9 + 1e-12)
        report.record(tol - std::abs(slice.hbar[k] - 3.0), 0.0, {{"p", slice.p[k]}, {"hbar", slice.hbar[k]}});
      if (std::abs(ap - 1.5) < 1e-9) {
        ++outer;
        report.record(slice.hbar[k] - (3.0 + rise), 0.0, {{"p", slice.p[k]}, {"hbar", slice.hbar[k]}});
      }
    }
    if (outer == 0) report.fail({{"error", "slice has no node at |p| = 1.5"}});
  });
}

CheckReport check_coercivity(const SliceTable& slice, double tol) {
  return guarded("hbar_coercivity", [&](CheckReport& report) {
    if (slice.p.size() < 3) {
      report.fail({{"error", "slice too short"}});
      return;
    }
    std::size_t c = 0;
    for (std::size_t k = 1; k < slice.p.size(); ++k)
      if (std::abs(slice.p[k]) < std::abs(slice.p[c])) c = k;
    const double h0 = slice.hbar[c];
    // flat width: extent of the connected run of nodes within tol of the centre value
    double width = 0.0;
    for (std::size_t k = c; k < slice.p.size() && slice.hbar[k] - h0 <= tol; ++k)
      width = std::max(width, std::abs(slice.p[k] - slice.p[c]));
    for (std::size_t k = c + 1; k-- > 0 && slice.hbar[k] - h0 <= tol;)
      width = std::max(width, std::abs(slice.p[k] - slice.p[c]));
    for (std::size_t end : {std::size_t{0}, slice.p.size() - 1}) {
      const double reach = std::abs(slice.p[end] - slice.p[c]);
      const double increase = slice.hbar[end] - h0;
      report.record(std::min(reach - width, increase - tol), 0.0,
                    {{"p", slice.p[end]}, {"increase", increase}, {"flat_width", width}});
      if (reach <= width || increase <= tol) report.fail({{"p", slice.p[end]}, {"increase", increase}});
    }
    report.details = {{"flat_width", width}, {"center", slice.p[c]}, {"center_value", h0}};
  });
}

CheckReport check_hbar_a3(int pairs, std::uint64_t seed, double tol) {
  return guarded("hbar_a3", [&](CheckReport& report) {
    const auto sys = example_system("example_b");
    Sampler s(seed);
    for (int k = 0; k < pairs; ++k) {
      const int j = s.index(2);
      const std::vector<double> r{s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0)};
      std::vector<double> d(2);
      d[static_cast<std::size_t>(j)] = s.uniform(0.0, 1.5);
      d[static_cast<std::size_t>(1 - j)] = s.uniform(-1.5, d[static_cast<std::size_t>(j)]);
      const std::vector<double> rs{r[0] - d[0], r[1] - d[1]};
      const std::vector<double> p{s.uniform(-2.0, 2.0)};
      const double hr = hbar_at(sys, j, r, p);
      const double hs = hbar_at(sys, j, rs, p);
      report.record(hr - hs, tol, {{"component", j + 1}, {"r", r}, {"s", rs}, {"p", p[0]}, {"hbar_r", hr}, {"hbar_s", hs}});
    }
  });
}

CheckReport check_hbar_convexity(int triples, std::uint64_t seed, double tol) {
  return guarded("hbar_convexity", [&](CheckReport& report) {
    const std::array<std::shared_ptr<const HamiltonianSystem>, 2> systems{example_system("example_a"),
                                                                           example_system("example_b")};
    Sampler s(seed);
    for (int k = 0; k < triples; ++k) {
      const auto& sys = systems[static_cast<std::size_t>(k % 2)];
      const int i = s.index(sys->M());
      if (!sys->convex_in_p(i)) continue;
      std::vector<double> r(static_cast<std::size_t>(sys->M()));
      for (auto& v : r) v = s.uniform(-2.0, 2.0);
      const double p1 = s.uniform(-3.0, 3.0);
      const double p2 = s.uniform(-3.0, 3.0);
      const double h1 = hbar_at(sys, i, r, {p1});
      const double h2 = hbar_at(sys, i, r, {p2});
      const double hm = hbar_at(sys, i, r, {0.5 * (p1 + p2)});
      report.record(0.5 * (h1 + h2) - hm, tol,
                    {{"M", sys->M()}, {"component", i + 1}, {"r", r}, {"p", {p1, p2}}, {"hbar", {h1, h2, hm}}});
    }
  });
}

std::pair<CheckReport, CheckReport> check_comparison_pairs(int pairs, std::uint64_t seed) {
  CheckReport comparison;
  comparison.name = "comparison";
  CheckReport linfini;
  linfini.name = "linfini_comparison_runs";
  try {
    const auto sys = example_system("example_b");
    const TorusGrid grid(1, 128, 1.0);
    EvolutionProblem problem;
    problem.source = OscillatingSource{sys, 0.25};
    problem.T = 0.5;
    problem.snapshots = {0.25};
    Sampler s(seed);
    auto random_field = [&] {
      std::array<std::array<double, 7>, 2> coef{};
      for (auto& comp : coef) {
        comp[0] = s.uniform(-0.5, 0.5);
        for (int k = 1; k <= 3; ++k) {
          comp[static_cast<std::size_t>(2 * k - 1)] = s.uniform(-0.5, 0.5) / k;
          comp[static_cast<std::size_t>(2 * k)] = s.uniform(0.0, 2.0 * std::numbers::pi);
        }
      }
      return sample(grid, 2, [coef](int c, const Point& x) {
        const auto& a = coef[static_cast<std::size_t>(c)];
        double v = a[0];
        for (int k = 1; k <= 3; ++k)
          v += a[static_cast<std::size_t>(2 * k - 1)] * std::sin(2.0 * std::numbers::pi * k * x[0] + a[static_cast<std::size_t>(2 * k)]);
        return v;
      });
    };
    for (int k = 0; k < pairs; ++k) {
      const GridField high = random_field();
      GridField low = high;
      const double phase = s.uniform(0.0, 2.0 * std::numbers::pi);
      std::string kind = "identical";
      if (k % 3 == 1) {
        kind = "ordered";
        for (std::size_t q = 0; q < low.values().size(); ++q) {
          const double x = grid.node(q % grid.size())[0];
          low[q] -= 0.1 + 0.1 * (1.0 + std::sin(2.0 * std::numbers::pi * x + phase));
        }
      } else if (k % 3 == 2) {
        kind = "crossing";
        for (std::size_t q = 0; q < low.values().size(); ++q) {
          const double x = grid.node(q % grid.size())[0];
          low[q] += 0.2 * std::sin(2.0 * std::numbers::pi * x + phase);
        }
      }
      const nlohmann::json label = {{"pair", k}, {"kind", kind}};
      merge(comparison, check_comparison(problem, low, high, problem.T), label);
      for (const GridField* data : {static_cast<const GridField*>(&low), static_cast<const GridField*>(&high)}) {
        problem.u0 = *data;
        const auto d = solve(problem).diagnostics;
        linfini.record(d.linfini_bound - d.max_abs_u, 1e-6,
                       {{"case", label}, {"max_abs_u", d.max_abs_u}, {"bound", d.linfini_bound}});
      }
    }
  } catch (const std::exception& e) {
    comparison.fail({{"exception", e.what()}});
    linfini.fail({{"exception", e.what()}});
  }
  return {comparison, linfini};
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckReport& c) { return c.passed; });
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["passed"] = passed();
  std::vector<nlohmann::json> items;
  for (const auto& c : checks) items.push_back(c.to_json());
  j["checks"] = items;
  return j;
}

std::string SuiteReport::summary() const {
  std::ostringstream os;
  std::size_t failed = 0;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name << "  samples=" << c.samples;
    if (c.worst_margin != std::numeric_limits<double>::infinity()) os << " worst_margin=" << c.worst_margin;
    os << '\n';
    if (!c.passed) ++failed;
  }
  os << (failed == 0 ? "all " + std::to_string(checks.size()) + " checks passed"
                     : std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed")
     << '\n';
  return os.str();
}

SuiteReport run_property_suite(const ExperimentConfig& config, unsigned workers) {
  const auto& b = config.budgets;
  const std::uint64_t seed = config.seed;
  const auto sys = config.system;
  const double radius = 4.0;
  using Task = std::function<std::vector<CheckReport>()>;
  std::vector<Task> tasks;
  if (sys->coupling()) {
    tasks.push_back([&] {
      auto r = check_A1_coefficients(*sys->coupling(), static_cast<std::size_t>(b.system_samples), derive_seed(seed, 1));
      r.name = "system_A1";
      return std::vector<CheckReport>{r};
    });
  }
  tasks.push_back([&] {
    auto r = check_A3(*sys, static_cast<std::size_t>(b.system_samples), derive_seed(seed, 2), radius);
    r.name = "system_A3";
    return std::vector<CheckReport>{r};
  });
  tasks.push_back([&] {
    auto r = check_periodicity(*sys, static_cast<std::size_t>(b.system_samples), derive_seed(seed, 3), radius);
    r.name = "system_periodicity";
    return std::vector<CheckReport>{r};
  });
  tasks.push_back([&] {
    auto r = check_lip_p_bound(*sys, static_cast<std::size_t>(b.system_samples), derive_seed(seed, 4), radius);
    r.name = "system_lip_p";
    return std::vector<CheckReport>{r};
  });
  tasks.push_back([&] { return std::vector<CheckReport>{check_closed_form_oracle(b.oracle_samples, derive_seed(seed, 5), 2e-2)}; });
  tasks.push_back([&] { return std::vector<CheckReport>{check_trivial_corrector(b.trivial_samples, derive_seed(seed, 6), 1e-6)}; });
  tasks.push_back([&] { return std::vector<CheckReport>{check_constant_coupling(b.coupling_samples, derive_seed(seed, 7), 2e-2)}; });
  tasks.push_back([&] { return std::vector<CheckReport>{check_piecewise_branches(b.piecewise_random, derive_seed(seed, 8), 2e-2)}; });
  tasks.push_back([&] {
    try {
      const SliceTable slice = example_slice(1);
      return std::vector<CheckReport>{check_flat_part(slice, 2e-2, 0.05), check_coercivity(slice, 2e-2)};
    } catch (const std::exception& e) {
      CheckReport r;
      r.name = "hbar_slice";
      r.fail({{"exception", e.what()}});
      return std::vector<CheckReport>{r};
    }
  });
  tasks.push_back([&] { return std::vector<CheckReport>{check_hbar_a3(b.a3_pairs, derive_seed(seed, 9), 1e-3)}; });
  tasks.push_back([&] { return std::vector<CheckReport>{check_hbar_convexity(b.convex_triples, derive_seed(seed, 10), 2e-2)}; });
  tasks.push_back([&] {
    auto [cmp, lin] = check_comparison_pairs(b.comparison_pairs, derive_seed(seed, 11));
    return std::vector<CheckReport>{cmp, lin};
  });
  tasks.push_back([&] {
    try {
      return convergence_checks(run_convergence(config, 1), config.reduction_factor, config.slope_variation);
    } catch (const std::exception& e) {
      CheckReport r;
      r.name = "convergence";
      r.fail({{"exception", e.what()}});
      return std::vector<CheckReport>{r};
    }
  });

  std::vector<std::vector<CheckReport>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      try {
        results[k] = tasks[k]();
      } catch (const std::exception& e) {
        CheckReport r;
        r.name = "task_" + std::to_string(k);
        r.fail({{"exception", e.what()}});
        results[k] = {r};
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  SuiteReport report;
  report.seed = seed;
  for (auto& group : results)
    for (auto& c : group) report.checks.push_back(std::move(c));
  return report;
}

}  // namespace hjhom
