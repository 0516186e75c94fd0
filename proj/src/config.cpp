#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "hjhom/harness.hpp"

namespace hjhom {

namespace {

bool divides(double length, double eps) {
  const double q = length / eps;
  return eps > 0.0 && q >= 1.0 - 1e-9 && std::abs(q - std::round(q)) <= 1e-9 * q;
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

bool is_abs_p(const Expression& e) {
  std::string t = e.text();
  t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
  return t == "abs(p)" || t == "abs(p1)";
}

}  // namespace

nlohmann::json example_system_json(const std::string& name) {
  using nlohmann::json;
  const json abs_p = {{"kind", "weakly_coupled"}, {"G", "abs(p)"}, {"convex", true}};
  if (name == "example_a") return {{"M", 1}, {"components", {abs_p}}, {"coupling", {{"2+cos(2*pi*y)"}}}};
  if (name == "example_b")
    return {{"M", 2},
            {"components", {abs_p, abs_p}},
            {"coupling", json::array({json::array({"2+cos(2*pi*y)", "-(1+sin(2*pi*y))/2"}),
                                      json::array({"-1", "1.5+0.5*sin(2*pi*y)"})})}};
  if (name == "piecewise") return {{"M", 1}, {"components", {abs_p}}, {"coupling", {{"1+cos(2*pi*y)/2"}}}};
  if (name == "constant_coupling") return {{"M", 2}, {"components", {abs_p, abs_p}}, {"coupling", {{1, -1}, {-1, 1}}}};
  if (name == "y_independent")
    return {{"M", 1},
            {"components",
             {{{"kind", "custom"}, {"H", "(1+0.5*sin(2*pi*x))*abs(p)+0.25*p*p+r"}, {"convex", true}}}}};
  if (name == "y_independent_2d")
    return {{"M", 2},
            {"N", 2},
            {"components",
             {{{"kind", "custom"}, {"H", "abs(p1)+0.5*abs(p2)+2*r1-r2+cos(2*pi*x1)"}, {"convex", true}},
              {{"kind", "custom"}, {"H", "abs(p1)+abs(p2)+r2-0.5*r1+0.5*sin(2*pi*x2)"}, {"convex", true}}}}};
  throw std::invalid_argument("unknown example system '" + name + "'");
}

std::shared_ptr<const HamiltonianSystem> example_system(const std::string& name) {
  return std::make_shared<const HamiltonianSystem>(system_from_json(example_system_json(name)));
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.system_json = example_system_json("example_a");
  c.system = std::make_shared<const HamiltonianSystem>(system_from_json(c.system_json));
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c = defaults();
  c.base_dir = base_dir;
  try {
    reject_unknown(j,
                   {"system", "system_file", "domain", "eps", "T", "cfl", "u0", "hbar", "slice", "suite",
                    "reduction_factor", "slope_variation", "seed", "out_dir"},
                   "config");
    if (j.contains("system") && j.contains("system_file"))
      throw std::invalid_argument("config: give either system or system_file");
    if (j.contains("system")) {
      c.system_json = j.at("system");
    } else if (j.contains("system_file")) {
      const auto path = c.resolve(j.at("system_file").get<std::string>());
      std::ifstream in(path);
      if (!in) throw std::invalid_argument("config: system file '" + path.string() + "' does not exist");
      nlohmann::json doc;
      in >> doc;
      c.system_json = doc.contains("system") ? doc.at("system") : doc;
    }
    c.system = std::make_shared<const HamiltonianSystem>(system_from_json(c.system_json));
    if (j.contains("domain")) {
      const auto& d = j.at("domain");
      reject_unknown(d, {"L", "cells_per_eps", "base_n", "homogenized_n"}, "domain");
      c.L = d.value("L", c.L);
      c.cells_per_eps = d.value("cells_per_eps", c.cells_per_eps);
      c.base_n = d.value("base_n", c.base_n);
      c.homogenized_n = d.value("homogenized_n", c.homogenized_n);
    }
    if (j.contains("eps")) c.eps = j.at("eps").get<std::vector<double>>();
    c.T = j.value("T", c.T);
    c.cfl = j.value("cfl", c.cfl);
    if (j.contains("u0")) {
      const auto& u = j.at("u0");
      c.u0 = u.is_string() ? std::vector<std::string>{u.get<std::string>()} : u.get<std::vector<std::string>>();
    } else if (c.system->M() != 1) {
      throw std::invalid_argument("config: u0 is required when M > 1");
    }
    if (j.contains("hbar")) {
      const auto& h = j.at("hbar");
      reject_unknown(h, {"source", "axes", "cell", "path"}, "hbar");
      c.hbar.kind = h.value("source", c.hbar.kind);
      c.hbar.axes = h.value("axes", c.hbar.axes);
      if (h.contains("cell")) c.hbar.cell = CellParams::from_json(h.at("cell"));
      c.hbar.path = h.value("path", c.hbar.path);
    }
    if (j.contains("slice")) {
      const auto& s = j.at("slice");
      reject_unknown(s, {"component", "x", "r", "p_min", "p_max", "count"}, "slice");
      c.slice.component = s.value("component", 1) - 1;
      if (s.contains("x")) {
        const auto x = s.at("x").get<std::vector<double>>();
        for (std::size_t a = 0; a < std::min<std::size_t>(2, x.size()); ++a) c.slice.x[a] = x[a];
      }
      if (s.contains("r")) c.slice.r = s.at("r").get<std::vector<double>>();
      c.slice.p_min = s.value("p_min", c.slice.p_min);
      c.slice.p_max = s.value("p_max", c.slice.p_max);
      c.slice.count = s.value("count", c.slice.count);
    } else {
      c.slice.r.assign(static_cast<std::size_t>(c.system->M()), 0.0);
      c.slice.r[0] = 1.0;
    }
    if (j.contains("suite")) {
      const auto& s = j.at("suite");
      reject_unknown(s,
                     {"oracle_samples", "trivial_samples", "coupling_samples", "piecewise_random", "a3_pairs",
                      "convex_triples", "comparison_pairs", "system_samples"},
                     "suite");
      auto& b = c.budgets;
      b.oracle_samples = s.value("oracle_samples", b.oracle_samples);
      b.trivial_samples = s.value("trivial_samples", b.trivial_samples);
      b.coupling_samples = s.value("coupling_samples", b.coupling_samples);
      b.piecewise_random = s.value("piecewise_random", b.piecewise_random);
      b.a3_pairs = s.value("a3_pairs", b.a3_pairs);
      b.convex_triples = s.value("convex_triples", b.convex_triples);
      b.comparison_pairs = s.value("comparison_pairs", b.comparison_pairs);
      b.system_samples = s.value("system_samples", b.system_samples);
    }
    c.reduction_factor = j.value("reduction_factor", c.reduction_factor);
    c.slope_variation = j.value("slope_variation", c.slope_variation);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path());
}

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

int ExperimentConfig::grid_n(double e) const {
  return static_cast<int>(std::lround(cells_per_eps * L / e));
}

int ExperimentConfig::resolved_base_n() const {
  if (base_n > 0) return base_n;
  return grid_n(*std::max_element(eps.begin(), eps.end()));
}

int ExperimentConfig::resolved_homogenized_n() const {
  if (homogenized_n > 0) return homogenized_n;
  return eps.empty() ? resolved_base_n() : grid_n(*std::min_element(eps.begin(), eps.end()));
}

void ExperimentConfig::validate() const {
  if (!system) throw std::invalid_argument("config: no system");
  if (!(L > 0.0)) throw std::invalid_argument("config: L must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("config: T must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("config: cfl must lie in (0, 1]");
  if (cells_per_eps < 32) throw std::invalid_argument("config: cells_per_eps must be at least 32");
  if (eps.empty()) throw std::invalid_argument("config: eps schedule is empty");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!divides(L, eps[k]))
      throw std::invalid_argument("config: eps = " + std::to_string(eps[k]) + " does not divide L");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw std::invalid_argument("config: eps schedule must decrease");
  }
  if (static_cast<int>(u0.size()) != system->M())
    throw std::invalid_argument("config: need one u0 expression per component");
  for (const auto& text : u0) {
    if (Expression::parse(text).uses_range(slot::y1, slot::count(system->M())))
      throw std::invalid_argument("config: u0 '" + text + "' may only use x1, x2");
  }
  const int nb = resolved_base_n();
  if (nb < 4) throw std::invalid_argument("config: base grid too coarse");
  for (double e : eps)
    if (grid_n(e) % nb != 0) throw std::invalid_argument("config: grids are not nested over the base grid");
  if (resolved_homogenized_n() % nb != 0)
    throw std::invalid_argument("config: homogenized grid is not nested over the base grid");
  const std::set<std::string> kinds{"closed_form", "table", "file", "y_independent"};
  if (!kinds.count(hbar.kind)) throw std::invalid_argument("config: unknown hbar source '" + hbar.kind + "'");
  if (hbar.kind == "file" && !std::filesystem::exists(resolve(hbar.path)))
    throw std::invalid_argument("config: hbar table '" + resolve(hbar.path).string() + "' does not exist");
  if (hbar.kind == "table" && hbar.axes.empty()) throw std::invalid_argument("config: table source needs axes");
  if (slice.component < 0 || slice.component >= system->M())
    throw std::invalid_argument("config: slice component out of range");
  if (static_cast<int>(slice.r.size()) != system->M())
    throw std::invalid_argument("config: slice r needs M entries");
  if (slice.count < 1 || (slice.count > 1 && !(slice.p_max > slice.p_min)))
    throw std::invalid_argument("config: malformed slice range");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["system"] = system_json;
  j["domain"] = {{"L", L}, {"cells_per_eps", cells_per_eps}, {"base_n", base_n}, {"homogenized_n", homogenized_n}};
  j["eps"] = eps;
  j["T"] = T;
  j["cfl"] = cfl;
  j["u0"] = u0;
  j["hbar"] = {{"source", hbar.kind}, {"axes", hbar.axes}, {"cell", hbar.cell.to_json()}, {"path", hbar.path}};
  j["slice"] = {{"component", slice.component + 1}, {"x", {slice.x[0], slice.x[1]}}, {"r", slice.r},
                {"p_min", slice.p_min}, {"p_max", slice.p_max}, {"count", slice.count}};
  j["suite"] = {{"oracle_samples", budgets.oracle_samples},     {"trivial_samples", budgets.trivial_samples},
                {"coupling_samples", budgets.coupling_samples}, {"piecewise_random", budgets.piecewise_random},
                {"a3_pairs", budgets.a3_pairs},                 {"convex_triples", budgets.convex_triples},
                {"comparison_pairs", budgets.comparison_pairs}, {"system_samples", budgets.system_samples}};
  j["reduction_factor"] = reduction_factor;
  j["slope_variation"] = slope_variation;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  return j;
}

std::shared_ptr<const HBarProvider> make_provider(const ExperimentConfig& config, unsigned workers) {
  const auto& sys = config.system;
  if (config.hbar.kind == "y_independent") return std::make_shared<const YIndependentProvider>(sys);
  if (config.hbar.kind == "file") {
    auto table = std::make_shared<const HBarTable>(load_table(config.resolve(config.hbar.path).string()));
    if (table->M() != sys->M() || table->N() != sys->N())
      throw std::invalid_argument("hbar table does not match the system dimensions");
    return std::make_shared<const TableProvider>(table);
  }
  if (config.hbar.kind == "table") {
    std::vector<int> comps(static_cast<std::size_t>(sys->M()));
    for (int i = 0; i < sys->M(); ++i) comps[static_cast<std::size_t>(i)] = i;
    auto table = std::make_shared<const HBarTable>(
        build_table(sys, comps, parse_axes(config.hbar.axes, sys->M(), sys->N()), config.hbar.cell, workers));
    return std::make_shared<const TableProvider>(table);
  }
  if (sys->N() != 1 || !sys->coupling())
    throw std::invalid_argument("closed_form hbar needs a 1-D weakly coupled system");
  for (int i = 0; i < sys->M(); ++i) {
    const auto& comp = sys->component(i);
    if (comp.kind != ComponentKind::WeaklyCoupled || !is_abs_p(comp.base))
      throw std::invalid_argument("closed_form hbar needs G_i = abs(p) for every component");
  }
  return std::make_shared<const WeaklyCoupledClosedForm>(*sys->coupling());
}

}  // namespace hjhom
