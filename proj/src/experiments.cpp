#include "nfde/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace nfde {

namespace fs = std::filesystem;

const std::vector<std::string> kAllChecks = {"monotonicity",          "pointwise_green",    "absolute_bounds",
                                             "smoothing_instantaneous", "smoothing_small",    "smoothing_large",
                                             "smoothing_backward",    "weighted_l1",        "weak_dual_residual",
                                             "f_integrability",       "kernels"};

namespace {

double nonneg(const json& j, const char* key, double def) {
  const double v = j.value(key, def);
  if (!(v >= 0) || !std::isfinite(v)) throw ConfigError(std::string("initial: '") + key + "' must be >= 0");
  return v;
}

std::array<double, 2> center_of(const Domain& d, const json& desc) {
  std::array<double, 2> c = {0.5 * d.Lx(), d.dimension() == 2 ? 0.5 * d.Ly() : 0.0};
  if (!desc.contains("center")) return c;
  const auto& j = desc.at("center");
  if (j.is_number()) {
    c[0] = j.get<double>();
  } else if (j.is_array() && !j.empty()) {
    c[0] = j.at(0).get<double>();
    if (j.size() > 1) c[1] = j.at(1).get<double>();
  } else {
    throw ConfigError("initial: center must be a number or an array");
  }
  return c;
}

bool has_check(const std::vector<std::string>& checks, const std::string& name) {
  return std::find(checks.begin(), checks.end(), name) != checks.end();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class E>
[[noreturn]] void rethrow_with(const std::string& ctx, const E& e) {
  throw E(ctx + ": " + e.what());
}

CheckReport kernel_check(const DiscreteOperator& op, KernelHypothesis h) {
  const auto kb = check_kernel_bounds(op, h);
  CheckReport rep(std::string("kernel_") + kb.hypothesis, 0.0);
  rep.samples = kb.pairs;
  rep.pass = kb.pass;
  rep.worst_margin = kb.pass ? 0.0 : -1.0;
  rep.violations = kb.pass ? 0 : 1;
  std::ostringstream os;
  os << "i=" << kb.worst_i << ",j=" << kb.worst_j;
  rep.location = os.str();
  rep.details = kb.to_json();
  return rep;
}

json make_series(const Domain& d, const DiscreteOperator& op, const Trajectory& tr) {
  const auto w = BoundaryWeight::make(d, op.gamma());
  json t = json::array(), sup = json::array(), l1 = json::array(), l1phi = json::array();
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Vec& u = tr.states[k];
    t.push_back(tr.times[k]);
    sup.push_back(u.size() ? u.cwiseAbs().maxCoeff() : 0.0);
    l1.push_back(d.l1(u));
    l1phi.push_back(d.weighted_l1(u, w.values));
  }
  return {{"t", t}, {"sup", sup}, {"l1", l1}, {"l1_phi", l1phi}};
}

json stats_summary(const Trajectory& tr) {
  long iters = 0, fallbacks = 0;
  double worst = 0.0;
  for (const auto& s : tr.stats) {
    iters += s.newton_iterations;
    fallbacks += s.used_fallback ? 1 : 0;
    worst = std::max(worst, s.residual);
  }
  return {{"steps", tr.stats.size()}, {"newton_iterations", iters}, {"fallback_steps", fallbacks},
          {"max_residual", worst}};
}

void persist(const ExperimentResult& r) {
  if (r.config.output.empty()) return;
  const fs::path dir = r.config.output;
  fs::create_directories(dir);
  const auto d = Domain::from_json(r.config.domain);
  write_trajectory_csv(dir / "trajectory.csv", d, r.trajectory);
  json side = {{"config", r.config.to_json()},
               {"provenance", r.trajectory.provenance},
               {"dt", r.trajectory.dt},
               {"times", r.trajectory.times},
               {"stats", stats_summary(r.trajectory)}};
  write_json(dir / "trajectory.json", side);
  write_json(dir / "manifest.json", {{"runs", json::array({r.manifest_entry()})}});
}

}  // namespace

Vec make_initial(const Domain& d, const json& desc) {
  try {
    const auto kind = desc.value("kind", std::string("bump"));
    if (kind == "zero") return Vec::Zero(d.size());
    if (kind == "bump") {
      const double height = desc.value("height", 1.0);
      if (!(height >= 0) || !std::isfinite(height)) throw ConfigError("initial: negative amplitude");
      const double width = desc.value("width", 0.25);
      if (!(width > 0)) throw ConfigError("initial: bump width must be positive");
      const auto c = center_of(d, desc);
      return d.sample([&](double x, double y) {
        const double r = std::hypot(x - c[0], y - c[1]) / width;
        return r < 1 ? height * std::exp(1 - 1 / (1 - r * r)) : 0.0;
      });
    }
    if (kind == "indicator") {
      const double height = nonneg(desc, "height", 1.0);
      std::vector<double> box;
      if (desc.contains("box")) box = desc.at("box").get<std::vector<double>>();
      else box = desc.at("interval").get<std::vector<double>>();
      if (box.size() == 2) box.insert(box.end(), {-INFINITY, INFINITY});
      if (box.size() != 4 || box[0] > box[1] || box[2] > box[3]) throw ConfigError("initial: bad indicator box");
      return d.sample([&](double x, double y) {
        const bool in = x >= box[0] && x <= box[1] && (d.dimension() == 1 || (y >= box[2] && y <= box[3]));
        return in ? height : 0.0;
      });
    }
    if (kind == "random") {
      if (!desc.contains("seed")) throw ConfigError("initial: random data needs a seed");
      const double amp = desc.value("amplitude", 1.0);
      if (!(amp >= 0) || !std::isfinite(amp)) throw ConfigError("initial: negative amplitude");
      std::mt19937_64 rng(desc.at("seed").get<std::uint64_t>());
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Vec v(d.size());
      for (int i = 0; i < v.size(); ++i) v[i] = amp * unif(rng);
      return v;
    }
    if (kind == "scaled") {
      const double f = desc.value("factor", 1.0);
      if (!(f >= 0) || !std::isfinite(f)) throw ConfigError("initial: negative amplitude");
      return make_initial(d, desc.at("base")) * f;
    }
    throw ConfigError("initial: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
}

std::vector<double> make_times(const json& spec) {
  try {
    if (spec.contains("times")) return spec.at("times").get<std::vector<double>>();
    const double a = spec.value("t_min", 0.01), b = spec.value("t_max", 1.0);
    const int n = spec.value("samples", 30);
    if (!(a > 0) || !(b > a) || n < 2) throw ConfigError("time: need 0 < t_min < t_max and samples >= 2");
    std::vector<double> t;
    if (spec.value("include_zero", true)) t.push_back(0.0);
    for (int k = 0; k < n; ++k) t.push_back(k == n - 1 ? b : a * std::pow(b / a, double(k) / (n - 1)));
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("time: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    c.domain = j.at("domain");
    c.op = j.at("operator");
    c.nonlinearity = j.at("nonlinearity");
    c.initial = j.value("initial", json{{"kind", "bump"}});
    c.time = j.value("time", json::object());
    c.stepper = StepperConfig::from_json(j.value("stepper", json::object()));
    if (j.contains("checks")) {
      const auto& ch = j.at("checks");
      if (ch.is_string() && ch.get<std::string>() == "all") c.checks = kAllChecks;
      else c.checks = ch.get<std::vector<std::string>>();
    }
    c.pair_factor = j.value("pair_factor", c.pair_factor);
    if (j.contains("test_functions")) {
      c.random_tests = j.at("test_functions").value("random", c.random_tests);
      c.test_seed = j.at("test_functions").value("seed", c.test_seed);
    }
    if (j.contains("slack")) {
      c.slack.abs_tol = j.at("slack").value("abs_tol", c.slack.abs_tol);
      c.slack.rate = j.at("slack").value("rate", c.slack.rate);
    }
    if (j.contains("residual_slack")) {
      c.residual_slack.abs_tol = j.at("residual_slack").value("abs_tol", c.residual_slack.abs_tol);
      c.residual_slack.rate = j.at("residual_slack").value("rate", c.residual_slack.rate);
    }
    c.output = j.value("output", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& ch : c.checks)
    if (!has_check(kAllChecks, ch)) throw ConfigError("config: unknown check '" + ch + "'");
  if (!(c.pair_factor >= 0 && c.pair_factor <= 1)) throw ConfigError("config: pair_factor must lie in [0, 1]");
  if (c.random_tests < 0) throw ConfigError("config: negative test function count");

  // Cheap validation of every sub-config before any compute.
  const auto d = Domain::from_json(c.domain);
  const auto nl = Nonlinearity::from_json(c.nonlinearity);
  const auto family = c.op.value("family", std::string());
  if (family == "spectral_power" || family == "restricted_fractional") {
    const double s = c.op.value("s", std::nan(""));
    if (!(s > 0) || s > 1 || (family == "restricted_fractional" && !(s < 1)))
      throw ConfigError("operator: s out of range");
  } else if (family != "laplacian" && family != "spectral_function") {
    throw ConfigError("operator: unknown family '" + family + "'");
  }
  make_initial(d, c.initial);
  make_times(c.time);
  const bool estimates = std::any_of(c.checks.begin(), c.checks.end(), [](auto& s) { return s != "kernels"; });
  if (nl.is_linear() && estimates) throw ConfigError("config: estimate checks need a nonlinear F");
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& p) {
  return from_json(read_json(p));
}

json ExperimentConfig::to_json() const {
  return {{"name", name},
          {"domain", domain},
          {"operator", op},
          {"nonlinearity", nonlinearity},
          {"initial", initial},
          {"time", time},
          {"stepper", stepper.to_json()},
          {"checks", checks},
          {"pair_factor", pair_factor},
          {"test_functions", {{"random", random_tests}, {"seed", test_seed}}},
          {"slack", {{"abs_tol", slack.abs_tol}, {"rate", slack.rate}}},
          {"residual_slack", {{"abs_tol", residual_slack.abs_tol}, {"rate", residual_slack.rate}}},
          {"output", output}};
}

std::string ExperimentConfig::key() const {
  auto j = to_json();
  j.erase("output");
  return j.dump();
}

std::shared_ptr<const DiscreteOperator> OperatorCache::get(const json& domain, const json& op) {
  const std::string key = json{{"domain", domain}, {"operator", op}}.dump();
  std::promise<std::shared_ptr<const DiscreteOperator>> promise;
  std::shared_future<std::shared_ptr<const DiscreteOperator>> fut;
  bool builder = false;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      fut = it->second;
    } else {
      fut = promise.get_future().share();
      entries_.emplace(key, fut);
      builder = true;
    }
  }
  if (builder) {
    try {
      promise.set_value(std::make_shared<const DiscreteOperator>(build_operator(Domain::from_json(domain), op)));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return fut.get();
}

std::size_t OperatorCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

bool ExperimentResult::pass() const {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

json ExperimentResult::manifest_entry() const {
  json checks = json::array();
  for (const auto& r : reports) checks.push_back(r.to_json());
  return {{"config", config.to_json()},
          {"constants", constants ? constants->to_json() : json(nullptr)},
          {"checks", checks},
          {"series", series},
          {"pass", pass()}};
}

namespace {

ExperimentResult run_experiment_impl(const ExperimentConfig& cfg, OperatorCache* cache) {
  const auto d = Domain::from_json(cfg.domain);
  std::shared_ptr<const DiscreteOperator> opp;
  if (cache) opp = cache->get(cfg.domain, cfg.op);
  else opp = std::make_shared<const DiscreteOperator>(build_operator(d, cfg.op));
  const DiscreteOperator& op = *opp;
  const auto nl = Nonlinearity::from_json(cfg.nonlinearity);
  const Vec u0 = make_initial(d, cfg.initial);
  const auto times = make_times(cfg.time);
  StepperConfig sc = cfg.stepper;
  if (has_check(cfg.checks, "weak_dual_residual")) sc.keep_all_steps = true;

  ExperimentResult res;
  res.config = cfg;
  res.trajectory = evolve(op, nl, u0, times, sc);
  res.series = make_series(d, op, res.trajectory);
  const bool estimates =
      std::any_of(cfg.checks.begin(), cfg.checks.end(), [](auto& s) { return s != "kernels"; });
  if (!estimates) {
    if (has_check(cfg.checks, "kernels")) {
      res.reports.push_back(kernel_check(op, KernelHypothesis::K1));
      res.reports.push_back(kernel_check(op, KernelHypothesis::K2));
    }
    return res;
  }
  const auto c = compute_constants(op, nl, &res.trajectory);
  res.constants = c;
  const auto w = BoundaryWeight::make(d, op.gamma());
  const auto& tr = res.trajectory;
  for (const auto& name : kAllChecks) {
    if (!has_check(cfg.checks, name)) continue;
    if (name == "monotonicity") res.reports.push_back(check_monotonicity(tr, nl, cfg.slack));
    else if (name == "pointwise_green") res.reports.push_back(check_pointwise_green(tr, op, nl, cfg.slack));
    else if (name == "absolute_bounds") res.reports.push_back(check_absolute_bounds(tr, nl, c, cfg.slack));
    else if (name == "smoothing_instantaneous")
      res.reports.push_back(check_smoothing(tr, d, nl, w, c, SmoothingMode::instantaneous, cfg.slack));
    else if (name == "smoothing_small")
      res.reports.push_back(check_smoothing(tr, d, nl, w, c, SmoothingMode::small, cfg.slack));
    else if (name == "smoothing_large")
      res.reports.push_back(check_smoothing(tr, d, nl, w, c, SmoothingMode::large, cfg.slack));
    else if (name == "smoothing_backward")
      res.reports.push_back(check_smoothing(tr, d, nl, w, c, SmoothingMode::backward, cfg.slack));
    else if (name == "weighted_l1") {
      StepperConfig vc = cfg.stepper;
      vc.keep_all_steps = false;
      const auto tv = evolve(op, nl, Vec(u0 * cfg.pair_factor), times, vc);
      res.reports.push_back(check_weighted_l1(tr, tv, op, w, c, 1e-10, cfg.test_seed));
    } else if (name == "weak_dual_residual")
      res.reports.push_back(
          check_weak_dual_residual(tr, op, nl, default_test_functions(op, cfg.random_tests, cfg.test_seed),
                                   cfg.residual_slack));
    else if (name == "f_integrability") res.reports.push_back(check_f_integrability(tr, d, nl, w, c, cfg.slack));
    else if (name == "kernels") {
      res.reports.push_back(kernel_check(op, KernelHypothesis::K1));
      res.reports.push_back(kernel_check(op, KernelHypothesis::K2));
    }
  }
  return res;
}

ExperimentResult run_with_context(const ExperimentConfig& cfg, OperatorCache* cache) {
  try {
    return run_experiment_impl(cfg, cache);
  } catch (const ConfigError& e) {
    rethrow_with(cfg.name, e);
  } catch (const DomainError& e) {
    rethrow_with(cfg.name, e);
  } catch (const StepError& e) {
    throw StepError(cfg.name + ": " + e.what(), e.step_index, e.last_residual);
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, OperatorCache* cache) {
  auto res = run_with_context(cfg, cache);
  persist(res);
  return res;
}

ExperimentResult run_experiment_converged(const ExperimentConfig& cfg, int levels, OperatorCache* cache) {
  if (levels < 0) throw ConfigError("dt halving: levels must be >= 0");
  auto base = run_with_context(cfg, cache);
  std::vector<ExperimentResult> fine;
  for (int j = 1; j <= levels; ++j) {
    auto c = cfg;
    c.output.clear();
    c.stepper.dt = cfg.stepper.dt / std::ldexp(1.0, j);
    fine.push_back(run_with_context(c, cache));
  }
  for (auto& rep : base.reports) {
    json ladder = json::array({{{"dt", cfg.stepper.dt}, {"pass", rep.pass}, {"worst_margin", rep.to_json()["worst_margin"]}}});
    bool all = rep.pass;
    double prev_res = rep.details.value("max_abs_residual", 0.0);
    json ratios = json::array();
    for (const auto& f : fine) {
      for (const auto& fr : f.reports) {
        if (fr.check != rep.check) continue;
        all = all && fr.pass;
        ladder.push_back({{"dt", f.trajectory.dt}, {"pass", fr.pass}, {"worst_margin", fr.to_json()["worst_margin"]}});
        if (fr.details.contains("max_abs_residual")) {
          const double r = fr.details["max_abs_residual"].get<double>();
          ratios.push_back(r > 0 ? json(prev_res / r) : json(nullptr));
          prev_res = r;
        }
      }
    }
    if (levels > 0) {
      rep.converged = all;
      rep.details["dt_ladder"] = ladder;
      if (!ratios.empty()) rep.details["halving_ratios"] = ratios;
    }
  }
  persist(base);
  return base;
}

void write_trajectory_csv(const fs::path& p, const Domain& d, const Trajectory& tr) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  const bool two = d.dimension() == 2;
  os << (two ? "t,i,x,y,u\n" : "t,i,x,u\n");
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const std::string t = fmt(tr.times[k]);
    for (int i = 0; i < d.size(); ++i) {
      const auto x = d.node(i);
      os << t << ',' << i << ',' << fmt(x[0]) << ',';
      if (two) os << fmt(x[1]) << ',';
      os << fmt(tr.states[k][i]) << '\n';
    }
  }
}

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("cannot read " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

json certify_kernels(const ExperimentConfig& cfg, OperatorCache* cache) {
  const auto d = Domain::from_json(cfg.domain);
  std::shared_ptr<const DiscreteOperator> opp;
  if (cache) opp = cache->get(cfg.domain, cfg.op);
  else opp = std::make_shared<const DiscreteOperator>(build_operator(d, cfg.op));
  const auto& op = *opp;
  const auto k1 = check_kernel_bounds(op, KernelHypothesis::K1);
  const auto k2 = check_kernel_bounds(op, KernelHypothesis::K2);
  // Thinned scatter of K r^{N-2s} against r for plotting.
  json scatter = json::array();
  const int n = d.size();
  const double e = d.dimension() - 2 * op.s();
  const int stride = std::max(1, n / 48);
  for (int i = 0; i < n; i += stride)
    for (int j = i + 1; j < n; j += stride) {
      const double r = d.distance(i, j);
      scatter.push_back({r, op.green()(i, j) * std::pow(r, std::max(e, 0.0))});
    }
  return {{"config", cfg.to_json()},
          {"kernels", {{"K1", k1.to_json()}, {"K2", k2.to_json()}, {"scatter", scatter}, {"exponent", e}}},
          {"pass", k1.pass && k2.pass}};
}

SweepSpec SweepSpec::from_json(const json& j) {
  SweepSpec s;
  try {
    s.base = j.at("base");
    s.parallelism = j.value("parallelism", 0);
    s.output = j.value("output", std::string());
    const auto& axes = j.at("axes");
    if (axes.is_object()) {
      for (auto it = axes.begin(); it != axes.end(); ++it)
        s.axes.push_back({it.key(), it.value().get<std::vector<json>>()});
    } else {
      for (const auto& a : axes) s.axes.push_back({a.at("path").get<std::string>(), a.at("values").get<std::vector<json>>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep: ") + e.what());
  }
  std::size_t total = 1;
  for (const auto& a : s.axes) {
    if (a.values.empty()) throw ConfigError("sweep: axis '" + a.path + "' has no values");
    total *= a.values.size();
    if (total > kMaxRuns) throw ConfigError("sweep: more than 256 runs");
  }
  if (s.parallelism < 0) throw ConfigError("sweep: negative parallelism");
  return s;
}

std::vector<json> SweepSpec::expand_raw() const {
  std::vector<json> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    json c = base;
    std::string suffix;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      try {
        c[json::json_pointer(axes[a].path)] = axes[a].values[idx[a]];
      } catch (const json::exception& e) {
        throw ConfigError("sweep: bad axis path '" + axes[a].path + "': " + e.what());
      }
      suffix += (suffix.empty() ? "" : ",") + axes[a].path + "=" + axes[a].values[idx[a]].dump();
    }
    if (!suffix.empty()) c["name"] = base.value("name", std::string("run")) + "[" + suffix + "]";
    c.erase("output");
    out.push_back(std::move(c));
    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  std::sort(out.begin(), out.end(), [](const json& x, const json& y) { return x.dump() < y.dump(); });
  if (!output.empty()) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "run_%03zu", k);
      out[k]["output"] = (fs::path(output) / buf).string();
    }
  }
  return out;
}

std::vector<ExperimentConfig> SweepSpec::expand() const {
  std::vector<ExperimentConfig> out;
  for (const auto& j : expand_raw()) out.push_back(ExperimentConfig::from_json(j));
  return out;
}

std::optional<double> fit_decay_slope(const json& series, double t_lo, double t_hi) {
  const auto& t = series.at("t");
  const auto& u = series.at("sup");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double tk = t[k].get<double>(), uk = u[k].get<double>();
    if (tk > 0 && uk > 0 && tk >= t_lo * (1 - 1e-12) && tk <= t_hi * (1 + 1e-12)) {
      xs.push_back(std::log(tk));
      ys.push_back(std::log(uk));
    }
  }
  if (xs.size() < 3) return std::nullopt;
  const double n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k] / n, my += ys[k] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  if (sxx == 0) return std::nullopt;
  return sxy / sxx;
}

namespace {

json sweep_summary(const json& runs) {
  json counts = json::object();
  json per_run = json::array();
  std::size_t failed = 0;
  double sup_lo = INFINITY, sup_hi = 0;
  for (const auto& r : runs) {
    if (r.contains("error")) {
      ++failed;
      per_run.push_back({{"name", r["config"].value("name", "")}, {"error", r["error"]}});
      continue;
    }
    for (const auto& c : r["checks"]) {
      auto& slot = counts[c["check"].get<std::string>()];
      if (slot.is_null()) slot = {{"pass", 0}, {"fail", 0}};
      slot[c["pass"].get<bool>() ? "pass" : "fail"] = slot[c["pass"].get<bool>() ? "pass" : "fail"].get<int>() + 1;
    }
    json row = {{"name", r["config"].value("name", "")}, {"pass", r["pass"]}};
    const auto& s = r["series"];
    // Sample closest to t = 1.
    double best = INFINITY;
    for (std::size_t k = 0; k < s["t"].size(); ++k) {
      const double dist = std::abs(std::log(std::max(s["t"][k].get<double>(), 1e-300)));
      if (dist < best) {
        best = dist;
        row["t_ref"] = s["t"][k];
        row["sup_at_t_ref"] = s["sup"][k];
      }
    }
    if (row.contains("sup_at_t_ref")) {
      sup_lo = std::min(sup_lo, row["sup_at_t_ref"].get<double>());
      sup_hi = std::max(sup_hi, row["sup_at_t_ref"].get<double>());
    }
    if (!r["constants"].is_null()) {
      const auto& c = r["constants"];
      const double K0 = c["K0"].get<double>(), m1 = c["m1"].get<double>();
      const auto slope = fit_decay_slope(s, K0, 10 * K0);
      row["decay_window"] = {K0, 10 * K0};
      row["decay_slope"] = slope ? json(*slope) : json(nullptr);
      row["decay_prediction"] = -1.0 / (m1 - 1);
      if (slope) row["decay_relative_error"] = std::abs(*slope * (m1 - 1) + 1.0);
      for (const auto& ch : r["checks"]) {
        const auto name = ch["check"].get<std::string>();
        if (name == "smoothing_small" || name == "smoothing_large") {
          const int i = name == "smoothing_small" ? 0 : 1;
          row["smoothing_ratio_" + std::to_string(i)] = ch["details"]["max_ratio"][i];
          row["smoothing_bound_K7"] = c["K7"];
          row["theta_" + std::to_string(i)] = c["theta"][i];
        }
      }
    }
    per_run.push_back(row);
  }
  json out = {{"runs", runs.size()}, {"failed_runs", failed}, {"check_counts", counts}, {"per_run", per_run}};
  if (sup_hi > 0) out["sup_spread_at_t_ref"] = sup_hi / sup_lo - 1.0;
  return out;
}

}  // namespace

json run_sweep(const SweepSpec& spec) {
  const auto configs = spec.expand_raw();
  std::vector<json> entries(configs.size());
  OperatorCache cache;
  std::atomic<std::size_t> next{0};
  unsigned threads = spec.parallelism > 0 ? unsigned(spec.parallelism) : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(1, configs.size()));
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < configs.size();) {
      try {
        entries[k] = run_experiment(ExperimentConfig::from_json(configs[k]), &cache).manifest_entry();
      } catch (const std::exception& e) {
        entries[k] = {{"config", configs[k]}, {"error", e.what()}, {"pass", false}};
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  json runs = json::array();
  for (auto& e : entries) runs.push_back(std::move(e));
  json manifest = {{"runs", runs}, {"summary", sweep_summary(runs)}, {"operators_built", cache.size()}};
  if (!spec.output.empty()) write_json(fs::path(spec.output) / "manifest.json", manifest);
  return manifest;
}

}  // namespace nfde
