#include "scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "jetqd/analytic.hpp"
#include "jetqd/dynamics.hpp"
#include "jetqd/ensemble.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/grid.hpp"
#include "jetqd/jetstate.hpp"
#include "jetqd/measurement.hpp"
#include "jetqd/onestep.hpp"
#include "jetqd/spin.hpp"
#include "jetqd/verify.hpp"

#ifndef JETQD_VERSION
#define JETQD_VERSION "unknown"
#endif

namespace jetqd::cli {

namespace fs = std::filesystem;

Reader::Reader(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

bool Reader::has(const std::string& key) const { return table_ && table_->contains(key); }

const toml::node* Reader::get(const std::string& key) {
  used_.insert(key);
  return table_ ? table_->get(key) : nullptr;
}

double Reader::number(const std::string& key, double fallback) {
  const auto* n = get(key);
  if (!n) return fallback;
  if (!n->is_number()) throw ConfigError(where(key) + ": expected a number");
  return *n->value<double>();
}

double Reader::number(const std::string& key) {
  if (!has(key)) throw ConfigError(where(key) + ": required");
  return number(key, 0.0);
}

long Reader::integer(const std::string& key, long fallback) {
  const auto* n = get(key);
  if (!n) return fallback;
  if (!n->is_integer()) throw ConfigError(where(key) + ": expected an integer");
  return static_cast<long>(*n->value<std::int64_t>());
}

bool Reader::flag(const std::string& key, bool fallback) {
  const auto* n = get(key);
  if (!n) return fallback;
  if (!n->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
  return *n->value<bool>();
}

std::string Reader::text(const std::string& key, const std::string& fallback) {
  const auto* n = get(key);
  if (!n) return fallback;
  if (!n->is_string()) throw ConfigError(where(key) + ": expected a string");
  return *n->value<std::string>();
}

std::string Reader::text(const std::string& key) {
  if (!has(key)) throw ConfigError(where(key) + ": required");
  return text(key, "");
}

std::vector<double> Reader::numbers(const std::string& key, std::vector<double> fallback) {
  const auto* n = get(key);
  if (!n) return fallback;
  const auto* arr = n->as_array();
  if (!arr) throw ConfigError(where(key) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& el : *arr) {
    if (!el.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
    out.push_back(*el.value<double>());
  }
  return out;
}

std::vector<std::vector<double>> Reader::rows(const std::string& key) {
  const auto* n = get(key);
  if (!n) throw ConfigError(where(key) + ": required");
  const auto* arr = n->as_array();
  if (!arr) throw ConfigError(where(key) + ": expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : *arr) {
    const auto* r = row.as_array();
    if (!r) throw ConfigError(where(key) + ": expected an array of arrays");
    out.emplace_back();
    for (const auto& el : *r) {
      if (!el.is_number()) throw ConfigError(where(key) + ": expected numbers");
      out.back().push_back(*el.value<double>());
    }
  }
  return out;
}

std::vector<long> Reader::integers(const std::string& key, std::vector<long> fallback) {
  const auto* n = get(key);
  if (!n) return fallback;
  const auto* arr = n->as_array();
  if (!arr) throw ConfigError(where(key) + ": expected an array of integers");
  std::vector<long> out;
  for (const auto& el : *arr) {
    if (!el.is_integer()) throw ConfigError(where(key) + ": expected an array of integers");
    out.push_back(static_cast<long>(*el.value<std::int64_t>()));
  }
  return out;
}

Reader& Reader::table(const std::string& key) {
  const auto* n = get(key);
  if (n && !n->is_table()) throw ConfigError(where(key) + ": expected a table");
  return children_.emplace_back(n ? n->as_table() : nullptr, where(key));
}

void Reader::finish() const {
  if (table_) {
    for (const auto& [k, v] : *table_) {
      const std::string key(k.str());
      if (!used_.count(key)) throw ConfigError("unknown key '" + where(key) + "'");
    }
  }
  for (const auto& c : children_) c.finish();
}

nlohmann::json Overrides::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  if (seed) j["seed"] = *seed;
  if (truncation) j["truncation"] = *truncation;
  if (dt) j["dt"] = *dt;
  if (t_final) j["t_final"] = *t_final;
  if (closure) j["closure"] = *closure;
  if (threads) j["threads"] = *threads;
  if (no_detectors) j["no_detectors"] = true;
  return j;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> all{
      {"free_gaussian", "trajectory", "free Gaussian packet, jet trajectories from three starting points",
       "integrates the momentum hierarchy dp_sigma/dt = v^j p_{j sigma} - H_sigma with dx/dt = Re p/m; "
       "a Gaussian closes exactly at N = 2 (p_xx = i/(1+it))"},
      {"coherent_state", "trajectory", "harmonic-oscillator coherent state, jet trajectories over two periods",
       "momentum hierarchy with U_sigma of a quadratic potential; trajectories follow the classical centre"},
      {"gaussian_ensemble", "ensemble", "free Gaussian ensemble advected by the analytic velocity field",
       "equivariance of |psi|^2 under dx/dt = (hbar/m) Im(grad psi/psi); KS test at the final time"},
      {"coherent_ensemble_jet", "ensemble", "coherent-state ensemble advected by per-point jet integration",
       "positions from the truncated momentum hierarchy with oracle closure, tested against |psi|^2"},
      {"double_slit", "measurement", "two-slit screen statistics with optional which-path detectors",
       "fringe visibility, screen KS against |psi|^2, branch selection by detector readings"},
      {"position_measurement", "measurement", "impulsive position measurement with a narrow pointer",
       "joint wave psi(x) phi(y - g0 tau x); pointer readings y/(g0 tau) reproduce |psi|^2"},
      {"discrete_measurement", "measurement", "two-outcome measurement with Born weights 0.36 and 0.64",
       "pointer packets separated by g0 tau; outcome frequencies against |c_i|^2 with chi-square"},
      {"onestep_gaussian", "onestep", "one-step path integral for a Gaussian jet",
       "p'_sigma from the short-time kernel against the first-order update, residual ratio near 4"},
      {"larmor", "spin", "spinor precession in a uniform field",
       "d(u,v)/dt = (i gamma/2 hbar) B.sigma (u,v), Larmor frequency -gamma B/hbar, homogeneity of degree 2s"},
      {"verify_quick", "verify-suite", "acceptance criteria without the double-slit runs",
       "criteria 1-6, 8-10, 12, 13"},
      {"verify_all", "verify-suite", "all thirteen acceptance criteria", "consolidated pass/fail report"},
  };
  return all;
}

const CatalogEntry* find_scenario(const std::string& name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

struct Context {
  std::string name;
  std::uint64_t seed = 1;
  const Overrides* overrides = nullptr;
  fs::path dir;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<std::string> outputs;
  int exit_code = 0;

  std::ofstream open(const std::string& file) {
    outputs.push_back(file);
    std::ofstream os(dir / file);
    if (!os) throw ConfigError("cannot write " + (dir / file).string());
    os << std::setprecision(17);
    return os;
  }
};

Physics read_physics(Reader& r, int dim) {
  Physics ph;
  ph.hbar = r.number("hbar", 1.0);
  ph.mass = r.numbers("mass", std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  if (static_cast<int>(ph.mass.size()) != dim) throw ConfigError("physics.mass: one entry per axis");
  for (double m : ph.mass) {
    if (!(m > 0.0)) throw ConfigError("physics.mass: must be positive");
  }
  if (!(ph.hbar > 0.0)) throw ConfigError("physics.hbar: must be positive");
  return ph;
}

// [state] type = "free_gaussian" (a, k0, x0) or "coherent" (omega, alpha_re, alpha_im)
AnalyticState read_state(Reader& root) {
  Reader& s = root.table("state");
  const std::string type = s.text("type", "free_gaussian");
  auto same = [](const std::vector<double>& a, std::size_t n, const char* key) {
    if (a.size() != n) throw ConfigError(std::string("state.") + key + ": one entry per axis");
  };
  if (type == "free_gaussian") {
    const auto a = s.numbers("a", {1.0});
    const auto k0 = s.numbers("k0", std::vector<double>(a.size(), 0.0));
    const auto x0 = s.numbers("x0", std::vector<double>(a.size(), 0.0));
    same(k0, a.size(), "k0");
    same(x0, a.size(), "x0");
    const Physics ph = read_physics(root.table("physics"), static_cast<int>(a.size()));
    return AnalyticState::free_gaussian(ph, a, k0, x0);
  }
  if (type == "coherent") {
    const auto omega = s.numbers("omega", {1.0});
    const auto re = s.numbers("alpha_re", std::vector<double>(omega.size(), 1.0));
    const auto im = s.numbers("alpha_im", std::vector<double>(omega.size(), 0.0));
    same(re, omega.size(), "alpha_re");
    same(im, omega.size(), "alpha_im");
    std::vector<cplx> alpha;
    for (std::size_t i = 0; i < re.size(); ++i) alpha.emplace_back(re[i], im[i]);
    const Physics ph = read_physics(root.table("physics"), static_cast<int>(omega.size()));
    return AnalyticState::coherent(ph, omega, alpha);
  }
  throw ConfigError("state.type: unknown '" + type + "' (free_gaussian, coherent)");
}

Method read_method(Reader& r) {
  const std::string m = r.text("method", "rk45");
  if (m == "rk45") return Method::Rk45;
  if (m == "rk4") return Method::Rk4;
  throw ConfigError("method: unknown '" + m + "' (rk4, rk45)");
}

struct DynamicsConfig {
  int truncation = 4;
  std::string closure = "zero";
  IntegrateSettings integrate;
};

DynamicsConfig read_dynamics(Reader& d, const Overrides& o) {
  DynamicsConfig c;
  c.truncation = static_cast<int>(d.integer("truncation", 4));
  c.closure = d.text("closure", "zero");
  c.integrate.method = read_method(d);
  c.integrate.dt = d.number("dt", 1e-3);
  c.integrate.tol = d.number("tol", 1e-9);
  c.integrate.t_final = d.number("t_final", 1.0);
  c.integrate.record_dt = d.number("record_dt", 0.0);
  c.integrate.r_bound = d.number("r_bound", 30.0);
  if (o.truncation) c.truncation = *o.truncation;
  if (o.closure) c.closure = *o.closure;
  if (o.dt) c.integrate.dt = *o.dt;
  if (o.t_final) c.integrate.t_final = *o.t_final;
  if (c.truncation < 1 || c.truncation > 12) throw ConfigError("truncation must lie in [1, 12]");
  if (c.closure != "zero" && c.closure != "oracle") throw ConfigError("closure must be zero or oracle");
  if (!(c.integrate.dt > 0.0) || !(c.integrate.t_final > 0.0)) throw ConfigError("dt and t_final must be positive");
  return c;
}

Model make_model(const AnalyticState& psi, const std::string& closure) {
  return {psi.physics(), psi.potential(),
          closure == "oracle" ? Closure::from_oracle(std::make_shared<AnalyticOracle>(psi)) : Closure::zero()};
}

void run_trajectory(Reader& root, Context& ctx) {
  const AnalyticState psi = read_state(root);
  Reader& d = root.table("dynamics");
  const auto cfg = read_dynamics(d, *ctx.overrides);
  const auto starts = d.rows("starts");
  root.finish();
  for (const auto& q : starts) {
    if (static_cast<int>(q.size()) != psi.dim()) throw ConfigError("dynamics.starts: one coordinate per axis");
  }

  const Model model = make_model(psi, cfg.closure);
  auto os = ctx.open("trajectories.csv");
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const JetState s = from_wavefunction_analytic(psi, starts[i], 0.0, cfg.truncation);
    const auto rec = integrate(s, model, cfg.integrate);
    std::ostringstream body;
    body << std::setprecision(17);
    rec.write_csv(body);
    std::istringstream lines(body.str());
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
      if (header) {
        if (i == 0) os << "trajectory," << line << '\n';
        header = false;
      } else {
        os << i << ',' << line << '\n';
      }
    }
    // Distance of the final jet velocity from the exact Bohmian field.
    const auto exact = psi.velocity(rec.q.back(), rec.t.back());
    double dv = 0.0;
    for (std::size_t j = 0; j < exact.size(); ++j) dv = std::max(dv, std::abs(rec.v.back()[j] - exact[j]));
    rows.push_back({{"start", starts[i]},
                    {"final_q", rec.q.back()},
                    {"steps", rec.diagnostics.steps},
                    {"rejected", rec.diagnostics.rejected},
                    {"max_abs_R", rec.diagnostics.max_abs_R},
                    {"final_velocity_error", dv}});
  }
  ctx.diagnostics = {{"truncation", cfg.truncation}, {"closure", cfg.closure}, {"trajectories", rows}};
}

void run_ensemble(Reader& root, Context& ctx) {
  const AnalyticState psi = read_state(root);
  Reader& e = root.table("ensemble");
  const auto count = e.integer("count", 10000);
  const std::string field = e.text("velocity", "analytic");
  const double threshold = e.number("ks_threshold", 0.02);
  const int grid_points = static_cast<int>(e.integer("grid_points", 1024));
  AdvectSettings adv;
  adv.method = read_method(e);
  adv.dt = e.number("dt", 1e-2);
  adv.tol = e.number("tol", 1e-8);
  double t_final = e.number("t_final", 1.0);
  Reader& d = root.table("dynamics");
  DynamicsConfig jet;
  if (field == "jet") jet = read_dynamics(d, *ctx.overrides);
  root.finish();
  const auto& o = *ctx.overrides;
  if (o.t_final) t_final = *o.t_final;
  if (o.dt && field != "jet") adv.dt = *o.dt;
  if (count < 1) throw ConfigError("ensemble.count must be positive");
  if (field != "analytic" && field != "grid" && field != "jet") {
    throw ConfigError("ensemble.velocity must be analytic, grid or jet");
  }

  const Ensemble start = sample_density(psi, 0.0, static_cast<std::size_t>(count), ctx.seed);
  Ensemble end;
  if (field == "analytic") {
    end = advect(start, AnalyticVelocity(psi), t_final, adv);
  } else if (field == "grid") {
    const auto spec = GridSpec::covering(psi, 0.0, t_final, grid_points);
    const GridWave w = GridWave::from_analytic(psi, spec, 0.0);
    end = advect(start, GridVelocity(w, psi.potential(), psi.physics(), 1e-3, t_final), t_final, adv);
  } else {
    jet.integrate.t_final = t_final;
    end = advect_dynamics(start, make_model(psi, jet.closure), jet.truncation, t_final, jet.integrate);
  }
  const auto report = equivariance_test(end, TabulatedDensity::from_analytic(psi, t_final), threshold);
  auto a = ctx.open("initial.csv");
  start.write_csv(a);
  auto b = ctx.open("final.csv");
  end.write_csv(b);
  ctx.diagnostics = {{"velocity", field},
                     {"count", count},
                     {"t_final", t_final},
                     {"excluded", end.excluded_count()},
                     {"excluded_fraction", end.excluded_fraction()},
                     {"equivariance", report.to_json()}};
  if (psi.dim() == 1) ctx.diagnostics["order_preserved"] = order_preserved(start, end);
}

GridSpec read_axis(Reader& r, int points, double lower, double upper) {
  const auto n = r.integer("points", points);
  const double lo = r.number("lower", lower);
  const double hi = r.number("upper", upper);
  if (n < 16 || !(hi > lo)) throw ConfigError("grid axis needs points >= 16 and upper > lower");
  return GridSpec{{static_cast<int>(n)}, {lo}, {hi - lo}};
}

PointerSetup read_pointer(Reader& r) {
  PointerSetup p;
  p.delta_y = r.number("delta_y", p.delta_y);
  p.g0 = r.number("g0", p.g0);
  p.tau = r.number("tau", p.tau);
  return p;
}

void run_double_slit(Reader& m, Reader& root, Context& ctx) {
  DoubleSlitSetup s;
  s.separation = m.number("separation", s.separation);
  s.width = m.number("width", s.width);
  s.k0 = m.number("k0", s.k0);
  s.t_screen = m.number("t_screen", s.t_screen);
  s.detectors = m.flag("detectors", s.detectors);
  s.fired = m.number("fired", s.fired);
  s.count = static_cast<std::size_t>(m.integer("count", static_cast<long>(s.count)));
  s.bin_width = m.number("bin_width", s.bin_width);
  const auto open = m.numbers("open", {1.0, 1.0});
  if (open.size() != 2) throw ConfigError("measurement.open: two slit amplitudes");
  s.amplitudes = {cplx{open[0], 0.0}, cplx{open[1], 0.0}};
  s.advect.dt = m.number("dt", s.advect.dt);
  s.physics = read_physics(root.table("physics"), 1);
  root.finish();
  const auto& o = *ctx.overrides;
  if (o.no_detectors) s.detectors = false;
  if (o.t_final) s.t_screen = *o.t_final;
  if (o.dt) s.advect.dt = *o.dt;
  s.seed = ctx.seed;
  s.validate();

  const auto res = double_slit(s);
  auto os = ctx.open("screen_histogram.csv");
  res.write_histogram_csv(os);
  ctx.diagnostics = res.to_json();
  ctx.diagnostics["detectors"] = s.detectors;
}

void run_position(Reader& m, Reader& root, Context& ctx) {
  const PointerSetup pointer = read_pointer(m);
  const double centre = m.number("centre", 0.0);
  const double sd = m.number("sd", 1.0);
  const auto count = m.integer("count", 10000);
  const int resolved = static_cast<int>(m.integer("time_resolved_steps", 0));
  const GridSpec xs = read_axis(m.table("x_grid"), 256, -6.0, 6.0);
  const GridSpec ys = read_axis(m.table("y_grid"), 1040, -13.0, 13.0);
  root.finish();
  pointer.validate();

  const auto packet = Profile::normal(centre, sd);
  const auto psi = GridWave::sample(xs, [&](std::span<const double> x) { return packet.value(x[0]); });
  const GridWave joint = impulsive_measure(psi, pointer, ys);
  const auto readings =
      pointer_readings(TabulatedDensity::from_grid(joint, 1), pointer, static_cast<std::size_t>(count), ctx.seed);
  const double lo = xs.lower[0], hi = xs.lower[0] + xs.extent[0];
  const auto rho = TabulatedDensity::tabulate(lo, hi, 8193, [&](double x) { return std::norm(packet.value(x)); });
  const double ks = ks_statistic(readings, [&](double x) { return rho.cdf(x); });
  auto os = ctx.open("readings.csv");
  os << "run,reading\n";
  for (std::size_t i = 0; i < readings.size(); ++i) os << i << ',' << readings[i] << '\n';
  ctx.diagnostics = {{"count", count}, {"ks", ks}, {"ks_p_value", ks_p_value(ks, readings.size())}};
  if (resolved > 0) {
    const GridWave stepped = measure_time_resolved(psi, pointer, ys, resolved);
    double diff = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) diff = std::max(diff, std::abs(stepped.data()[i] - joint.data()[i]));
    ctx.diagnostics["time_resolved_max_difference"] = diff;
  }
}

void run_discrete(Reader& m, Reader& root, Context& ctx) {
  const PointerSetup pointer = read_pointer(m);
  const auto eigenvalues = m.numbers("eigenvalues", {0.0, 1.0});
  const auto amplitudes = m.numbers("amplitudes", {0.6, 0.8});
  const auto count = m.integer("count", 10000);
  const GridSpec xs = read_axis(m.table("x_grid"), 256, -8.0, 8.0);
  const GridSpec ys = read_axis(m.table("y_grid"), 800, -3.0, 13.0);
  root.finish();
  if (amplitudes.size() != eigenvalues.size()) throw ConfigError("measurement.amplitudes: one per eigenvalue");
  pointer.validate();

  const auto obs = DiscreteObservable::hermite(xs, eigenvalues);
  std::vector<Profile> levels;
  for (std::size_t n = 0; n < eigenvalues.size(); ++n) levels.push_back(Profile::hermite(static_cast<int>(n), 0.0));
  const auto psi = GridWave::sample(xs, [&](std::span<const double> x) {
    cplx v = 0.0;
    for (std::size_t n = 0; n < levels.size(); ++n) v += amplitudes[n] * levels[n].value(x[0]);
    return v;
  });
  const auto stats = outcome_statistics(psi, obs, pointer, ys, static_cast<std::size_t>(count), ctx.seed);
  auto os = ctx.open("outcomes.csv");
  os << "eigenvalue,born,count,frequency\n";
  for (std::size_t i = 0; i < stats.counts.size(); ++i) {
    os << stats.eigenvalues[i] << ',' << stats.born[i] << ',' << stats.counts[i] << ',' << stats.frequencies[i] << '\n';
  }
  ctx.diagnostics = stats.to_json();
}

void run_measurement(Reader& root, Context& ctx) {
  Reader& m = root.table("measurement");
  const std::string experiment = m.text("experiment");
  if (experiment == "double_slit") return run_double_slit(m, root, ctx);
  if (experiment == "position") return run_position(m, root, ctx);
  if (experiment == "discrete") return run_discrete(m, root, ctx);
  throw ConfigError("measurement.experiment: unknown '" + experiment + "' (double_slit, position, discrete)");
}

void run_onestep(Reader& root, Context& ctx) {
  Reader& r = root.table("onestep");
  OneStepProblem prob;
  const double hbar = r.number("hbar", 1.0);
  const double mass = r.number("mass", 1.0);
  prob.physics = Physics{hbar, {mass}};
  const double q = r.number("q", 0.0);
  const auto re = r.numbers("p_re", {0.0, 0.0, 0.0});
  const auto im = r.numbers("p_im", {0.0, 0.0, 1.0});
  const auto u = r.numbers("potential", {});
  prob.v = r.number("v", 0.0);
  prob.eps = r.number("eps", prob.eps);
  prob.nodes = static_cast<int>(r.integer("nodes", prob.nodes));
  root.finish();
  if (re.size() != im.size() || re.empty() || re.size() > 5) {
    throw ConfigError("onestep.p_re and p_im: equal lengths, at most order 4");
  }
  if (u.size() > 5) throw ConfigError("onestep.potential: coefficients of x^0..x^4");
  if (ctx.overrides->dt) prob.eps = *ctx.overrides->dt;

  prob.state = JetState(1, static_cast<int>(re.size()) - 1);
  prob.state.q = {q};
  for (std::size_t k = 0; k < re.size(); ++k) prob.state.at(static_cast<int>(k)) = cplx(re[k], im[k]);
  std::vector<Potential::Monomial> terms;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] != 0.0) terms.push_back({MultiIndex{static_cast<int>(k)}, u[k]});
  }
  prob.potential = terms.empty() ? Potential::free(1) : Potential::polynomial(1, terms);
  prob.validate();

  const auto step = propagate_onestep(prob);
  const auto cmp = compare_to_ode(prob);
  auto os = ctx.open("onestep.csv");
  cmp.write_csv(os);
  ctx.diagnostics = {{"propagated", to_json(step.state)}, {"contour_tail", step.tail}, {"ratio", cmp.ratio}};
}

void run_spin(Reader& root, Context& ctx) {
  Reader& r = root.table("spin");
  PrecessSettings st;
  st.gamma = r.number("gamma", 1.0);
  st.hbar = r.number("hbar", 1.0);
  st.dt = r.number("dt", 1e-3);
  st.record_every = static_cast<int>(r.integer("record_every", 10));
  const auto field = r.numbers("field", {0.0, 0.0, 1.0});
  double t_final = r.number("t_final", 2.0 * std::numbers::pi);
  const auto euler = r.numbers("start", {0.3, 1.1, 0.7});
  const int twice_s = static_cast<int>(r.integer("twice_s", 3));
  root.finish();
  if (field.size() != 3 || euler.size() != 3) throw ConfigError("spin.field and spin.start need three entries");
  if (ctx.overrides->dt) st.dt = *ctx.overrides->dt;
  if (ctx.overrides->t_final) t_final = *ctx.overrides->t_final;
  if (!(st.dt > 0.0) || !(t_final > 0.0) || st.record_every < 1 || twice_s < 1) {
    throw ConfigError("spin: dt, t_final, record_every and twice_s must be positive");
  }

  const Vec3 b{field[0], field[1], field[2]};
  const Spinor sp = Spinor::from_euler(euler[0], euler[1], euler[2]);
  const auto tr = precess(sp, constant_field(b), t_final, st);
  auto os = ctx.open("spin_trajectory.csv");
  tr.write_csv(os);
  const Spinor exact = precess_exact(sp, b, st.gamma, st.hbar, t_final);
  const double dev = std::abs(tr.spinors.back().u - exact.u) + std::abs(tr.spinors.back().v - exact.v);

  const auto psi = SpinState::random(twice_s, ctx.seed);
  const auto samples = random_spinors(100, ctx.seed + 1);
  const double homogeneity = homogeneity_check(SpinFunction::from_state(psi), samples, psi.s(), st.hbar);
  const auto moved = evolve_state(psi, b, st.gamma, st.hbar, t_final);
  const double overlap = std::abs(coherent_overlap(moved, tr.spinors.back()) - coherent_overlap(psi, sp));
  ctx.diagnostics = {{"steps", tr.steps},
                     {"final_deviation_from_exact", dev},
                     {"max_norm_drift_per_step", tr.max_norm_drift_per_step},
                     {"final_spin_vector", tr.spinors.back().spin_vector()},
                     {"homogeneity_residual", homogeneity},
                     {"overlap_change", overlap}};
}

void run_verify(Reader& root, Context& ctx) {
  Reader& r = root.table("verify");
  std::vector<long> ids = r.integers("criteria", {});
  root.finish();
  if (ids.empty()) {
    for (const auto& c : criteria()) ids.push_back(c.id);
  }
  VerifyOptions opt;
  opt.seed = ctx.seed;
  std::vector<CriterionResult> results;
  nlohmann::json report = nlohmann::json::array();
  for (long id : ids) {
    if (id < 1 || id > static_cast<long>(criteria().size())) {
      throw ConfigError("verify.criteria: no criterion " + std::to_string(id));
    }
    results.push_back(run_criterion(static_cast<int>(id), opt));
    print_results(std::cout, {results.back()});
    std::cout.flush();
    report.push_back(results.back().to_json());
  }
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& c) { return c.pass; });
  std::cout << passed << "/" << results.size() << " criteria passed\n";
  auto os = ctx.open("verify_report.json");
  os << report.dump(2) << '\n';
  ctx.diagnostics = {{"passed", passed}, {"total", results.size()}};
  if (passed != static_cast<long>(results.size())) ctx.exit_code = 4;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

RunOutcome run_scenario(const fs::path& file, const Overrides& overrides, const std::optional<fs::path>& output_dir) {
  toml::table config;
  try {
    config = toml::parse_file(file.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << file.string() << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  Reader root(&config, "");
  Context ctx;
  ctx.overrides = &overrides;
  ctx.name = root.text("name");
  const std::string kind = root.text("kind");
  root.text("description", "");
  ctx.seed = static_cast<std::uint64_t>(root.integer("seed", 1));
  const long threads = root.integer("threads", 0);
  if (overrides.seed) ctx.seed = *overrides.seed;
  set_worker_threads(overrides.threads ? *overrides.threads : static_cast<int>(threads));

  ctx.dir = output_dir ? *output_dir : fs::path("out") / ctx.name;
  fs::create_directories(ctx.dir);

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  if (kind == "trajectory") {
    run_trajectory(root, ctx);
  } else if (kind == "ensemble") {
    run_ensemble(root, ctx);
  } else if (kind == "measurement") {
    run_measurement(root, ctx);
  } else if (kind == "onestep") {
    run_onestep(root, ctx);
  } else if (kind == "spin") {
    run_spin(root, ctx);
  } else if (kind == "verify-suite") {
    run_verify(root, ctx);
  } else {
    throw ConfigError("kind: unknown '" + kind + "' (trajectory, ensemble, measurement, onestep, spin, verify-suite)");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream echo;
  echo << toml::json_formatter{config};
  const nlohmann::json manifest = {{"tool", "jetqd"},
                                   {"version", JETQD_VERSION},
                                   {"scenario", ctx.name},
                                   {"kind", kind},
                                   {"source", file.string()},
                                   {"config", nlohmann::json::parse(echo.str())},
                                   {"overrides", overrides.to_json()},
                                   {"seed", ctx.seed},
                                   {"worker_threads", worker_threads()},
                                   {"started_utc", started},
                                   {"timings", {{"run_seconds", seconds}}},
                                   {"outputs", ctx.outputs},
                                   {"diagnostics", ctx.diagnostics},
                                   {"exit_code", ctx.exit_code}};
  std::ofstream os(ctx.dir / "manifest.json");
  os << manifest.dump(2) << '\n';
  return {ctx.exit_code, ctx.dir};
}

}  // namespace jetqd::cli
