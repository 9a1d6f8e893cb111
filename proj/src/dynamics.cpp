#include "jetqd/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "jetqd/errors.hpp"
#include "jetqd/ode.hpp"

namespace jetqd {

DynamicsLayout::DynamicsLayout(int dim, int order)
    : dim_(dim), order_(order), ext_(shared_index_table(dim, order + 2)) {
  state_size_ = ext_->order_begin(order + 1);
  pair_begin_.reserve(static_cast<std::size_t>(state_size_ + 1));
  for (int r = 0; r < state_size_; ++r) {
    pair_begin_.push_back(static_cast<int>(pairs_.size()));
    const MultiIndex& sigma = ext_->at(r);
    for (const auto& s : subindices(sigma)) {
      for (int j = 0; j < dim; ++j) {
        pairs_.push_back({static_cast<double>(s.count), ext_->rank(s.nu.extend(j)), ext_->rank(s.complement.extend(j)), j,
                          !s.nu.empty() && !s.complement.empty()});
      }
    }
    for (int j = 0; j < dim; ++j) {
      sigma_j_.push_back(ext_->rank(sigma.extend(j)));
      sigma_jj_.push_back(ext_->rank(sigma.extend(j).extend(j)));
    }
  }
  pair_begin_.push_back(static_cast<int>(pairs_.size()));
}

std::span<const DynamicsLayout::Pair> DynamicsLayout::pairs(int rank) const {
  const auto b = static_cast<std::size_t>(pair_begin_[static_cast<std::size_t>(rank)]);
  const auto e = static_cast<std::size_t>(pair_begin_[static_cast<std::size_t>(rank + 1)]);
  return {pairs_.data() + b, e - b};
}

std::shared_ptr<const DynamicsLayout> shared_layout(int dim, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const DynamicsLayout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_shared<const DynamicsLayout>(dim, order);
  return slot;
}

namespace {

void fill_closure(const DynamicsLayout& layout, const Closure& closure, double t, std::span<const double> q,
                  std::span<cplx> ext, std::vector<cplx>& scratch) {
  const int s = layout.state_size();
  if (closure.kind == Closure::Kind::Zero) {
    std::fill(ext.begin() + s, ext.end(), cplx{});
    return;
  }
  if (!closure.oracle) throw OracleUnavailable("oracle closure requested without an oracle");
  scratch.resize(static_cast<std::size_t>(layout.ext_size()));
  closure.oracle->momentums(t, q, layout.ext(), layout.order() + 2, scratch);
  std::copy(scratch.begin() + s, scratch.end(), ext.begin() + s);
}

// Buffers for repeated right-hand-side evaluations on one trajectory.
class RhsEngine {
 public:
  RhsEngine(const DynamicsLayout& layout, const Model& model)
      : layout_(layout), model_(model), n_(layout.dim()), ext_(static_cast<std::size_t>(layout.ext_size())),
        u_(static_cast<std::size_t>(layout.state_size())) {
    for (int j = 0; j < n_; ++j) {
      inv_m_.push_back(1.0 / model.physics.m(j));
    }
    if (model.potential.dim() != n_) throw std::invalid_argument("potential dimension does not match the state");
  }

  std::span<cplx> ext() { return ext_; }

  void load(double t, std::span<const double> q, std::span<const cplx> p) {
    std::copy(p.begin(), p.end(), ext_.begin());
    fill_closure(layout_, model_.closure, t, q, ext_, scratch_);
    model_.potential.derivatives(layout_.ext(), layout_.order(), q, u_);
  }

  void evaluate(std::span<double> qdot, std::span<cplx> pdot) const {
    const cplx hbar_over_2i{0.0, -0.5 * model_.physics.hbar};
    for (int j = 0; j < n_; ++j) qdot[static_cast<std::size_t>(j)] = ext_[static_cast<std::size_t>(1 + j)].real() * inv_m_[static_cast<std::size_t>(j)];
    {
      cplx acc = -u_[0];
      for (int j = 0; j < n_; ++j) {
        const cplx pj = ext_[static_cast<std::size_t>(1 + j)];
        acc += inv_m_[static_cast<std::size_t>(j)] *
               (0.5 * pj * std::conj(pj) - hbar_over_2i * ext_[static_cast<std::size_t>(layout_.sigma_jj(0, j))]);
      }
      pdot[0] = acc;
    }
    for (int r = 1; r < layout_.state_size(); ++r) {
      cplx acc = -u_[static_cast<std::size_t>(r)];
      for (int j = 0; j < n_; ++j) {
        const cplx pj = ext_[static_cast<std::size_t>(1 + j)];
        acc += inv_m_[static_cast<std::size_t>(j)] *
               (0.5 * (std::conj(pj) - pj) * ext_[static_cast<std::size_t>(layout_.sigma_j(r, j))] -
                hbar_over_2i * ext_[static_cast<std::size_t>(layout_.sigma_jj(r, j))]);
      }
      for (const auto& pr : layout_.pairs(r)) {
        if (!pr.interior) continue;
        acc -= 0.5 * inv_m_[static_cast<std::size_t>(pr.j)] * pr.count * ext_[static_cast<std::size_t>(pr.a)] *
               ext_[static_cast<std::size_t>(pr.b)];
      }
      pdot[static_cast<std::size_t>(r)] = acc;
    }
  }

  cplx h_sigma(int rank) const {
    const cplx hbar_over_2i{0.0, -0.5 * model_.physics.hbar};
    std::vector<cplx> inv(inv_m_.begin(), inv_m_.end());
    return h_sigma_generic<cplx>(
        layout_, rank, [&](int k) { return ext_[static_cast<std::size_t>(k)]; },
        [&](int k) { return cplx{u_[static_cast<std::size_t>(k)], 0.0}; }, inv, cplx{0.5, 0.0}, hbar_over_2i);
  }

 private:
  const DynamicsLayout& layout_;
  const Model& model_;
  int n_;
  std::vector<double> inv_m_;
  std::vector<cplx> ext_;
  std::vector<double> u_;
  std::vector<cplx> scratch_;
};

std::vector<MultiIndex> default_retained(int dim, int order) {
  std::vector<MultiIndex> out;
  const IndexTable& t = *shared_index_table(dim, order);
  for (int r = 1; r < t.order_begin(std::min(order, 2) + 1); ++r) out.push_back(t.at(r));
  return out;
}

}  // namespace

std::vector<cplx> extended_momentums(const JetState& state, const Model& model) {
  const auto layout = shared_layout(state.dim(), state.order());
  std::vector<cplx> ext(static_cast<std::size_t>(layout->ext_size()));
  std::copy(state.momentums().begin(), state.momentums().end(), ext.begin());
  std::vector<cplx> scratch;
  fill_closure(*layout, model.closure, state.t, state.q, ext, scratch);
  return ext;
}

cplx h_sigma(const JetState& state, const Model& model, const MultiIndex& sigma) {
  if (sigma.order() > state.order()) throw std::invalid_argument("h_sigma: |sigma| exceeds the truncation order");
  const auto layout = shared_layout(state.dim(), state.order());
  RhsEngine engine(*layout, model);
  engine.load(state.t, state.q, state.momentums());
  return engine.h_sigma(layout->ext().rank(sigma));
}

JetRate rhs(const JetState& state, const Model& model) {
  const auto layout = shared_layout(state.dim(), state.order());
  RhsEngine engine(*layout, model);
  engine.load(state.t, state.q, state.momentums());
  JetRate rate;
  rate.qdot.resize(static_cast<std::size_t>(state.dim()));
  rate.pdot.resize(static_cast<std::size_t>(state.size()));
  engine.evaluate(rate.qdot, rate.pdot);
  return rate;
}

void TrajectoryRecord::write_csv(std::ostream& os) const {
  os << "t";
  for (int i = 0; i < dim; ++i) os << ",q_" << i;
  for (int i = 0; i < dim; ++i) os << ",v_" << i;
  os << ",S,R";
  for (const auto& s : retained) os << ",re_p_" << s.name() << ",im_p_" << s.name();
  os << "\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << t[k];
    for (double x : q[k]) os << "," << x;
    for (double x : v[k]) os << "," << x;
    os << "," << S[k] << "," << R[k];
    for (const cplx& z : p[k]) os << "," << z.real() << "," << z.imag();
    os << "\n";
  }
}

TrajectoryRecord integrate(const JetState& initial, const Model& model, const IntegrateSettings& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(cfg.t_final > initial.t)) throw std::invalid_argument("integrate: t_final must exceed the initial time");
  if (initial.order() < 1) throw std::invalid_argument("integrate: truncation order must be at least 1");
  const int n = initial.dim();
  const int N = initial.order();
  const auto layout = shared_layout(n, N);
  const int size = layout->state_size();
  const double hbar = model.physics.hbar;

  TrajectoryRecord rec;
  rec.dim = n;
  rec.order = N;
  rec.closure = model.closure.name();
  rec.method = cfg.method == Method::Rk4 ? "rk4" : "rk45";
  rec.retained = cfg.retain.empty() ? default_retained(n, N) : cfg.retain;
  std::vector<int> retained_rank;
  for (const auto& s : rec.retained) {
    const int r = initial.table().rank(s);
    if (r < 0) throw std::invalid_argument("retained momentum " + s.name() + " exceeds the truncation order");
    retained_rank.push_back(r);
  }

  // y = [q, Re p_0, Im p_0, Re p_1, ...]
  std::vector<double> y(static_cast<std::size_t>(n + 2 * size));
  auto unpack = [&](std::span<const double> yy, std::vector<cplx>& p) {
    p.resize(static_cast<std::size_t>(size));
    for (int r = 0; r < size; ++r) {
      p[static_cast<std::size_t>(r)] = {yy[static_cast<std::size_t>(n + 2 * r)], yy[static_cast<std::size_t>(n + 2 * r + 1)]};
    }
  };
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = initial.q[static_cast<std::size_t>(i)];
  for (int r = 0; r < size; ++r) {
    y[static_cast<std::size_t>(n + 2 * r)] = initial.at(r).real();
    y[static_cast<std::size_t>(n + 2 * r + 1)] = initial.at(r).imag();
  }

  RhsEngine engine(*layout, model);
  std::vector<cplx> pbuf, pdot(static_cast<std::size_t>(size));
  const OdeRhs f = [&](double t, std::span<const double> yy, std::span<double> dy) {
    unpack(yy, pbuf);
    engine.load(t, yy.subspan(0, static_cast<std::size_t>(n)), pbuf);
    engine.evaluate(dy.subspan(0, static_cast<std::size_t>(n)), pdot);
    for (int r = 0; r < size; ++r) {
      dy[static_cast<std::size_t>(n + 2 * r)] = pdot[static_cast<std::size_t>(r)].real();
      dy[static_cast<std::size_t>(n + 2 * r + 1)] = pdot[static_cast<std::size_t>(r)].imag();
    }
  };

  auto record = [&](double t, std::span<const double> yy) {
    std::vector<cplx> p;
    unpack(yy, p);
    rec.t.push_back(t);
    std::vector<double> q(yy.begin(), yy.begin() + n), v(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(1 + j)].real() / model.physics.m(j);
    rec.S.push_back(p[0].real());
    rec.R.push_back(-p[0].imag() / hbar);
    std::vector<cplx> kept;
    for (int r : retained_rank) kept.push_back(p[static_cast<std::size_t>(r)]);
    rec.p.push_back(std::move(kept));
    if (cfg.keep_states) {
      std::vector<cplx> ext(static_cast<std::size_t>(layout->ext_size()));
      std::copy(p.begin(), p.end(), ext.begin());
      std::vector<cplx> scratch;
      fill_closure(*layout, model.closure, t, q, ext, scratch);
      rec.ext.push_back(std::move(ext));
    }
    rec.q.push_back(std::move(q));
    rec.v.push_back(std::move(v));
  };

  std::vector<double> stops;
  if (cfg.record_dt > 0.0) {
    const double span = cfg.t_final - initial.t;
    const long count = static_cast<long>(std::floor(span / cfg.record_dt + 1e-9));
    for (long k = 1; k <= count; ++k) {
      const double tk = initial.t + static_cast<double>(k) * cfg.record_dt;
      if (tk < cfg.t_final - 1e-12 * std::max(1.0, std::abs(cfg.t_final))) stops.push_back(tk);
    }
  }
  stops.push_back(cfg.t_final);

  const StepHook on_step = [&](double t, std::span<const double> yy, double) {
    const double R = -yy[static_cast<std::size_t>(n + 1)] / hbar;
    for (double x : yy) {
      if (!std::isfinite(x)) throw NumericalError("non-finite state at t = " + std::to_string(t));
    }
    rec.diagnostics.max_abs_R = std::max(rec.diagnostics.max_abs_R, std::abs(R));
    if (std::abs(R) > cfg.r_bound) {
      throw NodeApproach("|R| = " + std::to_string(std::abs(R)) + " exceeded its bound at t = " + std::to_string(t));
    }
  };
  const StopHook on_stop = [&](std::size_t, double t, std::span<const double> yy) { record(t, yy); };

  record(initial.t, y);
  OdeStats st;
  if (cfg.method == Method::Rk4) {
    st = integrate_rk4(f, initial.t, y, stops, cfg.dt, on_step, on_stop);
  } else {
    AdaptiveSettings a;
    a.rtol = cfg.tol;
    a.atol = cfg.tol;
    a.dt_initial = cfg.dt;
    a.dt_min = cfg.dt_min;
    st = integrate_dopri5(f, initial.t, y, stops, a, on_step, on_stop);
  }
  rec.diagnostics.steps = st.steps;
  rec.diagnostics.rejected = st.rejected;
  rec.diagnostics.evaluations = st.evaluations;
  rec.diagnostics.min_dt = st.steps ? st.min_dt : 0.0;
  rec.diagnostics.max_dt = st.max_dt;

  JetState fin(n, N);
  fin.t = cfg.t_final;
  fin.q.assign(y.begin(), y.begin() + n);
  std::vector<cplx> p;
  unpack(y, p);
  std::copy(p.begin(), p.end(), fin.momentums().begin());
  rec.final_state = std::move(fin);
  return rec;
}

namespace {

// Composite Simpson when samples are uniform with an even interval count, trapezoid otherwise.
template <class T>
T quadrature(const std::vector<double>& t, const std::vector<T>& f) {
  const std::size_t n = t.size();
  if (n < 2) return T{};
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  bool uniform = true;
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs((t[k] - t[k - 1]) - h) > 1e-9 * std::abs(h)) uniform = false;
  }
  if (uniform && (n - 1) % 2 == 0) {
    T s = f.front() + f.back();
    for (std::size_t k = 1; k + 1 < n; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * f[k];
    return s * (h / 3.0);
  }
  T s{};
  for (std::size_t k = 1; k < n; ++k) s += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
  return s;
}

}  // namespace

cplx action_via_quadrature(const TrajectoryRecord& rec, const Model& model, const MultiIndex& sigma) {
  if (rec.ext.size() != rec.t.size() || rec.t.empty()) {
    throw MissingMomentum("record does not retain the momentums needed for L_" + sigma.name());
  }
  if (sigma.order() > rec.order) {
    throw MissingMomentum("L_" + sigma.name() + " needs momentums beyond the recorded order");
  }
  const auto layout = shared_layout(rec.dim, rec.order);
  const int rank = layout->ext().rank(sigma);
  RhsEngine engine(*layout, Model{model.physics, model.potential, Closure::zero()});
  std::vector<cplx> integrand;
  for (std::size_t k = 0; k < rec.t.size(); ++k) {
    std::span<cplx> ext = engine.ext();
    engine.load(rec.t[k], rec.q[k], std::span<const cplx>(rec.ext[k]).subspan(0, static_cast<std::size_t>(layout->state_size())));
    std::copy(rec.ext[k].begin(), rec.ext[k].end(), ext.begin());
    cplx l = -engine.h_sigma(rank);
    for (int j = 0; j < rec.dim; ++j) {
      l += ext[static_cast<std::size_t>(layout->sigma_j(rank, j))] * rec.v[k][static_cast<std::size_t>(j)];
    }
    integrand.push_back(l);
  }
  return quadrature(rec.t, integrand);
}

StationarityResult stationarity_probe(const JetState& initial, const Model& model, double t_final, double delta,
                                      int samples, int axis) {
  if (model.closure.kind != Closure::Kind::Oracle || !model.closure.oracle) {
    throw OracleUnavailable("the stationarity probe reads R along perturbed curves from an oracle");
  }
  if (samples < 3 || samples % 2 == 0) throw std::invalid_argument("stationarity probe needs an odd sample count >= 3");
  const int n = initial.dim();
  if (axis < 0 || axis >= n) throw std::invalid_argument("stationarity probe axis out of range");
  const double T = t_final - initial.t;
  IntegrateSettings cfg;
  cfg.t_final = t_final;
  cfg.dt = T / static_cast<double>(samples - 1);
  cfg.method = Method::Rk45;
  cfg.tol = 1e-12;
  cfg.record_dt = T / static_cast<double>(samples - 1);
  cfg.retain = {MultiIndex(n).extend(0)};
  const TrajectoryRecord base = integrate(initial, model, cfg);
  if (static_cast<int>(base.t.size()) != samples) throw NumericalError("stationarity probe: unexpected sample count");

  const auto table = shared_index_table(n, 2);
  const auto& ph = model.physics;
  auto action = [&](double d) {
    std::vector<double> lag(base.t.size());
    std::vector<cplx> p(static_cast<std::size_t>(table->size()));
    for (std::size_t k = 0; k < base.t.size(); ++k) {
      const double s = (base.t[k] - initial.t) / T;
      std::vector<double> q = base.q[k];
      std::vector<double> qd = base.v[k];
      q[static_cast<std::size_t>(axis)] += d * std::sin(std::numbers::pi * s);
      qd[static_cast<std::size_t>(axis)] += d * std::numbers::pi / T * std::cos(std::numbers::pi * s);
      model.closure.oracle->momentums(base.t[k], q, *table, 2, p);
      double l = -model.potential.value(q);
      for (int j = 0; j < n; ++j) {
        const double m = ph.m(j);
        const double Rj = -p[static_cast<std::size_t>(1 + j)].imag() / ph.hbar;
        const double Rjj = -p[static_cast<std::size_t>(table->rank(MultiIndex(n).extend(j).extend(j)))].imag() / ph.hbar;
        l += 0.5 * m * qd[static_cast<std::size_t>(j)] * qd[static_cast<std::size_t>(j)] +
             ph.hbar * ph.hbar / (2.0 * m) * (Rj * Rj + Rjj);
      }
      lag[k] = l;
    }
    return quadrature(base.t, lag);
  };
  StationarityResult res;
  res.action_true = action(0.0);
  res.delta_full = action(delta) - res.action_true;
  res.delta_half = action(0.5 * delta) - res.action_true;
  res.ratio = res.delta_half != 0.0 ? res.delta_full / res.delta_half : 0.0;
  return res;
}

}  // namespace jetqd
