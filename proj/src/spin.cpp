#include "jetqd/spin.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace jetqd {

namespace {

constexpr cplx kI{0.0, 1.0};

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// √((2s)!/((s+m)!(s-m)!)) for k = s + m.
double coherent_weight(int twice_s, int k) {
  return std::exp(0.5 * (log_factorial(twice_s) - log_factorial(k) - log_factorial(twice_s - k)));
}

cplx ipow(cplx z, int n) {
  cplx r{1.0, 0.0};
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

}  // namespace

Spinor Spinor::from_euler(double chi, double theta, double phi) {
  return {std::polar(std::cos(0.5 * theta), -0.5 * (phi + chi)), std::polar(std::sin(0.5 * theta), 0.5 * (phi - chi))};
}

std::array<double, 3> Spinor::euler() const {
  const double theta = 2.0 * std::atan2(std::abs(v), std::abs(u));
  const double au = std::abs(u) > 0.0 ? std::arg(u) : 0.0;
  const double av = std::abs(v) > 0.0 ? std::arg(v) : 0.0;
  return {-au - av, theta, av - au};
}

std::array<double, 4> Spinor::real_chart() const { return {u.real(), u.imag(), v.real(), v.imag()}; }

Spinor Spinor::from_real_chart(const std::array<double, 4>& w) { return {{w[0], w[1]}, {w[2], w[3]}}; }

Vec3 Spinor::spin_vector() const {
  const cplx uv = std::conj(u) * v;
  return {2.0 * uv.real(), 2.0 * uv.imag(), std::norm(u) - std::norm(v)};
}

std::vector<Spinor> random_spinors(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Spinor> out;
  out.reserve(count);
  while (out.size() < count) {
    std::array<double, 4> w{g(rng), g(rng), g(rng), g(rng)};
    const double r = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3]);
    if (r < 1e-12) continue;
    for (double& c : w) c /= r;
    out.push_back(Spinor::from_real_chart(w));
  }
  return out;
}

SpinState::SpinState(int twice_s, std::vector<cplx> amplitudes) : twice_s_(twice_s), amp_(std::move(amplitudes)) {
  if (twice_s < 0) throw std::invalid_argument("spin must be non-negative");
  if (static_cast<int>(amp_.size()) != twice_s + 1) throw std::invalid_argument("spin state needs 2s+1 amplitudes");
  double n = 0.0;
  for (const auto& a : amp_) n += std::norm(a);
  if (std::abs(n - 1.0) > 1e-10) throw std::invalid_argument("spin state amplitudes must be normalized");
}

SpinState SpinState::basis(int twice_s, int twice_m) {
  if (std::abs(twice_m) > twice_s || (twice_s - twice_m) % 2 != 0) throw std::invalid_argument("m out of range");
  std::vector<cplx> a(static_cast<std::size_t>(twice_s + 1));
  a[static_cast<std::size_t>((twice_m + twice_s) / 2)] = 1.0;
  return {twice_s, std::move(a)};
}

SpinState SpinState::coherent(int twice_s, const Spinor& omega) {
  std::vector<cplx> a(static_cast<std::size_t>(twice_s + 1));
  for (int k = 0; k <= twice_s; ++k) {
    a[static_cast<std::size_t>(k)] = coherent_weight(twice_s, k) * ipow(omega.u, k) * ipow(omega.v, twice_s - k);
  }
  double n = 0.0;
  for (const auto& c : a) n += std::norm(c);
  for (auto& c : a) c /= std::sqrt(n);
  return {twice_s, std::move(a)};
}

SpinState SpinState::random(int twice_s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> a(static_cast<std::size_t>(twice_s + 1));
  double n = 0.0;
  for (auto& c : a) {
    c = {g(rng), g(rng)};
    n += std::norm(c);
  }
  for (auto& c : a) c /= std::sqrt(n);
  return {twice_s, std::move(a)};
}

cplx SpinState::amplitude_at_m(int twice_m) const {
  if (std::abs(twice_m) > twice_s_ || (twice_s_ - twice_m) % 2 != 0) throw std::invalid_argument("m out of range");
  return amp_[static_cast<std::size_t>((twice_m + twice_s_) / 2)];
}

Eigen::VectorXcd SpinState::vector() const {
  Eigen::VectorXcd v(size());
  for (int k = 0; k < size(); ++k) v(k) = amp_[static_cast<std::size_t>(k)];
  return v;
}

std::array<Eigen::MatrixXcd, 3> spin_matrices(int twice_s) {
  const int n = twice_s + 1;
  const double s = 0.5 * twice_s;
  Eigen::MatrixXcd plus = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double m = k - s;
    z(k, k) = m;
    if (k + 1 < n) plus(k + 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  const Eigen::MatrixXcd minus = plus.adjoint();
  return {0.5 * (plus + minus), (plus - minus) / (2.0 * kI), z};
}

Eigen::MatrixXcd exp_i_hermitian(const Eigen::MatrixXcd& m, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen decomposition failed");
  Eigen::VectorXcd phases(m.rows());
  for (Eigen::Index k = 0; k < m.rows(); ++k) phases(k) = std::polar(1.0, t * es.eigenvalues()(k));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd rotation_operator(int twice_s, double chi, double theta, double phi) {
  const auto s = spin_matrices(twice_s);
  return exp_i_hermitian(s[2], -phi) * exp_i_hermitian(s[1], -theta) * exp_i_hermitian(s[2], -chi);
}

cplx coherent_overlap(const SpinState& state, const Spinor& omega) {
  const cplx ub = std::conj(omega.u);
  const cplx vb = std::conj(omega.v);
  cplx sum{};
  for (int k = 0; k <= state.twice_s(); ++k) {
    sum += coherent_weight(state.twice_s(), k) * ipow(ub, k) * ipow(vb, state.twice_s() - k) *
           state.amplitudes()[static_cast<std::size_t>(k)];
  }
  return sum;
}

std::array<cplx, 2> coherent_gradient(const SpinState& state, const Spinor& omega) {
  const cplx ub = std::conj(omega.u);
  const cplx vb = std::conj(omega.v);
  const int n = state.twice_s();
  std::array<cplx, 2> g{};
  for (int k = 0; k <= n; ++k) {
    const cplx c = coherent_weight(n, k) * state.amplitudes()[static_cast<std::size_t>(k)];
    if (k > 0) g[0] += c * static_cast<double>(k) * ipow(ub, k - 1) * ipow(vb, n - k);
    if (k < n) g[1] += c * static_cast<double>(n - k) * ipow(ub, k) * ipow(vb, n - k - 1);
  }
  return g;
}

SpinFunction SpinFunction::from_state(const SpinState& state) {
  return {[state](cplx ub, cplx vb) { return coherent_overlap(state, Spinor{std::conj(ub), std::conj(vb)}); },
          [state](cplx ub, cplx vb) { return coherent_gradient(state, Spinor{std::conj(ub), std::conj(vb)}); }};
}

double homogeneity_check(const SpinFunction& f, std::span<const Spinor> samples, double s, double hbar,
                         double node_floor) {
  double worst = 0.0;
  for (const auto& sp : samples) {
    const cplx ub = std::conj(sp.u);
    const cplx vb = std::conj(sp.v);
    const cplx psi = f.value(ub, vb);
    if (std::abs(psi) < node_floor) continue;
    const auto g = f.gradient(ub, vb);
    const cplx pu = (hbar / kI) * g[0] / psi;
    const cplx pv = (hbar / kI) * g[1] / psi;
    worst = std::max(worst, std::abs((kI / hbar) * (ub * pu + vb * pv) - 2.0 * s));
  }
  return worst;
}

FieldHistory constant_field(const Vec3& b) {
  return [b](double) { return b; };
}

Spinor spinor_rate(const Spinor& sp, const Vec3& b, double gamma, double hbar) {
  const cplx f = kI * gamma / (2.0 * hbar);
  const cplx bm{b[0], -b[1]};
  const cplx bp{b[0], b[1]};
  return {f * (b[2] * sp.u + bm * sp.v), f * (bp * sp.u - b[2] * sp.v)};
}

void SpinTrajectory::write_csv(std::ostream& os) const {
  os << "t,re_u,im_u,re_v,im_v,norm\n";
  os.precision(17);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& s = spinors[k];
    os << t[k] << ',' << s.u.real() << ',' << s.u.imag() << ',' << s.v.real() << ',' << s.v.imag() << ','
       << s.norm() << '\n';
  }
}

SpinTrajectory precess(const Spinor& sp, const FieldHistory& b, double t_final, const PrecessSettings& st) {
  if (!(st.dt > 0.0) || t_final < 0.0 || st.record_every < 1) throw std::invalid_argument("invalid precession settings");
  SpinTrajectory out;
  Spinor y = sp;
  double t = 0.0;
  out.t.push_back(t);
  out.spinors.push_back(y);
  auto axpy = [](const Spinor& a, double h, const Spinor& k) { return Spinor{a.u + h * k.u, a.v + h * k.v}; };
  const auto steps = static_cast<long>(std::ceil(t_final / st.dt - 1e-9));
  for (long n = 0; n < steps; ++n) {
    const double h = std::min(st.dt, t_final - t);
    const Vec3 b0 = b(t);
    const Vec3 bh = b(t + 0.5 * h);
    const Vec3 b1 = b(t + h);
    const Spinor k1 = spinor_rate(y, b0, st.gamma, st.hbar);
    const Spinor k2 = spinor_rate(axpy(y, 0.5 * h, k1), bh, st.gamma, st.hbar);
    const Spinor k3 = spinor_rate(axpy(y, 0.5 * h, k2), bh, st.gamma, st.hbar);
    const Spinor k4 = spinor_rate(axpy(y, h, k3), b1, st.gamma, st.hbar);
    const double before = y.norm();
    y.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    y.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    out.max_norm_drift_per_step = std::max(out.max_norm_drift_per_step, std::abs(y.norm() - before));
    if (st.renormalize) {
      const double r = std::sqrt(y.norm());
      y.u /= r;
      y.v /= r;
    }
    t = n + 1 == steps ? t_final : t + h;
    if ((n + 1) % st.record_every == 0 || n + 1 == steps) {
      out.t.push_back(t);
      out.spinors.push_back(y);
    }
  }
  out.steps = steps;
  return out;
}

Spinor precess_exact(const Spinor& sp, const Vec3& b, double gamma, double hbar, double t) {
  const double mag = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
  if (mag == 0.0) return sp;
  const double alpha = gamma * mag * t / (2.0 * hbar);
  const double c = std::cos(alpha);
  const cplx is = kI * std::sin(alpha);
  const double nx = b[0] / mag, ny = b[1] / mag, nz = b[2] / mag;
  const cplx nm{nx, -ny};
  const cplx np{nx, ny};
  return {c * sp.u + is * (nz * sp.u + nm * sp.v), c * sp.v + is * (np * sp.u - nz * sp.v)};
}

SpinState evolve_state(const SpinState& state, const Vec3& b, double gamma, double hbar, double t) {
  const auto s = spin_matrices(state.twice_s());
  const Eigen::MatrixXcd bs = b[0] * s[0] + b[1] * s[1] + b[2] * s[2];
  const Eigen::VectorXcd out = exp_i_hermitian(bs, gamma * t / hbar) * state.vector();
  std::vector<cplx> a(out.data(), out.data() + out.size());
  double n = 0.0;
  for (const auto& c : a) n += std::norm(c);
  for (auto& c : a) c /= std::sqrt(n);
  return {state.twice_s(), std::move(a)};
}

SpinVelocity spin_velocity_terms(const JetState& space, const Physics& phys, const Spinor& omega,
                                 const SpinCoupling& coupling) {
  SpinVelocity out;
  out.spatial = velocity(space, phys);
  if (!coupling.a.empty()) {
    if (coupling.a.size() != out.spatial.size()) throw std::invalid_argument("vector potential dimension mismatch");
    for (std::size_t j = 0; j < out.spatial.size(); ++j) {
      out.spatial[j] -= coupling.charge_over_c * coupling.a[j] / phys.m(static_cast<int>(j));
    }
  }
  const cplx ub = std::conj(omega.u);
  const cplx vb = std::conj(omega.v);
  const auto& b = coupling.b;
  const cplx f = -kI * coupling.gamma / (2.0 * phys.hbar);
  const cplx bm{b[0], -b[1]};
  const cplx bp{b[0], b[1]};
  // Row vector (ū, v̄) times B·σ.
  out.ubar_dot = f * (ub * b[2] + vb * bp);
  out.vbar_dot = f * (ub * bm - vb * b[2]);
  out.spinor_dot = {std::conj(out.ubar_dot), std::conj(out.vbar_dot)};
  return out;
}

JetExpr spin_hamiltonian(int space_dim, bool uniform_field) {
  const int n = space_dim + 2;
  if (space_dim < 1 || n > kMaxDim) throw std::invalid_argument("space dimension out of range");
  const JetExpr hbar = JetExpr::param("hbar");
  const JetExpr e_c = JetExpr::param("e_c");
  const JetExpr half(GaussRational::fraction(1, 2));
  const JetExpr minus_half_i(GaussRational(Rational(0), Rational(-1, 2)));
  const MultiIndex none(n);
  JetExpr h = JetExpr::field("U", none);
  for (int j = 0; j < space_dim; ++j) {
    const JetExpr inv_m = JetExpr::param("m" + std::to_string(j), -1);
    const JetExpr kin = JetExpr::momentum("p", none.extend(j)) - e_c * JetExpr::param("A" + std::to_string(j));
    h += half * inv_m * kin * kin;
    h += minus_half_i * hbar * inv_m * JetExpr::momentum("p", none.extend(j).extend(j));
  }
  auto component = [&](const char* name) {
    return uniform_field ? JetExpr::param(name) : JetExpr::field(name, none);
  };
  const JetExpr bx = component("Bx");
  const JetExpr by = component("By");
  const JetExpr bz = component("Bz");
  const JetExpr i(GaussRational::i());
  const JetExpr ub = JetExpr::coord(space_dim);
  const JetExpr vb = JetExpr::coord(space_dim + 1);
  const JetExpr pu = JetExpr::momentum("p", none.extend(space_dim));
  const JetExpr pv = JetExpr::momentum("p", none.extend(space_dim + 1));
  const JetExpr spin = ub * (bz * pu + (bx - i * by) * pv) + vb * ((bx + i * by) * pu - bz * pv);
  h += minus_half_i * JetExpr::param("gamma") * JetExpr::param("hbar", -1) * spin;
  return h;
}

nlohmann::json DecouplingReport::to_json() const {
  return {{"checked", checked}, {"max_mixed_rate", max_mixed_rate}, {"worst", worst.name()}, {"decoupled", decoupled}};
}

DecouplingReport decoupling_check(int space_dim, int order, bool uniform_field, std::uint64_t seed) {
  if (order < 2) throw std::invalid_argument("decoupling check needs order >= 2");
  const int n = space_dim + 2;
  const JetExpr h = spin_hamiltonian(space_dim, uniform_field);

  auto has_space = [&](const MultiIndex& s) {
    for (int j = 0; j < space_dim; ++j) if (s[j] > 0) return true;
    return false;
  };
  auto has_spin = [&](const MultiIndex& s) { return s[space_dim] > 0 || s[space_dim + 1] > 0; };
  auto keyed = [seed](std::uint64_t key, std::uint64_t salt) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + key * 1315423911ULL + salt);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const double a = d(rng);
    return cplx{a, d(rng)};
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::unordered_map<std::string, cplx> params{{"hbar", 1.0}, {"gamma", 1.3}, {"e_c", 0.7}};
  for (int j = 0; j < space_dim; ++j) {
    params["m" + std::to_string(j)] = 1.5 + 0.5 * d(rng);
    params["A" + std::to_string(j)] = d(rng);
  }
  for (const char* name : {"Bx", "By", "Bz"}) params[name] = d(rng);
  std::vector<cplx> coords(static_cast<std::size_t>(n));
  for (int j = 0; j < space_dim; ++j) coords[static_cast<std::size_t>(j)] = d(rng);
  const auto omega = random_spinors(1, seed)[0];
  coords[static_cast<std::size_t>(space_dim)] = std::conj(omega.u);
  coords[static_cast<std::size_t>(space_dim + 1)] = std::conj(omega.v);

  auto bind = [&](const Atom& a) -> cplx {
    switch (a.kind) {
      case Atom::Kind::Param:
        return params.at(a.name);
      case Atom::Kind::Coord:
        return coords[static_cast<std::size_t>(a.index)];
      case Atom::Kind::Time:
        return 0.0;
      case Atom::Kind::Momentum:
        // p = p^(x)(x) + p^(s)(Ω): mixed derivatives vanish.
        if (has_space(a.sigma) && has_spin(a.sigma)) return 0.0;
        return keyed(a.sigma.key(), 1);
      case Atom::Kind::Field:
        // U and B depend on position only.
        if (has_spin(a.sigma)) return 0.0;
        return keyed(a.sigma.key(), std::hash<std::string>{}(a.name)).real();
    }
    return 0.0;
  };

  std::vector<cplx> vel(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Atom pi = Atom::momentum("p", MultiIndex(n).extend(i));
    if (i < space_dim) {
      const cplx p = bind(pi);
      vel[static_cast<std::size_t>(i)] =
          (p.real() - (params.at("e_c") * params.at("A" + std::to_string(i))).real()) /
          params.at("m" + std::to_string(i)).real();
    } else {
      vel[static_cast<std::size_t>(i)] = evaluate(partial(h, pi), bind);
    }
  }

  DecouplingReport rep;
  const IndexTable table(n, order);
  for (const auto& sigma : table.indices()) {
    if (!(has_space(sigma) && has_spin(sigma))) continue;
    cplx rate = -evaluate(prolong(h, sigma), bind);
    for (int i = 0; i < n; ++i) rate += vel[static_cast<std::size_t>(i)] * bind(Atom::momentum("p", sigma.extend(i)));
    ++rep.checked;
    if (std::abs(rate) > rep.max_mixed_rate || rep.worst.dim() == 0) {
      rep.max_mixed_rate = std::max(rep.max_mixed_rate, std::abs(rate));
      rep.worst = sigma;
    }
  }
  rep.decoupled = rep.max_mixed_rate == 0.0;
  return rep;
}

bool SpinCheckReport::pass() const {
  return phase_error < 1e-9 && frequency_error < 1e-9 && max_norm_drift_per_step < 1e-12 &&
         homogeneity_residual < 1e-12 && overlap_variation < 1e-8;
}

nlohmann::json SpinCheckReport::to_json() const {
  return {{"phase_error", phase_error},
          {"frequency_error", frequency_error},
          {"max_norm_drift_per_step", max_norm_drift_per_step},
          {"homogeneity_residual", homogeneity_residual},
          {"overlap_variation", overlap_variation},
          {"steps", steps},
          {"pass", pass()}};
}

SpinCheckReport spin_check(const SpinCheckSettings& st) {
  SpinCheckReport rep;
  const Vec3 b{0.0, 0.0, st.b};
  const double omega = st.gamma * st.b / st.hbar;
  const double t_final = 2.0 * std::numbers::pi * st.turns / omega;
  const double period = 2.0 * std::numbers::pi / omega;
  const Spinor start = Spinor::from_euler(0.3, 1.1, 0.7);

  PrecessSettings ps;
  ps.gamma = st.gamma;
  ps.hbar = st.hbar;
  ps.dt = st.dt;
  ps.record_every = 100;
  const auto traj = precess(start, constant_field(b), t_final, ps);
  rep.steps = traj.steps;
  rep.max_norm_drift_per_step = traj.max_norm_drift_per_step;

  const Spinor& end = traj.spinors.back();
  const cplx u_exact = start.u * std::polar(1.0, 0.5 * omega * t_final);
  const cplx v_exact = start.v * std::polar(1.0, -0.5 * omega * t_final);
  rep.phase_error = std::max(std::abs(std::arg(end.u / u_exact)), std::abs(std::arg(end.v / v_exact)));

  // Unwrapped azimuth of the spin vector; the Larmor rate is -γB/ħ.
  double azimuth = 0.0;
  double prev = std::atan2(start.spin_vector()[1], start.spin_vector()[0]);
  for (std::size_t k = 1; k < traj.spinors.size(); ++k) {
    const auto sv = traj.spinors[k].spin_vector();
    const double a = std::atan2(sv[1], sv[0]);
    azimuth += std::remainder(a - prev, 2.0 * std::numbers::pi);
    prev = a;
  }
  rep.frequency_error = std::abs(azimuth / t_final + omega) / omega;

  const auto state = SpinState::random(st.twice_s, st.seed);
  const auto samples = random_spinors(static_cast<std::size_t>(st.samples), st.seed + 1);
  rep.homogeneity_residual = homogeneity_check(SpinFunction::from_state(state), samples, state.s(), st.hbar);

  const cplx initial = coherent_overlap(state, start);
  for (std::size_t k = 0; k < traj.t.size() && traj.t[k] <= period; ++k) {
    const auto psi = evolve_state(state, b, st.gamma, st.hbar, traj.t[k]);
    rep.overlap_variation = std::max(rep.overlap_variation, std::abs(coherent_overlap(psi, traj.spinors[k]) - initial));
  }
  return rep;
}

}  // namespace jetqd
