#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "jetqd/analytic.hpp"
#include "jetqd/dynamics.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/symjet.hpp"

using namespace jetqd;

namespace {

constexpr cplx kI{0.0, 1.0};

Model free_model(int dim = 1) { return {Physics::uniform(dim), Potential::free(dim), Closure::zero()}; }

JetState gaussian_jet(int order) {
  JetState s(1, order);
  s.q = {0.0};
  s.p(MultiIndex{2}) = kI;
  return s;
}

JetState random_state(int dim, int order, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  JetState s(dim, order);
  s.t = 0.3;
  for (int i = 0; i < dim; ++i) s.q[static_cast<std::size_t>(i)] = u(rng);
  for (int r = 0; r < s.size(); ++r) s.at(r) = {u(rng), u(rng)};
  return s;
}

}  // namespace

TEST_CASE("h_sigma hand-expanded examples") {
  JetState s = gaussian_jet(2);
  Model m = free_model();
  CHECK(std::abs(h_sigma(s, m, MultiIndex{2}) - cplx{-1.0, 0.0}) < 1e-15);

  std::mt19937 rng(3);
  JetState r = random_state(1, 3, rng);
  Model h{Physics{0.7, {1.3}}, Potential::harmonic({0.9}, {1.3}), Closure::zero()};
  const double x = r.q[0];
  const double hb = 0.7, mass = 1.3, ux = mass * 0.81 * x, u0 = 0.5 * mass * 0.81 * x * x;
  const cplx px = r.p(MultiIndex{1}), pxx = r.p(MultiIndex{2}), pxxx = r.p(MultiIndex{3});
  CHECK(std::abs(h_sigma(r, h, MultiIndex{0}) - (px * px / (2 * mass) + u0 + hb / (2.0 * kI * mass) * pxx)) < 1e-14);
  CHECK(std::abs(h_sigma(r, h, MultiIndex{1}) - (px * pxx / mass + ux + hb / (2.0 * kI * mass) * pxxx)) < 1e-14);
}

TEST_CASE("h_sigma matches symbolic prolongation exactly") {
  for (int n = 1; n <= 2; ++n) {
    const auto layout = shared_layout(n, 5);
    const JetExpr h = schrodinger_hamiltonian(n);
    std::vector<JetExpr> inv_mass;
    for (int j = 0; j < n; ++j) inv_mass.push_back(JetExpr::param("m" + std::to_string(j), -1));
    const JetExpr half(GaussRational::fraction(1, 2));
    const JetExpr hbar_over_2i = JetExpr(GaussRational(Rational(0), Rational(-1, 2))) * JetExpr::param("hbar");
    const auto& ext = layout->ext();
    int checked = 0;
    for (int r = 0; r < layout->state_size(); ++r) {
      const JetExpr closed = h_sigma_generic<JetExpr>(
          *layout, r, [&](int k) { return JetExpr::momentum("p", ext.at(k)); },
          [&](int k) { return JetExpr::field("U", ext.at(k)); }, inv_mass, half, hbar_over_2i);
      const JetExpr symbolic = prolong(h, ext.at(r));
      INFO("n = " << n << " sigma = " << ext.at(r).name());
      CHECK(closed == symbolic);
      ++checked;
    }
    CHECK(checked == ext.order_begin(6));
  }
}

TEST_CASE("rhs spec examples") {
  SUBCASE("free gaussian at the centre") {
    const JetRate d = rhs(gaussian_jet(2), free_model());
    CHECK(d.qdot[0] == 0.0);
    CHECK(std::abs(d.pdot[1]) < 1e-15);
    CHECK(std::abs(d.pdot[2] - cplx{1.0, 0.0}) < 1e-15);
  }
  SUBCASE("plane wave") {
    JetState s(1, 3);
    s.q = {0.2};
    const double k0 = 1.7;
    s.p(MultiIndex{1}) = k0;
    const JetRate d = rhs(s, free_model());
    CHECK(d.qdot[0] == doctest::Approx(k0));
    CHECK(std::abs(d.pdot[0] - cplx{k0 * k0 / 2, 0.0}) < 1e-15);
    for (int r = 1; r < s.size(); ++r) CHECK(std::abs(d.pdot[static_cast<std::size_t>(r)]) == 0.0);
  }
  SUBCASE("harmonic at the origin") {
    JetState s(1, 2);
    s.q = {0.0};
    const double w = 1.5, mass = 2.0;
    const JetRate d = rhs(s, {Physics::uniform(1, 1.0, mass), Potential::harmonic({w}, {mass}), Closure::zero()});
    CHECK(std::abs(d.pdot[1]) == 0.0);
    CHECK(std::abs(d.pdot[2] - cplx{-mass * w * w, 0.0}) < 1e-14);
  }
}

TEST_CASE("rhs conjugation symmetry and S/R consistency") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 2;
    JetState s = random_state(n, 3, rng);
    Physics ph{0.8, std::vector<double>(static_cast<std::size_t>(n), 1.4)};
    Model m{ph, Potential::harmonic(std::vector<double>(static_cast<std::size_t>(n), 1.1), ph.mass), Closure::zero()};
    const JetRate d = rhs(s, m);

    // Mirror system: p̄ obeys the same equations with p and p̄ exchanged and ħ → -ħ.
    Model mirror = m;
    mirror.physics.hbar = -ph.hbar;
    const JetRate dc = rhs(s.conjugated(), mirror);
    for (int r = 0; r < s.size(); ++r) {
      CHECK(std::abs(dc.pdot[static_cast<std::size_t>(r)] - std::conj(d.pdot[static_cast<std::size_t>(r)])) < 1e-12);
    }

    // Ṡ = v·∇S - H^S and Ṙ = v·∇R - H^R from the real formulation.
    const auto sr = to_sr(s, ph.hbar);
    const double U = m.potential.value(s.q);
    double sdot = -U, rdot = 0.0;
    for (int j = 0; j < n; ++j) {
      const MultiIndex e = MultiIndex(n).extend(j);
      const auto pj = sr[static_cast<std::size_t>(s.table().rank(e))];
      const auto pjj = sr[static_cast<std::size_t>(s.table().rank(e.extend(j)))];
      const double mj = ph.m(j), v = pj.S / mj;
      const double HS = pj.S * pj.S / (2 * mj) - ph.hbar * ph.hbar / (2 * mj) * (pj.R * pj.R + pjj.R);
      const double HR = (pj.S * pj.R + 0.5 * pjj.S) / mj;
      sdot += v * pj.S - HS;
      rdot += v * pj.R - HR;
      CHECK(d.qdot[static_cast<std::size_t>(j)] == doctest::Approx(v).epsilon(1e-14));
    }
    CHECK(d.pdot[0].real() == doctest::Approx(sdot).epsilon(1e-12));
    CHECK(-d.pdot[0].imag() / ph.hbar == doctest::Approx(rdot).epsilon(1e-12));
  }
}

TEST_CASE("free gaussian Riccati solution and exact closure") {
  JetState s = gaussian_jet(4);
  IntegrateSettings cfg;
  cfg.t_final = 5.0;
  cfg.record_dt = 0.05;
  cfg.retain = {MultiIndex{2}, MultiIndex{3}, MultiIndex{4}};
  const auto rec = integrate(s, free_model(), cfg);
  CHECK(rec.t.size() == 101);
  double err = 0.0, high = 0.0;
  for (std::size_t k = 0; k < rec.t.size(); ++k) {
    err = std::max(err, std::abs(rec.p[k][0] - kI / (1.0 + kI * rec.t[k])));
    high = std::max({high, std::abs(rec.p[k][1]), std::abs(rec.p[k][2])});
    CHECK(rec.q[k][0] == 0.0);
  }
  CHECK(err < 1e-8);
  CHECK(high < 1e-12);
  CHECK(std::abs(rec.final_state.p(MultiIndex{2}) - kI / (1.0 + 5.0 * kI)) < 1e-8);

  IntegrateSettings one;
  one.t_final = 1.0;
  const auto r1 = integrate(gaussian_jet(2), free_model(), one);
  CHECK(std::abs(r1.final_state.p(MultiIndex{2}) - cplx{0.5, 0.5}) < 1e-8);
}

TEST_CASE("rk4 fixed step reproduces the Riccati solution") {
  IntegrateSettings cfg;
  cfg.method = Method::Rk4;
  cfg.dt = 1e-3;
  const auto rec = integrate(gaussian_jet(2), free_model(), cfg);
  CHECK(std::abs(rec.final_state.p(MultiIndex{2}) - cplx{0.5, 0.5}) < 1e-11);
  CHECK(rec.diagnostics.steps == 1000);
}

TEST_CASE("plane wave trajectory and action") {
  JetState s(1, 2);
  const double k0 = 0.6;
  s.p(MultiIndex{1}) = k0;
  IntegrateSettings cfg;
  cfg.record_dt = 0.1;
  cfg.keep_states = true;
  const Model m = free_model();
  const auto rec = integrate(s, m, cfg);
  CHECK(rec.q.back()[0] == doctest::Approx(k0).epsilon(1e-12));
  CHECK(rec.S.back() - rec.S.front() == doctest::Approx(k0 * k0 / 2).epsilon(1e-12));
  CHECK(std::abs(action_via_quadrature(rec, m, MultiIndex{0}) - cplx{k0 * k0 / 2, 0.0}) < 1e-12);
}

TEST_CASE("action quadrature on the free gaussian") {
  const Model m = free_model();
  IntegrateSettings cfg;
  cfg.keep_states = true;
  cfg.retain = {MultiIndex{1}, MultiIndex{2}};
  std::vector<double> errs;
  for (double cadence : {0.1, 0.05, 0.025}) {
    cfg.record_dt = cadence;
    const auto rec = integrate(gaussian_jet(2), m, cfg);
    CHECK(std::abs(action_via_quadrature(rec, m, MultiIndex{1})) < 1e-14);
    const cplx dp2 = action_via_quadrature(rec, m, MultiIndex{2});
    errs.push_back(std::abs(dp2 - cplx{0.5, -0.5}));
    const cplx ode = rec.final_state.p(MultiIndex{2}) - kI;
    CHECK(std::abs(dp2 - ode) < 1e-4);
  }
  CHECK(errs[0] < 1e-4);
  // Simpson: fourth order in the cadence.
  CHECK(errs[0] / errs[1] > 12.0);
  CHECK(errs[1] / errs[2] > 12.0);

  IntegrateSettings bare;
  const auto rec = integrate(gaussian_jet(2), m, bare);
  CHECK_THROWS_AS(action_via_quadrature(rec, m, MultiIndex{0}), MissingMomentum);
}

TEST_CASE("coherent state trajectories follow the classical shift") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::coherent(ph, {1.0}, {cplx{1.0, 0.0}});
  const Model m{ph, psi.potential(), Closure::zero()};
  const auto& f = psi.terms().front().factors.front();
  const double T = 4.0 * std::numbers::pi;
  double worst = 0.0;
  for (double x0 : {-1.0, 0.3, 2.5}) {
    const JetState s = from_wavefunction_analytic(psi, std::vector<double>{x0}, 0.0, 2, 0.0);
    IntegrateSettings cfg;
    cfg.t_final = T;
    cfg.record_dt = T / 40;
    const auto rec = integrate(s, m, cfg);
    for (std::size_t k = 0; k < rec.t.size(); ++k) {
      worst = std::max(worst, std::abs(rec.q[k][0] - (x0 + f.classical_x(rec.t[k]) - f.classical_x(0.0))));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("oracle closure agrees with zero closure on a gaussian") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.4}, {0.0});
  const JetState s = from_wavefunction_analytic(psi, std::vector<double>{0.5}, 0.0, 2, 0.0);
  IntegrateSettings cfg;
  const auto a = integrate(s, {ph, psi.potential(), Closure::zero()}, cfg);
  const auto b = integrate(s, {ph, psi.potential(), Closure::from_oracle(std::make_shared<AnalyticOracle>(psi))}, cfg);
  CHECK(std::abs(a.q.back()[0] - b.q.back()[0]) < 1e-10);

  Model broken{ph, psi.potential(), Closure{Closure::Kind::Oracle, nullptr}};
  CHECK_THROWS_AS(rhs(s, broken), OracleUnavailable);
}

TEST_CASE("node approach guard") {
  JetState s(1, 2);
  s.p0() = cplx{0.0, 29.0};  // R = -29
  s.p(MultiIndex{2}) = cplx{1.0, 1.0};  // S_xx > 0 drives R down
  IntegrateSettings cfg;
  cfg.t_final = 20.0;
  CHECK_THROWS_AS(integrate(s, free_model(), cfg), NodeApproach);
}

TEST_CASE("stationarity probe") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {0.0});
  const Model m{ph, psi.potential(), Closure::from_oracle(std::make_shared<AnalyticOracle>(psi))};
  const JetState s = from_wavefunction_analytic(psi, std::vector<double>{0.5}, 0.0, 2, 0.0);
  const auto zero = stationarity_probe(s, m, 2.0, 0.0, 401);
  CHECK(zero.delta_full == 0.0);
  const auto r = stationarity_probe(s, m, 2.0, 1e-2, 2001);
  CHECK(r.delta_full > 0.0);
  CHECK(r.ratio == doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS(stationarity_probe(s, free_model(), 2.0, 1e-2), OracleUnavailable);
}

TEST_CASE("csv output") {
  IntegrateSettings cfg;
  cfg.record_dt = 0.5;
  const auto rec = integrate(gaussian_jet(2), free_model(), cfg);
  std::ostringstream os;
  rec.write_csv(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,q_0,v_0,S,R,re_p_x,im_p_x,re_p_xx,im_p_xx");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 3);
}
