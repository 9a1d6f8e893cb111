#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "jetqd/analytic.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/grid.hpp"

using namespace jetqd;

namespace {

constexpr cplx kI{0.0, 1.0};

double max_error(const GridWave& w, const AnalyticState& psi) {
  double e = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) e = std::max(e, std::abs(w[i] - psi.psi(w.point(i), w.t)));
  return e;
}

}  // namespace

TEST_CASE("split-step free gaussian matches the closed form") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {0.0});
  GridWave w = GridWave::from_analytic(psi, GridSpec::centered({1024}, {40.0}), 0.0);
  CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-12));
  SplitStepper st(w.spec(), psi.potential(), ph, 1e-3);
  double drift = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double before = w.norm();
    st.step(w);
    drift = std::max(drift, std::abs(w.norm() - before));
  }
  CHECK(w.t == doctest::Approx(1.0));
  CHECK(drift < 1e-12);
  CHECK(max_error(w, psi) < 1e-8);
}

TEST_CASE("plane-wave mode rotates by the exact kinetic phase") {
  const Physics ph{1.0, {2.0}};
  const auto spec = GridSpec::centered({64}, {2 * std::numbers::pi});
  const double k0 = 3.0;
  GridWave w = GridWave::sample(spec, [&](std::span<const double> x) { return std::exp(kI * k0 * x[0]); });
  SplitStepper(spec, Potential::free(1), ph, 0.37).advance(w, 5);
  const cplx phase = std::exp(-kI * ph.hbar * k0 * k0 / (2 * ph.m(0)) * 0.37 * 5.0);
  double e = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) e = std::max(e, std::abs(w[i] - phase * std::exp(kI * k0 * w.point(i)[0])));
  CHECK(e < 1e-12);
}

TEST_CASE("coherent state density returns after one period") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::coherent(ph, {1.0}, {cplx{1.0, 0.5}});
  GridWave w = GridWave::from_analytic(psi, GridSpec::centered({256}, {30.0}), 0.0);
  const auto rho0 = w.density();
  const int steps = 4000;
  SplitStepper(w.spec(), psi.potential(), ph, 2 * std::numbers::pi / steps).advance(w, steps);
  const auto rho1 = w.density();
  double e = 0.0;
  for (std::size_t i = 0; i < rho0.size(); ++i) e = std::max(e, std::abs(rho1[i] - rho0[i]));
  CHECK(e < 1e-6);
}

TEST_CASE("two-dimensional stepping") {
  const Physics ph{1.0, {1.0, 2.0}};
  const auto psi = AnalyticState::free_gaussian(ph, {1.0, 0.8}, {0.5, -0.3}, {0.2, 0.0});
  GridWave w = GridWave::from_analytic(psi, GridSpec::centered({96, 96}, {24.0, 24.0}), 0.0);
  SplitStepper(w.spec(), psi.potential(), ph, 1e-2).advance(w, 50);
  CHECK(max_error(w, psi) < 1e-8);
  CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-10));

  const std::vector<double> q{0.7, -0.4};
  const JetState g = jacobi_extract(w, ph, q, 4);
  const JetState a = jacobi_extract(psi, q, w.t, 4);
  for (int r = 1; r < g.size(); ++r) {
    CHECK(std::abs(g.at(r) - a.at(r)) / std::max(1.0, std::abs(a.at(r))) < 1e-7);
  }
}

TEST_CASE("coarse grids are rejected") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {0.2}, {0.0}, {0.0});
  const GridWave w = GridWave::from_analytic(psi, GridSpec::centered({32}, {40.0}), 0.0);
  CHECK(spectral_tail(w) > 1e-10);
  CHECK_THROWS_AS(step_splitfourier(w, psi.potential(), ph, 1e-3), GridTooCoarse);
}

TEST_CASE("grid extraction agrees with analytic momentums to sixth order") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.5}, {0.0});
  GridWave w = GridWave::from_analytic(psi, GridSpec::centered({1024}, {40.0}), 0.0);
  const JetState a0 = jacobi_extract(psi, std::vector<double>{0.0}, 0.0, 6);
  const JetState f0 = from_wavefunction_analytic(psi, std::vector<double>{0.0}, 0.0, 6);
  for (int r = 0; r < a0.size(); ++r) CHECK(a0.at(r) == f0.at(r));

  SplitStepper(w.spec(), psi.potential(), ph, 1e-3).advance(w, 1000);
  const SpectralInterpolant in(w);
  double worst = 0.0;
  for (double q : {-2.0, 0.0, 1.0, 2.5, 4.0}) {
    const JetState g = jacobi_extract_report(in, ph, std::vector<double>{q}, 6).state;
    const JetState a = jacobi_extract(psi, std::vector<double>{q}, 1.0, 6);
    for (int r = 1; r < g.size(); ++r) worst = std::max(worst, std::abs(g.at(r) - a.at(r)) / std::max(1.0, std::abs(a.at(r))));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("extraction near a density minimum reports its condition") {
  const Physics ph = Physics::uniform(1);
  const auto left = AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {-3.0});
  const auto right = AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {3.0});
  const auto two = AnalyticState::superposition({{1.0, left}, {1.0, right}});
  const double t = 2.0;
  const GridWave w = GridWave::from_analytic(two, GridSpec::centered({512}, {60.0}), t);
  const SpectralInterpolant in(w);
  const auto far = jacobi_extract_report(in, ph, std::vector<double>{3.0}, 2);
  const auto mid = jacobi_extract_report(in, ph, std::vector<double>{0.0}, 2);
  CHECK(mid.condition > far.condition);
  const JetState a = jacobi_extract(two, std::vector<double>{0.0}, t, 2);
  CHECK(std::abs(mid.state.at(2) - a.at(2)) < 1e-6 * mid.condition);

  const auto odd = AnalyticState::superposition({{1.0, left}, {-1.0, right}});
  const GridWave wo = GridWave::from_analytic(odd, w.spec(), 0.0);
  CHECK_THROWS_AS(jacobi_extract(wo, ph, std::vector<double>{0.0}, 2), NodeError);
}

TEST_CASE("bohm velocity fields") {
  const Physics ph{1.0, {1.5}};
  const auto spec = GridSpec::centered({128}, {2 * std::numbers::pi});
  const GridWave real_wave = GridWave::sample(spec, [](std::span<const double> x) { return cplx{2.0 + std::cos(x[0]), 0.0}; });
  const auto still = bohm_velocity_field(real_wave, ph);
  for (double v : still.v[0]) CHECK(std::abs(v) < 1e-14);

  const double k0 = 2.0;
  const GridWave plane = GridWave::sample(spec, [&](std::span<const double> x) { return std::exp(kI * k0 * x[0]); });
  const auto moving = bohm_velocity_field(plane, ph);
  for (double v : moving.v[0]) CHECK(v == doctest::Approx(k0 / 1.5).epsilon(1e-12));

  const Physics one = Physics::uniform(1);
  const auto coh = AnalyticState::coherent(one, {1.0}, {cplx{0.5, 0.8}});
  const double t = 0.6;
  const GridWave cw = GridWave::from_analytic(coh, GridSpec::centered({256}, {30.0}), t);
  const auto field = bohm_velocity_field(cw, one, 1e-6);
  const double vcl = coh.terms().front().factors.front().classical_p(t);
  int checked = 0;
  for (std::size_t i = 0; i < cw.size(); ++i) {
    if (field.masked[i]) continue;
    CHECK(field.v[0][i] == doctest::Approx(vcl).epsilon(1e-8));
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("continuity residual") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.7}, {0.0});
  const auto spec = GridSpec::centered({512}, {40.0});
  std::vector<double> res;
  for (double dt : {0.04, 0.02, 0.01}) {
    const GridWave a = GridWave::from_analytic(psi, spec, 1.0 - dt / 2);
    const GridWave b = GridWave::from_analytic(psi, spec, 1.0 + dt / 2);
    res.push_back(continuity_residual(a, b, dt, ph).max_norm);
  }
  CHECK(std::log2(res[0] / res[1]) > 1.9);
  CHECK(std::log2(res[1] / res[2]) > 1.9);

  const auto ground = AnalyticState::coherent(ph, {1.0}, {cplx{0.0, 0.0}});
  const GridWave g0 = GridWave::from_analytic(ground, spec, 0.0);
  const GridWave g1 = GridWave::from_analytic(ground, spec, 0.3);
  CHECK(continuity_residual(g0, g1, 0.3, ph).max_norm < 1e-12);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  GridWave p = GridWave::from_analytic(psi, spec, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] *= u(rng);
  const GridWave q0 = GridWave::from_analytic(psi, spec, 1.0 - 0.005);
  CHECK(continuity_residual(q0, p, 0.01, ph).max_norm > 1e-2);
}

TEST_CASE("central divergence is second order in the spacing") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.7}, {0.0});
  std::vector<double> res;
  for (int m : {128, 256, 512}) {
    const auto spec = GridSpec::centered({m}, {40.0});
    const double dt = 1e-4;
    const GridWave a = GridWave::from_analytic(psi, spec, 1.0 - dt / 2);
    const GridWave b = GridWave::from_analytic(psi, spec, 1.0 + dt / 2);
    res.push_back(continuity_residual(a, b, dt, ph, Divergence::Central).max_norm);
  }
  CHECK(std::log2(res[0] / res[1]) > 1.9);
  CHECK(std::log2(res[1] / res[2]) > 1.9);
}

TEST_CASE("grid oracle against the analytic oracle") {
  const Physics ph = Physics::uniform(1);
  const auto psi = AnalyticState::free_gaussian(ph, {1.0}, {0.3}, {0.0});
  const GridWave w = GridWave::from_analytic(psi, GridSpec::centered({512}, {40.0}), 0.0);
  const GridOracle oracle(w, psi.potential(), ph, 1e-3, 0.5);
  CHECK(oracle.snapshot_count() == 501);
  const AnalyticOracle exact(psi);
  const auto table = shared_index_table(1, 4);
  std::vector<cplx> g(static_cast<std::size_t>(table->size())), a(g.size());
  for (double t : {0.0, 0.1234567, 0.25, 0.5}) {
    const std::vector<double> q{0.4 + t};
    oracle.momentums(t, q, *table, 4, g);
    exact.momentums(t, q, *table, 4, a);
    for (int r = 1; r < table->size(); ++r) CHECK(std::abs(g[static_cast<std::size_t>(r)] - a[static_cast<std::size_t>(r)]) < 1e-7);
  }
  CHECK_THROWS_AS(oracle.momentums(0.7, std::vector<double>{0.0}, *table, 4, g), OracleUnavailable);
}

TEST_CASE("snapshot files") {
  const Physics ph{1.0, {1.0, 1.0}};
  const auto psi = AnalyticState::free_gaussian(ph, {1.0, 1.0}, {0.0, 1.0}, {0.0, 0.0});
  GridWave w = GridWave::from_analytic(psi, GridSpec::centered({16, 24}, {12.0, 14.0}, {0.5, -1.0}), 0.25);
  const auto dir = std::filesystem::temp_directory_path() / "jetqd_snapshot_test";
  std::filesystem::create_directories(dir);
  write_snapshot(dir / "w.bin", w);
  write_snapshot_sidecar(dir / "w.json", w, "test");
  const GridWave r = read_snapshot(dir / "w.bin");
  CHECK(r.t == 0.25);
  CHECK(r.spec().points == w.spec().points);
  CHECK(r.spec().lower == w.spec().lower);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(r[i] == w[i]);
  std::ifstream side(dir / "w.json");
  std::stringstream ss;
  ss << side.rdbuf();
  CHECK(ss.str().find("\"points\"") != std::string::npos);
  {
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "not a snapshot";
  }
  CHECK_THROWS_AS(read_snapshot(dir / "junk.bin"), ConfigError);

  std::ostringstream csv;
  write_density_csv(csv, w, 1, 0.5);
  std::istringstream is(csv.str());
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 24);
  std::filesystem::remove_all(dir);
}
