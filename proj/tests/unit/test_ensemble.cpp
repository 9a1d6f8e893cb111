#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "jetqd/ensemble.hpp"

using namespace jetqd;

namespace {

AnalyticState unit_gaussian(double k0 = 0.0, double x0 = 0.0) {
  return AnalyticState::free_gaussian(Physics::uniform(1), {1.0}, {k0}, {x0});
}

AnalyticState double_peak() {
  const auto phys = Physics::uniform(1);
  return AnalyticState::superposition({{1.0, AnalyticState::free_gaussian(phys, {1.0}, {0.0}, {-3.0})},
                                       {1.0, AnalyticState::free_gaussian(phys, {1.0}, {0.0}, {3.0})}});
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("gaussian samples reproduce the density moments") {
  const std::size_t n = 100000;
  const auto e = sample_density(unit_gaussian(), 0.0, n, 7);
  const auto xs = e.coordinate();
  REQUIRE(xs.size() == n);
  const double sd = std::sqrt(0.5);
  CHECK(std::abs(mean(xs)) < 4.0 * sd / std::sqrt(double(n)));
  CHECK(variance(xs) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(e.seed == 7);
  CHECK(e.provenance.find("inverse-cdf") != std::string::npos);
}

TEST_CASE("sampling is deterministic for a seed") {
  const auto a = sample_density(unit_gaussian(), 0.0, 100, 11);
  const auto b = sample_density(unit_gaussian(), 0.0, 100, 11);
  const auto c = sample_density(unit_gaussian(), 0.0, 100, 12);
  CHECK(a.x == b.x);
  CHECK(a.x != c.x);
}

TEST_CASE("double peak splits evenly") {
  const std::size_t n = 100000;
  const auto xs = sample_density(double_peak(), 0.0, n, 3).coordinate();
  const auto left = std::count_if(xs.begin(), xs.end(), [](double x) { return x < 0.0; });
  CHECK(std::abs(double(left) - n / 2.0) < 3.0 * std::sqrt(n / 4.0));
}

TEST_CASE("single sample lies inside the support") {
  const auto e = sample_density(unit_gaussian(), 0.0, 1, 5);
  REQUIRE(e.size() == 1);
  CHECK(std::abs(e.x[0]) < 10.0);
}

TEST_CASE("tabulated inverse cdf") {
  // ρ ∝ x on [0, 1]: F(x) = x², inverse √u
  TabulatedDensity rho({2}, {0.0}, {1.0}, {0.0, 2.0});
  std::array<double, 1> u{0.25}, out{};
  rho.transform(u, out);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rho.cdf(0.3) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(rho.density(std::array<double, 1>{0.5}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(TabulatedDensity({2}, {0.0}, {1.0}, {0.0, -1.0}), std::invalid_argument);
}

TEST_CASE("kolmogorov distribution") {
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_survival(1.18) == doctest::Approx(0.1234538094297657).epsilon(1e-10));
  CHECK(kolmogorov_survival(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-10));
  CHECK(kolmogorov_survival(2.5) == doctest::Approx(7.453306344157342e-06).epsilon(1e-8));
  CHECK(ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
}

TEST_CASE("KS null distribution over seeded repeats") {
  const auto rho = TabulatedDensity::from_analytic(unit_gaussian(), 0.0);
  int accepted = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto e = sample_density(rho, 2000, seed);
    accepted += equivariance_test(e, rho).pass ? 1 : 0;
  }
  CHECK(accepted >= 98);
}

TEST_CASE("KS rejects a mismatched width") {
  const auto e = sample_density(unit_gaussian(), 0.0, 20000, 9);
  const auto wide = AnalyticState::free_gaussian(Physics::uniform(1), {2.0}, {0.0}, {0.0});
  const auto r = equivariance_test(e, TabulatedDensity::from_analytic(wide, 0.0));
  CHECK_FALSE(r.pass);
  CHECK(r.p_value < 1e-10);
}

TEST_CASE("uniform field translates rigidly") {
  const auto e = sample_density(unit_gaussian(), 0.0, 200, 1);
  const auto moved = advect(e, UniformVelocity({0.75}), 2.0, {Method::Rk4, 0.1, 0.0});
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(moved.x[i] == doctest::Approx(e.x[i] + 1.5).epsilon(1e-13));
  CHECK(moved.t == 2.0);
}

TEST_CASE("free gaussian ensemble stays distributed as |psi|^2") {
  const auto psi = unit_gaussian();
  const auto e = sample_density(psi, 0.0, 100000, 21);
  const auto moved = advect(e, AnalyticVelocity(psi), 2.0);
  CHECK(moved.excluded_count() == 0);
  CHECK(order_preserved(e, moved));
  const auto r = equivariance_test(moved, TabulatedDensity::from_analytic(psi, 2.0), 0.02);
  CHECK(r.pass);
  CHECK(r.statistic < 0.02);
  // Bohmian trajectories of the spreading packet: x(t) = x0 √(1 + t²)
  for (std::size_t i = 0; i < 50; ++i) CHECK(moved.x[i] == doctest::Approx(e.x[i] * std::sqrt(5.0)).epsilon(1e-6));
}

TEST_CASE("2D chi-square equivariance") {
  const auto phys = Physics::uniform(2);
  const auto psi = AnalyticState::free_gaussian(phys, {1.0, 1.5}, {0.5, -0.3}, {0.0, 1.0});
  const auto rho0 = TabulatedDensity::from_analytic(psi, 0.0, 257);
  const auto e = sample_density(rho0, 20000, 4);
  const auto moved = advect(e, AnalyticVelocity(psi), 1.0);
  const auto r = equivariance_test(moved, TabulatedDensity::from_analytic(psi, 1.0, 257));
  CHECK(r.test == "chi2");
  CHECK(r.bins > 20);
  CHECK(r.pass);
  const auto stale = equivariance_test(e, TabulatedDensity::from_analytic(psi, 1.0, 257));
  CHECK_FALSE(stale.pass);
}

TEST_CASE("grid sampling and grid velocity agree with the analytic flow") {
  const auto psi = unit_gaussian(0.5);
  const auto spec = GridSpec::centered({512}, {40.0});
  const auto w = GridWave::from_analytic(psi, spec, 0.0);
  const auto e = sample_density(w, 20000, 8);
  CHECK(equivariance_test(e, TabulatedDensity::from_analytic(psi, 0.0)).pass);

  GridVelocity field(w, Potential::free(1), Physics::uniform(1), 1e-3, 1.0, 10);
  Ensemble few = e;
  few.x.resize(200);
  few.excluded.resize(200);
  const auto a = advect(few, field, 1.0, {Method::Rk4, 1e-2, 0.0});
  const auto b = advect(few, AnalyticVelocity(psi), 1.0);
  for (std::size_t i = 0; i < few.size(); ++i) CHECK(a.x[i] == doctest::Approx(b.x[i]).epsilon(1e-5));
}

TEST_CASE("dynamics-integrated positions agree with the reference field") {
  const auto psi = unit_gaussian(0.3);
  const auto e = sample_density(psi, 0.0, 300, 2);
  Model model{Physics::uniform(1), Potential::free(1), Closure::from_oracle(std::make_shared<AnalyticOracle>(psi))};
  IntegrateSettings s;
  s.tol = 1e-10;
  const auto a = advect_dynamics(e, model, 2, 1.5, s);
  const auto b = advect(e, AnalyticVelocity(psi), 1.5);
  double worst = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(a.x[i] - b.x[i]));
  CHECK(worst < 1e-6);
}

TEST_CASE("gibbs entropy") {
  const auto psi = unit_gaussian();
  GridSpec spec{{4000}, {-20.0}, {40.0}};
  const auto w = GridWave::from_analytic(psi, spec, 0.0);
  SUBCASE("maximum at |psi|^2") { CHECK(std::abs(gibbs_entropy(w.density(), w)) < 1e-10); }
  SUBCASE("uniform density against a unit gaussian") {
    // Nodes at cell midpoints put the jumps at ±5 on cell edges (midpoint rule).
    GridSpec fine{{4000}, {-20.0 + 0.005}, {40.0}};
    const auto wf = GridWave::from_analytic(psi, fine, 0.0);
    std::vector<double> rho(fine.size(), 0.0);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (std::abs(fine.x(0, static_cast<int>(i))) < 5.0) rho[i] = 0.1;
    }
    // ∫_{-5}^{5} (1/10) ln(10 e^{-x²}/√π) dx = ln(10/√π) - 25/3
    CHECK(std::abs(gibbs_entropy(rho, wf) - (std::log(10.0 / std::sqrt(std::numbers::pi)) - 25.0 / 3.0)) < 1e-5);
  }
  SUBCASE("second-order decrease under perturbation") {
    const auto base = w.density();
    auto perturbed = [&](double eps) {
      std::vector<double> rho(base);
      for (std::size_t i = 0; i < rho.size(); ++i) rho[i] *= 1.0 + eps * std::sin(spec.x(0, static_cast<int>(i)));
      return gibbs_entropy(rho, w);
    };
    const double s1 = perturbed(0.1);
    const double s2 = perturbed(0.05);
    CHECK(s1 < 0.0);
    CHECK(s2 < 0.0);
    CHECK(s1 / s2 == doctest::Approx(4.0).epsilon(0.02));
  }
  SUBCASE("sample histogram") {
    const auto e = sample_density(w, 50000, 3);
    const auto h = histogram_density(e, GridSpec{{400}, {-20.0}, {40.0}});
    double total = 0.0;
    for (double v : h) total += v * 0.1;
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("classical gibbs check") {
  const double volume = 3.0;
  const auto r = classical_gibbs_check(volume, standard_trials(volume));
  CHECK(r.uniform_maximal);
  CHECK(r.uniform == doctest::Approx(std::log(volume)));
  for (const auto& [name, s] : r.trials) {
    if (name == "uniform" || name == "two-level(split=0.25,p=0.25)") {
      CHECK(s == doctest::Approx(r.uniform).epsilon(1e-12));
    } else {
      CHECK(s < r.uniform - 1e-4);
    }
    if (name == "two-level(split=0.5,p=0.9)") {
      const double exact = -0.9 * std::log(0.9 / 1.5) - 0.1 * std::log(0.1 / 1.5);
      CHECK(s == doctest::Approx(exact).epsilon(1e-12));
    }
  }
  const auto spike = classical_gibbs_check(volume, {{"spike", [](double x) { return x < 0.3 ? 10.0 : 0.0; }}});
  CHECK(spike.uniform_maximal);
  CHECK(spike.to_json()["trials"].size() == 1);
}

TEST_CASE("ensemble csv") {
  auto e = sample_density(unit_gaussian(), 0.0, 3, 1);
  e.excluded[1] = 1;
  std::ostringstream os;
  e.write_csv(os);
  CHECK(os.str().rfind("id,x,excluded\n0,", 0) == 0);
  CHECK(e.excluded_count() == 1);
  CHECK(e.coordinate().size() == 2);
}
