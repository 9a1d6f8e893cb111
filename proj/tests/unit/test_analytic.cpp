#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "jetqd/analytic.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/logderiv.hpp"

using namespace jetqd;

namespace {

// |iħψ_t - (-ħ²/2m Δψ + Uψ)| / |ψ| with ψ_t by central differences.
double schrodinger_residual(const AnalyticState& s, std::vector<double> x, double t) {
  const auto& ph = s.physics();
  const int n = s.dim();
  const auto table = shared_index_table(n, 2);
  std::vector<cplx> d(static_cast<std::size_t>(table->size()));
  s.psi_derivatives(x, t, *table, 2, d);
  const double h = 1e-5;
  const cplx psit = (s.psi(x, t + h) - s.psi(x, t - h)) / (2 * h);
  cplx rhs = s.potential().value(x) * d[0];
  for (int i = 0; i < n; ++i) {
    rhs += -ph.hbar * ph.hbar / (2 * ph.m(i)) * d[static_cast<std::size_t>(table->rank(MultiIndex(n).extend(i).extend(i)))];
  }
  return std::abs(cplx{0, ph.hbar} * psit - rhs) / std::abs(d[0]);
}

}  // namespace

TEST_CASE("free gaussian closed form") {
  const auto s = AnalyticState::free_gaussian(Physics::uniform(1), {1.0}, {0.0}, {0.0});
  const double x = 0.7, t = 1.3;
  const cplx one_it{1.0, t};
  const cplx expected = std::pow(std::numbers::pi, -0.25) / std::sqrt(one_it) * std::exp(-x * x / (2.0 * one_it));
  CHECK(std::abs(s.psi(std::vector<double>{x}, t) - expected) < 1e-14);
  CHECK(s.norm_squared() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("analytic states satisfy the Schrödinger equation") {
  const Physics p1{1.0, {1.0}};
  const Physics p2{0.7, {1.3, 0.9}};
  std::vector<AnalyticState> states{
      AnalyticState::free_gaussian(p1, {1.0}, {1.5}, {-0.5}),
      AnalyticState::free_gaussian(p2, {0.8, 1.2}, {0.3, -1.0}, {0.2, 0.1}),
      AnalyticState::coherent(p1, {1.0}, {cplx{1.0, 0.3}}),
      AnalyticState::coherent(p2, {2.0, 0.5}, {cplx{0.4, -0.2}, cplx{-0.3, 0.6}}),
      AnalyticState::superposition({{1.0, AnalyticState::free_gaussian(p1, {1.0}, {0.0}, {-3.0})},
                                    {1.0, AnalyticState::free_gaussian(p1, {1.0}, {0.0}, {3.0})}}),
  };
  for (const auto& s : states) {
    for (double t : {0.0, 0.4, 2.1}) {
      std::vector<double> x(static_cast<std::size_t>(s.dim()), 0.3);
      CHECK(schrodinger_residual(s, x, t) < 1e-6);
    }
  }
}

TEST_CASE("superposition is normalized") {
  const Physics p{1.0, {1.0}};
  const auto s = AnalyticState::superposition({{1.0, AnalyticState::free_gaussian(p, {1.0}, {0.0}, {-1.0})},
                                               {cplx{0, 1}, AnalyticState::free_gaussian(p, {0.5}, {2.0}, {1.0})}});
  double sum = 0.0;
  const double h = 1e-3;
  for (double x = -15; x <= 15; x += h) sum += s.density(std::vector<double>{x}, 0.8) * h;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("log-derivative recursion matches exact log-derivatives") {
  const Physics p{1.0, {1.0, 1.0}};
  const auto s = AnalyticState::free_gaussian(p, {1.0, 0.7}, {0.4, -0.2}, {0.1, 0.3});
  const int N = 6;
  const auto table = shared_index_table(2, N);
  std::vector<cplx> exact(static_cast<std::size_t>(table->size()));
  std::vector<cplx> via(static_cast<std::size_t>(table->size()));
  std::vector<cplx> d(static_cast<std::size_t>(table->size()));
  const std::vector<double> x{0.4, -0.6};
  s.momentums(x, 0.9, *table, N, exact);
  s.psi_derivatives(x, 0.9, *table, N, d);
  shared_log_plan(2, N)->apply(d, via);
  for (int r = 1; r < table->size(); ++r) {
    const cplx p_via = cplx{0, -1} * via[static_cast<std::size_t>(r)];
    CHECK(std::abs(p_via - exact[static_cast<std::size_t>(r)]) < 1e-10 * (1 + std::abs(exact[static_cast<std::size_t>(r)])));
  }
}

TEST_CASE("node detection") {
  const Physics p{1.0, {1.0}};
  const auto s = AnalyticState::superposition({{1.0, AnalyticState::free_gaussian(p, {1.0}, {0.0}, {-2.0})},
                                               {-1.0, AnalyticState::free_gaussian(p, {1.0}, {0.0}, {2.0})}});
  const auto table = shared_index_table(1, 2);
  std::vector<cplx> out(3);
  CHECK_THROWS_AS(s.momentums(std::vector<double>{0.0}, 0.0, *table, 2, out), NodeError);
  CHECK_NOTHROW(s.momentums(std::vector<double>{1.0}, 0.0, *table, 2, out));
}

TEST_CASE("coherent state follows the classical orbit") {
  const Physics p{1.0, {1.0}};
  const auto s = AnalyticState::coherent(p, {1.0}, {cplx{1.0, 0.0}});
  const auto& f = s.terms().front().factors.front();
  CHECK(f.classical_x(0.0) == doctest::Approx(std::sqrt(2.0)));
  for (double t : {0.0, 0.5, 3.0}) {
    for (double x : {-1.0, 0.0, 2.0}) {
      CHECK(s.velocity(std::vector<double>{x}, t)[0] == doctest::Approx(f.classical_p(t)).epsilon(1e-12));
    }
  }
}
