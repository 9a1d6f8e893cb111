#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "jetqd/analytic.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/jetstate.hpp"

using namespace jetqd;

TEST_CASE("taylor_eval trivial cases") {
  JetState s(1, 2);
  CHECK(taylor_eval(s, std::vector<double>{0.3}, 1.0) == cplx{1.0, 0.0});
  s.p0() = 0.8;
  const cplx v = taylor_eval(s, std::vector<double>{2.0}, 1.0);
  CHECK(std::abs(v) == doctest::Approx(1.0));
  CHECK(std::arg(v) == doctest::Approx(0.8));
}

TEST_CASE("taylor_eval reproduces a gaussian") {
  const double a = 1.0, hbar = 1.0;
  JetState s(1, 2);
  s.p(MultiIndex{2}) = cplx{0.0, hbar / (a * a)};
  s.p0() = cplx{0.0, -hbar} * (-0.25 * std::log(std::numbers::pi * a * a));
  const cplx v = taylor_eval(s, std::vector<double>{a}, hbar);
  CHECK(std::abs(v - std::pow(std::numbers::pi * a * a, -0.25) * std::exp(-0.5)) < 1e-15);
  CHECK(taylor_eval(s, std::vector<double>{0.0}, hbar) == std::exp(cplx{0, 1} * s.p0()));
}

TEST_CASE("to_sr and velocity") {
  const double hbar = 0.5;
  JetState s(2, 2);
  s.p(MultiIndex{1, 0}) = 3.0;
  s.p(MultiIndex{0, 1}) = cplx{0.0, 2.0};
  s.p(MultiIndex{2, 0}) = cplx{0.0, hbar / 4.0};
  s.p0() = cplx{3.0, -hbar * 2.0};
  const auto sr = to_sr(s, hbar);
  CHECK(sr[0].S == 3.0);
  CHECK(sr[0].R == 2.0);
  CHECK(sr[1].S == 3.0);
  CHECK(sr[1].R == 0.0);
  CHECK(sr[static_cast<std::size_t>(s.table().rank(MultiIndex{2, 0}))].R == doctest::Approx(-0.25));
  for (int r = 0; r < s.size(); ++r) CHECK(from_action_pair(sr[static_cast<std::size_t>(r)], hbar) == s.at(r));
  const Physics ph{hbar, {2.0, 1.0}};
  const auto v = velocity(s, ph);
  CHECK(v[0] == 1.5);
  CHECK(v[1] == 0.0);
  CHECK(v[0] == sr[1].S / ph.m(0));
}

TEST_CASE("from_wavefunction_analytic") {
  const Physics ph = Physics::uniform(1);
  const auto g = AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {0.0});
  const auto s = from_wavefunction_analytic(g, std::vector<double>{0.0}, 0.0, 2);
  CHECK(std::abs(s.p(MultiIndex{1})) < 1e-15);
  CHECK(std::abs(s.p(MultiIndex{2}) - cplx{0, 1}) < 1e-15);
  const auto pw = AnalyticState::free_gaussian(ph, {1.0}, {1.7}, {0.0});
  const auto s2 = from_wavefunction_analytic(pw, std::vector<double>{0.0}, 0.0, 2);
  CHECK(s2.p(MultiIndex{1}).real() == doctest::Approx(1.7));
  CHECK(std::abs(s2.p(MultiIndex{2}) - cplx{0, 1}) < 1e-15);
  for (double x : {-0.1, 0.05, 0.1}) {
    const cplx a = taylor_eval(s2, std::vector<double>{x}, 1.0);
    CHECK(std::abs(a - pw.psi(std::vector<double>{x}, 0.0)) < 1e-14);
  }
  const auto odd = AnalyticState::superposition({{1.0, AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {-2.0})},
                                                 {-1.0, AnalyticState::free_gaussian(ph, {1.0}, {0.0}, {2.0})}});
  CHECK_THROWS_AS(from_wavefunction_analytic(odd, std::vector<double>{0.0}, 0.0, 2), NodeError);
}

TEST_CASE("json round trip") {
  JetState s(2, 3);
  s.t = 0.25;
  s.q = {0.1, -0.2};
  for (int r = 0; r < s.size(); ++r) s.at(r) = cplx{0.1 * r, -0.3 * r};
  const auto j = to_json(s);
  CHECK(j["p"].contains("xxy"));
  const auto back = jetstate_from_json(j);
  CHECK(back.order() == 3);
  CHECK(back.q == s.q);
  for (int r = 0; r < s.size(); ++r) CHECK(back.at(r) == s.at(r));
}
