#include <doctest.h>

#include <cmath>
#include <sstream>

#include "jetqd/dynamics.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/onestep.hpp"

using namespace jetqd;

namespace {

constexpr cplx kI{0.0, 1.0};

OneStepProblem problem(std::vector<cplx> p, Potential pot = Potential::free(1), double v = 0.0, double eps = 1e-3) {
  OneStepProblem prob;
  prob.physics = Physics::uniform(1);
  prob.state = JetState(1, static_cast<int>(p.size()) - 1);
  prob.state.q = {0.0};
  for (std::size_t k = 0; k < p.size(); ++k) prob.state.at(static_cast<int>(k)) = p[k];
  prob.potential = std::move(pot);
  prob.v = v;
  prob.eps = eps;
  return prob;
}

}  // namespace

TEST_CASE("plane wave moves with its own momentum") {
  const double k0 = 2.0;
  auto prob = problem({0.0, k0, 0.0}, Potential::free(1), k0);
  const auto res = propagate_onestep(prob);
  CHECK(std::abs(res.state.at(1) - k0) < 1e-10);
  CHECK(std::abs(res.state.at(2)) < 1e-9);
  CHECK(std::abs(res.state.at(0) - prob.eps * k0 * k0 / 2.0) < 1e-12);
  CHECK(res.state.q[0] == doctest::Approx(k0 * prob.eps));
  CHECK(res.tail < 1e-10);
}

TEST_CASE("free gaussian matches the closed-form kernel") {
  const double eps = 1e-3;
  const auto res = propagate_onestep(problem({0.0, 0.0, kI}));
  // ψ(x, ε) = exp(-x²/2(1+iε)) / √(1+iε)
  const cplx p2 = kI / (1.0 + kI * eps);
  const cplx p0 = 0.5 * kI * std::log(1.0 + kI * eps);
  CHECK(std::abs(res.state.at(2) - p2) < 1e-10);
  CHECK(std::abs(res.state.at(0) - p0) < 1e-12);
  CHECK(std::abs(res.state.at(1)) < 1e-12);
  CHECK(std::abs(res.state.at(2) - (kI + eps)) < 5e-6);
}

TEST_CASE("harmonic potential shifts the curvature by -eps m omega^2") {
  const double eps = 1e-3;
  const double omega = 1.3;
  const auto free = propagate_onestep(problem({0.0, 0.0, kI}));
  const auto harm = propagate_onestep(problem({0.0, 0.0, kI}, Potential::harmonic({omega}, {1.0})));
  CHECK(std::abs(harm.state.at(1)) < 1e-12);
  CHECK(std::abs(harm.state.at(2) - free.state.at(2) + eps * omega * omega) < 5e-6);
}

TEST_CASE("residual against the first-order update scales as eps squared") {
  SUBCASE("gaussian") {
    const auto cmp = compare_to_ode(problem({0.0, 0.0, kI}));
    CHECK(cmp.ratio[2] == doctest::Approx(4.0).epsilon(0.15));
    CHECK(cmp.ratio[0] == doctest::Approx(4.0).epsilon(0.15));
  }
  SUBCASE("plane wave is exact") {
    const auto cmp = compare_to_ode(problem({0.0, 1.5, 0.0}, Potential::free(1), 1.5));
    for (std::size_t k = 1; k < cmp.residual.size(); ++k) CHECK(cmp.residual[k] < 1e-10);
  }
  SUBCASE("cubic log-wave in a quartic well") {
    auto pot = Potential::polynomial(1, {{MultiIndex{2}, 0.5}, {MultiIndex{3}, 0.1}, {MultiIndex{4}, 0.05}});
    auto prob = problem({0.2, 0.4, cplx(0.3, 1.0), cplx(0.2, 0.1)}, pot, 0.7);
    const auto cmp = compare_to_ode(prob);
    for (std::size_t k = 0; k < cmp.ratio.size(); ++k) {
      INFO("order " << k << " residual " << cmp.residual[k]);
      CHECK(cmp.residual[k] > 1e-9);
      CHECK(cmp.residual[k] < 1e-4);
      CHECK(cmp.ratio[k] == doctest::Approx(4.0).epsilon(0.15));
    }
  }
}

TEST_CASE("first-order coefficient reproduces H_sigma") {
  auto pot = Potential::polynomial(1, {{MultiIndex{1}, -0.3}, {MultiIndex{2}, 0.5}, {MultiIndex{4}, 0.1}});
  auto prob = problem({0.0, 0.5, cplx(0.1, 0.8), cplx(-0.2, 0.05), cplx(0.05, 0.0)}, pot, 0.25);
  prob.out_order = 3;
  const Model model{prob.physics, prob.potential, Closure::zero()};
  double prev = 0.0;
  for (double eps : {1e-3, 5e-4, 2.5e-4}) {
    prob.eps = eps;
    const auto res = propagate_onestep(prob);
    double worst = 0.0;
    for (int k = 0; k <= 3; ++k) {
      const cplx rate = (res.state.at(k) - prob.state.at(k)) / eps;
      const cplx expected = prob.state.at(k + 1) * prob.v - h_sigma(prob.state, model, MultiIndex{k});
      worst = std::max(worst, std::abs(rate - expected));
    }
    if (prev > 0.0) CHECK(worst < 0.6 * prev);
    CHECK(worst < 1e-2);
    prev = worst;
  }
}

TEST_CASE("one-step errors") {
  auto narrow = problem({0.0, 0.0, kI});
  narrow.half_width = 2.0;
  CHECK_THROWS_AS(propagate_onestep(narrow), QuadratureDivergence);

  auto growing = problem({0.0, 0.0, -kI});
  CHECK_THROWS_AS(propagate_onestep(growing), std::invalid_argument);

  auto quintic = problem({0.0, 0.0, kI}, Potential::polynomial(1, {{MultiIndex{5}, 1.0}}));
  CHECK_THROWS_AS(propagate_onestep(quintic), std::invalid_argument);

  auto zero_step = problem({0.0, 0.0, kI});
  zero_step.eps = 0.0;
  CHECK_THROWS_AS(propagate_onestep(zero_step), std::invalid_argument);
}

TEST_CASE("comparison table csv") {
  const auto cmp = compare_to_ode(problem({0.0, 0.0, kI}));
  std::ostringstream os;
  cmp.write_csv(os);
  CHECK(os.str().rfind("sigma,residual,residual_half,ratio\n0,", 0) == 0);
  CHECK(os.str().find("\nxx,") != std::string::npos);
}
