#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "jetqd/spin.hpp"

using namespace jetqd;

namespace {

const cplx I{0.0, 1.0};

double spinor_distance(const Spinor& a, const Spinor& b) { return std::abs(a.u - b.u) + std::abs(a.v - b.v); }

}  // namespace

TEST_CASE("spinor charts") {
  const auto sp = Spinor::from_euler(0.4, 1.2, -0.9);
  CHECK(sp.norm() == doctest::Approx(1.0).epsilon(1e-15));
  const auto e = sp.euler();
  CHECK(spinor_distance(Spinor::from_euler(e[0], e[1], e[2]), sp) < 1e-14);
  CHECK(spinor_distance(Spinor::from_real_chart(sp.real_chart()), sp) < 1e-16);
  const auto n = sp.spin_vector();
  CHECK(n[0] == doctest::Approx(std::sin(1.2) * std::cos(-0.9)));
  CHECK(n[1] == doctest::Approx(std::sin(1.2) * std::sin(-0.9)));
  CHECK(n[2] == doctest::Approx(std::cos(1.2)));
  for (const auto& r : random_spinors(50, 4)) CHECK(r.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("coherent overlap") {
  const auto om = Spinor::from_euler(0.2, 0.8, 1.9);
  const cplx ub = std::conj(om.u);
  const cplx vb = std::conj(om.v);
  CHECK(std::abs(coherent_overlap(SpinState::basis(1, 1), om) - ub) < 1e-15);
  CHECK(std::abs(coherent_overlap(SpinState::basis(1, -1), om) - vb) < 1e-15);
  CHECK(std::abs(coherent_overlap(SpinState::basis(2, 0), om) - std::sqrt(2.0) * ub * vb) < 1e-15);

  SUBCASE("explicit expansion equals the rotated maximal state") {
    for (int twice_s : {1, 2, 3, 4}) {
      const Eigen::VectorXcd top = SpinState::basis(twice_s, twice_s).vector();
      const Eigen::VectorXcd rotated = rotation_operator(twice_s, 0.2, 0.8, 1.9) * top;
      CHECK((rotated - SpinState::coherent(twice_s, om).vector()).norm() < 1e-13);
    }
  }

  SUBCASE("overlap is the scalar product with the coherent state") {
    const auto psi = SpinState::random(3, 9);
    const cplx direct = SpinState::coherent(3, om).vector().dot(psi.vector());
    CHECK(std::abs(direct - coherent_overlap(psi, om)) < 1e-14);
  }

  SUBCASE("gradient") {
    const auto psi = SpinState::random(4, 2);
    const auto g = coherent_gradient(psi, om);
    const double h = 1e-6;
    const auto f = SpinFunction::from_state(psi);
    CHECK(std::abs(g[0] - (f.value(ub + h, vb) - f.value(ub - h, vb)) / (2 * h)) < 1e-8);
    CHECK(std::abs(g[1] - (f.value(ub, vb + h) - f.value(ub, vb - h)) / (2 * h)) < 1e-8);
    CHECK(std::abs(g[1] - (f.value(ub, vb + I * h) - f.value(ub, vb - I * h)) / (2.0 * I * h)) < 1e-8);
  }
}

TEST_CASE("homogeneity constraint") {
  const auto samples = random_spinors(100, 17);
  CHECK(homogeneity_check(SpinFunction::from_state(SpinState::random(1, 3)), samples, 0.5) < 1e-12);
  CHECK(homogeneity_check(SpinFunction::from_state(SpinState::random(2, 3)), samples, 1.0) < 1e-12);
  CHECK(homogeneity_check(SpinFunction::from_state(SpinState::random(5, 3)), samples, 2.5) < 1e-12);

  SpinFunction mixed{[](cplx ub, cplx vb) { return ub + ub * vb; },
                     [](cplx ub, cplx vb) { return std::array<cplx, 2>{1.0 + vb, ub}; }};
  CHECK(homogeneity_check(mixed, samples, 0.5) > 0.1);
}

TEST_CASE("spinor precession") {
  PrecessSettings st;
  st.dt = 1e-3;

  SUBCASE("zero field leaves the spinor fixed") {
    const auto sp = Spinor::from_euler(0.1, 0.5, 0.2);
    const auto tr = precess(sp, constant_field({0, 0, 0}), 2.0, st);
    CHECK(spinor_distance(tr.spinors.back(), sp) == 0.0);
  }

  SUBCASE("field along z multiplies u and v by opposite phases") {
    const auto sp = Spinor::from_euler(0.1, 0.5, 0.2);
    const auto tr = precess(sp, constant_field({0, 0, 2.0}), 3.0, st);
    CHECK(tr.t.back() == doctest::Approx(3.0));
    CHECK(std::abs(tr.spinors.back().u - sp.u * std::polar(1.0, 3.0)) < 1e-11);
    CHECK(std::abs(tr.spinors.back().v - sp.v * std::polar(1.0, -3.0)) < 1e-11);
    CHECK(tr.max_norm_drift_per_step < 1e-12);
  }

  SUBCASE("field along x flips the spin") {
    const auto tr = precess(Spinor{}, constant_field({1.5, 0, 0}), 4.0, st);
    for (std::size_t k = 0; k < tr.t.size(); k += 400) {
      const double expected = std::pow(std::sin(1.5 * tr.t[k] / 2.0), 2);
      CHECK(std::norm(tr.spinors[k].v) == doctest::Approx(expected).epsilon(1e-10));
    }
  }

  SUBCASE("general field matches the exponential") {
    const Vec3 b{0.3, -0.7, 1.1};
    const auto sp = Spinor::from_euler(1.0, 2.0, 0.5);
    const auto tr = precess(sp, constant_field(b), 5.0, st);
    CHECK(spinor_distance(tr.spinors.back(), precess_exact(sp, b, 1.0, 1.0, 5.0)) < 1e-11);
  }

  SUBCASE("time-dependent field") {
    // B = B(t) ẑ integrates to the accumulated phase ∫B dt.
    const auto sp = Spinor::from_euler(0.0, 1.0, 0.0);
    const auto tr = precess(sp, [](double t) { return Vec3{0.0, 0.0, std::cos(t)}; }, 2.0, st);
    CHECK(std::abs(tr.spinors.back().u - sp.u * std::polar(1.0, 0.5 * std::sin(2.0))) < 1e-12);
  }

  SUBCASE("csv") {
    st.record_every = 500;
    const auto tr = precess(Spinor{}, constant_field({1, 0, 0}), 1.0, st);
    CHECK(tr.t.size() == 3);
    std::ostringstream os;
    tr.write_csv(os);
    CHECK(os.str().rfind("t,re_u,im_u,re_v,im_v,norm\n", 0) == 0);
  }
}

TEST_CASE("coherent overlap is constant along the precessing spinor") {
  const Vec3 b{0.4, 0.2, -0.9};
  const auto psi = SpinState::random(3, 5);
  const auto sp = Spinor::from_euler(0.3, 0.9, 2.2);
  const cplx start = coherent_overlap(psi, sp);
  for (double t : {0.5, 1.7, 4.0}) {
    const auto moved = precess_exact(sp, b, 1.3, 1.0, t);
    CHECK(std::abs(coherent_overlap(evolve_state(psi, b, 1.3, 1.0, t), moved) - start) < 1e-13);
  }
}

TEST_CASE("velocity terms") {
  JetState js(3, 2);
  js.q = {0.1, 0.2, 0.3};
  js.p(MultiIndex{1, 0, 0}) = {0.5, 0.2};
  js.p(MultiIndex{0, 1, 0}) = {-1.0, 0.1};
  js.p(MultiIndex{0, 0, 1}) = {2.0, -0.3};
  const auto phys = Physics{1.0, {1.0, 2.0, 4.0}};
  const auto sp = Spinor::from_euler(0.3, 0.9, 2.2);

  const auto plain = spin_velocity_terms(js, phys, sp, {});
  CHECK(plain.spatial == velocity(js, phys));
  CHECK(std::abs(plain.ubar_dot) == 0.0);

  SpinCoupling c;
  c.b = {0.2, 0.5, -1.0};
  c.gamma = 1.7;
  c.charge_over_c = 0.5;
  c.a = {1.0, 1.0, 1.0};
  const auto r = spin_velocity_terms(js, phys, sp, c);
  CHECK(r.spatial[1] == doctest::Approx(plain.spatial[1] - 0.25));
  const auto rate = spinor_rate(sp, c.b, c.gamma, 1.0);
  CHECK(spinor_distance(r.spinor_dot, rate) < 1e-15);
}

TEST_CASE("space and spin momentums decouple in a uniform field") {
  const auto uniform = decoupling_check(1, 3, true, 3);
  CHECK(uniform.checked > 0);
  CHECK(uniform.decoupled);
  CHECK(uniform.max_mixed_rate == 0.0);
  const auto graded = decoupling_check(1, 3, false, 3);
  CHECK_FALSE(graded.decoupled);
  CHECK(graded.max_mixed_rate > 1e-3);
  CHECK(decoupling_check(3, 2, true, 8).decoupled);
}

TEST_CASE("larmor acceptance quantities") {
  SpinCheckSettings st;
  st.turns = 1.0;
  st.dt = 1e-3;
  const auto rep = spin_check(st);
  CHECK(rep.phase_error < 1e-9);
  CHECK(rep.frequency_error < 1e-9);
  CHECK(rep.max_norm_drift_per_step < 1e-12);
  CHECK(rep.homogeneity_residual < 1e-12);
  CHECK(rep.overlap_variation < 1e-8);
  CHECK(rep.pass());
}
