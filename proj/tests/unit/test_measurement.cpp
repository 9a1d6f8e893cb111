#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "jetqd/errors.hpp"
#include "jetqd/logderiv.hpp"
#include "jetqd/measurement.hpp"

using namespace jetqd;

namespace {

std::vector<cplx> finite_differences(const Profile& f, double x, int order, double h = 1e-3) {
  // Central differences of the value, up to third order.
  auto v = [&](double s) { return f.value(x + s * h); };
  std::vector<cplx> d{v(0)};
  if (order >= 1) d.push_back((v(1) - v(-1)) / (2 * h));
  if (order >= 2) d.push_back((v(1) - 2.0 * v(0) + v(-1)) / (h * h));
  if (order >= 3) d.push_back((v(2) - 2.0 * v(1) + 2.0 * v(-1) - v(-2)) / (2 * h * h * h));
  return d;
}

void check_profile(const Profile& f, double x) {
  std::array<cplx, 4> d{};
  f.derivatives(x, 3, d);
  const auto fd = finite_differences(f, x, 3);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(d[static_cast<std::size_t>(k)] - fd[static_cast<std::size_t>(k)]) <
          1e-4 * std::max(1.0, std::abs(d[static_cast<std::size_t>(k)])));
  }
}

GridSpec line(int points, double lo, double hi) { return GridSpec{{points}, {lo}, {hi - lo}}; }

GridWave hermite_mix(const GridSpec& xs, cplx c0, cplx c1) {
  const auto h0 = Profile::hermite(0, 0.0);
  const auto h1 = Profile::hermite(1, 0.0);
  return GridWave::sample(xs, [&](std::span<const double> x) { return c0 * h0.value(x[0]) + c1 * h1.value(x[0]); });
}

double weight_where(const GridWave& joint, const std::function<bool(double, double)>& pred) {
  double s = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto p = joint.point(i);
    if (pred(p[0], p[1])) s += std::norm(joint[i]);
  }
  return s * joint.spec().cell_volume();
}

}  // namespace

TEST_CASE("profile derivatives") {
  check_profile(Profile::gaussian({-0.3, 0.2}, {0.4, -1.0}, {0.1, 0.5}), 0.7);
  check_profile(Profile::normal(1.0, 0.5), 0.6);
  check_profile(Profile::pointer(2.0), 1.1);
  check_profile(Profile::hermite(3, 0.5, 1.5), 0.2);
  check_profile(Profile::bump(0.0, 1.0, 0.3), 0.9);

  SUBCASE("hermite functions are orthonormal") {
    const auto h2 = Profile::hermite(2, 0.0, 0.7);
    const auto h3 = Profile::hermite(3, 0.0, 0.7);
    double n2 = 0.0, c23 = 0.0;
    const double dx = 1e-3;
    for (double x = -10.0; x < 10.0; x += dx) {
      n2 += std::norm(h2.value(x)) * dx;
      c23 += (std::conj(h2.value(x)) * h3.value(x)).real() * dx;
    }
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(c23) < 1e-9);
  }

  SUBCASE("peaks") {
    CHECK(Profile::pointer(3.0).peak() == doctest::Approx(1.0));
    CHECK(Profile::normal(0.0, 2.0).peak() == doctest::Approx(std::pow(8.0 * std::numbers::pi, -0.25)));
    CHECK(std::abs(Profile::hermite(4, 0.0).value(0.3)) <= Profile::hermite(4, 0.0).peak());
    CHECK(Profile::bump(0.0, 1.0, 0.1).value(0.0).real() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(Profile::bump(0.0, 1.0, 0.1).value(3.0)) < 1e-8);
  }
}

TEST_CASE("branched wave derivatives are product-rule exact") {
  Branch b;
  b.weight = {0.5, 0.5};
  b.factors = {{0, Profile::normal(0.2, 1.0)}, {0, Profile::bump(0.0, 2.0, 0.5)}, {1, Profile::pointer(1.0)}};
  const BranchedWave w(2, {b});
  const auto plan = shared_log_plan(2, 2);
  std::vector<cplx> d(static_cast<std::size_t>(plan->size()));
  const std::array<double, 2> x{0.3, 0.4};
  w.derivatives(0, x, plan->table(), 2, d);
  CHECK(std::abs(d[0] - w.value(x)) < 1e-14);
  const double h = 1e-4;
  for (int r = 1; r < plan->size(); ++r) {
    const MultiIndex& s = plan->table().at(r);
    if (s.order() != 1) continue;
    const int axis = s[0] == 1 ? 0 : 1;
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(axis)] += h;
    xm[static_cast<std::size_t>(axis)] -= h;
    CHECK(std::abs(d[static_cast<std::size_t>(r)] - (w.value(xp) - w.value(xm)) / (2 * h)) < 1e-7);
  }
}

TEST_CASE("collapse selects the packet holding the point") {
  Branch left, right;
  left.label = "left";
  left.factors = {{0, Profile::normal(-5.0, 0.5)}, {1, Profile::pointer(20.0)}};
  right.label = "right";
  right.factors = {{0, Profile::normal(5.0, 0.5)}, {1, Profile::pointer(0.0)}};
  const BranchedWave wave(2, {left, right});

  SUBCASE("pointer separates overlapping particle packets") {
    const std::array<double, 2> pt{0.0, 19.5};
    const auto res = collapse_select(wave, pt);
    CHECK(res.label == "left");
    CHECK(res.other_weight < 1e-30);
    CHECK(res.match);
    CHECK(res.momentum_mismatch < 1e-12);
    CHECK(std::abs(std::abs(res.effective.branches()[0].weight) - 1.0) < 1e-15);
    REQUIRE(res.full_momentums.size() == 6);
  }

  SUBCASE("a point in both packets is ambiguous") {
    Branch a, b;
    a.label = "a";
    a.factors = {{0, Profile::normal(-0.5, 1.0)}};
    b.label = "b";
    b.factors = {{0, Profile::normal(0.5, 1.0)}};
    const BranchedWave overlap(1, {a, b});
    const std::array<double, 1> pt{0.0};
    CHECK_THROWS_AS(collapse_select(overlap, pt), AmbiguousBranch);
  }

  SUBCASE("second-kind detector array") {
    DetectorArray det{{-2.0, 0.0, 2.0}};
    const auto w = second_kind_wave(Profile::normal(0.0, 3.0), det);
    REQUIRE(w.dim() == 4);
    const std::array<double, 4> pt{0.1, 0.3, 20.2, -0.4};
    const auto res = collapse_select(w, pt);
    CHECK(res.label == "detector-1");
    CHECK(res.match);
    const std::array<double, 4> pt2{1.8, -0.2, 0.1, 19.6};
    CHECK(collapse_select(w, pt2).label == "detector-2");
    CHECK_THROWS_AS(DetectorArray({{0.0, 1.0}}).validate(), std::invalid_argument);
  }
}

TEST_CASE("impulsive position measurement correlates the pointer with x") {
  const auto xs = line(256, -6.0, 6.0);
  const auto psi = GridWave::sample(xs, [](std::span<const double> x) { return Profile::normal(0.0, 1.0).value(x[0]); });
  const PointerSetup setup{1.0, 0.2, 10.0};
  const auto ys = line(1040, -13.0, 13.0);
  const auto joint = impulsive_measure(psi, setup, ys);
  CHECK(joint.norm() == doctest::Approx(psi.norm()).epsilon(1e-9));
  const double outside = weight_where(joint, [&](double x, double y) { return std::abs(y - setup.shift() * x) > 0.5; });
  CHECK(outside < 1e-6);

  SUBCASE("time-resolved coupling reaches the same wave") {
    const auto stepped = measure_time_resolved(psi, setup, ys, 64);
    double err = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) err = std::max(err, std::abs(stepped[i] - joint[i]));
    CHECK(err < 1e-8 * joint.max_modulus());
  }

  SUBCASE("readings follow |psi|^2") {
    const auto readings = pointer_readings(TabulatedDensity::from_grid(joint, 1), setup, 20000, 3);
    const auto rho = TabulatedDensity::tabulate(-6.0, 6.0, 4097, [](double x) { return std::norm(Profile::normal(0.0, 1.0).value(x)); });
    CHECK(ks_statistic(readings, [&](double x) { return rho.cdf(x); }) < 0.03);
  }

  SUBCASE("coarse pointer grid is rejected") {
    CHECK_THROWS_AS(impulsive_measure(psi, setup, line(200, -13.0, 13.0)), std::invalid_argument);
  }
}

TEST_CASE("discrete measurement") {
  const auto xs = line(256, -8.0, 8.0);
  const PointerSetup setup{1.0, 1.0, 10.0};
  const auto ys = line(800, -3.0, 13.0);
  const auto obs = DiscreteObservable::hermite(xs, {0.0, 1.0});

  SUBCASE("equal superposition splits the pointer evenly") {
    const auto psi = hermite_mix(xs, std::sqrt(0.5), std::sqrt(0.5));
    const auto joint = impulsive_measure(psi, obs, setup, ys);
    CHECK(weight_where(joint, [](double, double y) { return y < 5.0; }) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(weight_where(joint, [](double, double y) { return std::abs(y - 10.0) < 0.5; }) ==
          doctest::Approx(0.5).epsilon(1e-6));
  }

  SUBCASE("born frequencies") {
    const auto psi = hermite_mix(xs, 0.6, 0.8);
    const auto c = obs.coefficients(psi);
    CHECK(std::norm(c[0]) == doctest::Approx(0.36).epsilon(1e-9));
    const auto st = outcome_statistics(psi, obs, setup, ys, 10000, 11);
    CHECK(st.within_3sigma);
    CHECK(st.counts[0] + st.counts[1] == 10000);
    CHECK(st.born[1] == doctest::Approx(0.64).epsilon(1e-9));

    const auto joint = TabulatedDensity::from_grid(impulsive_measure(psi, obs, setup, ys), 1);
    int passing = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      if (outcome_statistics(joint, {0.36, 0.64}, obs, setup, 10000, seed).p_value > 0.01) ++passing;
    }
    CHECK(passing >= 95);

    std::ostringstream os;
    st.write_csv(os);
    CHECK(os.str().rfind("eigenvalue,born,count,frequency\n", 0) == 0);
    CHECK(st.to_json().at("counts").size() == 2);
  }

  SUBCASE("overlapping pointer packets") {
    const PointerSetup weak{1.0, 0.03, 10.0};
    CHECK(pointer_overlap(obs, weak) > 1e-6);
    CHECK(pointer_overlap(obs, setup) < 1e-100);
    CHECK_THROWS_AS(outcome_statistics(hermite_mix(xs, 0.6, 0.8), obs, weak, ys, 100, 1), PacketsOverlap);
  }
}

TEST_CASE("double slit") {
  DoubleSlitSetup s;
  s.count = 20000;
  CHECK(fringe_wavenumber(s) == doctest::Approx(10.0 * 20.0 / 401.0));

  SUBCASE("without detectors the screen shows fringes") {
    const auto r = double_slit(s);
    CHECK(r.visibility > 0.5);
    CHECK(r.ks.pass);
    CHECK(r.order_preserved);
    const auto [lo, hi] = r.central_extremes();
    CHECK(lo < 0.2 * hi);
  }

  SUBCASE("which-path detectors wash the fringes out") {
    s.detectors = true;
    const auto r = double_slit(s);
    CHECK(r.visibility < 0.05);
    CHECK(r.ks.pass);
    CHECK(r.order_preserved);
    CHECK(r.label_mismatches == 0);
    CHECK(r.max_momentum_mismatch < 1e-6);
    std::ostringstream os;
    r.write_histogram_csv(os);
    CHECK(os.str().rfind("x_lo,x_hi,count\n", 0) == 0);
  }

  SUBCASE("one slit closed") {
    s.amplitudes = {cplx{1.0, 0.0}, cplx{0.0, 0.0}};
    const auto r = double_slit(s);
    CHECK(r.visibility < 0.05);
    CHECK(r.ks.pass);
  }

  SUBCASE("configuration errors") {
    s.detectors = true;
    s.fired = 10.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
}
