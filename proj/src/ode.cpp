#include "jetqd/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jetqd/errors.hpp"

namespace jetqd {

void rk4_step(const OdeRhs& f, double t, std::span<double> y, double h) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

OdeStats integrate_rk4(const OdeRhs& f, double t0, std::span<double> y, std::span<const double> stops, double dt,
                       const StepHook& on_step, const StopHook& on_stop) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4: dt must be positive");
  OdeStats st;
  double t = t0;
  for (std::size_t s = 0; s < stops.size(); ++s) {
    const double span = stops[s] - t;
    if (span < 0.0) throw std::invalid_argument("rk4: stops must be increasing");
    const long n = std::max(0L, static_cast<long>(std::ceil(span / dt - 1e-9)));
    const double h = n > 0 ? span / static_cast<double>(n) : 0.0;
    for (long k = 0; k < n; ++k) {
      rk4_step(f, t, y, h);
      t = (k + 1 == n) ? stops[s] : t + h;
      ++st.steps;
      st.evaluations += 4;
      st.min_dt = std::min(st.min_dt, h);
      st.max_dt = std::max(st.max_dt, h);
      if (on_step) on_step(t, y, h);
    }
    t = stops[s];
    if (on_stop) on_stop(s, t, y);
  }
  return st;
}

namespace {

// Dormand-Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

}  // namespace

OdeStats integrate_dopri5(const OdeRhs& f, double t0, std::span<double> y, std::span<const double> stops,
                          const AdaptiveSettings& cfg, const StepHook& on_step, const StopHook& on_stop) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
  OdeStats st;
  double t = t0;
  double h = std::min(cfg.dt_initial, cfg.dt_max);
  f(t, y, k1);
  ++st.evaluations;
  for (std::size_t s = 0; s < stops.size(); ++s) {
    const double target = stops[s];
    if (target < t) throw std::invalid_argument("dopri5: stops must be increasing");
    while (t < target) {
      const double remaining = target - t;
      bool last = false;
      double hs = h;
      if (hs >= remaining * (1.0 - 1e-12)) {
        hs = remaining;
        last = true;
      }
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
      f(t + c2 * hs, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
      f(t + c3 * hs, tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      f(t + c4 * hs, tmp, k4);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      f(t + c5 * hs, tmp, k5);
      for (std::size_t i = 0; i < n; ++i) {
        tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      }
      f(t + hs, tmp, k6);
      for (std::size_t i = 0; i < n; ++i) {
        ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      }
      f(t + hs, ynew, k7);
      st.evaluations += 6;
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err += (ei / sc) * (ei / sc);
      }
      err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(n, 1)));
      if (!std::isfinite(err)) err = 1e10;
      const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        t = last ? target : t + hs;
        std::copy(ynew.begin(), ynew.end(), y.begin());
        std::swap(k1, k7);
        ++st.steps;
        st.min_dt = std::min(st.min_dt, hs);
        st.max_dt = std::max(st.max_dt, hs);
        if (on_step) on_step(t, y, hs);
        // Keep the controller's step when the last one was only clamped to a stop.
        h = std::min(last ? std::max(h, hs * factor) : hs * factor, cfg.dt_max);
      } else {
        ++st.rejected;
        h = hs * std::min(factor, 1.0);
        if (h < cfg.dt_min) {
          throw StepFailure("adaptive step fell below " + std::to_string(cfg.dt_min) + " at t = " + std::to_string(t));
        }
      }
    }
    if (on_stop) on_stop(s, t, y);
  }
  return st;
}

}  // namespace jetqd
