#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace jetqd {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
// Called after every accepted step with the new (t, y).
using StepHook = std::function<void(double t, std::span<const double> y, double h)>;
// Called when the solution reaches stops[i].
using StopHook = std::function<void(std::size_t i, double t, std::span<const double> y)>;

struct OdeStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
  double min_dt = std::numeric_limits<double>::infinity();
  double max_dt = 0.0;
};

struct AdaptiveSettings {
  double rtol = 1e-9;
  double atol = 1e-9;
  double dt_initial = 1e-3;
  double dt_min = 1e-12;
  double dt_max = std::numeric_limits<double>::infinity();
};

// One classical Runge-Kutta step of size h in place.
void rk4_step(const OdeRhs& f, double t, std::span<double> y, double h);

// Fixed-step RK4 through each stop. Each interval between stops is split into
// equal steps no larger than dt, so every stop is hit exactly.
OdeStats integrate_rk4(const OdeRhs& f, double t0, std::span<double> y, std::span<const double> stops, double dt,
                       const StepHook& on_step, const StopHook& on_stop);

// Dormand-Prince 5(4) with step-size control. Steps are shortened to land on stops.
// Throws StepFailure when the step falls below settings.dt_min.
OdeStats integrate_dopri5(const OdeRhs& f, double t0, std::span<double> y, std::span<const double> stops,
                          const AdaptiveSettings& settings, const StepHook& on_step, const StopHook& on_stop);

}  // namespace jetqd
