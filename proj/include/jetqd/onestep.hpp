#pragma once

#include <complex>
#include <ostream>
#include <vector>

#include "jetqd/jetstate.hpp"
#include "jetqd/potential.hpp"

namespace jetqd {

using cplx = std::complex<double>;

// One short-time propagation of a 1D polynomial log-wave through the
// one-step path integral
//   ψ(x, t+ε) = ∫ exp[(i/ħ) ε L((x-y)/ε, y)] ψ(y, t) dy / A,  A = √(2πiħε/m),
// following a curve through q with velocity v.
struct OneStepProblem {
  Physics physics;
  JetState state;  // 1D, order ≤ 4; momentums above the order are zero
  Potential potential = Potential::free(1);  // polynomial of degree ≤ 4
  double v = 0.0;
  double eps = 1e-3;
  int nodes = 401;
  double half_width = 12.0;  // in units of the kernel width √(2ħε/m)
  int circle_points = 32;    // samples of ln ψ on the coefficient circle
  double circle_radius = 0.25;
  int out_order = -1;  // orders reported; -1 uses the state's order

  void validate() const;
  int output_order() const { return out_order < 0 ? state.order() : out_order; }
};

struct OneStepResult {
  JetState state;     // p'_σ at q + vε, time t + ε
  double tail = 0.0;  // relative weight of the outer 10% of the contour
};

OneStepResult propagate_onestep(const OneStepProblem& prob);

// p_σ + ε (p_{σx} v - H_σ): the first-order update along the curve.
JetState linear_update(const OneStepProblem& prob);

struct OneStepComparison {
  std::vector<int> order;             // |σ| of each row
  std::vector<double> residual;       // at ε
  std::vector<double> residual_half;  // at ε/2
  std::vector<double> ratio;

  void write_csv(std::ostream& os) const;
};

// |p'_σ(quadrature) - p'_σ(linear)| at ε and ε/2.
OneStepComparison compare_to_ode(const OneStepProblem& prob);

}  // namespace jetqd
