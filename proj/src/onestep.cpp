#include "jetqd/onestep.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "jetqd/dynamics.hpp"
#include "jetqd/errors.hpp"

namespace jetqd {

namespace {

constexpr int kMaxDegree = 4;
constexpr cplx kI{0.0, 1.0};

// Coefficients a_k of (i/ħ)[Σ p_k w^k/k! - ε Σ U_k w^k/k!] without the constant p0 term.
std::vector<cplx> exponent_coefficients(const OneStepProblem& prob, double eps) {
  const double hbar = prob.physics.hbar;
  std::vector<cplx> a(kMaxDegree + 1, cplx{});
  double fact = 1.0;
  for (int k = 0; k <= kMaxDegree; ++k) {
    if (k > 0) fact *= k;
    cplx pk = k <= prob.state.order() ? prob.state.at(k) : cplx{};
    if (k == 0) pk = 0.0;
    const double uk = prob.potential.derivative(MultiIndex{k}, prob.state.q);
    a[static_cast<std::size_t>(k)] = (kI / hbar) * (pk - eps * uk) / fact;
  }
  return a;
}

cplx horner(const std::vector<cplx>& a, cplx w) {
  cplx s = a.back();
  for (auto it = a.rbegin() + 1; it != a.rend(); ++it) s = s * w + *it;
  return s;
}

class KernelIntegral {
 public:
  KernelIntegral(const OneStepProblem& prob, double eps)
      : a_(exponent_coefficients(prob, eps)), shift_(prob.v * eps), nodes_(prob.nodes), half_(prob.half_width) {
    // y - z - vε = e^{iπ/4} √(2ħε/m) s turns the kernel into e^{-s²} and dy/A into ds/√π.
    scale_ = std::polar(std::sqrt(2.0 * prob.physics.hbar * eps / prob.physics.m(0)), std::numbers::pi / 4.0);
    h_ = 2.0 * half_ / (nodes_ - 1);
  }

  cplx operator()(cplx z) {
    cplx sum{};
    double outer = 0.0;
    for (int k = 0; k < nodes_; ++k) {
      const double s = -half_ + k * h_;
      const double weight = (k == 0 || k == nodes_ - 1) ? 0.5 : 1.0;
      const cplx f = weight * std::exp(-s * s + horner(a_, z + shift_ + scale_ * s));
      sum += f;
      if (std::abs(s) > 0.9 * half_) outer += std::abs(f);
    }
    sum *= h_ / std::sqrt(std::numbers::pi);
    const double tail = outer * h_ / std::sqrt(std::numbers::pi) / std::abs(sum);
    if (!std::isfinite(tail) || tail > 1e-10) {
      throw QuadratureDivergence("one-step integral tail weight " + std::to_string(tail) + " exceeds 1e-10");
    }
    max_tail_ = std::max(max_tail_, tail);
    return sum;
  }

  double max_tail() const { return max_tail_; }

 private:
  std::vector<cplx> a_;
  double shift_;
  int nodes_;
  double half_;
  cplx scale_;
  double h_;
  double max_tail_ = 0.0;
};

// Adds multiples of 2πi to `next` so its imaginary part is within π of `prev`.
cplx unwrap(cplx prev, cplx next) {
  const double turns = std::round((next.imag() - prev.imag()) / (2.0 * std::numbers::pi));
  return next - cplx(0.0, 2.0 * std::numbers::pi * turns);
}

OneStepResult propagate(const OneStepProblem& prob, double eps) {
  KernelIntegral integral(prob, eps);
  const int out = prob.output_order();
  const int k_pts = prob.circle_points;
  const double r = prob.circle_radius;

  // Continuous branch of ln I: walk out along the radius, then around the circle.
  cplx log_i = std::log(integral(0.0));
  constexpr int kRadial = 8;
  for (int j = 1; j <= kRadial; ++j) log_i = unwrap(log_i, std::log(integral(r * j / kRadial)));
  std::vector<cplx> logs(static_cast<std::size_t>(k_pts));
  logs[0] = log_i;
  for (int k = 1; k < k_pts; ++k) {
    const cplx z = std::polar(r, 2.0 * std::numbers::pi * k / k_pts);
    logs[static_cast<std::size_t>(k)] = unwrap(logs[static_cast<std::size_t>(k - 1)], std::log(integral(z)));
  }
  if (std::abs(unwrap(logs.back(), logs[0]) - logs[0]) > 1e-9) {
    throw NumericalError("one-step integral winds around zero on the coefficient circle");
  }

  OneStepResult res;
  res.state = JetState(1, out);
  res.state.t = prob.state.t + eps;
  res.state.q = {prob.state.q[0] + prob.v * eps};
  const double hbar = prob.physics.hbar;
  double fact = 1.0;
  for (int j = 0; j <= out; ++j) {
    if (j > 0) fact *= j;
    cplx c{};
    for (int k = 0; k < k_pts; ++k) {
      c += logs[static_cast<std::size_t>(k)] * std::polar(1.0, -2.0 * std::numbers::pi * j * k / k_pts);
    }
    c /= k_pts * std::pow(r, j);
    res.state.at(j) = (hbar / kI) * c * fact;
  }
  res.state.at(0) += prob.state.at(0);
  res.tail = integral.max_tail();
  return res;
}

JetState linear(const OneStepProblem& prob, double eps) {
  const int out = prob.output_order();
  const int order = std::max(out, prob.state.order());
  JetState padded(1, order);
  padded.t = prob.state.t;
  padded.q = prob.state.q;
  for (int k = 0; k <= prob.state.order(); ++k) padded.at(k) = prob.state.at(k);
  const Model model{prob.physics, prob.potential, Closure::zero()};

  JetState res(1, out);
  res.t = prob.state.t + eps;
  res.q = {prob.state.q[0] + prob.v * eps};
  for (int k = 0; k <= out; ++k) {
    const cplx p_next = k + 1 <= order ? padded.at(k + 1) : cplx{};
    res.at(k) = padded.at(k) + eps * (p_next * prob.v - h_sigma(padded, model, MultiIndex{k}));
  }
  return res;
}

}  // namespace

void OneStepProblem::validate() const {
  if (state.size() == 0 || state.dim() != 1) throw std::invalid_argument("one-step problems are one-dimensional");
  if (state.order() > kMaxDegree || output_order() > kMaxDegree) {
    throw std::invalid_argument("one-step log-wave degree must be at most 4");
  }
  if (state.q.size() != 1) throw std::invalid_argument("one-step state needs a position");
  if (physics.dim() != 1 || !(physics.m(0) > 0.0) || !(physics.hbar > 0.0)) {
    throw std::invalid_argument("one-step physics must be 1D with positive mass and hbar");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("one-step eps must be positive");
  if (state.order() >= 2 && state.at(2).imag() < 0.0) {
    throw std::invalid_argument("one-step log-wave must not grow: Im p_xx < 0");
  }
  if (potential.dim() != 1) throw std::invalid_argument("one-step potential must be 1D");
  if (potential.kind() == Potential::Kind::GaussianBarrier && potential.height() != 0.0) {
    throw std::invalid_argument("one-step potential must be polynomial");
  }
  for (const auto& t : potential.monomials()) {
    if (t.power.order() > kMaxDegree && t.coefficient != 0.0) {
      throw std::invalid_argument("one-step potential degree must be at most 4");
    }
  }
  if (nodes < 3 || !(half_width > 0.0)) throw std::invalid_argument("one-step quadrature needs nodes >= 3");
  if (circle_points <= 2 * kMaxDegree || !(circle_radius > 0.0)) {
    throw std::invalid_argument("one-step coefficient circle too coarse");
  }
}

OneStepResult propagate_onestep(const OneStepProblem& prob) {
  prob.validate();
  return propagate(prob, prob.eps);
}

JetState linear_update(const OneStepProblem& prob) {
  prob.validate();
  return linear(prob, prob.eps);
}

OneStepComparison compare_to_ode(const OneStepProblem& prob) {
  prob.validate();
  OneStepComparison cmp;
  const auto full = propagate(prob, prob.eps).state;
  const auto half = propagate(prob, 0.5 * prob.eps).state;
  const auto lin_full = linear(prob, prob.eps);
  const auto lin_half = linear(prob, 0.5 * prob.eps);
  for (int k = 0; k <= prob.output_order(); ++k) {
    const double a = std::abs(full.at(k) - lin_full.at(k));
    const double b = std::abs(half.at(k) - lin_half.at(k));
    cmp.order.push_back(k);
    cmp.residual.push_back(a);
    cmp.residual_half.push_back(b);
    cmp.ratio.push_back(b > 0.0 ? a / b : std::numeric_limits<double>::quiet_NaN());
  }
  return cmp;
}

void OneStepComparison::write_csv(std::ostream& os) const {
  os << "sigma,residual,residual_half,ratio\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    os << MultiIndex{order[i]}.name() << ',' << residual[i] << ',' << residual_half[i] << ',' << ratio[i] << '\n';
  }
}

}  // namespace jetqd
