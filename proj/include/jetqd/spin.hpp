#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "jetqd/jetstate.hpp"
#include "jetqd/multiindex.hpp"
#include "jetqd/symjet.hpp"

namespace jetqd {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

// SU(2) coordinates (u, v) on S³.
struct Spinor {
  cplx u{1.0, 0.0};
  cplx v{0.0, 0.0};

  // u = cos(θ/2) e^{-i(φ+χ)/2}, v = sin(θ/2) e^{i(φ-χ)/2}
  static Spinor from_euler(double chi, double theta, double phi);
  // (χ, θ, φ) with θ ∈ [0, π]; χ and φ are split arbitrarily on the poles.
  std::array<double, 3> euler() const;
  // (u₁, u₂, v₁, v₂)
  std::array<double, 4> real_chart() const;
  static Spinor from_real_chart(const std::array<double, 4>& w);

  double norm() const { return std::norm(u) + std::norm(v); }
  // Unit vector along the expected spin of |Ω⟩: (2 Re ūv, 2 Im ūv, |u|² - |v|²).
  Vec3 spin_vector() const;
};

// Uniform points on S³.
std::vector<Spinor> random_spinors(std::size_t count, std::uint64_t seed);

// Components ψ_m, m = -s..s (index m + s), of a spin-s state.
class SpinState {
 public:
  SpinState(int twice_s, std::vector<cplx> amplitudes);
  // |s, m⟩
  static SpinState basis(int twice_s, int twice_m);
  // The coherent state |Ω⟩ = R(χ,θ,φ)|s,s⟩ in the |s,m⟩ basis.
  static SpinState coherent(int twice_s, const Spinor& omega);
  static SpinState random(int twice_s, std::uint64_t seed);

  int twice_s() const { return twice_s_; }
  double s() const { return 0.5 * twice_s_; }
  int size() const { return twice_s_ + 1; }
  const std::vector<cplx>& amplitudes() const { return amp_; }
  cplx amplitude_at_m(int twice_m) const;
  Eigen::VectorXcd vector() const;

 private:
  int twice_s_;
  std::vector<cplx> amp_;
};

// s_x, s_y, s_z in units of ħ, rows and columns ordered m = -s..s.
std::array<Eigen::MatrixXcd, 3> spin_matrices(int twice_s);
// exp(i t M) for Hermitian M.
Eigen::MatrixXcd exp_i_hermitian(const Eigen::MatrixXcd& m, double t);
// e^{-iφ s_z} e^{-iθ s_y} e^{-iχ s_z}
Eigen::MatrixXcd rotation_operator(int twice_s, double chi, double theta, double phi);

// ψ(Ω) = √((2s)!) Σ_m ū^{s+m} v̄^{s-m} ψ_m / √((s+m)!(s-m)!)
cplx coherent_overlap(const SpinState& state, const Spinor& omega);
// (∂ψ/∂ū, ∂ψ/∂v̄) of coherent_overlap.
std::array<cplx, 2> coherent_gradient(const SpinState& state, const Spinor& omega);

// An analytic function of (ū, v̄) with its gradient.
struct SpinFunction {
  std::function<cplx(cplx, cplx)> value;
  std::function<std::array<cplx, 2>(cplx, cplx)> gradient;

  static SpinFunction from_state(const SpinState& state);
};

// max |(i/ħ)(ū p_ū + v̄ p_v̄) - 2s| over the sample points, with p = (ħ/i) ln ψ.
// Points where |ψ| < node_floor are skipped.
double homogeneity_check(const SpinFunction& f, std::span<const Spinor> samples, double s, double hbar = 1.0,
                         double node_floor = 1e-8);

using FieldHistory = std::function<Vec3(double)>;
FieldHistory constant_field(const Vec3& b);

// d/dt (u, v)ᵀ = (iγ/2ħ) B·σ (u, v)ᵀ
Spinor spinor_rate(const Spinor& sp, const Vec3& b, double gamma, double hbar);

struct PrecessSettings {
  double gamma = 1.0;
  double hbar = 1.0;
  double dt = 1e-3;
  int record_every = 1;
  bool renormalize = false;
};

struct SpinTrajectory {
  std::vector<double> t;
  std::vector<Spinor> spinors;
  long steps = 0;
  double max_norm_drift_per_step = 0.0;  // max |N_{k+1} - N_k| over all steps

  void write_csv(std::ostream& os) const;
};

// Classical rk4 from t = 0 to t_final; the last step is shortened to land on t_final.
SpinTrajectory precess(const Spinor& sp, const FieldHistory& b, double t_final, const PrecessSettings& settings = {});

// Closed form for a constant field: exp((iγt/2ħ) B·σ)(u, v)ᵀ.
Spinor precess_exact(const Spinor& sp, const Vec3& b, double gamma, double hbar, double t);

// ψ(t) = exp(iγ t B·s/ħ) ψ(0) for the spin Hamiltonian -γ B·s.
SpinState evolve_state(const SpinState& state, const Vec3& b, double gamma, double hbar, double t);

// Velocities of the combined space and spin coordinates.
struct SpinVelocity {
  std::vector<double> spatial;  // (p_j + p̄_j)/2m_j - (e/m_j c) A_j
  cplx ubar_dot;
  cplx vbar_dot;
  Spinor spinor_dot;  // (u̇, v̇), the conjugates of the two above
};

struct SpinCoupling {
  Vec3 b{0.0, 0.0, 0.0};
  double gamma = 1.0;
  double charge_over_c = 0.0;  // e/c
  std::vector<double> a;       // vector potential at the particle, empty for A = 0
};

SpinVelocity spin_velocity_terms(const JetState& space, const Physics& phys, const Spinor& omega,
                                 const SpinCoupling& coupling);

// Hamiltonian on R^d × S³ with coordinates (q_0..q_{d-1}, ū, v̄): parameters m_j, hbar, gamma,
// e_c (e/c), A_j; fields U and, for a non-uniform field, Bx, By, Bz.
JetExpr spin_hamiltonian(int space_dim, bool uniform_field = true);

struct DecouplingReport {
  int checked = 0;            // mixed multi-indices evaluated
  double max_mixed_rate = 0.0;
  MultiIndex worst;
  bool decoupled = false;

  nlohmann::json to_json() const;
};

// Evaluates dp_σ/dt along the trajectory for every mixed σ (|σ| ≤ order) at a random
// factorized state whose mixed momentums vanish.
DecouplingReport decoupling_check(int space_dim, int order, bool uniform_field, std::uint64_t seed);

struct SpinCheckSettings {
  double gamma = 1.0;
  double hbar = 1.0;
  double b = 1.0;             // along z
  double turns = 10.0;        // γBt/ħ = 2π turns
  double dt = 1e-4;
  int twice_s = 3;
  int samples = 100;
  std::uint64_t seed = 1;
};

struct SpinCheckReport {
  double phase_error = 0.0;        // max |arg(u/u_exact)|, |arg(v/v_exact)| at the end
  double frequency_error = 0.0;    // relative, from the unwrapped spin-vector azimuth
  double max_norm_drift_per_step = 0.0;
  double homogeneity_residual = 0.0;
  double overlap_variation = 0.0;  // max |⟨Ω(t)|ψ(t)⟩ - ⟨Ω(0)|ψ(0)⟩| over one period
  long steps = 0;

  bool pass() const;
  nlohmann::json to_json() const;
};

SpinCheckReport spin_check(const SpinCheckSettings& settings = {});

}  // namespace jetqd
