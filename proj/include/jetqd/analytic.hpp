#pragma once

#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jetqd/multiindex.hpp"
#include "jetqd/potential.hpp"

namespace jetqd {

using cplx = std::complex<double>;

// One axis of a Gaussian packet: exp(A(t) x² + B(t) x + C(t)).
struct GaussianFactor {
  enum class Kind { Free, Coherent };
  Kind kind = Kind::Free;
  double hbar = 1.0;
  double mass = 1.0;
  // free packet: width a, wavenumber k0, centre x0
  double a = 1.0;
  double k0 = 0.0;
  double x0 = 0.0;
  // coherent state: frequency ω, amplitude α
  double omega = 1.0;
  cplx alpha{0.0, 0.0};

  struct Quadratic {
    cplx A, B, C;
  };
  Quadratic at(double t) const;

  // Classical centre and momentum of a coherent state.
  double classical_x(double t) const;
  double classical_p(double t) const;
};

struct GaussianTerm {
  cplx weight{1.0, 0.0};
  std::vector<GaussianFactor> factors;
};

// Closed-form solutions of the Schrödinger equation: free Gaussian packets,
// harmonic-oscillator coherent states and finite superpositions of either.
class AnalyticState {
 public:
  AnalyticState() = default;

  static AnalyticState free_gaussian(const Physics& phys, std::vector<double> a, std::vector<double> k0,
                                     std::vector<double> x0);
  static AnalyticState coherent(const Physics& phys, std::vector<double> omega, std::vector<cplx> alpha);
  // Weighted sum of states sharing one potential; the result is renormalized.
  static AnalyticState superposition(const std::vector<std::pair<cplx, AnalyticState>>& parts);

  int dim() const { return phys_.dim(); }
  const Physics& physics() const { return phys_; }
  const Potential& potential() const { return potential_; }
  const std::vector<GaussianTerm>& terms() const { return terms_; }
  const std::string& kind_name() const { return kind_; }

  cplx psi(std::span<const double> x, double t) const;
  double density(std::span<const double> x, double t) const { return std::norm(psi(x, t)); }

  // ψ_σ for every rank < table.order_begin(max_order + 1).
  void psi_derivatives(std::span<const double> x, double t, const IndexTable& table, int max_order,
                       std::span<cplx> out) const;

  // p_σ = (ħ/i) ∂_σ ln ψ with out[0] = (ħ/i) ln ψ. Throws NodeError when
  // |ψ| < node_floor · peak_modulus(t).
  void momentums(std::span<const double> x, double t, const IndexTable& table, int max_order,
                 std::span<cplx> out, double node_floor = 1e-12) const;

  std::vector<double> velocity(std::span<const double> x, double t) const;

  // Upper bound of |ψ(·,t)|, exact for a single packet.
  double peak_modulus(double t) const;
  // Per-axis box of ±halfwidth density standard deviations around every packet.
  std::pair<std::vector<double>, std::vector<double>> support(double t, double halfwidth = 10.0) const;

  // ⟨ψ|ψ⟩ computed in closed form.
  double norm_squared() const;

 private:
  Physics phys_;
  Potential potential_;
  std::vector<GaussianTerm> terms_;
  std::string kind_;
};

}  // namespace jetqd
