#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jetqd/ensemble.hpp"
#include "jetqd/grid.hpp"

namespace jetqd {

using cplx = std::complex<double>;

// One-dimensional factor of a branch wave with exact derivatives of any order.
class Profile {
 public:
  enum class Kind { Gaussian, Hermite, Bump };

  // exp(A x² + B x + C)
  static Profile gaussian(cplx A, cplx B, cplx C);
  // Real amplitude whose square is the normal density N(centre, sd²).
  static Profile normal(double centre, double sd);
  // exp(-(x - centre)²/4): the detector-coordinate factor.
  static Profile pointer(double centre);
  // Oscillator eigenfunction n of length scale `width`, normalized.
  static Profile hermite(int n, double centre, double width = 1.0);
  // ½[tanh((x - c + σ)/w) - tanh((x - c - σ)/w)]: ≈1 inside |x - c| < σ, ≈0 outside.
  static Profile bump(double centre, double half_width, double edge);

  Kind kind() const { return kind_; }
  cplx value(double x) const;
  // out[k] = f^{(k)}(x), k = 0..max_order.
  void derivatives(double x, int max_order, std::span<cplx> out) const;
  // max |f| (exact for a Gaussian, Hermite bound, 1 for a bump).
  double peak() const;

 private:
  Kind kind_ = Kind::Gaussian;
  cplx a_{}, b_{}, c_{};
  int n_ = 0;
  double centre_ = 0.0;
  double width_ = 1.0;
  double half_ = 1.0;
};

struct Branch {
  struct Factor {
    int axis;
    Profile f;
  };
  std::string label;
  cplx weight{1.0, 0.0};
  std::vector<Factor> factors;  // several factors may share an axis
};

// Ψ = Σ_k weight_k Π factors_k: the branch structure of a wave after a measurement.
class BranchedWave {
 public:
  BranchedWave(int dim, std::vector<Branch> branches);

  int dim() const { return dim_; }
  const std::vector<Branch>& branches() const { return branches_; }
  cplx value(std::span<const double> x) const;
  cplx branch_value(std::size_t k, std::span<const double> x) const;
  double branch_peak(std::size_t k) const;
  // ∂_σ of branch k (or of the sum when k < 0) for ranks < table.order_begin(order + 1).
  void derivatives(int k, std::span<const double> x, const IndexTable& table, int order, std::span<cplx> out) const;

 private:
  int dim_;
  std::vector<Branch> branches_;
};

struct CollapseResult {
  std::size_t branch = 0;
  std::string label;
  BranchedWave effective;           // the selected branch with unit-modulus weight
  std::vector<cplx> full_momentums;   // p_σ of Ψ at the point, by rank
  std::vector<cplx> branch_momentums; // p_σ of the branch alone
  double other_weight = 0.0;          // Σ_{j≠k} |Ψ_j| / |Ψ_k| at the point
  double momentum_mismatch = 0.0;     // max |Δp_σ| / max(1, |p_σ|), |σ| ≥ 1
  bool match = false;
};

// Selects the branch whose packet holds the point. Throws AmbiguousBranch when
// two branches both exceed 1e-6 of their peak there, and NumericalError when the
// other branches are below 1e-8 yet the momentums disagree beyond `tol`.
CollapseResult collapse_select(const BranchedWave& wave, std::span<const double> point, double hbar = 1.0,
                               int order = 2, double tol = 1e-6);

// Pointer of width Δy coupled through H_int = g(t) O p_y for a time τ.
struct PointerSetup {
  double delta_y = 1.0;
  double g0 = 1.0;
  double tau = 10.0;

  void validate() const;
  double shift() const { return g0 * tau; }
  // Standard deviation of |φ|²; the support |y| ≤ Δy/2 holds all but 6e-7 of the weight.
  double sd() const { return delta_y / 10.0; }
  double sigma_half() const { return delta_y / (2.0 * g0 * tau); }
  double tilde(double y) const { return y / (g0 * tau); }
  double phi(double y) const;
};

// Eigenbasis of a discrete observable sampled on the particle grid.
struct DiscreteObservable {
  std::vector<double> eigenvalues;
  std::vector<std::vector<cplx>> eigenvectors;

  // Oscillator eigenfunctions n = 0..k-1 carrying the given eigenvalues.
  static DiscreteObservable hermite(const GridSpec& x_grid, std::vector<double> eigenvalues, double width = 1.0);
  // c_i = <ψ_i|ψ>
  std::vector<cplx> coefficients(const GridWave& psi) const;
};

// Joint (x, y) wave after an impulsive measurement.
// Position: Ψ(x, y) = ψ(x) φ(y - g₀τ x).
GridWave impulsive_measure(const GridWave& psi, const PointerSetup& setup, const GridSpec& y_axis);
// Discrete: Ψ(x, y) = Σ c_i ψ_i(x) φ(y - g₀τ a_i).
GridWave impulsive_measure(const GridWave& psi, const DiscreteObservable& obs, const PointerSetup& setup,
                           const GridSpec& y_axis);
// Position measurement by stepping ∂_t Ψ = -g(t) x ∂_y Ψ with g = 2 g₀ sin²(π t/τ),
// spectrally along y and midpoint in time.
GridWave measure_time_resolved(const GridWave& psi, const PointerSetup& setup, const GridSpec& y_axis, int steps);

struct OutcomeStatistics {
  std::vector<double> eigenvalues;
  std::vector<double> born;  // |c_i|², normalized
  std::vector<long> counts;
  std::vector<double> frequencies;
  double chi2 = 0.0;
  double p_value = 0.0;
  bool within_3sigma = false;  // every |f_i - p_i| ≤ 3√(p_i(1 - p_i)/N)

  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

// Largest Bhattacharyya overlap exp(-Δ²/8s²) between adjacent pointer packets.
double pointer_overlap(const DiscreteObservable& obs, const PointerSetup& setup);

// Samples (x, y) from |Ψ|² of the joint wave and classifies ỹ by the nearest
// eigenvalue. Throws PacketsOverlap when adjacent packets overlap by 1e-6 or more.
OutcomeStatistics outcome_statistics(const GridWave& psi, const DiscreteObservable& obs, const PointerSetup& setup,
                                     const GridSpec& y_axis, std::size_t runs, std::uint64_t seed);
// Same from a prepared joint density, for repeated seeds.
OutcomeStatistics outcome_statistics(const TabulatedDensity& joint, const std::vector<double>& born,
                                     const DiscreteObservable& obs, const PointerSetup& setup, std::size_t runs,
                                     std::uint64_t seed);

// ỹ = y/(g₀τ) of points sampled from the joint density.
std::vector<double> pointer_readings(const TabulatedDensity& joint, const PointerSetup& setup, std::size_t runs,
                                     std::uint64_t seed);

// Second-kind detectors: centres x_i, trigger half-width σ, edge sharpness w, fired reading Y.
struct DetectorArray {
  std::vector<double> centres;
  double sigma = 1.0;
  double edge = 0.1;
  double fired = 20.0;

  // Centres must be spaced exactly 2σ apart so the σ-vicinities tile the line.
  void validate() const;
  Profile shadow(std::size_t i) const { return Profile::bump(centres[i], sigma, edge); }
};

// Ψ = ψ(x) Σ_j a(x - x_j) exp(-(y_j - Y)²/4) Π_{i≠j} exp(-y_i²/4) over (x, y_1..y_n).
BranchedWave second_kind_wave(const Profile& psi, const DetectorArray& det);

struct DoubleSlitSetup {
  Physics physics = Physics::uniform(1);
  double separation = 10.0;  // d
  double width = 1.0;        // a, packet width behind each slit
  double k0 = 0.0;
  double t_screen = 20.0;
  std::array<cplx, 2> amplitudes{cplx{1.0, 0.0}, cplx{1.0, 0.0}};
  bool detectors = false;
  double fired = 20.0;  // Y of the which-path detectors
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  AdvectSettings advect;
  double bin_width = 0.5;

  void validate() const;
};

struct DoubleSlitResult {
  Ensemble initial;
  Ensemble screen;
  std::vector<std::uint8_t> branch;  // which slit's branch each point follows (detectors on)
  double fringe_wavenumber = 0.0;
  double visibility = 0.0;  // 2|<e^{-iKx}>| over the screen positions
  EquivarianceReport ks;    // screen positions against the expected screen density
  bool order_preserved = false;
  std::size_t label_mismatches = 0;
  double max_momentum_mismatch = 0.0;
  std::vector<double> edges;
  std::vector<long> counts;

  // Counts in the lowest and highest bins among those within one fringe period of the centre.
  std::pair<long, long> central_extremes() const;
  nlohmann::json to_json() const;
  void write_histogram_csv(std::ostream& os) const;
};

// K = d τ / (a²(1 + τ²)), τ = ħ t / (m a²).
double fringe_wavenumber(const DoubleSlitSetup& setup);

// Screen-plane density expected at t_screen (interfering or branch mixture).
TabulatedDensity expected_screen_density(const DoubleSlitSetup& setup);

DoubleSlitResult double_slit(const DoubleSlitSetup& setup);

}  // namespace jetqd
