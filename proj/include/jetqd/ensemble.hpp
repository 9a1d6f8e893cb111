#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jetqd/analytic.hpp"
#include "jetqd/dynamics.hpp"
#include "jetqd/grid.hpp"

namespace jetqd {

// Points in configuration space at one time. Point i occupies x[i*dim, (i+1)*dim).
struct Ensemble {
  int dim = 1;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::string provenance;
  std::vector<double> x;
  std::vector<std::uint8_t> excluded;  // 1 for points flagged near a node

  std::size_t size() const { return excluded.size(); }
  std::span<const double> point(std::size_t i) const { return {x.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }
  std::size_t excluded_count() const;
  double excluded_fraction() const;
  // Coordinate `axis` of every point that is not excluded.
  std::vector<double> coordinate(int axis = 0) const;

  void write_csv(std::ostream& os) const;
};

// Bilinear (2D) or piecewise-linear (1D) density on a closed lattice, sampled
// exactly by inverting its CDF: the marginal of axis 0 first, then the
// conditional along axis 1.
class TabulatedDensity {
 public:
  TabulatedDensity(std::vector<int> points, std::vector<double> lower, std::vector<double> upper,
                   std::vector<double> values);

  // |ψ(·,t)|² on a lattice covering the support.
  static TabulatedDensity from_analytic(const AnalyticState& psi, double t, int points_per_axis = 0,
                                        double halfwidth = 10.0);
  // |ψ|² of a grid wave after Fourier interpolation onto a finer lattice.
  static TabulatedDensity from_grid(const GridWave& w, int refine = 8);
  // 1D density f on [lower, upper].
  static TabulatedDensity tabulate(double lower, double upper, int points, const std::function<double(double)>& f);

  int dim() const { return static_cast<int>(points_.size()); }
  const std::vector<int>& points() const { return points_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double spacing(int axis) const;
  double node(int axis, int k) const { return lower_[static_cast<std::size_t>(axis)] + k * spacing(axis); }
  double total() const { return total_; }
  // Normalized density at a point (interpolated, zero outside).
  double density(std::span<const double> x) const;
  // 1D only: normalized CDF.
  double cdf(double x) const;
  // Maps uniform variates (one per axis) to a point.
  void transform(std::span<const double> u, std::span<double> out) const;
  std::string describe() const;

 private:
  std::vector<int> points_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> values_;     // axis 0 slowest
  std::vector<double> marginal_;   // axis-0 density
  std::vector<double> cumulative_; // trapezoid CDF of marginal_
  std::vector<double> row_cumulative_;  // 2D: trapezoid CDF along axis 1 of every row
  double total_ = 0.0;
};

Ensemble sample_density(const TabulatedDensity& rho, std::size_t count, std::uint64_t seed, double t = 0.0);
Ensemble sample_density(const AnalyticState& psi, double t, std::size_t count, std::uint64_t seed);
Ensemble sample_density(const GridWave& w, std::size_t count, std::uint64_t seed);

// Velocity field v(x, t). Returns false where it is undefined (near a node).
class VelocitySource {
 public:
  virtual ~VelocitySource() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool velocity(double t, std::span<const double> x, std::span<double> v) const = 0;
};

// v = (ħ/m) Im(∇ψ/ψ) evaluated in closed form.
class AnalyticVelocity : public VelocitySource {
 public:
  explicit AnalyticVelocity(AnalyticState psi, double node_floor = 1e-10);
  int dim() const override { return psi_.dim(); }
  std::string name() const override { return "analytic:" + psi_.kind_name(); }
  bool velocity(double t, std::span<const double> x, std::span<double> v) const override;

 private:
  AnalyticState psi_;
  double node_floor_;
};

// Constant field, mostly for tests.
class UniformVelocity : public VelocitySource {
 public:
  explicit UniformVelocity(std::vector<double> v) : v_(std::move(v)) {}
  int dim() const override { return static_cast<int>(v_.size()); }
  std::string name() const override { return "uniform"; }
  bool velocity(double, std::span<const double>, std::span<double> v) const override;

 private:
  std::vector<double> v_;
};

// Bohmian field of split-step snapshots; cubic in space, linear in time.
class GridVelocity : public VelocitySource {
 public:
  // Steps the wave from w.t to t_final, keeping a field every `stride` steps.
  GridVelocity(const GridWave& w, const Potential& pot, const Physics& phys, double dt, double t_final, int stride = 1,
               double node_floor = 1e-8);
  int dim() const override { return spec_.dim(); }
  std::string name() const override { return "grid"; }
  bool velocity(double t, std::span<const double> x, std::span<double> v) const override;
  const GridWave& final_wave() const { return final_; }

 private:
  bool at_snapshot(std::size_t k, std::span<const double> x, std::span<double> v) const;

  GridSpec spec_;
  double t0_;
  double dt_snap_;
  std::vector<VelocityField> fields_;
  GridWave final_;
};

// Worker threads for ensemble advection; 0 selects the hardware concurrency.
void set_worker_threads(int count);
int worker_threads();

struct AdvectSettings {
  Method method = Method::Rk45;
  double dt = 1e-2;  // rk4 step, rk45 initial step
  double tol = 1e-8;
};

// Moves every point along dx/dt = v(t, x) from e.t to t_final. Points whose
// velocity is undefined at some stage are flagged excluded and frozen.
Ensemble advect(const Ensemble& e, const VelocitySource& source, double t_final, const AdvectSettings& settings = {});

// Integrates each point's momentum hierarchy, starting from the oracle's
// momentums at the point, and keeps the final positions.
Ensemble advect_dynamics(const Ensemble& e, const Model& model, int order, double t_final,
                         const IntegrateSettings& settings);

// True when the non-excluded 1D points keep their relative order.
bool order_preserved(const Ensemble& before, const Ensemble& after);

struct EquivarianceReport {
  std::string test;  // "ks" or "chi2"
  double statistic = 0.0;
  double p_value = 0.0;
  double threshold = 0.0;  // the statistic must stay below this
  int bins = 0;
  std::size_t samples = 0;
  bool pass = false;

  nlohmann::json to_json() const;
};

// Survival function of the Kolmogorov distribution, P(K > λ).
double kolmogorov_survival(double lambda);
// KS statistic of a sample against a CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
// Asymptotic p-value with the small-sample correction λ = (√n + 0.12 + 0.11/√n) D.
double ks_p_value(double d, std::size_t n);

// 1D: KS against the CDF, passing when D < threshold (or, with threshold 0,
// when p > alpha). 2D: binned χ² with at least 20 expected counts per bin.
EquivarianceReport equivariance_test(const Ensemble& e, const TabulatedDensity& rho, double threshold = 0.0,
                                     double alpha = 0.01);

// S_G = ∫ ρ ln(|ψ|²/ρ) dV on the grid of w with 0 ln(·) = 0; ρ is renormalized.
double gibbs_entropy(std::span<const double> rho, const GridWave& w);
// Histogram of the ensemble on the cells of w's grid (nearest node), as a density.
std::vector<double> histogram_density(const Ensemble& e, const GridSpec& spec);

struct TrialDensity {
  std::string name;
  std::function<double(double)> f;  // on [0, volume], need not be normalized
};

struct ClassicalGibbsReport {
  double volume = 0.0;
  double uniform = 0.0;  // -∫ρ ln ρ for the uniform density, ln Γ
  std::vector<std::pair<std::string, double>> trials;
  bool uniform_maximal = false;

  nlohmann::json to_json() const;
};

// Truncated Gaussians, two-level splits and a uniform copy on [0, volume].
std::vector<TrialDensity> standard_trials(double volume);
// Compares -∫ρ ln ρ of each trial with the uniform density on a cell of the given volume.
ClassicalGibbsReport classical_gibbs_check(double volume, const std::vector<TrialDensity>& trials,
                                           int points = 20000);

}  // namespace jetqd
