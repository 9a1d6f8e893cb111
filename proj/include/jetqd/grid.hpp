#pragma once

#include <complex>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <vector>

#include "jetqd/analytic.hpp"
#include "jetqd/dynamics.hpp"
#include "jetqd/jetstate.hpp"
#include "jetqd/potential.hpp"

namespace jetqd {

using cplx = std::complex<double>;

// Uniform periodic grid: x_k = lower_i + k L_i / M_i, k = 0..M_i-1, axis 0 slowest.
struct GridSpec {
  std::vector<int> points;
  std::vector<double> lower;
  std::vector<double> extent;

  static GridSpec centered(std::vector<int> points, std::vector<double> extent, std::vector<double> center = {});
  // Box covering the state between t0 and t1 with `pad` widths of margin.
  static GridSpec covering(const AnalyticState& psi, double t0, double t1, int points_per_axis, double pad = 20.0);

  int dim() const { return static_cast<int>(points.size()); }
  std::size_t size() const;
  double spacing(int axis) const { return extent[static_cast<std::size_t>(axis)] / points[static_cast<std::size_t>(axis)]; }
  double cell_volume() const;
  double x(int axis, int k) const { return lower[static_cast<std::size_t>(axis)] + k * spacing(axis); }
  // Angular wavenumber of FFT bin k; the Nyquist bin maps to -π/h.
  double wavenumber(int axis, int k) const;
  double nyquist(int axis) const;
  void validate() const;
};

class GridWave {
 public:
  GridWave() = default;
  explicit GridWave(GridSpec spec, double t = 0.0);

  static GridWave sample(const GridSpec& spec, const std::function<cplx(std::span<const double>)>& f, double t = 0.0);
  static GridWave from_analytic(const AnalyticState& psi, const GridSpec& spec, double t);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim(); }
  std::size_t size() const { return data_.size(); }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  cplx& operator[](std::size_t i) { return data_[i]; }
  cplx operator[](std::size_t i) const { return data_[i]; }
  // Coordinates of flat index i.
  std::vector<double> point(std::size_t i) const;

  double norm() const;  // Σ|ψ|² ΔV
  void normalize();
  double max_modulus() const;
  std::vector<double> density() const;

  double t = 0.0;

 private:
  GridSpec spec_;
  std::vector<cplx> data_;
};

// In-place FFTW transforms over a grid shape; unnormalized in both directions.
class GridFft {
 public:
  explicit GridFft(const GridSpec& spec);
  ~GridFft();
  GridFft(const GridFft&) = delete;
  GridFft& operator=(const GridFft&) = delete;

  void forward(std::span<cplx> data) const;
  void backward(std::span<cplx> data) const;

 private:
  void* forward_ = nullptr;
  void* backward_ = nullptr;
  std::size_t size_ = 0;
};

// Fraction of spectral power with |k_i| > 0.8 k_nyquist on some axis.
double spectral_tail(const GridWave& w);
// Throws GridTooCoarse when spectral_tail exceeds `limit`.
void check_resolution(const GridWave& w, double limit = 1e-10);

// Strang splitting e^{-iV dt/2ħ} F⁻¹ e^{-iħk²dt/2m} F e^{-iV dt/2ħ}.
class SplitStepper {
 public:
  SplitStepper(const GridSpec& spec, const Potential& pot, const Physics& phys, double dt);

  double dt() const { return dt_; }
  void step(GridWave& w) const;
  void advance(GridWave& w, long steps) const;

 private:
  GridSpec spec_;
  double dt_;
  std::shared_ptr<GridFft> fft_;
  std::vector<cplx> half_potential_;
  std::vector<cplx> kinetic_;
};

GridWave step_splitfourier(const GridWave& w, const Potential& pot, const Physics& phys, double dt);

// Fourier interpolant of a frozen snapshot: ψ and ∂_σψ at arbitrary points.
// Coefficients below noise_floor·max|c| are dropped; round-off there would
// otherwise dominate high derivatives through the factor k^|σ|.
class SpectralInterpolant {
 public:
  static constexpr double kDefaultNoiseFloor = 1e-14;
  explicit SpectralInterpolant(const GridWave& w, double noise_floor = kDefaultNoiseFloor);

  int dim() const { return spec_.dim(); }
  double t() const { return t_; }
  double max_modulus() const { return max_modulus_; }
  // out[r] = ∂_σψ(x) for ranks r < table.order_begin(max_order + 1).
  void derivatives(std::span<const double> x, const IndexTable& table, int max_order, std::span<cplx> out) const;
  cplx value(std::span<const double> x) const;

 private:
  GridSpec spec_;
  double t_;
  double max_modulus_;
  std::vector<cplx> coeff_;  // normalized FFT coefficients, Nyquist bins zeroed
};

struct Extraction {
  JetState state;
  double condition = 1.0;  // max|ψ| / |ψ(q)|, the amplification of grid noise
};

Extraction jacobi_extract_report(const SpectralInterpolant& interp, const Physics& phys, std::span<const double> q,
                                 int order, double node_floor = 1e-12);
JetState jacobi_extract(const GridWave& w, const Physics& phys, std::span<const double> q, int order,
                        double node_floor = 1e-12);
JetState jacobi_extract(const AnalyticState& psi, std::span<const double> q, double t, int order,
                        double node_floor = 1e-12);

// Spectral ∂ψ/∂x_axis on the grid.
std::vector<cplx> spectral_gradient(const GridWave& w, int axis);

struct VelocityField {
  std::vector<std::vector<double>> v;  // [axis][flat index]
  std::vector<std::uint8_t> masked;    // 1 where |ψ| < floor·max|ψ|
};

// v = (ħ/m) Im(∇ψ/ψ) with node cells masked to zero.
VelocityField bohm_velocity_field(const GridWave& w, const Physics& phys, double node_floor = 1e-8);

enum class Divergence { Spectral, Central };

struct ContinuityResidual {
  std::vector<double> field;
  double max_norm = 0.0;
  double l2_norm = 0.0;
};

// ∂_t|ψ|² + ∇·j at the midpoint, with j = (ħ/m) Im(ψ̄∇ψ) averaged over the two states.
ContinuityResidual continuity_residual(const GridWave& prev, const GridWave& next, double dt, const Physics& phys,
                                       Divergence div = Divergence::Spectral);

// Snapshots on a uniform time lattice; arbitrary times take one extra Strang step
// from the lattice point below.
class GridOracle : public MomentumOracle {
 public:
  GridOracle(GridWave initial, Potential pot, Physics phys, double dt, double t_final, double node_floor = 1e-12);

  int dim() const override { return dim_; }
  std::string name() const override { return "grid"; }
  void momentums(double t, std::span<const double> q, const IndexTable& table, int max_order,
                 std::span<cplx> out) const override;

  double dt() const { return dt_; }
  const GridWave& snapshot(std::size_t k) const { return snapshots_[k]; }
  std::size_t snapshot_count() const { return snapshots_.size(); }
  std::shared_ptr<const SpectralInterpolant> interpolant(double t) const;

 private:
  int dim_;
  Potential pot_;
  Physics phys_;
  double dt_;
  double t0_;
  double node_floor_;
  std::vector<GridWave> snapshots_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const SpectralInterpolant>> cache_;
};

// Binary snapshot: magic, endianness tag, dims, points, lower, extent, t, raw complex doubles.
void write_snapshot(const std::filesystem::path& path, const GridWave& w);
GridWave read_snapshot(const std::filesystem::path& path);
// JSON sidecar describing a snapshot.
void write_snapshot_sidecar(const std::filesystem::path& path, const GridWave& w, const std::string& description);
// x, |ψ|² along `axis`; for 2D grids the slice passes through the grid line nearest `through`.
void write_density_csv(std::ostream& os, const GridWave& w, int axis = 0, double through = 0.0);

}  // namespace jetqd
