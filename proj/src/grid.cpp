#include "jetqd/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "jetqd/errors.hpp"
#include "jetqd/logderiv.hpp"

namespace jetqd {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr char kMagic[8] = {'J', 'Q', 'D', 'G', 'R', 'I', 'D', '1'};
constexpr std::uint32_t kEndianTag = 0x01020304u;

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

// Flat index -> per-axis indices for a 1D or 2D grid.
std::pair<int, int> split_index(const GridSpec& s, std::size_t i) {
  if (s.dim() == 1) return {static_cast<int>(i), 0};
  const auto m1 = static_cast<std::size_t>(s.points[1]);
  return {static_cast<int>(i / m1), static_cast<int>(i % m1)};
}

bool is_nyquist(const GridSpec& s, int axis, int k) {
  const int m = s.points[static_cast<std::size_t>(axis)];
  return m % 2 == 0 && k == m / 2;
}

}  // namespace

GridSpec GridSpec::centered(std::vector<int> points, std::vector<double> extent, std::vector<double> center) {
  if (center.empty()) center.assign(points.size(), 0.0);
  GridSpec s;
  s.points = std::move(points);
  s.extent = std::move(extent);
  for (std::size_t i = 0; i < s.points.size(); ++i) s.lower.push_back(center.at(i) - 0.5 * s.extent.at(i));
  s.validate();
  return s;
}

GridSpec GridSpec::covering(const AnalyticState& psi, double t0, double t1, int points_per_axis, double pad) {
  const auto n = static_cast<std::size_t>(psi.dim());
  std::vector<double> lo(n, std::numeric_limits<double>::infinity()), hi(n, -std::numeric_limits<double>::infinity());
  constexpr int kProbes = 32;
  for (int k = 0; k <= kProbes; ++k) {
    const double t = t0 + (t1 - t0) * k / kProbes;
    const auto [l, h] = psi.support(t, pad);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], l[i]);
      hi[i] = std::max(hi[i], h[i]);
    }
  }
  std::vector<double> extent(n), center(n);
  for (std::size_t i = 0; i < n; ++i) {
    extent[i] = hi[i] - lo[i];
    center[i] = 0.5 * (hi[i] + lo[i]);
  }
  return centered(std::vector<int>(n, points_per_axis), extent, center);
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int m : points) s *= static_cast<std::size_t>(m);
  return s;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

double GridSpec::wavenumber(int axis, int k) const {
  const int m = points[static_cast<std::size_t>(axis)];
  const int j = k < (m + 1) / 2 ? k : k - m;
  return 2.0 * std::numbers::pi * j / extent[static_cast<std::size_t>(axis)];
}

double GridSpec::nyquist(int axis) const { return std::numbers::pi / spacing(axis); }

void GridSpec::validate() const {
  if (points.empty() || points.size() > 2) throw ConfigError("grids are one- or two-dimensional");
  if (lower.size() != points.size() || extent.size() != points.size()) throw ConfigError("grid shape mismatch");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i] < 4) throw ConfigError("grid needs at least 4 points per axis");
    if (!(extent[i] > 0.0)) throw ConfigError("grid extent must be positive");
  }
}

GridWave::GridWave(GridSpec spec, double t_) : t(t_), spec_(std::move(spec)) {
  spec_.validate();
  data_.assign(spec_.size(), cplx{});
}

GridWave GridWave::sample(const GridSpec& spec, const std::function<cplx(std::span<const double>)>& f, double t) {
  GridWave w(spec, t);
  for (std::size_t i = 0; i < w.size(); ++i) w.data_[i] = f(w.point(i));
  return w;
}

GridWave GridWave::from_analytic(const AnalyticState& psi, const GridSpec& spec, double t) {
  if (psi.dim() != spec.dim()) throw ConfigError("grid and state dimensions differ");
  return sample(spec, [&](std::span<const double> x) { return psi.psi(x, t); }, t);
}

std::vector<double> GridWave::point(std::size_t i) const {
  const auto [a, b] = split_index(spec_, i);
  if (dim() == 1) return {spec_.x(0, a)};
  return {spec_.x(0, a), spec_.x(1, b)};
}

double GridWave::norm() const {
  double s = 0.0;
  for (const cplx& z : data_) s += std::norm(z);
  return s * spec_.cell_volume();
}

void GridWave::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw NumericalError("cannot normalize a vanishing grid wave");
  const double f = 1.0 / std::sqrt(n);
  for (cplx& z : data_) z *= f;
}

double GridWave::max_modulus() const {
  double m = 0.0;
  for (const cplx& z : data_) m = std::max(m, std::abs(z));
  return m;
}

std::vector<double> GridWave::density() const {
  std::vector<double> rho(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) rho[i] = std::norm(data_[i]);
  return rho;
}

GridFft::GridFft(const GridSpec& spec) : size_(spec.size()) {
  std::vector<cplx> scratch(size_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (spec.dim() == 1) {
    forward_ = fftw_plan_dft_1d(spec.points[0], buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(spec.points[0], buf, buf, FFTW_BACKWARD, flags);
  } else {
    forward_ = fftw_plan_dft_2d(spec.points[0], spec.points[1], buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_2d(spec.points[0], spec.points[1], buf, buf, FFTW_BACKWARD, flags);
  }
  if (!forward_ || !backward_) throw NumericalError("FFTW could not plan the transform");
}

GridFft::~GridFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void GridFft::forward(std::span<cplx> data) const {
  if (data.size() != size_) throw std::invalid_argument("FFT size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(forward_), p, p);
}

void GridFft::backward(std::span<cplx> data) const {
  if (data.size() != size_) throw std::invalid_argument("FFT size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(backward_), p, p);
}

double spectral_tail(const GridWave& w) {
  const GridSpec& s = w.spec();
  GridFft fft(s);
  std::vector<cplx> c(w.data().begin(), w.data().end());
  fft.forward(c);
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto [a, b] = split_index(s, i);
    const double p = std::norm(c[i]);
    total += p;
    bool high = std::abs(s.wavenumber(0, a)) > 0.8 * s.nyquist(0);
    if (s.dim() == 2) high = high || std::abs(s.wavenumber(1, b)) > 0.8 * s.nyquist(1);
    if (high) tail += p;
  }
  return total > 0.0 ? tail / total : 0.0;
}

void check_resolution(const GridWave& w, double limit) {
  const double tail = spectral_tail(w);
  if (tail > limit) {
    throw GridTooCoarse("spectral power fraction " + std::to_string(tail) + " near the Nyquist limit exceeds " +
                        std::to_string(limit));
  }
}

SplitStepper::SplitStepper(const GridSpec& spec, const Potential& pot, const Physics& phys, double dt)
    : spec_(spec), dt_(dt), fft_(std::make_shared<GridFft>(spec)) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (pot.dim() != spec.dim() || phys.dim() != spec.dim()) throw ConfigError("grid, potential and masses disagree");
  const std::size_t n = spec.size();
  half_potential_.resize(n);
  kinetic_.resize(n);
  const double norm = 1.0 / static_cast<double>(n);
  GridWave shape(spec);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = shape.point(i);
    half_potential_[i] = std::polar(1.0, -pot.value(x) * dt / (2.0 * phys.hbar));
    const auto [a, b] = split_index(spec, i);
    double e = 0.0;
    const double ka = spec.wavenumber(0, a);
    e += ka * ka / (2.0 * phys.m(0));
    if (spec.dim() == 2) {
      const double kb = spec.wavenumber(1, b);
      e += kb * kb / (2.0 * phys.m(1));
    }
    kinetic_[i] = norm * std::polar(1.0, -phys.hbar * e * dt);
  }
}

void SplitStepper::step(GridWave& w) const { advance(w, 1); }

void SplitStepper::advance(GridWave& w, long steps) const {
  if (steps <= 0) return;
  auto d = w.data();
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) d[i] *= half_potential_[i];
  for (long s = 0; s < steps; ++s) {
    fft_->forward(d);
    for (std::size_t i = 0; i < n; ++i) d[i] *= kinetic_[i];
    fft_->backward(d);
    if (s + 1 < steps) {
      for (std::size_t i = 0; i < n; ++i) d[i] *= half_potential_[i] * half_potential_[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) d[i] *= half_potential_[i];
  w.t += static_cast<double>(steps) * dt_;
}

GridWave step_splitfourier(const GridWave& w, const Potential& pot, const Physics& phys, double dt) {
  check_resolution(w);
  GridWave out = w;
  SplitStepper(w.spec(), pot, phys, dt).step(out);
  return out;
}

SpectralInterpolant::SpectralInterpolant(const GridWave& w, double noise_floor)
    : spec_(w.spec()), t_(w.t), max_modulus_(w.max_modulus()), coeff_(w.data().begin(), w.data().end()) {
  GridFft(spec_).forward(coeff_);
  const double norm = 1.0 / static_cast<double>(coeff_.size());
  double peak = 0.0;
  for (const cplx& c : coeff_) peak = std::max(peak, std::abs(c));
  const double cut = noise_floor * peak;
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    const auto [a, b] = split_index(spec_, i);
    const bool nyq = is_nyquist(spec_, 0, a) || (spec_.dim() == 2 && is_nyquist(spec_, 1, b));
    coeff_[i] = nyq || std::abs(coeff_[i]) < cut ? cplx{} : coeff_[i] * norm;
  }
}

void SpectralInterpolant::derivatives(std::span<const double> x, const IndexTable& table, int max_order,
                                      std::span<cplx> out) const {
  const int n = spec_.dim();
  if (table.dim() != n) throw std::invalid_argument("interpolant: table dimension mismatch");
  const int K = max_order;
  // basis[a][s][k] = (i k)^s e^{i k (x - lower)}
  std::vector<std::vector<cplx>> basis(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const int m = spec_.points[static_cast<std::size_t>(a)];
    auto& ba = basis[static_cast<std::size_t>(a)];
    ba.resize(static_cast<std::size_t>((K + 1) * m));
    const double dx = x[static_cast<std::size_t>(a)] - spec_.lower[static_cast<std::size_t>(a)];
    for (int k = 0; k < m; ++k) {
      const double kk = spec_.wavenumber(a, k);
      cplx v = std::polar(1.0, kk * dx);
      for (int s = 0; s <= K; ++s) {
        ba[static_cast<std::size_t>(s * m + k)] = v;
        v *= kI * kk;
      }
    }
  }
  const int size = table.order_begin(K + 1);
  const int m0 = spec_.points[0];
  const auto& b0 = basis[0];
  if (n == 1) {
    for (int r = 0; r < size; ++r) {
      const int s = table.at(r)[0];
      cplx acc{};
      for (int k = 0; k < m0; ++k) acc += coeff_[static_cast<std::size_t>(k)] * b0[static_cast<std::size_t>(s * m0 + k)];
      out[static_cast<std::size_t>(r)] = acc;
    }
    return;
  }
  const int m1 = spec_.points[1];
  const auto& b1 = basis[1];
  // inner[k0][s1] = Σ_{k1} c[k0, k1] (i k1)^{s1} e^{i k1 (y - lower)}
  std::vector<cplx> inner(static_cast<std::size_t>(m0 * (K + 1)));
  for (int k0 = 0; k0 < m0; ++k0) {
    const cplx* row = &coeff_[static_cast<std::size_t>(k0 * m1)];
    for (int s = 0; s <= K; ++s) {
      const cplx* bs = &b1[static_cast<std::size_t>(s * m1)];
      cplx acc{};
      for (int k1 = 0; k1 < m1; ++k1) acc += row[k1] * bs[k1];
      inner[static_cast<std::size_t>(k0 * (K + 1) + s)] = acc;
    }
  }
  for (int r = 0; r < size; ++r) {
    const MultiIndex& sig = table.at(r);
    cplx acc{};
    for (int k0 = 0; k0 < m0; ++k0) {
      acc += b0[static_cast<std::size_t>(sig[0] * m0 + k0)] * inner[static_cast<std::size_t>(k0 * (K + 1) + sig[1])];
    }
    out[static_cast<std::size_t>(r)] = acc;
  }
}

cplx SpectralInterpolant::value(std::span<const double> x) const {
  const auto table = shared_index_table(dim(), 0);
  cplx v;
  derivatives(x, *table, 0, std::span<cplx>(&v, 1));
  return v;
}

Extraction jacobi_extract_report(const SpectralInterpolant& interp, const Physics& phys, std::span<const double> q,
                                 int order, double node_floor) {
  const int n = interp.dim();
  Extraction ex{JetState(n, order), 1.0};
  ex.state.t = interp.t();
  ex.state.q.assign(q.begin(), q.end());
  const auto& table = ex.state.table();
  std::vector<cplx> d(static_cast<std::size_t>(table.size()));
  interp.derivatives(q, table, order, d);
  const double mod = std::abs(d[0]);
  if (!(mod >= node_floor * interp.max_modulus()) || mod == 0.0) {
    throw NodeError("wave function vanishes at the requested point");
  }
  ex.condition = interp.max_modulus() / mod;
  shared_log_plan(n, order)->apply(d, ex.state.momentums());
  for (cplx& p : ex.state.momentums()) p *= -kI * phys.hbar;
  return ex;
}

JetState jacobi_extract(const GridWave& w, const Physics& phys, std::span<const double> q, int order,
                        double node_floor) {
  return jacobi_extract_report(SpectralInterpolant(w), phys, q, order, node_floor).state;
}

JetState jacobi_extract(const AnalyticState& psi, std::span<const double> q, double t, int order, double node_floor) {
  return from_wavefunction_analytic(psi, q, t, order, node_floor);
}

std::vector<cplx> spectral_gradient(const GridWave& w, int axis) {
  const GridSpec& s = w.spec();
  std::vector<cplx> c(w.data().begin(), w.data().end());
  GridFft fft(s);
  fft.forward(c);
  const double norm = 1.0 / static_cast<double>(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto [a, b] = split_index(s, i);
    const int k = axis == 0 ? a : b;
    c[i] *= is_nyquist(s, axis, k) ? cplx{} : kI * s.wavenumber(axis, k) * norm;
  }
  fft.backward(c);
  return c;
}

VelocityField bohm_velocity_field(const GridWave& w, const Physics& phys, double node_floor) {
  VelocityField f;
  const double floor = node_floor * w.max_modulus();
  f.masked.assign(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i) f.masked[i] = std::abs(w[i]) < floor ? 1 : 0;
  for (int a = 0; a < w.dim(); ++a) {
    const auto g = spectral_gradient(w, a);
    std::vector<double> v(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!f.masked[i]) v[i] = phys.hbar / phys.m(a) * (g[i] / w[i]).imag();
    }
    f.v.push_back(std::move(v));
  }
  return f;
}

namespace {

std::vector<std::vector<double>> current(const GridWave& w, const Physics& phys) {
  std::vector<std::vector<double>> j;
  for (int a = 0; a < w.dim(); ++a) {
    const auto g = spectral_gradient(w, a);
    std::vector<double> ja(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) ja[i] = phys.hbar / phys.m(a) * (std::conj(w[i]) * g[i]).imag();
    j.push_back(std::move(ja));
  }
  return j;
}

std::vector<double> divergence(const GridSpec& s, const std::vector<std::vector<double>>& j, Divergence kind) {
  const std::size_t n = s.size();
  std::vector<double> div(n, 0.0);
  if (kind == Divergence::Spectral) {
    GridFft fft(s);
    for (int a = 0; a < s.dim(); ++a) {
      std::vector<cplx> c(j[static_cast<std::size_t>(a)].begin(), j[static_cast<std::size_t>(a)].end());
      fft.forward(c);
      for (std::size_t i = 0; i < n; ++i) {
        const auto [ia, ib] = split_index(s, i);
        const int k = a == 0 ? ia : ib;
        c[i] *= is_nyquist(s, a, k) ? cplx{} : kI * s.wavenumber(a, k) / static_cast<double>(n);
      }
      fft.backward(c);
      for (std::size_t i = 0; i < n; ++i) div[i] += c[i].real();
    }
    return div;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [ia, ib] = split_index(s, i);
    for (int a = 0; a < s.dim(); ++a) {
      const int m = s.points[static_cast<std::size_t>(a)];
      auto flat = [&](int k) {
        const int kk = ((k % m) + m) % m;
        if (s.dim() == 1) return static_cast<std::size_t>(kk);
        return a == 0 ? static_cast<std::size_t>(kk * s.points[1] + ib) : static_cast<std::size_t>(ia * s.points[1] + kk);
      };
      const int k = a == 0 ? ia : ib;
      const auto& ja = j[static_cast<std::size_t>(a)];
      div[i] += (ja[flat(k + 1)] - ja[flat(k - 1)]) / (2.0 * s.spacing(a));
    }
  }
  return div;
}

}  // namespace

ContinuityResidual continuity_residual(const GridWave& prev, const GridWave& next, double dt, const Physics& phys,
                                       Divergence div) {
  if (prev.size() != next.size() || prev.dim() != next.dim()) throw std::invalid_argument("continuity: grid mismatch");
  auto jp = current(prev, phys);
  const auto jn = current(next, phys);
  for (std::size_t a = 0; a < jp.size(); ++a) {
    for (std::size_t i = 0; i < jp[a].size(); ++i) jp[a][i] = 0.5 * (jp[a][i] + jn[a][i]);
  }
  const auto d = divergence(prev.spec(), jp, div);
  ContinuityResidual res;
  res.field.resize(prev.size());
  double l2 = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double r = (std::norm(next[i]) - std::norm(prev[i])) / dt + d[i];
    res.field[i] = r;
    res.max_norm = std::max(res.max_norm, std::abs(r));
    l2 += r * r;
  }
  res.l2_norm = std::sqrt(l2 * prev.spec().cell_volume());
  return res;
}

GridOracle::GridOracle(GridWave initial, Potential pot, Physics phys, double dt, double t_final, double node_floor)
    : dim_(initial.dim()), pot_(std::move(pot)), phys_(std::move(phys)), dt_(dt), t0_(initial.t),
      node_floor_(node_floor) {
  if (!(dt > 0.0) || !(t_final >= initial.t)) throw ConfigError("grid oracle needs dt > 0 and t_final >= t0");
  check_resolution(initial);
  const auto steps = static_cast<long>(std::ceil((t_final - t0_) / dt - 1e-9));
  SplitStepper stepper(initial.spec(), pot_, phys_, dt);
  snapshots_.reserve(static_cast<std::size_t>(steps + 1));
  snapshots_.push_back(initial);
  for (long k = 0; k < steps; ++k) {
    GridWave w = snapshots_.back();
    stepper.step(w);
    w.t = t0_ + static_cast<double>(k + 1) * dt;
    snapshots_.push_back(std::move(w));
  }
}

std::shared_ptr<const SpectralInterpolant> GridOracle::interpolant(double t) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = cache_.find(t); it != cache_.end()) return it->second;
  const double u = (t - t0_) / dt_;
  const double tol = 1e-9;
  if (u < -tol || u > static_cast<double>(snapshots_.size() - 1) + 1.0 + tol) {
    throw OracleUnavailable("grid oracle has no data at t = " + std::to_string(t));
  }
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(u + tol)));
  k = std::min(k, snapshots_.size() - 1);
  std::shared_ptr<const SpectralInterpolant> interp;
  const double rest = t - snapshots_[k].t;
  if (std::abs(rest) <= 1e-12 * std::max(1.0, std::abs(t))) {
    interp = std::make_shared<const SpectralInterpolant>(snapshots_[k]);
  } else {
    GridWave w = snapshots_[k];
    SplitStepper(w.spec(), pot_, phys_, rest).step(w);
    w.t = t;
    interp = std::make_shared<const SpectralInterpolant>(w);
  }
  if (cache_.size() > 64) cache_.clear();
  cache_[t] = interp;
  return interp;
}

void GridOracle::momentums(double t, std::span<const double> q, const IndexTable& table, int max_order,
                           std::span<cplx> out) const {
  if (table.dim() != dim_) throw std::invalid_argument("grid oracle: dimension mismatch");
  const auto interp = interpolant(t);
  const int size = table.order_begin(max_order + 1);
  std::vector<cplx> d(static_cast<std::size_t>(size));
  interp->derivatives(q, table, max_order, d);
  if (!(std::abs(d[0]) >= node_floor_ * interp->max_modulus()) || d[0] == cplx{}) {
    throw NodeError("wave function vanishes at the requested point");
  }
  const auto plan = shared_log_plan(dim_, max_order);
  std::vector<cplx> f(static_cast<std::size_t>(plan->size()));
  plan->apply(d, f);
  for (int r = 0; r < size; ++r) out[static_cast<std::size_t>(r)] = -kI * phys_.hbar * f[static_cast<std::size_t>(r)];
}

void write_snapshot(const std::filesystem::path& path, const GridWave& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write snapshot " + path.string());
  const GridSpec& s = w.spec();
  os.write(kMagic, sizeof kMagic);
  const std::uint32_t tag = kEndianTag;
  const auto dims = static_cast<std::uint32_t>(s.dim());
  os.write(reinterpret_cast<const char*>(&tag), sizeof tag);
  os.write(reinterpret_cast<const char*>(&dims), sizeof dims);
  for (int m : s.points) {
    const auto v = static_cast<std::int64_t>(m);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  os.write(reinterpret_cast<const char*>(s.lower.data()), static_cast<std::streamsize>(sizeof(double) * s.lower.size()));
  os.write(reinterpret_cast<const char*>(s.extent.data()), static_cast<std::streamsize>(sizeof(double) * s.extent.size()));
  os.write(reinterpret_cast<const char*>(&w.t), sizeof w.t);
  os.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(sizeof(cplx) * w.size()));
  if (!os) throw ConfigError("failed writing snapshot " + path.string());
}

GridWave read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read snapshot " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError(path.string() + " is not a grid snapshot");
  std::uint32_t tag = 0, dims = 0;
  is.read(reinterpret_cast<char*>(&tag), sizeof tag);
  if (tag != kEndianTag) throw ConfigError("snapshot " + path.string() + " was written with a different byte order");
  is.read(reinterpret_cast<char*>(&dims), sizeof dims);
  if (dims < 1 || dims > 2) throw ConfigError("snapshot has unsupported dimension");
  GridSpec s;
  for (std::uint32_t i = 0; i < dims; ++i) {
    std::int64_t m = 0;
    is.read(reinterpret_cast<char*>(&m), sizeof m);
    s.points.push_back(static_cast<int>(m));
  }
  s.lower.resize(dims);
  s.extent.resize(dims);
  is.read(reinterpret_cast<char*>(s.lower.data()), static_cast<std::streamsize>(sizeof(double) * dims));
  is.read(reinterpret_cast<char*>(s.extent.data()), static_cast<std::streamsize>(sizeof(double) * dims));
  double t = 0.0;
  is.read(reinterpret_cast<char*>(&t), sizeof t);
  if (!is) throw ConfigError("truncated snapshot header");
  GridWave w(s, t);
  is.read(reinterpret_cast<char*>(w.data().data()), static_cast<std::streamsize>(sizeof(cplx) * w.size()));
  if (!is) throw ConfigError("truncated snapshot data");
  return w;
}

void write_snapshot_sidecar(const std::filesystem::path& path, const GridWave& w, const std::string& description) {
  nlohmann::json j;
  j["format"] = "jetqd-grid-snapshot";
  j["version"] = 1;
  j["byte_order"] = std::endian::native == std::endian::little ? "little" : "big";
  j["dims"] = w.dim();
  j["points"] = w.spec().points;
  j["lower"] = w.spec().lower;
  j["extent"] = w.spec().extent;
  j["t"] = w.t;
  j["norm"] = w.norm();
  j["description"] = description;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write sidecar " + path.string());
  os << j.dump(2) << "\n";
}

void write_density_csv(std::ostream& os, const GridWave& w, int axis, double through) {
  const GridSpec& s = w.spec();
  if (axis < 0 || axis >= s.dim()) throw std::invalid_argument("density slice axis out of range");
  os << "x,rho\n";
  os.precision(17);
  if (s.dim() == 1) {
    for (int k = 0; k < s.points[0]; ++k) os << s.x(0, k) << "," << std::norm(w[static_cast<std::size_t>(k)]) << "\n";
    return;
  }
  const int other = 1 - axis;
  const int mo = s.points[static_cast<std::size_t>(other)];
  int fixed = static_cast<int>(std::lround((through - s.lower[static_cast<std::size_t>(other)]) / s.spacing(other)));
  fixed = std::clamp(fixed, 0, mo - 1);
  for (int k = 0; k < s.points[static_cast<std::size_t>(axis)]; ++k) {
    const int i0 = axis == 0 ? k : fixed;
    const int i1 = axis == 0 ? fixed : k;
    os << s.x(axis, k) << "," << std::norm(w[static_cast<std::size_t>(i0 * s.points[1] + i1)]) << "\n";
  }
}

}  // namespace jetqd
