#include "jetqd/ensemble.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "jetqd/errors.hpp"
#include "jetqd/ode.hpp"

namespace jetqd {

std::size_t Ensemble::excluded_count() const {
  return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), std::uint8_t{1}));
}

double Ensemble::excluded_fraction() const {
  return size() == 0 ? 0.0 : static_cast<double>(excluded_count()) / static_cast<double>(size());
}

std::vector<double> Ensemble::coordinate(int axis) const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (!excluded[i]) out.push_back(point(i)[static_cast<std::size_t>(axis)]);
  }
  return out;
}

void Ensemble::write_csv(std::ostream& os) const {
  os << "id";
  for (int a = 0; a < dim; ++a) os << ',' << coordinate_letter(a);
  os << ",excluded\n";
  os.precision(17);
  for (std::size_t i = 0; i < size(); ++i) {
    os << i;
    for (double c : point(i)) os << ',' << c;
    os << ',' << int(excluded[i]) << '\n';
  }
}

namespace {

// Offset d in [0, h] where a + (b - a) s/h integrates to `target` from 0.
double invert_linear(double a, double b, double h, double target) {
  const double slope = (b - a) / h;
  const double disc = a * a + 2.0 * slope * target;
  const double denom = a + std::sqrt(std::max(disc, 0.0));
  const double d = denom > 0.0 ? 2.0 * target / denom : 0.5 * h;
  return std::clamp(d, 0.0, h);
}

void trapezoid_cumulative(std::span<const double> f, double h, std::vector<double>& cum) {
  cum.assign(f.size(), 0.0);
  for (std::size_t k = 1; k < f.size(); ++k) cum[k] = cum[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
}

// Locates the interval of `target` in a cumulative table and returns the node offset.
double invert_cumulative(std::span<const double> f, std::span<const double> cum, double h, double target,
                         std::size_t& k) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  const std::ptrdiff_t idx = std::distance(cum.begin(), it) - 1;
  k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(cum.size()) - 2));
  return invert_linear(f[k], f[k + 1], h, target - cum[k]);
}

}  // namespace

TabulatedDensity::TabulatedDensity(std::vector<int> points, std::vector<double> lower, std::vector<double> upper,
                                   std::vector<double> values)
    : points_(std::move(points)), lower_(std::move(lower)), upper_(std::move(upper)), values_(std::move(values)) {
  const int n = dim();
  if (n < 1 || n > 2) throw std::invalid_argument("tabulated densities are 1D or 2D");
  if (lower_.size() != points_.size() || upper_.size() != points_.size()) {
    throw std::invalid_argument("tabulated density bounds do not match its dimension");
  }
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) {
    if (points_[static_cast<std::size_t>(a)] < 2 || !(upper_[static_cast<std::size_t>(a)] > lower_[static_cast<std::size_t>(a)])) {
      throw std::invalid_argument("tabulated density needs at least two nodes on a nonempty interval");
    }
    total *= static_cast<std::size_t>(points_[static_cast<std::size_t>(a)]);
  }
  if (values_.size() != total) throw std::invalid_argument("tabulated density value count mismatch");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("tabulated density must be finite and nonnegative");
  }
  const auto m0 = static_cast<std::size_t>(points_[0]);
  if (n == 1) {
    marginal_ = values_;
  } else {
    const auto m1 = static_cast<std::size_t>(points_[1]);
    const double h1 = spacing(1);
    marginal_.assign(m0, 0.0);
    for (std::size_t i = 0; i < m0; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m1; ++j) s += (j == 0 || j + 1 == m1 ? 0.5 : 1.0) * values_[i * m1 + j];
      marginal_[i] = s * h1;
    }
    row_cumulative_.resize(values_.size());
    std::vector<double> cum;
    for (std::size_t i = 0; i < m0; ++i) {
      trapezoid_cumulative({values_.data() + i * m1, m1}, h1, cum);
      std::copy(cum.begin(), cum.end(), row_cumulative_.begin() + static_cast<std::ptrdiff_t>(i * m1));
    }
  }
  trapezoid_cumulative(marginal_, spacing(0), cumulative_);
  total_ = cumulative_.back();
  if (!(total_ > 0.0)) throw std::invalid_argument("tabulated density integrates to zero");
}

double TabulatedDensity::spacing(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return (upper_[a] - lower_[a]) / (points_[a] - 1);
}

TabulatedDensity TabulatedDensity::from_analytic(const AnalyticState& psi, double t, int points_per_axis,
                                                 double halfwidth) {
  const int n = psi.dim();
  if (n > 2) throw std::invalid_argument("tabulated densities are 1D or 2D");
  if (points_per_axis <= 0) points_per_axis = n == 1 ? (1 << 15) + 1 : 513;
  auto [lo, hi] = psi.support(t, halfwidth);
  std::vector<int> pts(static_cast<std::size_t>(n), points_per_axis);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(std::pow(points_per_axis, n)));
  std::vector<double> x(static_cast<std::size_t>(n));
  const double h0 = (hi[0] - lo[0]) / (points_per_axis - 1);
  for (int i = 0; i < points_per_axis; ++i) {
    x[0] = lo[0] + i * h0;
    if (n == 1) {
      values.push_back(psi.density(x, t));
      continue;
    }
    const double h1 = (hi[1] - lo[1]) / (points_per_axis - 1);
    for (int j = 0; j < points_per_axis; ++j) {
      x[1] = lo[1] + j * h1;
      values.push_back(psi.density(x, t));
    }
  }
  return TabulatedDensity(pts, lo, hi, std::move(values));
}

TabulatedDensity TabulatedDensity::from_grid(const GridWave& w, int refine) {
  const GridSpec& coarse = w.spec();
  const int n = coarse.dim();
  if (refine < 1) throw std::invalid_argument("refinement factor must be positive");
  GridSpec fine = coarse;
  for (auto& m : fine.points) m *= refine;

  std::vector<cplx> spectrum(w.data().begin(), w.data().end());
  GridFft(coarse).forward(spectrum);
  std::vector<cplx> padded(fine.size(), cplx{});
  const double scale = 1.0 / static_cast<double>(coarse.size());
  auto fine_index = [&](int axis, int k) {
    const int m = coarse.points[static_cast<std::size_t>(axis)];
    const int mf = fine.points[static_cast<std::size_t>(axis)];
    if (m % 2 == 0 && k == m / 2) return -1;
    const int f = k < (m + 1) / 2 ? k : k - m;
    return f >= 0 ? f : mf + f;
  };
  if (n == 1) {
    for (int k = 0; k < coarse.points[0]; ++k) {
      const int f = fine_index(0, k);
      if (f >= 0) padded[static_cast<std::size_t>(f)] = spectrum[static_cast<std::size_t>(k)] * scale;
    }
  } else {
    const int m1 = coarse.points[1];
    const int mf1 = fine.points[1];
    for (int i = 0; i < coarse.points[0]; ++i) {
      const int fi = fine_index(0, i);
      if (fi < 0) continue;
      for (int j = 0; j < m1; ++j) {
        const int fj = fine_index(1, j);
        if (fj < 0) continue;
        padded[static_cast<std::size_t>(fi) * static_cast<std::size_t>(mf1) + static_cast<std::size_t>(fj)] =
            spectrum[static_cast<std::size_t>(i * m1 + j)] * scale;
      }
    }
  }
  GridFft(fine).backward(padded);

  // Close the periodic lattice by repeating the first node at the upper edge.
  std::vector<int> pts;
  std::vector<double> lo, hi;
  for (int a = 0; a < n; ++a) {
    pts.push_back(fine.points[static_cast<std::size_t>(a)] + 1);
    lo.push_back(fine.lower[static_cast<std::size_t>(a)]);
    hi.push_back(fine.lower[static_cast<std::size_t>(a)] + fine.extent[static_cast<std::size_t>(a)]);
  }
  std::vector<double> values;
  if (n == 1) {
    const int mf = fine.points[0];
    for (int k = 0; k <= mf; ++k) values.push_back(std::norm(padded[static_cast<std::size_t>(k % mf)]));
  } else {
    const int mf0 = fine.points[0];
    const int mf1 = fine.points[1];
    for (int i = 0; i <= mf0; ++i) {
      for (int j = 0; j <= mf1; ++j) {
        values.push_back(std::norm(padded[static_cast<std::size_t>((i % mf0) * mf1 + (j % mf1))]));
      }
    }
  }
  return TabulatedDensity(pts, lo, hi, std::move(values));
}

double TabulatedDensity::density(std::span<const double> x) const {
  const int n = dim();
  std::array<std::size_t, 2> k{};
  std::array<double, 2> th{};
  for (int a = 0; a < n; ++a) {
    const auto au = static_cast<std::size_t>(a);
    const double s = (x[au] - lower_[au]) / spacing(a);
    if (s < 0.0 || s > points_[au] - 1) return 0.0;
    k[au] = std::min(static_cast<std::size_t>(s), static_cast<std::size_t>(points_[au] - 2));
    th[au] = s - static_cast<double>(k[au]);
  }
  if (n == 1) return ((1.0 - th[0]) * values_[k[0]] + th[0] * values_[k[0] + 1]) / total_;
  const auto m1 = static_cast<std::size_t>(points_[1]);
  auto v = [&](std::size_t i, std::size_t j) { return values_[i * m1 + j]; };
  const double r0 = (1.0 - th[1]) * v(k[0], k[1]) + th[1] * v(k[0], k[1] + 1);
  const double r1 = (1.0 - th[1]) * v(k[0] + 1, k[1]) + th[1] * v(k[0] + 1, k[1] + 1);
  return ((1.0 - th[0]) * r0 + th[0] * r1) / total_;
}

double TabulatedDensity::cdf(double x) const {
  if (dim() != 1) throw std::invalid_argument("cdf is defined for 1D densities");
  if (x <= lower_[0]) return 0.0;
  if (x >= upper_[0]) return 1.0;
  const double h = spacing(0);
  const auto k = std::min(static_cast<std::size_t>((x - lower_[0]) / h), static_cast<std::size_t>(points_[0] - 2));
  const double d = x - node(0, static_cast<int>(k));
  const double a = marginal_[k];
  const double b = marginal_[k + 1];
  return (cumulative_[k] + a * d + 0.5 * (b - a) / h * d * d) / total_;
}

void TabulatedDensity::transform(std::span<const double> u, std::span<double> out) const {
  const double h0 = spacing(0);
  std::size_t k = 0;
  const double d0 = invert_cumulative(marginal_, cumulative_, h0, u[0] * total_, k);
  out[0] = node(0, static_cast<int>(k)) + d0;
  if (dim() == 1) return;
  const auto m1 = static_cast<std::size_t>(points_[1]);
  const double th = d0 / h0;
  // The conditional along axis 1 is the θ-mixture of rows k and k+1, and so is its CDF.
  const double* r0 = values_.data() + k * m1;
  const double* r1 = r0 + m1;
  const double* c0 = row_cumulative_.data() + k * m1;
  const double* c1 = c0 + m1;
  auto cum = [&](std::size_t j) { return (1.0 - th) * c0[j] + th * c1[j]; };
  const double target = u[1] * cum(m1 - 1);
  std::size_t lo = 0, hi = m1 - 1;  // cum(lo) <= target, lo < hi
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (cum(mid) <= target ? lo : hi) = mid;
  }
  const double a = (1.0 - th) * r0[lo] + th * r1[lo];
  const double b = (1.0 - th) * r0[lo + 1] + th * r1[lo + 1];
  out[1] = node(1, static_cast<int>(lo)) + invert_linear(a, b, spacing(1), target - cum(lo));
}

TabulatedDensity TabulatedDensity::tabulate(double lower, double upper, int points,
                                            const std::function<double(double)>& f) {
  std::vector<double> values(static_cast<std::size_t>(points));
  const double h = (upper - lower) / (points - 1);
  for (int k = 0; k < points; ++k) values[static_cast<std::size_t>(k)] = f(lower + k * h);
  return TabulatedDensity({points}, {lower}, {upper}, std::move(values));
}

std::string TabulatedDensity::describe() const {
  std::ostringstream os;
  os << "inverse-cdf on " << (dim() == 1 ? "linear" : "bilinear") << " lattice";
  for (int a = 0; a < dim(); ++a) {
    os << (a ? " x " : " ") << points_[static_cast<std::size_t>(a)] << " nodes [" << lower_[static_cast<std::size_t>(a)]
       << ", " << upper_[static_cast<std::size_t>(a)] << "]";
  }
  return os.str();
}

Ensemble sample_density(const TabulatedDensity& rho, std::size_t count, std::uint64_t seed, double t) {
  if (count < 1) throw std::invalid_argument("sample count must be at least 1");
  Ensemble e;
  e.dim = rho.dim();
  e.t = t;
  e.seed = seed;
  e.provenance = rho.describe();
  e.x.resize(count * static_cast<std::size_t>(e.dim));
  e.excluded.assign(count, 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::array<double, 2> u{};
  for (std::size_t i = 0; i < count; ++i) {
    for (int a = 0; a < e.dim; ++a) u[static_cast<std::size_t>(a)] = uniform(rng);
    rho.transform({u.data(), static_cast<std::size_t>(e.dim)},
                  {e.x.data() + i * static_cast<std::size_t>(e.dim), static_cast<std::size_t>(e.dim)});
  }
  return e;
}

Ensemble sample_density(const AnalyticState& psi, double t, std::size_t count, std::uint64_t seed) {
  return sample_density(TabulatedDensity::from_analytic(psi, t), count, seed, t);
}

Ensemble sample_density(const GridWave& w, std::size_t count, std::uint64_t seed) {
  return sample_density(TabulatedDensity::from_grid(w), count, seed, w.t);
}

AnalyticVelocity::AnalyticVelocity(AnalyticState psi, double node_floor)
    : psi_(std::move(psi)), node_floor_(node_floor) {}

bool AnalyticVelocity::velocity(double t, std::span<const double> x, std::span<double> v) const {
  const int n = psi_.dim();
  cplx value{};
  std::array<cplx, kMaxDim> grad{};
  for (const auto& term : psi_.terms()) {
    cplx e{};
    std::array<cplx, kMaxDim> slope{};
    for (int i = 0; i < n; ++i) {
      const auto q = term.factors[static_cast<std::size_t>(i)].at(t);
      const double xi = x[static_cast<std::size_t>(i)];
      e += (q.A * xi + q.B) * xi + q.C;
      slope[static_cast<std::size_t>(i)] = 2.0 * q.A * xi + q.B;
    }
    const cplx f = term.weight * std::exp(e);
    value += f;
    for (int i = 0; i < n; ++i) grad[static_cast<std::size_t>(i)] += slope[static_cast<std::size_t>(i)] * f;
  }
  if (!(std::abs(value) >= node_floor_ * psi_.peak_modulus(t))) return false;
  const auto& phys = psi_.physics();
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = phys.hbar / phys.m(i) * (grad[static_cast<std::size_t>(i)] / value).imag();
  }
  return true;
}

bool UniformVelocity::velocity(double, std::span<const double>, std::span<double> v) const {
  std::copy(v_.begin(), v_.end(), v.begin());
  return true;
}

GridVelocity::GridVelocity(const GridWave& w, const Potential& pot, const Physics& phys, double dt, double t_final,
                           int stride, double node_floor)
    : spec_(w.spec()), t0_(w.t), dt_snap_(dt * stride) {
  if (!(dt > 0.0) || stride < 1) throw std::invalid_argument("grid velocity needs dt > 0 and stride >= 1");
  const long steps = std::lround((t_final - w.t) / dt);
  if (steps < 1 || steps % stride != 0 || std::abs(steps * dt - (t_final - w.t)) > 1e-9 * std::max(1.0, t_final)) {
    throw std::invalid_argument("grid velocity span must be a whole number of strides");
  }
  check_resolution(w);
  SplitStepper stepper(spec_, pot, phys, dt);
  GridWave cur = w;
  fields_.push_back(bohm_velocity_field(cur, phys, node_floor));
  for (long s = 0; s < steps; s += stride) {
    stepper.advance(cur, stride);
    fields_.push_back(bohm_velocity_field(cur, phys, node_floor));
  }
  final_ = std::move(cur);
}

bool GridVelocity::at_snapshot(std::size_t k, std::span<const double> x, std::span<double> v) const {
  const int n = spec_.dim();
  const auto& field = fields_[k];
  std::array<std::array<int, 4>, 2> idx{};
  std::array<std::array<double, 4>, 2> wt{};
  for (int a = 0; a < n; ++a) {
    const auto au = static_cast<std::size_t>(a);
    const int m = spec_.points[au];
    const double s = (x[au] - spec_.lower[au]) / spec_.spacing(a);
    const double fl = std::floor(s);
    const double th = s - fl;
    const int base = static_cast<int>(fl);
    // Cubic Lagrange weights on nodes base-1 .. base+2.
    wt[au] = {-th * (th - 1.0) * (th - 2.0) / 6.0, (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0,
              -(th + 1.0) * th * (th - 2.0) / 2.0, (th + 1.0) * th * (th - 1.0) / 6.0};
    for (int c = 0; c < 4; ++c) idx[au][static_cast<std::size_t>(c)] = ((base - 1 + c) % m + m) % m;
  }
  if (n == 1) {
    for (int c = 1; c <= 2; ++c) {
      if (field.masked[static_cast<std::size_t>(idx[0][static_cast<std::size_t>(c)])]) return false;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += wt[0][c] * field.v[0][static_cast<std::size_t>(idx[0][c])];
    v[0] = s;
    return true;
  }
  const auto m1 = static_cast<std::size_t>(spec_.points[1]);
  for (std::size_t c = 1; c <= 2; ++c) {
    for (std::size_t d = 1; d <= 2; ++d) {
      if (field.masked[static_cast<std::size_t>(idx[0][c]) * m1 + static_cast<std::size_t>(idx[1][d])]) return false;
    }
  }
  for (std::size_t a = 0; a < 2; ++a) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t d = 0; d < 4; ++d) {
        s += wt[0][c] * wt[1][d] * field.v[a][static_cast<std::size_t>(idx[0][c]) * m1 + static_cast<std::size_t>(idx[1][d])];
      }
    }
    v[a] = s;
  }
  return true;
}

bool GridVelocity::velocity(double t, std::span<const double> x, std::span<double> v) const {
  const double s = (t - t0_) / dt_snap_;
  const double last = static_cast<double>(fields_.size() - 1);
  if (s < -1e-9 || s > last + 1e-9) throw OracleUnavailable("grid velocity requested outside the solved interval");
  const auto k = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, last - 1.0));
  const double th = std::clamp(s - static_cast<double>(k), 0.0, 1.0);
  std::array<double, 2> v0{}, v1{};
  const auto n = static_cast<std::size_t>(dim());
  if (!at_snapshot(k, x, {v0.data(), n}) || !at_snapshot(k + 1, x, {v1.data(), n})) return false;
  for (std::size_t a = 0; a < n; ++a) v[a] = (1.0 - th) * v0[a] + th * v1[a];
  return true;
}

namespace {

std::atomic<int> g_worker_threads{0};

// Runs body(i) for i in [0, count) over the configured worker threads.
template <class F>
void parallel_for(std::size_t count, F&& body) {
  const std::size_t workers = static_cast<std::size_t>(worker_threads());
  if (workers == 1 || count < 64) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace

void set_worker_threads(int count) { g_worker_threads = std::max(0, count); }

int worker_threads() {
  const int n = g_worker_threads.load();
  if (n > 0) return std::min(n, 64);
  return std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, 64);
}

Ensemble advect(const Ensemble& e, const VelocitySource& source, double t_final, const AdvectSettings& settings) {
  if (source.dim() != e.dim) throw std::invalid_argument("velocity source dimension does not match the ensemble");
  if (!(settings.dt > 0.0)) throw std::invalid_argument("advection step must be positive");
  Ensemble out = e;
  out.t = t_final;
  const auto n = static_cast<std::size_t>(e.dim);
  const std::array<double, 1> stops{t_final};
  parallel_for(e.size(), [&](std::size_t i) {
    if (e.excluded[i]) return;
    std::span<double> y{out.x.data() + i * n, n};
    bool node = false;
    const OdeRhs f = [&](double t, std::span<const double> x, std::span<double> dx) {
      if (!source.velocity(t, x, dx)) {
        node = true;
        std::fill(dx.begin(), dx.end(), 0.0);
      }
    };
    try {
      if (settings.method == Method::Rk4) {
        integrate_rk4(f, e.t, y, stops, settings.dt, nullptr, nullptr);
      } else {
        AdaptiveSettings as;
        as.rtol = settings.tol;
        as.atol = settings.tol;
        as.dt_initial = settings.dt;
        integrate_dopri5(f, e.t, y, stops, as, nullptr, nullptr);
      }
    } catch (const NumericalError&) {
      node = true;
    }
    if (node) out.excluded[i] = 1;
  });
  return out;
}

Ensemble advect_dynamics(const Ensemble& e, const Model& model, int order, double t_final,
                         const IntegrateSettings& settings) {
  if (!model.closure.oracle) throw OracleUnavailable("advect_dynamics needs an oracle for the initial momentums");
  Ensemble out = e;
  out.t = t_final;
  const auto n = static_cast<std::size_t>(e.dim);
  IntegrateSettings s = settings;
  s.t_final = t_final;
  s.record_dt = 0.0;
  parallel_for(e.size(), [&](std::size_t i) {
    if (e.excluded[i]) return;
    JetState init(e.dim, order);
    init.t = e.t;
    init.q.assign(e.point(i).begin(), e.point(i).end());
    try {
      model.closure.oracle->momentums(e.t, init.q, init.table(), order, init.momentums());
      const auto rec = integrate(init, model, s);
      std::copy(rec.final_state.q.begin(), rec.final_state.q.end(), out.x.begin() + static_cast<std::ptrdiff_t>(i * n));
    } catch (const NumericalError&) {
      out.excluded[i] = 1;
    }
  });
  return out;
}

bool order_preserved(const Ensemble& before, const Ensemble& after) {
  if (before.dim != 1 || after.dim != 1 || before.size() != after.size()) {
    throw std::invalid_argument("order check needs matching 1D ensembles");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (!after.excluded[i]) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return before.x[a] < before.x[b]; });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (before.x[idx[k - 1]] < before.x[idx[k]] && !(after.x[idx[k - 1]] < after.x[idx[k]])) return false;
  }
  return true;
}

nlohmann::json EquivarianceReport::to_json() const {
  return {{"test", test},           {"statistic", statistic}, {"p_value", p_value}, {"threshold", threshold},
          {"bins", bins},           {"samples", samples},     {"pass", pass}};
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // P(K ≤ λ) = √(2π)/λ Σ exp(-(2k-1)²π²/8λ²)
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double a = (2 * k - 1) * std::numbers::pi / lambda;
      s += std::exp(-a * a / 8.0);
    }
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("KS statistic needs a nonempty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

double ks_scale(std::size_t n) {
  const double r = std::sqrt(static_cast<double>(n));
  return r + 0.12 + 0.11 / r;
}

}  // namespace

double ks_p_value(double d, std::size_t n) { return kolmogorov_survival(ks_scale(n) * d); }

namespace {

double ks_critical(std::size_t n, double alpha) {
  double lo = 0.0, hi = 5.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_survival(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / ks_scale(n);
}

EquivarianceReport chi2_test(const Ensemble& e, const TabulatedDensity& rho, double alpha) {
  const auto pts = rho.points();
  const std::size_t cells0 = static_cast<std::size_t>(pts[0] - 1);
  const std::size_t cells1 = static_cast<std::size_t>(pts[1] - 1);
  const auto samples = e.coordinate(0).size();
  // Square bins aligned with the lattice, as fine as 20 expected counts allow on average.
  const auto nb = static_cast<std::size_t>(
      std::clamp(std::floor(std::sqrt(static_cast<double>(samples) / 80.0)), 2.0, 64.0));
  const std::size_t bins = nb * nb;
  std::vector<double> expected(bins, 0.0);
  std::vector<double> observed(bins, 0.0);
  auto bin_of = [&](std::size_t c0, std::size_t c1) { return (c0 * nb / cells0) * nb + (c1 * nb / cells1); };

  const double area = rho.spacing(0) * rho.spacing(1);
  double mass = 0.0;
  for (std::size_t i = 0; i < cells0; ++i) {
    for (std::size_t j = 0; j < cells1; ++j) {
      std::array<double, 2> c{rho.node(0, static_cast<int>(i)) + 0.5 * rho.spacing(0),
                              rho.node(1, static_cast<int>(j)) + 0.5 * rho.spacing(1)};
      const double p = rho.density(c) * area;  // bilinear cell mass = centre value × area
      expected[bin_of(i, j)] += p;
      mass += p;
    }
  }
  for (auto& x : expected) x *= static_cast<double>(samples) / mass;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.excluded[i]) continue;
    const auto pt = e.point(i);
    const double s0 = (pt[0] - rho.lower()[0]) / rho.spacing(0);
    const double s1 = (pt[1] - rho.lower()[1]) / rho.spacing(1);
    const auto c0 = static_cast<std::size_t>(std::clamp(s0, 0.0, static_cast<double>(cells0) - 0.5));
    const auto c1 = static_cast<std::size_t>(std::clamp(s1, 0.0, static_cast<double>(cells1) - 0.5));
    observed[bin_of(c0, c1)] += 1.0;
  }
  // Pool every bin below 20 expected counts into one.
  std::vector<double> eo, oo;
  double pool_e = 0.0, pool_o = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (expected[b] >= 20.0) {
      eo.push_back(expected[b]);
      oo.push_back(observed[b]);
    } else {
      pool_e += expected[b];
      pool_o += observed[b];
    }
  }
  if (pool_e >= 20.0 || eo.empty()) {
    eo.push_back(pool_e);
    oo.push_back(pool_o);
  } else if (pool_e > 0.0 || pool_o > 0.0) {
    const auto smallest = std::distance(eo.begin(), std::min_element(eo.begin(), eo.end()));
    eo[static_cast<std::size_t>(smallest)] += pool_e;
    oo[static_cast<std::size_t>(smallest)] += pool_o;
  }
  EquivarianceReport r;
  r.test = "chi2";
  r.samples = samples;
  r.bins = static_cast<int>(eo.size());
  for (std::size_t b = 0; b < eo.size(); ++b) {
    if (eo[b] > 0.0) r.statistic += (oo[b] - eo[b]) * (oo[b] - eo[b]) / eo[b];
  }
  const double dof = std::max(1.0, static_cast<double>(eo.size()) - 1.0);
  boost::math::chi_squared_distribution<double> chi(dof);
  r.p_value = boost::math::cdf(boost::math::complement(chi, r.statistic));
  r.threshold = boost::math::quantile(boost::math::complement(chi, alpha));
  r.pass = r.statistic < r.threshold;
  return r;
}

}  // namespace

EquivarianceReport equivariance_test(const Ensemble& e, const TabulatedDensity& rho, double threshold, double alpha) {
  if (e.dim != rho.dim()) throw std::invalid_argument("ensemble and density dimensions differ");
  if (e.dim == 2) return chi2_test(e, rho, alpha);
  EquivarianceReport r;
  r.test = "ks";
  const auto xs = e.coordinate(0);
  r.samples = xs.size();
  r.statistic = ks_statistic(xs, [&](double x) { return rho.cdf(x); });
  r.p_value = ks_p_value(r.statistic, r.samples);
  r.threshold = threshold > 0.0 ? threshold : ks_critical(r.samples, alpha);
  r.pass = r.statistic < r.threshold;
  return r;
}

double gibbs_entropy(std::span<const double> rho, const GridWave& w) {
  if (rho.size() != w.size()) throw std::invalid_argument("density and wave sizes differ");
  const double dv = w.spec().cell_volume();
  const auto psi2 = w.density();
  const double zr = std::accumulate(rho.begin(), rho.end(), 0.0) * dv;
  const double zp = std::accumulate(psi2.begin(), psi2.end(), 0.0) * dv;
  if (!(zr > 0.0) || !(zp > 0.0)) throw std::invalid_argument("gibbs entropy needs normalizable densities");
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < 0.0) throw std::invalid_argument("density must be nonnegative");
    if (rho[i] == 0.0) continue;
    const double r = rho[i] / zr;
    const double p = psi2[i] / zp;
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    s += r * std::log(p / r);
  }
  return s * dv;
}

std::vector<double> histogram_density(const Ensemble& e, const GridSpec& spec) {
  if (e.dim != spec.dim()) throw std::invalid_argument("ensemble and grid dimensions differ");
  std::vector<double> h(spec.size(), 0.0);
  const auto kept = e.size() - e.excluded_count();
  if (kept == 0) return h;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.excluded[i]) continue;
    std::size_t flat = 0;
    for (int a = 0; a < spec.dim(); ++a) {
      const int m = spec.points[static_cast<std::size_t>(a)];
      const long k = std::lround((e.point(i)[static_cast<std::size_t>(a)] - spec.lower[static_cast<std::size_t>(a)]) /
                                 spec.spacing(a));
      flat = flat * static_cast<std::size_t>(m) + static_cast<std::size_t>(((k % m) + m) % m);
    }
    h[flat] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(kept) * spec.cell_volume());
  for (auto& v : h) v *= scale;
  return h;
}

nlohmann::json ClassicalGibbsReport::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& [name, s] : trials) t.push_back({{"name", name}, {"entropy", s}});
  return {{"volume", volume}, {"uniform", uniform}, {"trials", t}, {"uniform_maximal", uniform_maximal}};
}

std::vector<TrialDensity> standard_trials(double volume) {
  std::vector<TrialDensity> out;
  out.push_back({"uniform", [](double) { return 1.0; }});
  for (double frac : {0.1, 0.25, 0.5}) {
    const double sd = frac * volume;
    out.push_back({"truncated-gaussian(sd=" + std::to_string(frac) + "V)", [=](double x) {
                     const double z = (x - 0.5 * volume) / sd;
                     return std::exp(-0.5 * z * z);
                   }});
  }
  for (auto [split, p] : std::vector<std::pair<double, double>>{{0.5, 0.3}, {0.5, 0.9}, {0.25, 0.6}, {0.25, 0.25}}) {
    std::ostringstream name;
    name << "two-level(split=" << split << ",p=" << p << ")";
    out.push_back({name.str(), [=](double x) {
                     return x < split * volume ? p / (split * volume) : (1.0 - p) / ((1.0 - split) * volume);
                   }});
  }
  return out;
}

ClassicalGibbsReport classical_gibbs_check(double volume, const std::vector<TrialDensity>& trials, int points) {
  if (!(volume > 0.0) || points < 2) throw std::invalid_argument("classical gibbs check needs a finite cell");
  ClassicalGibbsReport r;
  r.volume = volume;
  r.uniform = std::log(volume);
  const double h = volume / points;
  r.uniform_maximal = true;
  for (const auto& trial : trials) {
    // Midpoint rule: exact for piecewise-constant trials with breaks on cell edges.
    std::vector<double> f(static_cast<std::size_t>(points));
    double z = 0.0;
    for (int k = 0; k < points; ++k) {
      f[static_cast<std::size_t>(k)] = trial.f((k + 0.5) * h);
      if (!(f[static_cast<std::size_t>(k)] >= 0.0)) throw std::invalid_argument("trial density must be nonnegative");
      z += f[static_cast<std::size_t>(k)] * h;
    }
    double s = 0.0;
    for (double v : f) {
      const double rho = v / z;
      if (rho > 0.0) s -= rho * std::log(rho) * h;
    }
    r.trials.emplace_back(trial.name, s);
    if (s > r.uniform + 1e-12 * std::max(1.0, std::abs(r.uniform))) r.uniform_maximal = false;
  }
  return r;
}

}  // namespace jetqd
