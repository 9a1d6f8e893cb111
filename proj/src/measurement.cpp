#include "jetqd/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "jetqd/errors.hpp"
#include "jetqd/logderiv.hpp"

namespace jetqd {

namespace {

constexpr cplx kI{0.0, 1.0};

// Coefficients of d^k tanh(u)/du^k as a polynomial in T = tanh(u).
std::vector<double> tanh_derivative_poly(int k) {
  std::vector<double> p{0.0, 1.0};
  for (int step = 0; step < k; ++step) {
    // d/du P(T) = P'(T) (1 - T²)
    std::vector<double> dp(p.size() > 1 ? p.size() - 1 : 1, 0.0);
    for (std::size_t i = 1; i < p.size(); ++i) dp[i - 1] = static_cast<double>(i) * p[i];
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      next[i] += dp[i];
      next[i + 2] -= dp[i];
    }
    p = std::move(next);
  }
  return p;
}

double poly_eval(const std::vector<double>& p, double x) {
  double s = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
  return s;
}

// ψ_0..ψ_top of the oscillator at ξ.
std::vector<double> hermite_functions(int top, double xi) {
  std::vector<double> h(static_cast<std::size_t>(top + 1), 0.0);
  h[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
  if (top >= 1) h[1] = std::sqrt(2.0) * xi * h[0];
  for (int m = 1; m < top; ++m) {
    h[static_cast<std::size_t>(m + 1)] = std::sqrt(2.0 / (m + 1)) * xi * h[static_cast<std::size_t>(m)] -
                                         std::sqrt(static_cast<double>(m) / (m + 1)) * h[static_cast<std::size_t>(m - 1)];
  }
  return h;
}

}  // namespace

Profile Profile::gaussian(cplx A, cplx B, cplx C) {
  Profile p;
  p.kind_ = Kind::Gaussian;
  p.a_ = A;
  p.b_ = B;
  p.c_ = C;
  return p;
}

Profile Profile::normal(double centre, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal profile needs sd > 0");
  const double s2 = sd * sd;
  return gaussian(-1.0 / (4.0 * s2), centre / (2.0 * s2),
                  -centre * centre / (4.0 * s2) - 0.25 * std::log(2.0 * std::numbers::pi * s2));
}

Profile Profile::pointer(double centre) { return gaussian(-0.25, 0.5 * centre, -0.25 * centre * centre); }

Profile Profile::hermite(int n, double centre, double width) {
  if (n < 0 || !(width > 0.0)) throw std::invalid_argument("hermite profile needs n >= 0 and width > 0");
  Profile p;
  p.kind_ = Kind::Hermite;
  p.n_ = n;
  p.centre_ = centre;
  p.width_ = width;
  return p;
}

Profile Profile::bump(double centre, double half_width, double edge) {
  if (!(half_width > 0.0) || !(edge > 0.0)) throw std::invalid_argument("bump profile needs positive widths");
  Profile p;
  p.kind_ = Kind::Bump;
  p.centre_ = centre;
  p.half_ = half_width;
  p.width_ = edge;
  return p;
}

cplx Profile::value(double x) const {
  cplx v[1];
  derivatives(x, 0, v);
  return v[0];
}

void Profile::derivatives(double x, int max_order, std::span<cplx> out) const {
  switch (kind_) {
    case Kind::Gaussian: {
      const cplx lin = 2.0 * a_ * x + b_;
      out[0] = std::exp((a_ * x + b_) * x + c_);
      if (max_order >= 1) out[1] = lin * out[0];
      for (int k = 1; k < max_order; ++k) {
        out[static_cast<std::size_t>(k + 1)] =
            lin * out[static_cast<std::size_t>(k)] + 2.0 * a_ * static_cast<double>(k) * out[static_cast<std::size_t>(k - 1)];
      }
      return;
    }
    case Kind::Hermite: {
      const double xi = (x - centre_) / width_;
      const auto h = hermite_functions(n_ + max_order + 1, xi);
      std::vector<double> coef(h.size(), 0.0);
      coef[static_cast<std::size_t>(n_)] = 1.0 / std::sqrt(width_);
      for (int k = 0; k <= max_order; ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < coef.size(); ++m) s += coef[m] * h[m];
        out[static_cast<std::size_t>(k)] = s;
        // d/dx ψ_m = (√(m/2) ψ_{m-1} - √((m+1)/2) ψ_{m+1}) / w
        std::vector<double> next(coef.size(), 0.0);
        for (std::size_t m = 0; m < coef.size(); ++m) {
          if (coef[m] == 0.0) continue;
          if (m > 0) next[m - 1] += coef[m] * std::sqrt(0.5 * static_cast<double>(m)) / width_;
          if (m + 1 < coef.size()) next[m + 1] -= coef[m] * std::sqrt(0.5 * static_cast<double>(m + 1)) / width_;
        }
        coef = std::move(next);
      }
      return;
    }
    case Kind::Bump: {
      const double tp = std::tanh((x - centre_ + half_) / width_);
      const double tm = std::tanh((x - centre_ - half_) / width_);
      double scale = 0.5;
      for (int k = 0; k <= max_order; ++k) {
        const auto p = tanh_derivative_poly(k);
        out[static_cast<std::size_t>(k)] = scale * (poly_eval(p, tp) - poly_eval(p, tm));
        scale /= width_;
      }
      return;
    }
  }
}

double Profile::peak() const {
  switch (kind_) {
    case Kind::Gaussian:
      if (a_.real() < 0.0) return std::exp(c_.real() - b_.real() * b_.real() / (4.0 * a_.real()));
      if (a_.real() == 0.0 && b_.real() == 0.0) return std::exp(c_.real());
      return std::numeric_limits<double>::infinity();
    case Kind::Hermite:
      return std::pow(std::numbers::pi, -0.25) / std::sqrt(width_);
    case Kind::Bump:
      return 1.0;
  }
  return 1.0;
}

BranchedWave::BranchedWave(int dim, std::vector<Branch> branches) : dim_(dim), branches_(std::move(branches)) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("branched wave dimension out of range");
  if (branches_.empty()) throw std::invalid_argument("branched wave needs at least one branch");
  for (const auto& b : branches_) {
    for (const auto& f : b.factors) {
      if (f.axis < 0 || f.axis >= dim) throw std::invalid_argument("branch factor axis out of range");
    }
  }
}

cplx BranchedWave::branch_value(std::size_t k, std::span<const double> x) const {
  const Branch& b = branches_.at(k);
  cplx v = b.weight;
  for (const auto& f : b.factors) v *= f.f.value(x[static_cast<std::size_t>(f.axis)]);
  return v;
}

cplx BranchedWave::value(std::span<const double> x) const {
  cplx v{};
  for (std::size_t k = 0; k < branches_.size(); ++k) v += branch_value(k, x);
  return v;
}

double BranchedWave::branch_peak(std::size_t k) const {
  const Branch& b = branches_.at(k);
  double p = std::abs(b.weight);
  for (const auto& f : b.factors) p *= f.f.peak();
  return p;
}

void BranchedWave::derivatives(int k, std::span<const double> x, const IndexTable& table, int order,
                               std::span<cplx> out) const {
  const int size = table.order_begin(order + 1);
  std::fill(out.begin(), out.begin() + size, cplx{});
  const auto n1 = static_cast<std::size_t>(order + 1);
  std::vector<cplx> axis_d(static_cast<std::size_t>(dim_) * n1);
  std::vector<cplx> fd(n1), prod(n1);
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    if (k >= 0 && static_cast<std::size_t>(k) != b) continue;
    const Branch& br = branches_[b];
    // Per-axis derivative arrays, multiplying factors on the same axis by Leibniz' rule.
    for (int a = 0; a < dim_; ++a) {
      cplx* d = axis_d.data() + static_cast<std::size_t>(a) * n1;
      std::fill(d, d + n1, cplx{});
      d[0] = 1.0;
    }
    for (const auto& f : br.factors) {
      f.f.derivatives(x[static_cast<std::size_t>(f.axis)], order, fd);
      cplx* d = axis_d.data() + static_cast<std::size_t>(f.axis) * n1;
      for (std::size_t m = 0; m < n1; ++m) {
        cplx s{};
        for (std::size_t j = 0; j <= m; ++j) s += static_cast<double>(binomial(static_cast<int>(m), static_cast<int>(j))) * d[j] * fd[m - j];
        prod[m] = s;
      }
      std::copy(prod.begin(), prod.end(), d);
    }
    for (int r = 0; r < size; ++r) {
      const MultiIndex& sigma = table.at(r);
      cplx v = br.weight;
      for (int a = 0; a < dim_; ++a) v *= axis_d[static_cast<std::size_t>(a) * n1 + static_cast<std::size_t>(sigma[a])];
      out[static_cast<std::size_t>(r)] += v;
    }
  }
}

CollapseResult collapse_select(const BranchedWave& wave, std::span<const double> point, double hbar, int order,
                               double tol) {
  if (static_cast<int>(point.size()) != wave.dim()) throw std::invalid_argument("collapse point dimension mismatch");
  const std::size_t nb = wave.branches().size();
  std::vector<double> mod(nb);
  std::vector<std::size_t> holding;
  for (std::size_t k = 0; k < nb; ++k) {
    mod[k] = std::abs(wave.branch_value(k, point));
    if (mod[k] > 1e-6 * wave.branch_peak(k)) holding.push_back(k);
  }
  if (holding.size() > 1) {
    throw AmbiguousBranch("point lies in the packets of branches '" + wave.branches()[holding[0]].label + "' and '" +
                          wave.branches()[holding[1]].label + "'");
  }
  const std::size_t sel =
      holding.empty() ? static_cast<std::size_t>(std::distance(mod.begin(), std::max_element(mod.begin(), mod.end())))
                      : holding[0];
  if (!(mod[sel] > 0.0)) throw NodeError("every branch vanishes at the collapse point");

  CollapseResult res{sel, wave.branches()[sel].label, BranchedWave(wave.dim(), {wave.branches()[sel]}), {}, {}, 0.0,
                     0.0, false};
  auto only = res.effective.branches();
  only[0].weight /= std::abs(only[0].weight);
  res.effective = BranchedWave(wave.dim(), std::move(only));
  for (std::size_t k = 0; k < nb; ++k) {
    if (k != sel) res.other_weight += mod[k] / mod[sel];
  }

  const auto plan = shared_log_plan(wave.dim(), order);
  const auto& table = plan->table();
  const auto size = static_cast<std::size_t>(plan->size());
  std::vector<cplx> d(size), f(size);
  auto momentums = [&](int k) {
    wave.derivatives(k, point, table, order, d);
    plan->apply(d, f);
    std::vector<cplx> p(size);
    for (std::size_t r = 0; r < size; ++r) p[r] = (hbar / kI) * f[r];
    return p;
  };
  res.full_momentums = momentums(-1);
  res.branch_momentums = momentums(static_cast<int>(sel));
  for (std::size_t r = 1; r < size; ++r) {
    const double diff = std::abs(res.full_momentums[r] - res.branch_momentums[r]);
    res.momentum_mismatch = std::max(res.momentum_mismatch, diff / std::max(1.0, std::abs(res.branch_momentums[r])));
  }
  res.match = res.momentum_mismatch <= tol;
  if (res.other_weight < 1e-8 && !res.match) {
    throw NumericalError("branch momentums differ from the full wave by " + std::to_string(res.momentum_mismatch));
  }
  return res;
}

void PointerSetup::validate() const {
  if (!(delta_y > 0.0)) throw std::invalid_argument("pointer width must be positive");
  if (!(g0 * tau > 0.0)) throw std::invalid_argument("pointer coupling g0*tau must be positive");
}

double PointerSetup::phi(double y) const {
  const double s2 = sd() * sd();
  return std::pow(2.0 * std::numbers::pi * s2, -0.25) * std::exp(-y * y / (4.0 * s2));
}

DiscreteObservable DiscreteObservable::hermite(const GridSpec& x_grid, std::vector<double> eigenvalues, double width) {
  if (x_grid.dim() != 1) throw std::invalid_argument("observable grids are 1D");
  DiscreteObservable obs;
  obs.eigenvalues = std::move(eigenvalues);
  for (std::size_t n = 0; n < obs.eigenvalues.size(); ++n) {
    const auto prof = Profile::hermite(static_cast<int>(n), 0.0, width);
    std::vector<cplx> v(static_cast<std::size_t>(x_grid.points[0]));
    for (int k = 0; k < x_grid.points[0]; ++k) v[static_cast<std::size_t>(k)] = prof.value(x_grid.x(0, k));
    obs.eigenvectors.push_back(std::move(v));
  }
  return obs;
}

std::vector<cplx> DiscreteObservable::coefficients(const GridWave& psi) const {
  std::vector<cplx> c;
  const double dx = psi.spec().cell_volume();
  for (const auto& v : eigenvectors) {
    if (v.size() != psi.size()) throw std::invalid_argument("eigenvector and wave sizes differ");
    cplx s{};
    for (std::size_t k = 0; k < v.size(); ++k) s += std::conj(v[k]) * psi[k];
    c.push_back(s * dx);
  }
  return c;
}

namespace {

GridSpec joint_spec(const GridWave& psi, const GridSpec& y_axis, const PointerSetup& setup) {
  setup.validate();
  if (psi.dim() != 1 || y_axis.dim() != 1) throw std::invalid_argument("joint measurement grids are (x, y)");
  if (y_axis.spacing(0) > 0.5 * setup.sd()) throw std::invalid_argument("pointer grid does not resolve the pointer");
  const auto& xs = psi.spec();
  return GridSpec{{xs.points[0], y_axis.points[0]}, {xs.lower[0], y_axis.lower[0]}, {xs.extent[0], y_axis.extent[0]}};
}

void check_held(const GridWave& joint, double expected) {
  if (std::abs(joint.norm() - expected) > 1e-6 * std::max(expected, 1e-300)) {
    throw std::invalid_argument("pointer grid does not hold the shifted packets");
  }
}

}  // namespace

GridWave impulsive_measure(const GridWave& psi, const PointerSetup& setup, const GridSpec& y_axis) {
  GridWave joint(joint_spec(psi, y_axis, setup), psi.t);
  const int mx = joint.spec().points[0];
  const int my = joint.spec().points[1];
  for (int i = 0; i < mx; ++i) {
    const double x = joint.spec().x(0, i);
    for (int j = 0; j < my; ++j) {
      joint[static_cast<std::size_t>(i * my + j)] =
          psi[static_cast<std::size_t>(i)] * setup.phi(joint.spec().x(1, j) - setup.shift() * x);
    }
  }
  check_held(joint, psi.norm());
  return joint;
}

GridWave impulsive_measure(const GridWave& psi, const DiscreteObservable& obs, const PointerSetup& setup,
                           const GridSpec& y_axis) {
  GridWave joint(joint_spec(psi, y_axis, setup), psi.t);
  const auto c = obs.coefficients(psi);
  const int mx = joint.spec().points[0];
  const int my = joint.spec().points[1];
  double weight = 0.0;
  for (std::size_t n = 0; n < c.size(); ++n) {
    weight += std::norm(c[n]);
    for (int j = 0; j < my; ++j) {
      const double f = setup.phi(joint.spec().x(1, j) - setup.shift() * obs.eigenvalues[n]);
      for (int i = 0; i < mx; ++i) joint[static_cast<std::size_t>(i * my + j)] += c[n] * obs.eigenvectors[n][static_cast<std::size_t>(i)] * f;
    }
  }
  check_held(joint, weight);
  return joint;
}

GridWave measure_time_resolved(const GridWave& psi, const PointerSetup& setup, const GridSpec& y_axis, int steps) {
  if (steps < 2) throw std::invalid_argument("time-resolved measurement needs at least two steps");
  GridWave joint(joint_spec(psi, y_axis, setup), psi.t);
  const int mx = joint.spec().points[0];
  const int my = joint.spec().points[1];
  for (int i = 0; i < mx; ++i) {
    for (int j = 0; j < my; ++j) {
      joint[static_cast<std::size_t>(i * my + j)] = psi[static_cast<std::size_t>(i)] * setup.phi(y_axis.x(0, j));
    }
  }
  GridFft fft(y_axis);
  const double dt = setup.tau / steps;
  std::vector<cplx> row(static_cast<std::size_t>(my));
  for (int i = 0; i < mx; ++i) {
    // H_int commutes with itself at all times, so the row phases accumulate.
    double shift = 0.0;
    for (int s = 0; s < steps; ++s) {
      const double sn = std::sin(std::numbers::pi * (s + 0.5) * dt / setup.tau);
      shift += 2.0 * setup.g0 * sn * sn * dt;
    }
    const double x = joint.spec().x(0, i);
    std::copy_n(joint.data().begin() + static_cast<std::ptrdiff_t>(i) * my, my, row.begin());
    fft.forward(row);
    for (int j = 0; j < my; ++j) {
      const double ky = y_axis.wavenumber(0, j);
      row[static_cast<std::size_t>(j)] *= std::polar(1.0 / my, -ky * shift * x);
    }
    fft.backward(row);
    std::copy(row.begin(), row.end(), joint.data().begin() + static_cast<std::ptrdiff_t>(i) * my);
  }
  return joint;
}

double pointer_overlap(const DiscreteObservable& obs, const PointerSetup& setup) {
  auto a = obs.eigenvalues;
  std::sort(a.begin(), a.end());
  double worst = 0.0;
  const double s = setup.sd();
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double d = setup.shift() * (a[i] - a[i - 1]);
    worst = std::max(worst, std::exp(-d * d / (8.0 * s * s)));
  }
  return worst;
}

nlohmann::json OutcomeStatistics::to_json() const {
  return {{"eigenvalues", eigenvalues}, {"born", born},       {"counts", counts},
          {"frequencies", frequencies}, {"chi2", chi2},       {"p_value", p_value},
          {"within_3sigma", within_3sigma}};
}

void OutcomeStatistics::write_csv(std::ostream& os) const {
  os << "eigenvalue,born,count,frequency\n";
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    os << eigenvalues[i] << ',' << born[i] << ',' << counts[i] << ',' << frequencies[i] << '\n';
  }
}

std::vector<double> pointer_readings(const TabulatedDensity& joint, const PointerSetup& setup, std::size_t runs,
                                     std::uint64_t seed) {
  if (joint.dim() != 2) throw std::invalid_argument("pointer readings need a joint (x, y) density");
  const auto e = sample_density(joint, runs, seed);
  std::vector<double> out(runs);
  for (std::size_t i = 0; i < runs; ++i) out[i] = setup.tilde(e.point(i)[1]);
  return out;
}

OutcomeStatistics outcome_statistics(const TabulatedDensity& joint, const std::vector<double>& born,
                                     const DiscreteObservable& obs, const PointerSetup& setup, std::size_t runs,
                                     std::uint64_t seed) {
  if (pointer_overlap(obs, setup) >= 1e-6) throw PacketsOverlap("adjacent pointer packets overlap by 1e-6 or more");
  OutcomeStatistics st;
  st.eigenvalues = obs.eigenvalues;
  const double total = std::accumulate(born.begin(), born.end(), 0.0);
  for (double b : born) st.born.push_back(b / total);
  st.counts.assign(obs.eigenvalues.size(), 0);
  for (double yt : pointer_readings(joint, setup, runs, seed)) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < obs.eigenvalues.size(); ++i) {
      if (std::abs(yt - obs.eigenvalues[i]) < std::abs(yt - obs.eigenvalues[best])) best = i;
    }
    ++st.counts[best];
  }
  const double n = static_cast<double>(runs);
  st.within_3sigma = true;
  int cells = 0;
  for (std::size_t i = 0; i < st.counts.size(); ++i) {
    const double f = static_cast<double>(st.counts[i]) / n;
    const double p = st.born[i];
    st.frequencies.push_back(f);
    if (std::abs(f - p) > 3.0 * std::sqrt(p * (1.0 - p) / n)) st.within_3sigma = false;
    if (p > 0.0) {
      st.chi2 += (st.counts[i] - n * p) * (st.counts[i] - n * p) / (n * p);
      ++cells;
    }
  }
  if (cells > 1) {
    boost::math::chi_squared_distribution<double> chi(cells - 1);
    st.p_value = boost::math::cdf(boost::math::complement(chi, st.chi2));
  } else {
    st.p_value = 1.0;
  }
  return st;
}

OutcomeStatistics outcome_statistics(const GridWave& psi, const DiscreteObservable& obs, const PointerSetup& setup,
                                     const GridSpec& y_axis, std::size_t runs, std::uint64_t seed) {
  if (pointer_overlap(obs, setup) >= 1e-6) throw PacketsOverlap("adjacent pointer packets overlap by 1e-6 or more");
  const auto joint = impulsive_measure(psi, obs, setup, y_axis);
  std::vector<double> born;
  for (const auto& c : obs.coefficients(psi)) born.push_back(std::norm(c));
  return outcome_statistics(TabulatedDensity::from_grid(joint, 1), born, obs, setup, runs, seed);
}

void DetectorArray::validate() const {
  if (centres.empty()) throw std::invalid_argument("detector array needs at least one detector");
  if (!(sigma > 0.0) || !(edge > 0.0) || !(edge < sigma)) throw std::invalid_argument("detector widths out of range");
  for (std::size_t i = 1; i < centres.size(); ++i) {
    if (std::abs(centres[i] - centres[i - 1] - 2.0 * sigma) > 1e-9 * sigma) {
      throw std::invalid_argument("detector vicinities must tile the line: centres spaced 2*sigma");
    }
  }
  if (static_cast<int>(centres.size()) + 1 > kMaxDim) throw std::invalid_argument("too many detectors");
}

BranchedWave second_kind_wave(const Profile& psi, const DetectorArray& det) {
  det.validate();
  const auto n = det.centres.size();
  std::vector<Branch> branches;
  for (std::size_t j = 0; j < n; ++j) {
    Branch b;
    b.label = "detector-" + std::to_string(j);
    b.factors.push_back({0, psi});
    b.factors.push_back({0, det.shadow(j)});
    for (std::size_t i = 0; i < n; ++i) {
      b.factors.push_back({static_cast<int>(1 + i), Profile::pointer(i == j ? det.fired : 0.0)});
    }
    branches.push_back(std::move(b));
  }
  return BranchedWave(static_cast<int>(n + 1), std::move(branches));
}

void DoubleSlitSetup::validate() const {
  if (physics.dim() != 1) throw std::invalid_argument("double slit runs in one transverse dimension");
  if (!(separation > 0.0) || !(width > 0.0) || !(t_screen > 0.0)) {
    throw std::invalid_argument("double slit geometry must be positive");
  }
  if (amplitudes[0] == 0.0 && amplitudes[1] == 0.0) throw std::invalid_argument("both slits closed");
  if (count < 1 || !(bin_width > 0.0)) throw std::invalid_argument("double slit needs count >= 1 and bin width > 0");
  if (detectors && !(fired >= 16.0)) throw std::invalid_argument("detector reading Y must be at least 16");
}

namespace {

AnalyticState slit_packet(const DoubleSlitSetup& s, int k) {
  const double x0 = (k == 0 ? -0.5 : 0.5) * s.separation;
  return AnalyticState::free_gaussian(s.physics, {s.width}, {s.k0}, {x0});
}

bool open_slit(const DoubleSlitSetup& s, int k) { return s.amplitudes[static_cast<std::size_t>(k)] != 0.0; }

AnalyticState interfering_state(const DoubleSlitSetup& s) {
  if (!open_slit(s, 0)) return slit_packet(s, 1);
  if (!open_slit(s, 1)) return slit_packet(s, 0);
  return AnalyticState::superposition({{s.amplitudes[0], slit_packet(s, 0)}, {s.amplitudes[1], slit_packet(s, 1)}});
}

std::array<double, 2> branch_weights(const DoubleSlitSetup& s) {
  const double z = std::norm(s.amplitudes[0]) + std::norm(s.amplitudes[1]);
  return {std::norm(s.amplitudes[0]) / z, std::norm(s.amplitudes[1]) / z};
}

// Both slit branches at t = 0 with their which-path detectors (x, y_1, y_2).
BranchedWave detector_wave(const DoubleSlitSetup& s) {
  std::vector<Branch> branches;
  for (int k = 0; k < 2; ++k) {
    const auto q = slit_packet(s, k).terms()[0].factors[0].at(0.0);
    Branch b;
    b.label = k == 0 ? "slit-1" : "slit-2";
    b.weight = s.amplitudes[static_cast<std::size_t>(k)];
    b.factors.push_back({0, Profile::gaussian(q.A, q.B, q.C)});
    b.factors.push_back({1, Profile::pointer(k == 0 ? s.fired : 0.0)});
    b.factors.push_back({2, Profile::pointer(k == 1 ? s.fired : 0.0)});
    branches.push_back(std::move(b));
  }
  return BranchedWave(3, std::move(branches));
}

}  // namespace

double fringe_wavenumber(const DoubleSlitSetup& s) {
  const double a2 = s.width * s.width;
  const double tau = s.physics.hbar * s.t_screen / (s.physics.m(0) * a2);
  return s.separation * tau / (a2 * (1.0 + tau * tau));
}

TabulatedDensity expected_screen_density(const DoubleSlitSetup& s) {
  s.validate();
  if (!s.detectors) return TabulatedDensity::from_analytic(interfering_state(s), s.t_screen);
  const auto w = branch_weights(s);
  const auto p0 = slit_packet(s, 0);
  const auto p1 = slit_packet(s, 1);
  auto [lo0, hi0] = p0.support(s.t_screen);
  auto [lo1, hi1] = p1.support(s.t_screen);
  return TabulatedDensity::tabulate(std::min(lo0[0], lo1[0]), std::max(hi0[0], hi1[0]), (1 << 15) + 1, [&](double x) {
    const std::array<double, 1> pt{x};
    return w[0] * p0.density(pt, s.t_screen) + w[1] * p1.density(pt, s.t_screen);
  });
}

std::pair<long, long> DoubleSlitResult::central_extremes() const {
  const double period = 2.0 * std::numbers::pi / fringe_wavenumber;
  const auto xs = screen.coordinate();
  const double centre = xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  long lo = std::numeric_limits<long>::max(), hi = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double mid = 0.5 * (edges[b] + edges[b + 1]);
    if (std::abs(mid - centre) > period) continue;
    lo = std::min(lo, counts[b]);
    hi = std::max(hi, counts[b]);
  }
  return {lo, hi};
}

nlohmann::json DoubleSlitResult::to_json() const {
  return {{"count", screen.size()},
          {"excluded", screen.excluded_count()},
          {"excluded_fraction", screen.excluded_fraction()},
          {"fringe_wavenumber", fringe_wavenumber},
          {"visibility", visibility},
          {"ks", ks.to_json()},
          {"order_preserved", order_preserved},
          {"label_mismatches", label_mismatches},
          {"max_momentum_mismatch", max_momentum_mismatch}};
}

void DoubleSlitResult::write_histogram_csv(std::ostream& os) const {
  os << "x_lo,x_hi,count\n";
  for (std::size_t b = 0; b < counts.size(); ++b) os << edges[b] << ',' << edges[b + 1] << ',' << counts[b] << '\n';
}

DoubleSlitResult double_slit(const DoubleSlitSetup& s) {
  s.validate();
  DoubleSlitResult res;
  res.fringe_wavenumber = fringe_wavenumber(s);
  const auto expected = expected_screen_density(s);

  if (!s.detectors) {
    const auto psi = interfering_state(s);
    res.initial = sample_density(psi, 0.0, s.count, s.seed);
    res.screen = advect(res.initial, AnalyticVelocity(psi), s.t_screen, s.advect);
    res.order_preserved = order_preserved(res.initial, res.screen);
    res.branch.assign(s.count, 0);
  } else {
    // x from the branch mixture, the slit label from P(k | x), detector readings from the fired branch.
    const auto w = branch_weights(s);
    const std::array<AnalyticState, 2> packets{slit_packet(s, 0), slit_packet(s, 1)};
    auto [lo0, hi0] = packets[0].support(0.0);
    auto [lo1, hi1] = packets[1].support(0.0);
    auto mix = [&](double x, int k) {
      const std::array<double, 1> pt{x};
      return w[static_cast<std::size_t>(k)] * packets[static_cast<std::size_t>(k)].density(pt, 0.0);
    };
    const auto rho0 = TabulatedDensity::tabulate(std::min(lo0[0], lo1[0]), std::max(hi0[0], hi1[0]), (1 << 15) + 1,
                                                 [&](double x) { return mix(x, 0) + mix(x, 1); });
    res.initial = sample_density(rho0, s.count, s.seed);
    const auto wave = detector_wave(s);
    std::mt19937_64 rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    res.branch.resize(s.count);
    std::array<Ensemble, 2> groups;
    std::array<std::vector<std::size_t>, 2> members;
    for (int k = 0; k < 2; ++k) {
      groups[static_cast<std::size_t>(k)] = res.initial;
      groups[static_cast<std::size_t>(k)].x.clear();
      groups[static_cast<std::size_t>(k)].excluded.clear();
    }
    for (std::size_t i = 0; i < s.count; ++i) {
      const double x = res.initial.x[i];
      const double m0 = mix(x, 0);
      const double m1 = mix(x, 1);
      const int k = uni(rng) * (m0 + m1) < m0 ? 0 : 1;
      const std::array<double, 3> pt{x, normal(rng) + (k == 0 ? s.fired : 0.0), normal(rng) + (k == 1 ? s.fired : 0.0)};
      const auto sel = collapse_select(wave, pt, s.physics.hbar);
      if (static_cast<int>(sel.branch) != k) ++res.label_mismatches;
      res.max_momentum_mismatch = std::max(res.max_momentum_mismatch, sel.momentum_mismatch);
      res.branch[i] = static_cast<std::uint8_t>(sel.branch);
      auto& g = groups[sel.branch];
      g.x.push_back(x);
      g.excluded.push_back(0);
      members[sel.branch].push_back(i);
    }
    res.screen = res.initial;
    res.screen.t = s.t_screen;
    res.order_preserved = true;
    for (std::size_t k = 0; k < 2; ++k) {
      if (members[k].empty()) continue;
      const auto moved = advect(groups[k], AnalyticVelocity(packets[k]), s.t_screen, s.advect);
      res.order_preserved = res.order_preserved && order_preserved(groups[k], moved);
      for (std::size_t j = 0; j < members[k].size(); ++j) {
        res.screen.x[members[k][j]] = moved.x[j];
        res.screen.excluded[members[k][j]] = moved.excluded[j];
      }
    }
  }

  const auto xs = res.screen.coordinate();
  cplx phase{};
  for (double x : xs) phase += std::polar(1.0, -res.fringe_wavenumber * x);
  res.visibility = xs.empty() ? 0.0 : 2.0 * std::abs(phase) / static_cast<double>(xs.size());
  res.ks = equivariance_test(res.screen, expected, 0.02);

  const double lo = expected.lower()[0];
  const double hi = expected.upper()[0];
  const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / s.bin_width));
  for (std::size_t b = 0; b <= bins; ++b) res.edges.push_back(lo + static_cast<double>(b) * s.bin_width);
  res.counts.assign(bins, 0);
  for (double x : xs) {
    const auto b = static_cast<long>(std::floor((x - lo) / s.bin_width));
    if (b >= 0 && static_cast<std::size_t>(b) < bins) ++res.counts[static_cast<std::size_t>(b)];
  }
  return res;
}

}  // namespace jetqd
