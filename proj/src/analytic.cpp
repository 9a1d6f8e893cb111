#include "jetqd/analytic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "jetqd/errors.hpp"
#include "jetqd/logderiv.hpp"

namespace jetqd {

namespace {

constexpr cplx kI{0.0, 1.0};

cplx eval_q(const GaussianFactor::Quadratic& q, double x) { return (q.A * x + q.B) * x + q.C; }

// g^{(k)} for k = 0..K of g = exp(Q), Q quadratic: g^{(k+1)} = Q' g^{(k)} + 2A k g^{(k-1)}.
void factor_derivatives(const GaussianFactor::Quadratic& q, double x, int K, cplx* out) {
  out[0] = std::exp(eval_q(q, x));
  if (K == 0) return;
  const cplx dq = 2.0 * q.A * x + q.B;
  out[1] = dq * out[0];
  for (int k = 1; k < K; ++k) out[k + 1] = dq * out[k] + 2.0 * q.A * static_cast<double>(k) * out[k - 1];
}

// ∫ exp(αx² + βx + γ) dx over the real line, Re α < 0.
cplx gaussian_integral(cplx alpha, cplx beta, cplx gamma) {
  return std::sqrt(std::numbers::pi / (-alpha)) * std::exp(gamma - beta * beta / (4.0 * alpha));
}

bool same_potential(const Potential& a, const Potential& b) {
  if (a.kind() != b.kind() || a.dim() != b.dim()) return false;
  return a.omega() == b.omega();
}

}  // namespace

GaussianFactor::Quadratic GaussianFactor::at(double t) const {
  if (kind == Kind::Free) {
    const double tau = hbar * t / (mass * a * a);
    const cplx one_it{1.0, tau};
    const cplx d = 2.0 * a * a * one_it;
    const double X = x0 + hbar * k0 * t / mass;
    Quadratic q;
    q.A = -1.0 / d;
    q.B = 2.0 * X / d + kI * k0;
    q.C = -X * X / d - kI * k0 * x0 - kI * hbar * k0 * k0 * t / (2.0 * mass) -
          0.25 * std::log(std::numbers::pi * a * a) - 0.5 * std::log(one_it);
    return q;
  }
  const double a0sq = hbar / (mass * omega);
  const double X = classical_x(t);
  const double P = classical_p(t);
  Quadratic q;
  q.A = -1.0 / (2.0 * a0sq);
  q.B = X / a0sq + kI * P / hbar;
  q.C = -0.25 * std::log(std::numbers::pi * a0sq) - X * X / (2.0 * a0sq) - kI * omega * t / 2.0 -
        kI * X * P / (2.0 * hbar);
  return q;
}

double GaussianFactor::classical_x(double t) const {
  if (kind == Kind::Free) return x0 + hbar * k0 * t / mass;
  const double a0 = std::sqrt(hbar / (mass * omega));
  const double X0 = std::sqrt(2.0) * a0 * alpha.real();
  const double P0 = std::sqrt(2.0) * hbar / a0 * alpha.imag();
  return X0 * std::cos(omega * t) + P0 / (mass * omega) * std::sin(omega * t);
}

double GaussianFactor::classical_p(double t) const {
  if (kind == Kind::Free) return hbar * k0;
  const double a0 = std::sqrt(hbar / (mass * omega));
  const double X0 = std::sqrt(2.0) * a0 * alpha.real();
  const double P0 = std::sqrt(2.0) * hbar / a0 * alpha.imag();
  return P0 * std::cos(omega * t) - mass * omega * X0 * std::sin(omega * t);
}

AnalyticState AnalyticState::free_gaussian(const Physics& phys, std::vector<double> a, std::vector<double> k0,
                                           std::vector<double> x0) {
  const auto n = static_cast<std::size_t>(phys.dim());
  if (a.size() != n || k0.size() != n || x0.size() != n) throw std::invalid_argument("free_gaussian: dimension mismatch");
  AnalyticState s;
  s.phys_ = phys;
  s.potential_ = Potential::free(phys.dim());
  s.kind_ = "free-gaussian";
  GaussianTerm term;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i] > 0.0)) throw std::invalid_argument("free_gaussian: width must be positive");
    GaussianFactor f;
    f.kind = GaussianFactor::Kind::Free;
    f.hbar = phys.hbar;
    f.mass = phys.mass[i];
    f.a = a[i];
    f.k0 = k0[i];
    f.x0 = x0[i];
    term.factors.push_back(f);
  }
  s.terms_.push_back(std::move(term));
  return s;
}

AnalyticState AnalyticState::coherent(const Physics& phys, std::vector<double> omega, std::vector<cplx> alpha) {
  const auto n = static_cast<std::size_t>(phys.dim());
  if (omega.size() != n || alpha.size() != n) throw std::invalid_argument("coherent: dimension mismatch");
  AnalyticState s;
  s.phys_ = phys;
  s.potential_ = Potential::harmonic(omega, phys.mass);
  s.kind_ = "ho-coherent";
  GaussianTerm term;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(omega[i] > 0.0)) throw std::invalid_argument("coherent: omega must be positive");
    GaussianFactor f;
    f.kind = GaussianFactor::Kind::Coherent;
    f.hbar = phys.hbar;
    f.mass = phys.mass[i];
    f.omega = omega[i];
    f.alpha = alpha[i];
    term.factors.push_back(f);
  }
  s.terms_.push_back(std::move(term));
  return s;
}

AnalyticState AnalyticState::superposition(const std::vector<std::pair<cplx, AnalyticState>>& parts) {
  if (parts.empty()) throw std::invalid_argument("superposition: no parts");
  AnalyticState s;
  s.phys_ = parts.front().second.phys_;
  s.potential_ = parts.front().second.potential_;
  s.kind_ = "superposition";
  for (const auto& [w, part] : parts) {
    if (part.dim() != s.dim() || !same_potential(part.potential_, s.potential_) || part.phys_.hbar != s.phys_.hbar ||
        part.phys_.mass != s.phys_.mass) {
      throw std::invalid_argument("superposition: parts must share physics and potential");
    }
    for (GaussianTerm t : part.terms_) {
      t.weight *= w;
      s.terms_.push_back(std::move(t));
    }
  }
  const double n2 = s.norm_squared();
  if (!(n2 > 0.0)) throw std::invalid_argument("superposition: zero norm");
  for (auto& t : s.terms_) t.weight /= std::sqrt(n2);
  return s;
}

double AnalyticState::norm_squared() const {
  cplx total = 0.0;
  for (const auto& tk : terms_) {
    for (const auto& tl : terms_) {
      cplx prod = std::conj(tk.weight) * tl.weight;
      for (std::size_t i = 0; i < tk.factors.size(); ++i) {
        const auto qk = tk.factors[i].at(0.0);
        const auto ql = tl.factors[i].at(0.0);
        prod *= gaussian_integral(ql.A + std::conj(qk.A), ql.B + std::conj(qk.B), ql.C + std::conj(qk.C));
      }
      total += prod;
    }
  }
  return total.real();
}

cplx AnalyticState::psi(std::span<const double> x, double t) const {
  cplx total = 0.0;
  for (const auto& term : terms_) {
    cplx e = 0.0;
    for (std::size_t i = 0; i < term.factors.size(); ++i) e += eval_q(term.factors[i].at(t), x[i]);
    total += term.weight * std::exp(e);
  }
  return total;
}

void AnalyticState::psi_derivatives(std::span<const double> x, double t, const IndexTable& table, int max_order,
                                    std::span<cplx> out) const {
  const int n = dim();
  const int size = table.order_begin(max_order + 1);
  std::fill(out.begin(), out.begin() + size, cplx{});
  std::vector<cplx> g(static_cast<std::size_t>(n * (max_order + 1)));
  for (const auto& term : terms_) {
    for (int i = 0; i < n; ++i) {
      factor_derivatives(term.factors[static_cast<std::size_t>(i)].at(t), x[static_cast<std::size_t>(i)], max_order,
                         &g[static_cast<std::size_t>(i * (max_order + 1))]);
    }
    for (int r = 0; r < size; ++r) {
      const MultiIndex& s = table.at(r);
      cplx v = term.weight;
      for (int i = 0; i < n; ++i) v *= g[static_cast<std::size_t>(i * (max_order + 1) + s[i])];
      out[static_cast<std::size_t>(r)] += v;
    }
  }
}

void AnalyticState::momentums(std::span<const double> x, double t, const IndexTable& table, int max_order,
                              std::span<cplx> out, double node_floor) const {
  const int n = dim();
  const int size = table.order_begin(max_order + 1);
  const cplx hbar_over_i = -kI * phys_.hbar;
  const double peak = peak_modulus(t);
  if (terms_.size() == 1) {
    // ln ψ is quadratic: exact log-derivatives with no division.
    const auto& term = terms_.front();
    cplx logpsi = std::log(term.weight);
    std::fill(out.begin(), out.begin() + size, cplx{});
    for (int i = 0; i < n; ++i) {
      const auto q = term.factors[static_cast<std::size_t>(i)].at(t);
      const double xi = x[static_cast<std::size_t>(i)];
      logpsi += eval_q(q, xi);
      MultiIndex one = MultiIndex(n).extend(i);
      if (max_order >= 1) out[static_cast<std::size_t>(table.rank(one))] = hbar_over_i * (2.0 * q.A * xi + q.B);
      if (max_order >= 2) out[static_cast<std::size_t>(table.rank(one.extend(i)))] = hbar_over_i * 2.0 * q.A;
    }
    if (std::exp(logpsi.real()) < node_floor * peak) throw NodeError("wave function vanishes at the requested point");
    out[0] = hbar_over_i * logpsi;
    return;
  }
  std::vector<cplx> d(static_cast<std::size_t>(size));
  psi_derivatives(x, t, table, max_order, d);
  if (std::abs(d[0]) < node_floor * peak) throw NodeError("wave function vanishes at the requested point");
  const auto plan = shared_log_plan(n, max_order);
  plan->apply(d, out);
  for (int r = 0; r < size; ++r) out[static_cast<std::size_t>(r)] *= hbar_over_i;
}

std::vector<double> AnalyticState::velocity(std::span<const double> x, double t) const {
  const int n = dim();
  const auto table = shared_index_table(n, 1);
  std::vector<cplx> p(static_cast<std::size_t>(table->size()));
  momentums(x, t, *table, 1, p, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(1 + i)].real() / phys_.m(i);
  return v;
}

double AnalyticState::peak_modulus(double t) const {
  double bound = 0.0;
  for (const auto& term : terms_) {
    double logm = std::log(std::abs(term.weight));
    for (const auto& f : term.factors) {
      const auto q = f.at(t);
      logm += q.C.real() - q.B.real() * q.B.real() / (4.0 * q.A.real());
    }
    bound += std::exp(logm);
  }
  return bound;
}

std::pair<std::vector<double>, std::vector<double>> AnalyticState::support(double t, double halfwidth) const {
  const auto n = static_cast<std::size_t>(dim());
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  for (const auto& term : terms_) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto q = term.factors[i].at(t);
      const double centre = -q.B.real() / (2.0 * q.A.real());
      const double sd = 1.0 / std::sqrt(-4.0 * q.A.real());
      lo[i] = std::min(lo[i], centre - halfwidth * sd);
      hi[i] = std::max(hi[i], centre + halfwidth * sd);
    }
  }
  return {lo, hi};
}

}  // namespace jetqd
