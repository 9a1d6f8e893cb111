#include "jetqd/potential.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jetqd {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// α!/(α-σ)!
double falling(int alpha, int sigma) {
  double r = 1.0;
  for (int i = 0; i < sigma; ++i) r *= static_cast<double>(alpha - i);
  return r;
}

}  // namespace

Potential Potential::free(int dim) {
  Potential p;
  p.kind_ = Kind::Free;
  p.dim_ = dim;
  return p;
}

Potential Potential::harmonic(std::vector<double> omega, std::vector<double> mass) {
  if (omega.size() != mass.size() || omega.empty()) throw std::invalid_argument("harmonic: omega/mass size mismatch");
  Potential p;
  p.kind_ = Kind::Harmonic;
  p.dim_ = static_cast<int>(omega.size());
  for (int i = 0; i < p.dim_; ++i) {
    MultiIndex pw(p.dim_);
    pw = pw.extend(i).extend(i);
    const double w = omega[static_cast<std::size_t>(i)];
    p.terms_.push_back({pw, 0.5 * mass[static_cast<std::size_t>(i)] * w * w});
  }
  p.omega_ = std::move(omega);
  return p;
}

Potential Potential::polynomial(int dim, std::vector<Monomial> terms) {
  for (const auto& t : terms) {
    if (t.power.dim() != dim) throw std::invalid_argument("polynomial potential: monomial dimension mismatch");
  }
  Potential p;
  p.kind_ = Kind::Polynomial;
  p.dim_ = dim;
  p.terms_ = std::move(terms);
  return p;
}

Potential Potential::gaussian_barrier(double height, double width, std::vector<double> center) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian barrier width must be positive");
  Potential p;
  p.kind_ = Kind::GaussianBarrier;
  p.dim_ = static_cast<int>(center.size());
  p.height_ = height;
  p.width_ = width;
  p.center_ = std::move(center);
  return p;
}

bool Potential::is_quadratic() const {
  if (kind_ == Kind::Free || kind_ == Kind::Harmonic) return true;
  if (kind_ == Kind::GaussianBarrier) return height_ == 0.0;
  for (const auto& t : terms_) {
    if (t.power.order() > 2 && t.coefficient != 0.0) return false;
  }
  return true;
}

std::string Potential::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Free:
      os << "free";
      break;
    case Kind::Harmonic:
      os << "harmonic(omega=";
      for (std::size_t i = 0; i < omega_.size(); ++i) os << (i ? "," : "") << omega_[i];
      os << ")";
      break;
    case Kind::Polynomial:
      os << "polynomial(";
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        os << (i ? " + " : "") << terms_[i].coefficient << "*" << terms_[i].power.name();
      }
      os << ")";
      break;
    case Kind::GaussianBarrier:
      os << "gaussian-barrier(height=" << height_ << ",width=" << width_ << ")";
      break;
  }
  return os.str();
}

double gaussian_derivative(int k, double y, double w) {
  // d^k/dy^k exp(-y²/2w²) = (-1/w)^k He_k(y/w) exp(-y²/2w²)
  const double z = y / w;
  double he_prev = 1.0;
  double he = z;
  if (k == 0) {
    he = 1.0;
  } else {
    for (int n = 1; n < k; ++n) {
      const double next = z * he - n * he_prev;
      he_prev = he;
      he = next;
    }
  }
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * he * std::pow(w, -k) * std::exp(-0.5 * z * z);
}

double Potential::value(std::span<const double> x) const {
  return derivative(MultiIndex(dim_), x);
}

double Potential::derivative(const MultiIndex& sigma, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_ || sigma.dim() != dim_) throw std::invalid_argument("potential: dimension mismatch");
  switch (kind_) {
    case Kind::Free:
      return 0.0;
    case Kind::Harmonic:
    case Kind::Polynomial: {
      double u = 0.0;
      for (const auto& t : terms_) {
        if (!t.power.contains(sigma)) continue;
        double term = t.coefficient;
        for (int i = 0; i < dim_; ++i) {
          term *= falling(t.power[i], sigma[i]) * ipow(x[static_cast<std::size_t>(i)], t.power[i] - sigma[i]);
        }
        u += term;
      }
      return u;
    }
    case Kind::GaussianBarrier: {
      double u = height_;
      for (int i = 0; i < dim_; ++i) {
        u *= gaussian_derivative(sigma[i], x[static_cast<std::size_t>(i)] - center_[static_cast<std::size_t>(i)], width_);
      }
      return u;
    }
  }
  return 0.0;
}

void Potential::derivatives(const IndexTable& table, int max_order, std::span<const double> x, std::span<double> out) const {
  const int n = table.order_begin(max_order + 1);
  if (static_cast<int>(out.size()) < n) throw std::invalid_argument("potential: output span too small");
  if (kind_ == Kind::Free) {
    std::fill(out.begin(), out.begin() + n, 0.0);
    return;
  }
  for (int r = 0; r < n; ++r) out[static_cast<std::size_t>(r)] = derivative(table.at(r), x);
}

}  // namespace jetqd
