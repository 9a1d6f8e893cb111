#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jetqd/multiindex.hpp"

namespace jetqd {

// Units and per-coordinate masses. A multi-particle system is a flattened
// configuration space with one mass entry per coordinate.
struct Physics {
  double hbar = 1.0;
  std::vector<double> mass{1.0};

  static Physics uniform(int dim, double hbar = 1.0, double m = 1.0) {
    return Physics{hbar, std::vector<double>(static_cast<std::size_t>(dim), m)};
  }
  int dim() const { return static_cast<int>(mass.size()); }
  double m(int j) const { return mass[static_cast<std::size_t>(j)]; }
};

// Scalar potential U(x) with exact derivatives U_σ of any order.
class Potential {
 public:
  enum class Kind { Free, Harmonic, Polynomial, GaussianBarrier };

  struct Monomial {
    MultiIndex power;
    double coefficient;
  };

  Potential() = default;

  static Potential free(int dim);
  // U = Σ_i ½ m_i ω_i² x_i²
  static Potential harmonic(std::vector<double> omega, std::vector<double> mass);
  // U = Σ c_α x^α
  static Potential polynomial(int dim, std::vector<Monomial> terms);
  // U = h exp(-|x - c|² / 2w²)
  static Potential gaussian_barrier(double height, double width, std::vector<double> center);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  // Polynomial of total degree ≤ 2 (free and harmonic included).
  bool is_quadratic() const;
  std::string describe() const;

  double value(std::span<const double> x) const;
  double derivative(const MultiIndex& sigma, std::span<const double> x) const;
  // out[r] = U_σ for every rank r < table.order_begin(max_order + 1).
  void derivatives(const IndexTable& table, int max_order, std::span<const double> x, std::span<double> out) const;

  const std::vector<Monomial>& monomials() const { return terms_; }
  const std::vector<double>& omega() const { return omega_; }
  double height() const { return height_; }
  double width() const { return width_; }
  const std::vector<double>& center() const { return center_; }

 private:
  Kind kind_ = Kind::Free;
  int dim_ = 1;
  std::vector<Monomial> terms_;
  std::vector<double> omega_;
  double height_ = 0.0;
  double width_ = 1.0;
  std::vector<double> center_;
};

// k-th derivative of exp(-y²/2w²).
double gaussian_derivative(int k, double y, double w);

}  // namespace jetqd
