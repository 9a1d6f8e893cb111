#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "jetqd/multiindex.hpp"

namespace jetqd {

using Rational = boost::multiprecision::cpp_rational;

// Exact complex rational a + b i.
struct GaussRational {
  Rational re{0};
  Rational im{0};

  GaussRational() = default;
  GaussRational(long v) : re(v) {}  // NOLINT(google-explicit-constructor)
  GaussRational(Rational r, Rational i = Rational(0)) : re(std::move(r)), im(std::move(i)) {}

  static GaussRational fraction(long num, long den) { return {Rational(num) / Rational(den)}; }
  static GaussRational i() { return {Rational(0), Rational(1)}; }

  bool is_zero() const { return re == 0 && im == 0; }
  GaussRational conj() const { return {re, -im}; }
  GaussRational inverse() const;
  std::complex<double> to_complex() const;
  std::string str() const;

  friend GaussRational operator+(const GaussRational& a, const GaussRational& b) { return {a.re + b.re, a.im + b.im}; }
  friend GaussRational operator-(const GaussRational& a, const GaussRational& b) { return {a.re - b.re, a.im - b.im}; }
  friend GaussRational operator-(const GaussRational& a) { return {-a.re, -a.im}; }
  friend GaussRational operator*(const GaussRational& a, const GaussRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend GaussRational operator/(const GaussRational& a, const GaussRational& b) { return a * b.inverse(); }
  friend bool operator==(const GaussRational& a, const GaussRational& b) { return a.re == b.re && a.im == b.im; }
};

// Leaf symbol of a jet expression.
struct Atom {
  enum class Kind : std::uint8_t { Param, Coord, Time, Momentum, Field };
  Kind kind = Kind::Param;
  std::string name;  // parameter, unknown-function or field name
  int index = 0;     // coordinate index
  MultiIndex sigma;  // momentum / field derivative index

  static Atom param(std::string name) { return {Kind::Param, std::move(name), 0, {}}; }
  static Atom coord(int i) { return {Kind::Coord, "q", i, {}}; }
  static Atom time() { return {Kind::Time, "t", 0, {}}; }
  static Atom momentum(std::string r, MultiIndex s) { return {Kind::Momentum, std::move(r), 0, s}; }
  static Atom field(std::string name, MultiIndex s) { return {Kind::Field, std::move(name), 0, s}; }

  std::string str() const;
  friend bool operator==(const Atom& a, const Atom& b);
  friend bool operator<(const Atom& a, const Atom& b);
};

// Canonical sparse polynomial Σ c_k Π atom^power with exact coefficients.
// Only parameters may carry negative powers.
class JetExpr {
 public:
  using Monomial = std::vector<std::pair<Atom, int>>;

  JetExpr() = default;
  JetExpr(GaussRational c);  // NOLINT(google-explicit-constructor)
  JetExpr(long c) : JetExpr(GaussRational(c)) {}  // NOLINT(google-explicit-constructor)

  static JetExpr atom(const Atom& a, int power = 1);
  static JetExpr param(const std::string& name, int power = 1) { return atom(Atom::param(name), power); }
  static JetExpr coord(int i) { return atom(Atom::coord(i)); }
  static JetExpr time() { return atom(Atom::time()); }
  static JetExpr momentum(const std::string& r, const MultiIndex& s) { return atom(Atom::momentum(r, s)); }
  static JetExpr field(const std::string& name, const MultiIndex& s) { return atom(Atom::field(name, s)); }
  static JetExpr from_terms(std::map<Monomial, GaussRational> terms);

  const std::map<Monomial, GaussRational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  // Coefficient when the expression has no atoms.
  std::optional<GaussRational> constant_value() const;

  JetExpr& operator+=(const JetExpr& o);
  JetExpr& operator-=(const JetExpr& o);
  JetExpr& operator*=(const JetExpr& o);
  friend JetExpr operator+(JetExpr a, const JetExpr& b) { return a += b; }
  friend JetExpr operator-(JetExpr a, const JetExpr& b) { return a -= b; }
  friend JetExpr operator*(JetExpr a, const JetExpr& b) { return a *= b; }
  friend JetExpr operator-(const JetExpr& a) { return JetExpr(-1) * a; }
  friend bool operator==(const JetExpr& a, const JetExpr& b) { return a.terms_ == b.terms_; }

  JetExpr pow(int k) const;

  // Prefix notation, e.g. (+ (* 1/2 m0^-1 p[x]^2) U{0}).
  std::string to_prefix() const;
  static JetExpr parse_prefix(std::string_view text, int dim);

 private:
  void add_term(const Monomial& m, const GaussRational& c);
  std::map<Monomial, GaussRational> terms_;
};

// ∂e/∂a for a momentum, coordinate, time or parameter symbol.
JetExpr partial(const JetExpr& e, const Atom& a);

// D_i = ∂/∂q^i + Σ p^r_{σi} ∂/∂p^r_σ, with U_σ → U_{σi}.
JetExpr total_diff(const JetExpr& e, int i);

// D_σ e
JetExpr prolong(const JetExpr& e, const MultiIndex& sigma);

// Complex conjugate: conjugated coefficients, unknown function r ↔ rbar.
JetExpr conj(const JetExpr& e);

// Replaces atoms for which `f` returns a value.
JetExpr substitute(const JetExpr& e, const std::function<std::optional<JetExpr>(const Atom&)>& f);

std::complex<double> evaluate(const JetExpr& e, const std::function<std::complex<double>(const Atom&)>& bind);
GaussRational evaluate_exact(const JetExpr& e, const std::function<GaussRational(const Atom&)>& bind);

// Every momentum index σ of unknown function r occurring in e.
std::vector<MultiIndex> momentum_indices(const JetExpr& e, const std::string& r);

// Built-in Hamiltonians with per-coordinate masses m0, m1, ... and ħ as parameters.
// H = Σ_j p_j²/2m_j + U + Σ_j (ħ/2i m_j) p_jj
JetExpr schrodinger_hamiltonian(int dim);
// H^S = Σ_j S_j²/2m_j + U - Σ_j (ħ²/2m_j)(R_j² + R_jj)
JetExpr real_action_hamiltonian(int dim);
// H^R = Σ_j (1/m_j)(S_j R_j + ½ S_jj)
JetExpr log_amplitude_hamiltonian(int dim);

struct Hc1Report {
  bool pass = true;
  int swept_order = 0;
  std::optional<MultiIndex> nu;
  int k = -1;
  JetExpr residual;
  std::string message;
};

// Checks D_k ∂H/∂p^r_{νk} = 0 for all k and nonempty ν with |νk| ≤ max_order.
Hc1Report check_hc1(const JetExpr& h, const std::string& r, int dim, int max_order);

struct Hc2Report {
  bool pass = true;
  std::vector<JetExpr> velocity;  // common ∂H^r/∂p^r_i per coordinate
  int failing_coordinate = -1;
  std::string message;
};

// Checks that ∂H^r/∂p^r_i is the same expression for every (r, H^r) pair.
Hc2Report check_hc2(const std::vector<std::pair<std::string, JetExpr>>& hs, int dim);

// Complex formulation: splits p = p¹ + i p² with H¹ = Re H, H² = Im H and
// checks HC2 for the pair; the velocity is returned in terms of p and p̄.
Hc2Report check_hc2_complex(const JetExpr& h, int dim, const std::string& r = "p");

}  // namespace jetqd
