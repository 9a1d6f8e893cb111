#include "jetqd/symjet.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace jetqd {

GaussRational GaussRational::inverse() const {
  const Rational d = re * re + im * im;
  if (d == 0) throw std::domain_error("division by zero in exact arithmetic");
  return {re / d, -im / d};
}

std::complex<double> GaussRational::to_complex() const {
  return {static_cast<double>(re), static_cast<double>(im)};
}

std::string GaussRational::str() const {
  if (im == 0) return re.str();
  return "(c " + re.str() + " " + im.str() + ")";
}

std::string Atom::str() const {
  switch (kind) {
    case Kind::Param:
      return name;
    case Kind::Coord:
      return "q" + std::to_string(index);
    case Kind::Time:
      return "t";
    case Kind::Momentum:
      return name + "[" + sigma.name() + "]";
    case Kind::Field:
      return name + "{" + sigma.name() + "}";
  }
  return "?";
}

bool operator==(const Atom& a, const Atom& b) {
  return a.kind == b.kind && a.index == b.index && a.name == b.name && a.sigma == b.sigma;
}

bool operator<(const Atom& a, const Atom& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.name != b.name) return a.name < b.name;
  if (a.index != b.index) return a.index < b.index;
  return a.sigma < b.sigma;
}

namespace {

using Monomial = JetExpr::Monomial;

Monomial multiply(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      const int p = a[i].second + b[j].second;
      if (p != 0) out.emplace_back(a[i].first, p);
      ++i;
      ++j;
    }
  }
  return out;
}

// Monomial with the power of entry `pos` lowered by one.
Monomial lower(const Monomial& m, std::size_t pos) {
  Monomial out = m;
  if (--out[pos].second == 0) out.erase(out.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

template <class Value, class Bind, class Mul, class Inv>
Value eval_monomial(const Monomial& m, Value v, Bind&& bind, Mul&& mul, Inv&& inv) {
  for (const auto& [a, p] : m) {
    Value x = bind(a);
    if (p < 0) x = inv(x);
    for (int k = 0; k < std::abs(p); ++k) v = mul(v, x);
  }
  return v;
}

}  // namespace

JetExpr::JetExpr(GaussRational c) {
  if (!c.is_zero()) terms_.emplace(Monomial{}, std::move(c));
}

JetExpr JetExpr::atom(const Atom& a, int power) {
  if (power < 0 && a.kind != Atom::Kind::Param) throw std::invalid_argument("negative power of a non-parameter symbol");
  JetExpr e;
  if (power == 0) return JetExpr(1);
  e.terms_.emplace(Monomial{{a, power}}, GaussRational(1));
  return e;
}

JetExpr JetExpr::from_terms(std::map<Monomial, GaussRational> terms) {
  JetExpr e;
  for (auto& [m, c] : terms) e.add_term(m, c);
  return e;
}

void JetExpr::add_term(const Monomial& m, const GaussRational& c) {
  if (c.is_zero()) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second = it->second + c;
  if (it->second.is_zero()) terms_.erase(it);
}

std::optional<GaussRational> JetExpr::constant_value() const {
  if (terms_.empty()) return GaussRational(0);
  if (terms_.size() == 1 && terms_.begin()->first.empty()) return terms_.begin()->second;
  return std::nullopt;
}

JetExpr& JetExpr::operator+=(const JetExpr& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

JetExpr& JetExpr::operator-=(const JetExpr& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

JetExpr& JetExpr::operator*=(const JetExpr& o) {
  JetExpr r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) r.add_term(multiply(ma, mb), ca * cb);
  }
  *this = std::move(r);
  return *this;
}

JetExpr JetExpr::pow(int k) const {
  if (k < 0) throw std::invalid_argument("negative expression power");
  JetExpr r(1);
  for (int i = 0; i < k; ++i) r *= *this;
  return r;
}

std::string JetExpr::to_prefix() const {
  if (terms_.empty()) return "0";
  auto term_str = [](const Monomial& m, const GaussRational& c) {
    if (m.empty()) return c.str();
    const bool unit = c == GaussRational(1);
    if (unit && m.size() == 1 && m.front().second == 1) return m.front().first.str();
    std::string s = unit ? "(*" : "(* " + c.str();
    for (const auto& [a, p] : m) s += " " + a.str() + (p == 1 ? "" : "^" + std::to_string(p));
    return s + ")";
  };
  if (terms_.size() == 1) return term_str(terms_.begin()->first, terms_.begin()->second);
  std::string s = "(+";
  for (const auto& [m, c] : terms_) s += " " + term_str(m, c);
  return s + ")";
}

namespace {

class PrefixParser {
 public:
  PrefixParser(std::string_view text, int dim) : s_(text), dim_(dim) {}

  JetExpr parse() {
    JetExpr e = expr();
    skip();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw std::invalid_argument("prefix parse error at " + std::to_string(pos_) + ": " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string token() {
    skip();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')') {
      ++pos_;
    }
    if (b == pos_) fail("expected token");
    return std::string(s_.substr(b, pos_ - b));
  }
  void expect(char c) {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  static Rational rational(const std::string& t) {
    const auto slash = t.find('/');
    if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(t));
    return Rational(boost::multiprecision::cpp_int(t.substr(0, slash))) /
           Rational(boost::multiprecision::cpp_int(t.substr(slash + 1)));
  }

  JetExpr factor_token(const std::string& t) {
    if (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '-') return JetExpr(GaussRational(rational(t)));
    std::string base = t;
    int power = 1;
    const auto caret = t.find('^');
    if (caret != std::string::npos) {
      base = t.substr(0, caret);
      power = std::stoi(t.substr(caret + 1));
    }
    Atom a;
    if (base == "t") {
      a = Atom::time();
    } else if (auto lb = base.find('['); lb != std::string::npos) {
      a = Atom::momentum(base.substr(0, lb), MultiIndex::parse(base.substr(lb + 1, base.size() - lb - 2), dim_));
    } else if (auto cb = base.find('{'); cb != std::string::npos) {
      a = Atom::field(base.substr(0, cb), MultiIndex::parse(base.substr(cb + 1, base.size() - cb - 2), dim_));
    } else if (base.size() > 1 && base[0] == 'q' && std::isdigit(static_cast<unsigned char>(base[1]))) {
      a = Atom::coord(std::stoi(base.substr(1)));
    } else {
      a = Atom::param(base);
    }
    return JetExpr::atom(a, power);
  }

  JetExpr expr() {
    if (!peek('(')) return factor_token(token());
    expect('(');
    const std::string op = token();
    JetExpr r;
    if (op == "+") {
      while (!peek(')')) r += expr();
    } else if (op == "*") {
      r = JetExpr(1);
      while (!peek(')')) r *= expr();
    } else if (op == "c") {
      const Rational re = rational(token());
      const Rational im = rational(token());
      r = JetExpr(GaussRational(re, im));
    } else {
      fail("unknown operator " + op);
    }
    expect(')');
    return r;
  }

  std::string_view s_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

JetExpr JetExpr::parse_prefix(std::string_view text, int dim) { return PrefixParser(text, dim).parse(); }

JetExpr partial(const JetExpr& e, const Atom& a) {
  JetExpr r;
  for (const auto& [m, c] : e.terms()) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (!(m[k].first == a)) continue;
      r += JetExpr::from_terms({{lower(m, k), c * GaussRational(m[k].second)}});
    }
  }
  return r;
}

JetExpr total_diff(const JetExpr& e, int i) {
  JetExpr r;
  for (const auto& [m, c] : e.terms()) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      const Atom& a = m[k].first;
      const int p = m[k].second;
      const Monomial rest = lower(m, k);
      const GaussRational coef = c * GaussRational(p);
      switch (a.kind) {
        case Atom::Kind::Coord:
          if (a.index == i) r += JetExpr::from_terms({{rest, coef}});
          break;
        case Atom::Kind::Momentum:
        case Atom::Kind::Field: {
          Atom d = a;
          d.sigma = a.sigma.extend(i);
          r += JetExpr::from_terms({{multiply(rest, {{d, 1}}), coef}});
          break;
        }
        case Atom::Kind::Param:
        case Atom::Kind::Time:
          break;
      }
    }
  }
  return r;
}

JetExpr prolong(const JetExpr& e, const MultiIndex& sigma) {
  JetExpr r = e;
  for (int i = 0; i < sigma.dim(); ++i) {
    for (int k = 0; k < sigma[i]; ++k) r = total_diff(r, i);
  }
  return r;
}

namespace {

std::string conj_name(const std::string& n) {
  if (n.size() > 3 && n.compare(n.size() - 3, 3, "bar") == 0) return n.substr(0, n.size() - 3);
  return n + "bar";
}

}  // namespace

JetExpr conj(const JetExpr& e) {
  std::map<Monomial, GaussRational> out;
  for (const auto& [m, c] : e.terms()) {
    Monomial mm;
    for (const auto& [a, p] : m) {
      Atom b = a;
      if (b.kind == Atom::Kind::Momentum) b.name = conj_name(b.name);
      mm = multiply(mm, {{b, p}});
    }
    out[mm] = out[mm] + c.conj();
  }
  return JetExpr::from_terms(std::move(out));
}

JetExpr substitute(const JetExpr& e, const std::function<std::optional<JetExpr>(const Atom&)>& f) {
  JetExpr r;
  for (const auto& [m, c] : e.terms()) {
    JetExpr term(c);
    for (const auto& [a, p] : m) {
      if (auto v = f(a)) {
        if (p < 0) throw std::invalid_argument("cannot substitute a symbol with negative power");
        term *= v->pow(p);
      } else {
        term *= JetExpr::atom(a, p);
      }
    }
    r += term;
  }
  return r;
}

std::complex<double> evaluate(const JetExpr& e, const std::function<std::complex<double>(const Atom&)>& bind) {
  using C = std::complex<double>;
  C total = 0.0;
  for (const auto& [m, c] : e.terms()) {
    total += eval_monomial(
        m, c.to_complex(), bind, [](C a, C b) { return a * b; }, [](C a) { return 1.0 / a; });
  }
  return total;
}

GaussRational evaluate_exact(const JetExpr& e, const std::function<GaussRational(const Atom&)>& bind) {
  GaussRational total;
  for (const auto& [m, c] : e.terms()) {
    total = total + eval_monomial(
                        m, c, bind, [](const GaussRational& a, const GaussRational& b) { return a * b; },
                        [](const GaussRational& a) { return a.inverse(); });
  }
  return total;
}

std::vector<MultiIndex> momentum_indices(const JetExpr& e, const std::string& r) {
  std::vector<MultiIndex> out;
  for (const auto& [m, c] : e.terms()) {
    for (const auto& [a, p] : m) {
      if (a.kind == Atom::Kind::Momentum && a.name == r &&
          std::find(out.begin(), out.end(), a.sigma) == out.end()) {
        out.push_back(a.sigma);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string mass_name(int j) { return "m" + std::to_string(j); }

MultiIndex unit(int dim, int j) { return MultiIndex(dim).extend(j); }

}  // namespace

JetExpr schrodinger_hamiltonian(int dim) {
  JetExpr h = JetExpr::field("U", MultiIndex(dim));
  const JetExpr hbar = JetExpr::param("hbar");
  // ħ/(2i m) = -i ħ / (2m)
  const JetExpr half_over_i = JetExpr(GaussRational(Rational(0), Rational(-1, 2)));
  for (int j = 0; j < dim; ++j) {
    const JetExpr inv_m = JetExpr::param(mass_name(j), -1);
    const JetExpr pj = JetExpr::momentum("p", unit(dim, j));
    h += JetExpr(GaussRational::fraction(1, 2)) * inv_m * pj * pj;
    h += half_over_i * hbar * inv_m * JetExpr::momentum("p", unit(dim, j).extend(j));
  }
  return h;
}

JetExpr real_action_hamiltonian(int dim) {
  JetExpr h = JetExpr::field("U", MultiIndex(dim));
  const JetExpr hbar = JetExpr::param("hbar");
  for (int j = 0; j < dim; ++j) {
    const JetExpr inv_m = JetExpr::param(mass_name(j), -1);
    const JetExpr sj = JetExpr::momentum("S", unit(dim, j));
    const JetExpr rj = JetExpr::momentum("R", unit(dim, j));
    const JetExpr rjj = JetExpr::momentum("R", unit(dim, j).extend(j));
    h += JetExpr(GaussRational::fraction(1, 2)) * inv_m * sj * sj;
    h -= JetExpr(GaussRational::fraction(1, 2)) * hbar * hbar * inv_m * (rj * rj + rjj);
  }
  return h;
}

JetExpr log_amplitude_hamiltonian(int dim) {
  JetExpr h;
  for (int j = 0; j < dim; ++j) {
    const JetExpr inv_m = JetExpr::param(mass_name(j), -1);
    const JetExpr sj = JetExpr::momentum("S", unit(dim, j));
    const JetExpr rj = JetExpr::momentum("R", unit(dim, j));
    const JetExpr sjj = JetExpr::momentum("S", unit(dim, j).extend(j));
    h += inv_m * (sj * rj + JetExpr(GaussRational::fraction(1, 2)) * sjj);
  }
  return h;
}

Hc1Report check_hc1(const JetExpr& h, const std::string& r, int dim, int max_order) {
  if (max_order < 2) throw std::invalid_argument("check_hc1 needs max_order >= 2");
  Hc1Report rep;
  rep.swept_order = max_order;
  const IndexTable table(dim, max_order - 1);
  for (int rank = 1; rank < table.size(); ++rank) {
    const MultiIndex& nu = table.at(rank);
    for (int k = 0; k < dim; ++k) {
      const JetExpr res = total_diff(partial(h, Atom::momentum(r, nu.extend(k))), k);
      if (!res.is_zero()) {
        rep.pass = false;
        rep.nu = nu;
        rep.k = k;
        rep.residual = res;
        rep.message = "D_" + std::string(1, coordinate_letter(k)) + " dH/d" + r + "[" + nu.extend(k).name() +
                      "] = " + res.to_prefix();
        return rep;
      }
    }
  }
  rep.message = "HC1 holds for all nonempty nu with |nu k| <= " + std::to_string(max_order);
  return rep;
}

Hc2Report check_hc2(const std::vector<std::pair<std::string, JetExpr>>& hs, int dim) {
  if (hs.size() < 2) throw std::invalid_argument("check_hc2 needs at least two Hamiltonians");
  Hc2Report rep;
  for (int i = 0; i < dim; ++i) {
    const JetExpr v0 = partial(hs[0].second, Atom::momentum(hs[0].first, unit(dim, i)));
    for (std::size_t k = 1; k < hs.size(); ++k) {
      const JetExpr vk = partial(hs[k].second, Atom::momentum(hs[k].first, unit(dim, i)));
      if (!(vk == v0)) {
        rep.pass = false;
        rep.failing_coordinate = i;
        rep.message = "velocity along " + std::string(1, coordinate_letter(i)) + " differs: " + v0.to_prefix() +
                      " vs " + vk.to_prefix();
        rep.velocity.clear();
        return rep;
      }
    }
    rep.velocity.push_back(v0);
  }
  rep.message = "HC2 holds";
  return rep;
}

Hc2Report check_hc2_complex(const JetExpr& h, int dim, const std::string& r) {
  const std::string rbar = conj_name(r);
  const JetExpr i_unit(GaussRational::i());
  const JetExpr half(GaussRational::fraction(1, 2));
  // p = p¹ + i p², p̄ = p¹ - i p²
  auto split = [&](const Atom& a) -> std::optional<JetExpr> {
    if (a.kind != Atom::Kind::Momentum) return std::nullopt;
    if (a.name == r) return JetExpr::momentum("P1", a.sigma) + i_unit * JetExpr::momentum("P2", a.sigma);
    if (a.name == rbar) return JetExpr::momentum("P1", a.sigma) - i_unit * JetExpr::momentum("P2", a.sigma);
    return std::nullopt;
  };
  const JetExpr hc = substitute(h, split);
  const JetExpr hcbar = substitute(conj(h), split);
  const JetExpr h1 = half * (hc + hcbar);
  const JetExpr h2 = JetExpr(GaussRational(Rational(0), Rational(-1, 2))) * (hc - hcbar);
  Hc2Report rep = check_hc2({{"P1", h1}, {"P2", h2}}, dim);
  // back to p, p̄: p¹ = (p + p̄)/2, p² = (p - p̄)/2i
  auto merge = [&](const Atom& a) -> std::optional<JetExpr> {
    if (a.kind != Atom::Kind::Momentum) return std::nullopt;
    if (a.name == "P1") return half * (JetExpr::momentum(r, a.sigma) + JetExpr::momentum(rbar, a.sigma));
    if (a.name == "P2") {
      return JetExpr(GaussRational(Rational(0), Rational(-1, 2))) *
             (JetExpr::momentum(r, a.sigma) - JetExpr::momentum(rbar, a.sigma));
    }
    return std::nullopt;
  };
  for (auto& v : rep.velocity) v = substitute(v, merge);
  return rep;
}

}  // namespace jetqd
