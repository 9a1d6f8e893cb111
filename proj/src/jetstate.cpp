#include "jetqd/jetstate.hpp"

#include <cmath>
#include <stdexcept>

#include "jetqd/analytic.hpp"

namespace jetqd {

ActionPair action_pair(cplx p, double hbar) { return {p.real(), -p.imag() / hbar}; }

cplx from_action_pair(ActionPair a, double hbar) { return {a.S, -hbar * a.R}; }

JetState::JetState(int dim, int order)
    : q(static_cast<std::size_t>(dim), 0.0), table_(shared_index_table(dim, order)), order_(order) {
  if (order < 0) throw std::invalid_argument("truncation order must be nonnegative");
  p_.assign(static_cast<std::size_t>(table_->size()), cplx{});
}

cplx& JetState::p(const MultiIndex& sigma) {
  const int r = table_->rank(sigma);
  if (r < 0) throw std::out_of_range("momentum " + sigma.name() + " outside the truncated map");
  return p_[static_cast<std::size_t>(r)];
}

cplx JetState::p(const MultiIndex& sigma) const {
  const int r = table_->rank(sigma);
  if (r < 0) throw std::out_of_range("momentum " + sigma.name() + " outside the truncated map");
  return p_[static_cast<std::size_t>(r)];
}

JetState JetState::conjugated() const {
  JetState c = *this;
  for (auto& v : c.p_) v = std::conj(v);
  return c;
}

cplx taylor_eval(const JetState& state, std::span<const double> x, double hbar) {
  const int n = state.dim();
  if (static_cast<int>(x.size()) != n) throw std::invalid_argument("taylor_eval: dimension mismatch");
  const IndexTable& table = state.table();
  cplx exponent = 0.0;
  for (int r = 0; r < state.size(); ++r) {
    const MultiIndex& s = table.at(r);
    double mono = 1.0 / static_cast<double>(s.factorial());
    for (int i = 0; i < n; ++i) {
      const double d = x[static_cast<std::size_t>(i)] - state.q[static_cast<std::size_t>(i)];
      for (int k = 0; k < s[i]; ++k) mono *= d;
    }
    exponent += state.at(r) * mono;
  }
  return std::exp(cplx{0.0, 1.0 / hbar} * exponent);
}

std::vector<ActionPair> to_sr(const JetState& state, double hbar) {
  std::vector<ActionPair> out;
  out.reserve(static_cast<std::size_t>(state.size()));
  for (const cplx& v : state.momentums()) out.push_back(action_pair(v, hbar));
  return out;
}

std::vector<double> velocity(const JetState& state, const Physics& phys) {
  if (state.order() < 1) throw std::invalid_argument("velocity needs truncation order >= 1");
  std::vector<double> v(static_cast<std::size_t>(state.dim()));
  for (int i = 0; i < state.dim(); ++i) v[static_cast<std::size_t>(i)] = state.at(1 + i).real() / phys.m(i);
  return v;
}

JetState from_wavefunction_analytic(const AnalyticState& psi, std::span<const double> q, double t, int order,
                                    double node_floor) {
  JetState s(psi.dim(), order);
  s.t = t;
  s.q.assign(q.begin(), q.end());
  psi.momentums(q, t, s.table(), order, s.momentums(), node_floor);
  return s;
}

nlohmann::json to_json(const JetState& state) {
  nlohmann::json j;
  j["t"] = state.t;
  j["q"] = state.q;
  j["order"] = state.order();
  nlohmann::json p = nlohmann::json::object();
  for (int r = 1; r < state.size(); ++r) {
    p[state.table().at(r).name()] = {state.at(r).real(), state.at(r).imag()};
  }
  j["p"] = p;
  j["p0"] = {state.p0().real(), state.p0().imag()};
  return j;
}

JetState jetstate_from_json(const nlohmann::json& j) {
  const auto q = j.at("q").get<std::vector<double>>();
  const int dim = static_cast<int>(q.size());
  int order = 0;
  if (j.contains("order")) {
    order = j.at("order").get<int>();
  } else {
    for (const auto& [name, _] : j.at("p").items()) order = std::max(order, MultiIndex::parse(name, dim).order());
  }
  JetState s(dim, order);
  s.t = j.at("t").get<double>();
  s.q = q;
  for (const auto& [name, value] : j.at("p").items()) {
    s.p(MultiIndex::parse(name, dim)) = {value.at(0).get<double>(), value.at(1).get<double>()};
  }
  const auto& p0 = j.at("p0");
  s.p0() = {p0.at(0).get<double>(), p0.at(1).get<double>()};
  return s;
}

}  // namespace jetqd
