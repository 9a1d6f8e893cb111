#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jetqd/multiindex.hpp"
#include "jetqd/potential.hpp"

namespace jetqd {

using cplx = std::complex<double>;

class AnalyticState;

// S and R parts of one complex momentum: p = S + (ħ/i) R.
struct ActionPair {
  double S = 0.0;
  double R = 0.0;
};

ActionPair action_pair(cplx p, double hbar);
cplx from_action_pair(ActionPair a, double hbar);

// Position plus the dense momentum map p_σ, 0 ≤ |σ| ≤ N. The σ = ∅ slot
// (rank 0) holds the action value p0.
class JetState {
 public:
  JetState() = default;
  JetState(int dim, int order);

  double t = 0.0;
  std::vector<double> q;

  int dim() const { return table_->dim(); }
  int order() const { return order_; }
  int size() const { return static_cast<int>(p_.size()); }
  const IndexTable& table() const { return *table_; }
  std::shared_ptr<const IndexTable> shared_table() const { return table_; }

  cplx& p0() { return p_[0]; }
  cplx p0() const { return p_[0]; }
  // Throws std::out_of_range for σ outside 0 ≤ |σ| ≤ N.
  cplx& p(const MultiIndex& sigma);
  cplx p(const MultiIndex& sigma) const;
  cplx& at(int rank) { return p_[static_cast<std::size_t>(rank)]; }
  cplx at(int rank) const { return p_[static_cast<std::size_t>(rank)]; }
  std::span<cplx> momentums() { return p_; }
  std::span<const cplx> momentums() const { return p_; }

  // Same state with every momentum conjugated.
  JetState conjugated() const;

 private:
  std::shared_ptr<const IndexTable> table_;
  int order_ = 0;
  std::vector<cplx> p_;
};

// ψ(x) = exp[(i/ħ) Σ_{|σ|≤N} p_σ (x - q)^σ / σ!]
cplx taylor_eval(const JetState& state, std::span<const double> x, double hbar);

// Componentwise (S_σ, R_σ) by rank.
std::vector<ActionPair> to_sr(const JetState& state, double hbar);

// v_j = Re(p_j) / m_j
std::vector<double> velocity(const JetState& state, const Physics& phys);

JetState from_wavefunction_analytic(const AnalyticState& psi, std::span<const double> q, double t, int order,
                                    double node_floor = 1e-12);

nlohmann::json to_json(const JetState& state);
JetState jetstate_from_json(const nlohmann::json& j);

}  // namespace jetqd
