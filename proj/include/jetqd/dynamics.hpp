#pragma once

#include <complex>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "jetqd/analytic.hpp"
#include "jetqd/jetstate.hpp"
#include "jetqd/multiindex.hpp"
#include "jetqd/potential.hpp"

namespace jetqd {

using cplx = std::complex<double>;

// Index bookkeeping for H_σ, 0 ≤ |σ| ≤ N, over the extended table of order N+2.
class DynamicsLayout {
 public:
  struct Pair {
    double count;  // C_σ^ν
    int a;         // rank of νj
    int b;         // rank of (σ∖ν)j
    int j;
    bool interior;  // ν ≠ ∅ and ν ≠ σ
  };

  DynamicsLayout(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  const IndexTable& ext() const { return *ext_; }
  std::shared_ptr<const IndexTable> shared_ext() const { return ext_; }
  int state_size() const { return state_size_; }
  int ext_size() const { return ext_->size(); }

  std::span<const Pair> pairs(int rank) const;
  // rank of σj and σjj
  int sigma_j(int rank, int j) const { return sigma_j_[static_cast<std::size_t>(rank * dim_ + j)]; }
  int sigma_jj(int rank, int j) const { return sigma_jj_[static_cast<std::size_t>(rank * dim_ + j)]; }

 private:
  int dim_;
  int order_;
  std::shared_ptr<const IndexTable> ext_;
  int state_size_;
  std::vector<int> pair_begin_;
  std::vector<Pair> pairs_;
  std::vector<int> sigma_j_;
  std::vector<int> sigma_jj_;
};

std::shared_ptr<const DynamicsLayout> shared_layout(int dim, int order);

// Source of exact momentums p_σ(q, t) = (ħ/i) ∂_σ ln ψ (the generalized Jacobi method).
class MomentumOracle {
 public:
  virtual ~MomentumOracle() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  // out[r] for ranks r < table.order_begin(max_order + 1); out[0] is the action value.
  virtual void momentums(double t, std::span<const double> q, const IndexTable& table, int max_order,
                         std::span<cplx> out) const = 0;
};

class AnalyticOracle : public MomentumOracle {
 public:
  explicit AnalyticOracle(AnalyticState state, double node_floor = 1e-12)
      : state_(std::move(state)), node_floor_(node_floor) {}
  int dim() const override { return state_.dim(); }
  std::string name() const override { return "analytic:" + state_.kind_name(); }
  void momentums(double t, std::span<const double> q, const IndexTable& table, int max_order,
                 std::span<cplx> out) const override {
    state_.momentums(q, t, table, max_order, out, node_floor_);
  }
  const AnalyticState& state() const { return state_; }

 private:
  AnalyticState state_;
  double node_floor_;
};

// Rule supplying p_σ for N < |σ| ≤ N+2.
struct Closure {
  enum class Kind { Zero, Oracle };
  Kind kind = Kind::Zero;
  std::shared_ptr<const MomentumOracle> oracle;

  static Closure zero() { return {}; }
  static Closure from_oracle(std::shared_ptr<const MomentumOracle> o) { return {Kind::Oracle, std::move(o)}; }
  std::string name() const { return kind == Kind::Zero ? "zero" : "oracle"; }
};

struct Model {
  Physics physics;
  Potential potential;
  Closure closure;
};

// Momentums of the state over the extended table, closure entries filled in.
std::vector<cplx> extended_momentums(const JetState& state, const Model& model);

// H_σ = Σ_j (1/2m_j) Σ_{ν⊂σ} C_σ^ν p_{jν} p_{j(σ∖ν)} + U_σ + Σ_j (ħ/2i m_j) p_{jjσ}
// for any scalar type. `p(rank)` and `u(rank)` read momentums and potential derivatives.
template <class Scalar, class P, class U>
Scalar h_sigma_generic(const DynamicsLayout& layout, int rank, P&& p, U&& u, const std::vector<Scalar>& inv_mass,
                       const Scalar& half, const Scalar& hbar_over_2i) {
  const int n = layout.dim();
  std::vector<Scalar> quad(static_cast<std::size_t>(n), Scalar(0));
  for (const auto& pr : layout.pairs(rank)) {
    quad[static_cast<std::size_t>(pr.j)] += Scalar(static_cast<long>(pr.count)) * p(pr.a) * p(pr.b);
  }
  Scalar h = u(rank);
  for (int j = 0; j < n; ++j) {
    h += inv_mass[static_cast<std::size_t>(j)] *
         (half * quad[static_cast<std::size_t>(j)] + hbar_over_2i * p(layout.sigma_jj(rank, j)));
  }
  return h;
}

cplx h_sigma(const JetState& state, const Model& model, const MultiIndex& sigma);

struct JetRate {
  std::vector<double> qdot;
  std::vector<cplx> pdot;  // by rank, pdot[0] = d p0/dt
};

JetRate rhs(const JetState& state, const Model& model);

enum class Method { Rk4, Rk45 };

struct IntegrateSettings {
  double t_final = 1.0;
  double dt = 1e-3;  // fixed step for rk4, initial step for rk45
  Method method = Method::Rk45;
  double tol = 1e-9;
  double dt_min = 1e-12;
  double record_dt = 0.0;  // 0 records only the endpoints
  double r_bound = 30.0;
  std::vector<MultiIndex> retain;  // empty: all σ with 1 ≤ |σ| ≤ min(N, 2)
  bool keep_states = false;        // keep full extended momentum vectors per sample
};

struct TrajectoryRecord {
  int dim = 1;
  int order = 0;
  std::string closure;
  std::string method;
  std::vector<double> t;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> v;
  std::vector<double> S;
  std::vector<double> R;
  std::vector<MultiIndex> retained;
  std::vector<std::vector<cplx>> p;    // [sample][retained]
  std::vector<std::vector<cplx>> ext;  // [sample][extended rank] when keep_states
  struct Diagnostics {
    long steps = 0;
    long rejected = 0;
    long evaluations = 0;
    double min_dt = 0.0;
    double max_dt = 0.0;
    double max_abs_R = 0.0;
  } diagnostics;
  JetState final_state;

  void write_csv(std::ostream& os) const;
};

TrajectoryRecord integrate(const JetState& initial, const Model& model, const IntegrateSettings& settings);

// ∫ L_σ dt with L_σ = p_{σj} v^j - H_σ along the recorded samples (Simpson on
// uniform samples with an even interval count, trapezoid otherwise).
cplx action_via_quadrature(const TrajectoryRecord& record, const Model& model, const MultiIndex& sigma);

struct StationarityResult {
  double action_true = 0.0;
  double delta_full = 0.0;  // ΔI(δ)
  double delta_half = 0.0;  // ΔI(δ/2)
  double ratio = 0.0;
};

// Compares I = ∫ [m q̇²/2 - U + (ħ²/2m)(R_j² + R_jj)] dt on the true path and on
// q + δ·sin(π(t - t0)/T) ê_axis, with R_σ read from the oracle along each curve.
StationarityResult stationarity_probe(const JetState& initial, const Model& model, double t_final, double delta,
                                      int samples = 2001, int axis = 0);

}  // namespace jetqd
