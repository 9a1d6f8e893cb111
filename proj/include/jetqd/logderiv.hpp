#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "jetqd/multiindex.hpp"

namespace jetqd {

using cplx = std::complex<double>;

// Converts derivatives ψ_σ into log-derivatives f_σ = ∂_σ ln ψ through the
// recursion ψ_{ρi} = Σ_{ν⊂ρ} C_ρ^ν ψ_ν f_{(ρ∖ν)i}, never forming ln ψ on a grid.
class LogDerivativePlan {
 public:
  LogDerivativePlan(std::shared_ptr<const IndexTable> table, int max_order);

  int max_order() const { return max_order_; }
  int size() const { return size_; }
  const IndexTable& table() const { return *table_; }

  // out[0] = ln ψ (principal branch), out[r] = f_σ for 1 ≤ |σ| ≤ max_order.
  void apply(std::span<const cplx> psi_derivs, std::span<cplx> out) const;

 private:
  struct Term {
    double count;
    int nu;
    int rest;
  };
  std::shared_ptr<const IndexTable> table_;
  int max_order_;
  int size_;
  std::vector<int> term_begin_;
  std::vector<Term> terms_;
};

std::shared_ptr<const LogDerivativePlan> shared_log_plan(int dim, int max_order);

}  // namespace jetqd
