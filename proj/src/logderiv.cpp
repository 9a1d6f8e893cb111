#include "jetqd/logderiv.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace jetqd {

LogDerivativePlan::LogDerivativePlan(std::shared_ptr<const IndexTable> table, int max_order)
    : table_(std::move(table)), max_order_(max_order) {
  if (max_order > table_->max_order()) throw std::invalid_argument("log-derivative plan exceeds table order");
  size_ = table_->order_begin(max_order + 1);
  term_begin_.assign(static_cast<std::size_t>(size_ + 1), 0);
  for (int r = 1; r < size_; ++r) {
    term_begin_[static_cast<std::size_t>(r)] = static_cast<int>(terms_.size());
    const MultiIndex& sigma = table_->at(r);
    int i = 0;
    while (sigma[i] == 0) ++i;
    MultiIndex rho = sigma.without(MultiIndex(sigma.dim()).extend(i));
    for (const auto& s : subindices(rho)) {
      if (s.nu.empty()) continue;
      terms_.push_back({static_cast<double>(s.count), table_->rank(s.nu), table_->rank(s.complement.extend(i))});
    }
  }
  term_begin_[static_cast<std::size_t>(size_)] = static_cast<int>(terms_.size());
}

void LogDerivativePlan::apply(std::span<const cplx> psi, std::span<cplx> out) const {
  if (static_cast<int>(psi.size()) < size_ || static_cast<int>(out.size()) < size_) {
    throw std::invalid_argument("log-derivative spans too small");
  }
  const cplx inv = 1.0 / psi[0];
  out[0] = std::log(psi[0]);
  for (int r = 1; r < size_; ++r) {
    cplx acc = psi[static_cast<std::size_t>(r)];
    for (int k = term_begin_[static_cast<std::size_t>(r)]; k < term_begin_[static_cast<std::size_t>(r + 1)]; ++k) {
      const Term& t = terms_[static_cast<std::size_t>(k)];
      acc -= t.count * psi[static_cast<std::size_t>(t.nu)] * out[static_cast<std::size_t>(t.rest)];
    }
    out[static_cast<std::size_t>(r)] = acc * inv;
  }
}

std::shared_ptr<const LogDerivativePlan> shared_log_plan(int dim, int max_order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const LogDerivativePlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, max_order}];
  if (!slot) slot = std::make_shared<const LogDerivativePlan>(shared_index_table(dim, max_order), max_order);
  return slot;
}

}  // namespace jetqd
