#include "jetqd/multiindex.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "jetqd/errors.hpp"

namespace jetqd {

namespace {

constexpr std::string_view kLetters = "xyzabcde";

void check_dim(int dim) {
  if (dim < 0 || dim > kMaxDim) {
    throw std::invalid_argument("multi-index dimension out of range: " + std::to_string(dim));
  }
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in multi-index arithmetic");
  }
  return r;
}

}  // namespace

MultiIndex::MultiIndex(int dim) : dim_(dim) { check_dim(dim); }

MultiIndex::MultiIndex(std::initializer_list<int> counts) : dim_(static_cast<int>(counts.size())) {
  check_dim(dim_);
  std::size_t i = 0;
  for (int c : counts) {
    if (c < 0 || c > 255) throw std::invalid_argument("multi-index count out of range");
    counts_[i++] = static_cast<std::uint8_t>(c);
  }
}

MultiIndex MultiIndex::from_counts(std::span<const int> counts) {
  MultiIndex m(static_cast<int>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || counts[i] > 255) throw std::invalid_argument("multi-index count out of range");
    m.counts_[i] = static_cast<std::uint8_t>(counts[i]);
  }
  return m;
}

int MultiIndex::order() const {
  int s = 0;
  for (int i = 0; i < dim_; ++i) s += counts_[static_cast<std::size_t>(i)];
  return s;
}

std::uint64_t MultiIndex::factorial() const {
  std::uint64_t f = 1;
  for (int i = 0; i < dim_; ++i) {
    for (int k = 2; k <= counts_[static_cast<std::size_t>(i)]; ++k) f = checked_mul(f, static_cast<std::uint64_t>(k));
  }
  return f;
}

MultiIndex MultiIndex::extend(int i) const {
  if (i < 0 || i >= dim_) throw std::out_of_range("coordinate index out of range");
  MultiIndex r = *this;
  if (r.counts_[static_cast<std::size_t>(i)] == 255) throw OverflowError("multi-index count overflow");
  ++r.counts_[static_cast<std::size_t>(i)];
  return r;
}

MultiIndex MultiIndex::extend(const MultiIndex& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("multi-index dimension mismatch");
  MultiIndex r = *this;
  for (int i = 0; i < dim_; ++i) {
    const int c = counts_[static_cast<std::size_t>(i)] + other.counts_[static_cast<std::size_t>(i)];
    if (c > 255) throw OverflowError("multi-index count overflow");
    r.counts_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c);
  }
  return r;
}

bool MultiIndex::contains(const MultiIndex& nu) const {
  if (nu.dim_ != dim_) return false;
  for (int i = 0; i < dim_; ++i) {
    if (nu.counts_[static_cast<std::size_t>(i)] > counts_[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

MultiIndex MultiIndex::without(const MultiIndex& nu) const {
  if (!contains(nu)) throw std::invalid_argument("not a subindex");
  MultiIndex r = *this;
  for (int i = 0; i < dim_; ++i) r.counts_[static_cast<std::size_t>(i)] -= nu.counts_[static_cast<std::size_t>(i)];
  return r;
}

std::string MultiIndex::name() const {
  std::string s;
  for (int i = 0; i < dim_; ++i) s.append(counts_[static_cast<std::size_t>(i)], coordinate_letter(i));
  return s.empty() ? std::string("0") : s;
}

MultiIndex MultiIndex::parse(std::string_view text, int dim) {
  MultiIndex m(dim);
  if (text == "0") return m;
  if (text.empty()) throw std::invalid_argument("empty multi-index name");
  for (char c : text) {
    const auto pos = kLetters.find(c);
    if (pos == std::string_view::npos || static_cast<int>(pos) >= dim) {
      throw std::invalid_argument("bad multi-index name '" + std::string(text) + "'");
    }
    m = m.extend(static_cast<int>(pos));
  }
  return m;
}

std::uint64_t MultiIndex::key() const {
  std::uint64_t k = 0;
  for (int i = 0; i < kMaxDim; ++i) k |= static_cast<std::uint64_t>(counts_[static_cast<std::size_t>(i)]) << (8 * i);
  return k ^ (static_cast<std::uint64_t>(dim_) << 60);
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
  if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
  if (auto c = a.order() <=> b.order(); c != 0) return c;
  // Within an order: larger count in coordinate 0 sorts first.
  for (int i = 0; i < a.dim_; ++i) {
    const auto ai = a.counts_[static_cast<std::size_t>(i)];
    const auto bi = b.counts_[static_cast<std::size_t>(i)];
    if (ai != bi) return bi <=> ai;
  }
  return std::strong_ordering::equal;
}

char coordinate_letter(int i) {
  if (i < 0 || i >= static_cast<int>(kLetters.size())) throw std::out_of_range("coordinate index out of range");
  return kLetters[static_cast<std::size_t>(i)];
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) is divisible by i at every step.
    r = checked_mul(r, static_cast<std::uint64_t>(n - k + i)) / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::vector<SubIndex> subindices(const MultiIndex& sigma) {
  const int n = sigma.dim();
  std::vector<SubIndex> out;
  std::vector<int> nu(static_cast<std::size_t>(n), 0);
  while (true) {
    MultiIndex m = MultiIndex::from_counts(nu);
    std::uint64_t c = 1;
    for (int i = 0; i < n; ++i) c = checked_mul(c, binomial(sigma[i], nu[static_cast<std::size_t>(i)]));
    out.push_back({m, sigma.without(m), c});
    int i = 0;
    while (i < n) {
      if (nu[static_cast<std::size_t>(i)] < sigma[i]) {
        ++nu[static_cast<std::size_t>(i)];
        break;
      }
      nu[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == n) break;
  }
  return out;
}

int count_of_order(int dim, int order) {
  if (dim == 0) return order == 0 ? 1 : 0;
  return static_cast<int>(binomial(order + dim - 1, dim - 1));
}

IndexTable::IndexTable(int dim, int max_order) : dim_(dim), max_order_(max_order) {
  check_dim(dim);
  if (max_order < 0) throw std::invalid_argument("negative max order");
  offsets_.push_back(0);
  for (int k = 0; k <= max_order; ++k) {
    // Enumerate compositions of k into dim parts, coordinate 0 descending.
    std::vector<int> c(static_cast<std::size_t>(dim), 0);
    std::vector<MultiIndex> level;
    auto rec = [&](auto&& self, int i, int remaining) -> void {
      if (dim == 0) {
        if (remaining == 0) level.emplace_back(0);
        return;
      }
      if (i == dim - 1) {
        c[static_cast<std::size_t>(i)] = remaining;
        level.push_back(MultiIndex::from_counts(c));
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        c[static_cast<std::size_t>(i)] = v;
        self(self, i + 1, remaining - v);
      }
    };
    rec(rec, 0, k);
    for (auto& m : level) {
      ranks_.emplace(m.key(), static_cast<int>(indices_.size()));
      indices_.push_back(m);
    }
    offsets_.push_back(static_cast<int>(indices_.size()));
  }
}

int IndexTable::rank(const MultiIndex& sigma) const {
  if (sigma.dim() != dim_) return -1;
  auto it = ranks_.find(sigma.key());
  return it == ranks_.end() ? -1 : it->second;
}

std::shared_ptr<const IndexTable> shared_index_table(int dim, int max_order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const IndexTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, max_order}];
  if (!slot) slot = std::make_shared<const IndexTable>(dim, max_order);
  return slot;
}

}  // namespace jetqd
