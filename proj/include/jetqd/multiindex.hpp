#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace jetqd {

inline constexpr int kMaxDim = 8;

// A multi-index stored as per-coordinate derivative counts. Two multi-indices
// that differ by a permutation of their index sequence have the same counts,
// so they compare equal by construction.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim);
  MultiIndex(std::initializer_list<int> counts);
  static MultiIndex from_counts(std::span<const int> counts);

  int dim() const { return dim_; }
  int operator[](int i) const { return counts_[static_cast<std::size_t>(i)]; }
  std::span<const std::uint8_t> counts() const { return {counts_.data(), static_cast<std::size_t>(dim_)}; }

  // |σ|
  int order() const;
  bool empty() const { return order() == 0; }

  // σ! = ∏ σ_i!, throws OverflowError past 64 bits.
  std::uint64_t factorial() const;

  // σ with counts[i] incremented (the extended index σi).
  MultiIndex extend(int i) const;
  MultiIndex extend(const MultiIndex& other) const;

  // ν ⊂ σ
  bool contains(const MultiIndex& nu) const;
  // σ∖ν; requires contains(nu).
  MultiIndex without(const MultiIndex& nu) const;

  // Letters per coordinate repeated by count ("xxy"); the empty index is "0".
  std::string name() const;
  static MultiIndex parse(std::string_view text, int dim);

  std::uint64_t key() const;

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.key() == b.key(); }
  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b);

 private:
  std::array<std::uint8_t, kMaxDim> counts_{};
  int dim_ = 0;
};

// Coordinate letter used in canonical names.
char coordinate_letter(int i);

// n choose k with overflow checks.
std::uint64_t binomial(int n, int k);

struct SubIndex {
  MultiIndex nu;
  MultiIndex complement;
  std::uint64_t count;  // C_σ^ν = ∏ C(σ_i, ν_i)
};

// Every ν with ν_i ≤ σ_i, in increasing mixed-radix order of ν.
std::vector<SubIndex> subindices(const MultiIndex& sigma);

// Dense enumeration of all multi-indices of a given dimension with order in
// [0, max_order], grouped by order. Ranks are stable for a (dim, max_order) pair
// and, within one order, follow descending counts of coordinate 0 first
// (xx, xy, yy for dim 2).
class IndexTable {
 public:
  IndexTable() = default;
  IndexTable(int dim, int max_order);

  int dim() const { return dim_; }
  int max_order() const { return max_order_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const MultiIndex& at(int rank) const { return indices_[static_cast<std::size_t>(rank)]; }
  // -1 when σ is not in the table.
  int rank(const MultiIndex& sigma) const;
  // First rank with order k; order_begin(max_order + 1) == size().
  int order_begin(int k) const { return offsets_[static_cast<std::size_t>(k)]; }

  const std::vector<MultiIndex>& indices() const { return indices_; }

 private:
  int dim_ = 0;
  int max_order_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<int> offsets_;
  std::unordered_map<std::uint64_t, int> ranks_;
};

// Number of multi-indices of dimension `dim` and exact order `order`.
int count_of_order(int dim, int order);

// Process-wide immutable table shared between states of the same shape.
std::shared_ptr<const IndexTable> shared_index_table(int dim, int max_order);

}  // namespace jetqd
