#include <doctest.h>

#include <set>

#include "jetqd/errors.hpp"
#include "jetqd/multiindex.hpp"

using jetqd::IndexTable;
using jetqd::MultiIndex;

TEST_CASE("order and factorial") {
  CHECK(MultiIndex{2, 1}.order() == 3);
  CHECK(MultiIndex{3, 2}.factorial() == 12);
  CHECK(MultiIndex(2).order() == 0);
  CHECK(MultiIndex(2).factorial() == 1);
}

TEST_CASE("factorial overflow is reported") {
  CHECK_THROWS_AS(MultiIndex{25}.factorial(), jetqd::OverflowError);
  CHECK(MultiIndex{20}.factorial() == 2432902008176640000ULL);
}

TEST_CASE("subindices of (2,1)") {
  const auto subs = jetqd::subindices(MultiIndex{2, 1});
  CHECK(subs.size() == 6);
  bool seen = false;
  for (const auto& s : subs) {
    if (s.nu == MultiIndex{1, 1}) {
      CHECK(s.count == 2);
      CHECK(s.complement == MultiIndex{1, 0});
      seen = true;
    }
  }
  CHECK(seen);
}

TEST_CASE("binomial counts sum to 2^|sigma|") {
  for (int dim = 1; dim <= 3; ++dim) {
    const IndexTable table(dim, 8);
    for (const auto& sigma : table.indices()) {
      std::uint64_t total = 0;
      for (const auto& s : jetqd::subindices(sigma)) total += s.count;
      CHECK(total == (std::uint64_t{1} << sigma.order()));
    }
  }
}

TEST_CASE("subindex counts are symmetric under complement") {
  const IndexTable table(3, 6);
  for (const auto& sigma : table.indices()) {
    for (const auto& s : jetqd::subindices(sigma)) {
      std::uint64_t mirror = 0;
      for (const auto& t : jetqd::subindices(sigma)) {
        if (t.nu == s.complement) mirror = t.count;
      }
      CHECK(mirror == s.count);
    }
  }
}

TEST_CASE("extend") {
  CHECK(MultiIndex{2, 1}.extend(1) == MultiIndex{2, 2});
  CHECK(MultiIndex{2, 1}.extend(MultiIndex{0, 3}) == MultiIndex{2, 4});
  CHECK_THROWS(MultiIndex{2, 1}.extend(2));
}

TEST_CASE("names round-trip") {
  CHECK(MultiIndex{2, 1}.name() == "xxy");
  CHECK(MultiIndex::parse("xxy", 2) == MultiIndex{2, 1});
  CHECK(MultiIndex::parse("yxx", 2) == MultiIndex{2, 1});
  CHECK(MultiIndex(2).name() == "0");
  CHECK(MultiIndex::parse("0", 2) == MultiIndex(2));
  CHECK_THROWS(MultiIndex::parse("xz", 2));
  const IndexTable table(3, 5);
  for (const auto& s : table.indices()) CHECK(MultiIndex::parse(s.name(), 3) == s);
}

TEST_CASE("index table enumeration") {
  const IndexTable t(2, 3);
  CHECK(t.size() == 10);
  CHECK(t.order_begin(2) == 3);
  CHECK(t.at(3).name() == "xx");
  CHECK(t.at(4).name() == "xy");
  CHECK(t.at(5).name() == "yy");
  for (int r = 0; r < t.size(); ++r) CHECK(t.rank(t.at(r)) == r);
  CHECK(t.rank(MultiIndex{4, 0}) == -1);
  const IndexTable big(2, 5);
  for (int r = 0; r < t.size(); ++r) CHECK(big.rank(t.at(r)) == r);
  for (int k = 0; k <= 6; ++k) CHECK(jetqd::count_of_order(3, k) == (k + 1) * (k + 2) / 2);
}

TEST_CASE("ordering is strict and consistent") {
  const IndexTable t(3, 4);
  for (int r = 1; r < t.size(); ++r) CHECK(t.at(r - 1) < t.at(r));
  std::set<MultiIndex> s(t.indices().begin(), t.indices().end());
  CHECK(static_cast<int>(s.size()) == t.size());
}
