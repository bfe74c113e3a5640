#include "doctest.h"
#include "ikit/error.hpp"
#include "ikit/game_theory.hpp"
#include "ikit/synthetic.hpp"
#include "support.hpp"

using namespace ikit;
using ikit::testing::table_of;

TEST_CASE("Shapley values of the two-player example") {
  const AttributionVector phi = shapley_values(table_of(2, {0, 1, 2, 5}));
  CHECK(phi.phi == std::vector<double>{2, 3});
  CHECK(oracle::shapley_by_permutations(table_of(2, {0, 1, 2, 5})).phi ==
        std::vector<double>{2, 3});
}

TEST_CASE("Shapley values of constant and additive games") {
  CHECK(shapley_values(table_of(3, std::vector<double>(8, 4.0))).phi ==
        std::vector<double>{0, 0, 0});
  const std::vector<double> a = {1.5, -2.0, 0.25, 3.0};
  std::vector<double> v(16, 0.0);
  for (std::uint64_t s = 0; s < 16; ++s) {
    for (int i = 0; i < 4; ++i) v[s] += ((s >> i) & 1) ? a[i] : 0.0;
  }
  const AttributionVector phi = shapley_values(table_of(4, v));
  for (int i = 0; i < 4; ++i) CHECK(phi.phi[i] == doctest::Approx(a[i]).epsilon(1e-12));
}

TEST_CASE("Shapley efficiency and agreement with the permutation oracle") {
  for (int n = 1; n <= 7; ++n) {
    const ValueTable v = random_game(n, 2.0, 700 + n);
    const AttributionVector fast = shapley_values(v);
    const AttributionVector slow = oracle::shapley_by_permutations(v);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += fast.phi[i];
      CHECK(std::abs(fast.phi[i] - slow.phi[i]) <= 1e-9 * v.scale());
    }
    CHECK(std::abs(sum - (v[full_mask(n)] - v[0])) <= 1e-9 * v.scale());
  }
}

TEST_CASE("Shapley interaction index") {
  const ValueTable v = table_of(2, {0, 1, 2, 5});
  CHECK(shapley_interaction_index(v, SubsetIndex(3, 2)) == 2.0);
  CHECK(oracle::shapley_interaction_direct(v, 3) == doctest::Approx(2.0));
  const ValueTable r = random_game(5, 1.0, 77);
  const AttributionVector phi = shapley_values(r);
  for (int i = 0; i < 5; ++i) {
    CHECK(shapley_interaction_index(r, SubsetIndex(1u << i, 5)) ==
          doctest::Approx(phi.phi[i]).epsilon(1e-12));
  }
  std::vector<double> vt(16);
  for (std::uint64_t s = 0; s < 16; ++s) vt[s] = (s & 6) == 6 ? -1.75 : 0.0;
  CHECK(shapley_interaction_index(table_of(4, vt), SubsetIndex(6, 4)) == -1.75);
  CHECK_THROWS_AS(shapley_interaction_index(r, SubsetIndex::empty(5)), InputError);
  for (std::uint64_t t = 1; t < 32; ++t) {
    CHECK(std::abs(shapley_interaction_index(r, SubsetIndex(t, 5)) -
                   oracle::shapley_interaction_direct(r, t)) <= 1e-9);
  }
}

TEST_CASE("Shapley-Taylor example with k = 2") {
  const IndexTable st = shapley_taylor(table_of(2, {0, 1, 2, 5}), 2);
  const std::map<std::uint64_t, double> expected = {{0, 0}, {1, 1}, {2, 2}, {3, 2}};
  CHECK(st.entries == expected);
}

TEST_CASE("Shapley-Taylor completeness and oracle agreement") {
  for (int n = 1; n <= 7; ++n) {
    const ValueTable v = random_game(n, 1.0, 800 + n);
    for (int k = 1; k <= n; ++k) {
      const IndexTable st = shapley_taylor(v, k);
      const IndexTable direct = oracle::shapley_taylor_direct(v, k);
      double sum = 0.0;
      for (const auto& [mask, value] : st.entries) {
        CHECK(std::popcount(mask) <= k);
        CHECK(std::abs(value - direct.entries.at(mask)) <= 1e-9);
        sum += value;
      }
      CHECK(st.entries.size() == direct.entries.size());
      CHECK(std::abs(sum - v[full_mask(n)]) <= 1e-9 * v.scale());
    }
  }
  const ValueTable v = random_game(4, 1.0, 3);
  const IndexTable full = shapley_taylor(v, 4);
  const InteractionVector h = and_interactions(v);
  for (std::uint64_t s = 0; s < 16; ++s) CHECK(full.entries.at(s) == h[s]);
  CHECK_THROWS_AS(shapley_taylor(v, 0), InputError);
  CHECK_THROWS_AS(shapley_taylor(v, 5), InputError);
}

TEST_CASE("attribution JSON") {
  const ValueTable v(LatticeVector(2, {0, 1, 2, 5}), {"a", "b"});
  const nlohmann::json doc = attribution_to_json(shapley_values(v), v);
  CHECK(doc["format"] == "shapley");
  CHECK(doc["values"][1]["label"] == "b");
  CHECK(doc["values"][1]["phi"] == 3.0);
  const nlohmann::json st = index_table_to_json(shapley_taylor(v, 1), v);
  CHECK(st["order"] == 1);
  CHECK(st["records"].size() == 3);
}
