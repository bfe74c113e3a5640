#include "doctest.h"
#include "ikit/error.hpp"
#include "ikit/synthetic.hpp"
#include "support.hpp"

using namespace ikit;
using ikit::testing::max_abs_diff;

TEST_CASE("single planted AND term is recovered") {
  SyntheticGameSpec spec;
  spec.n = 3;
  spec.and_terms = {{0b011, 2.5}};
  const GeneratedGame g = generate_game(spec);
  CHECK(and_interactions(g.table).effects().raw() ==
        std::vector<double>{0, 0, 0, 2.5, 0, 0, 0, 0});
  CHECK(g.planted_l1() == 2.5);
}

TEST_CASE("single planted OR term is recovered") {
  SyntheticGameSpec spec;
  spec.n = 3;
  spec.or_terms = {{0b110, -1.5}};
  const GeneratedGame g = generate_game(spec);
  CHECK(or_interactions(g.table).effects().raw() ==
        std::vector<double>{0, 0, 0, 0, 0, 0, -1.5, 0});
  CHECK(g.or_truth[0b110] == -1.5);
}

TEST_CASE("bias only gives a constant game") {
  SyntheticGameSpec spec;
  spec.n = 2;
  spec.bias = 0.75;
  CHECK(generate_game(spec).table.values().raw() == std::vector<double>(4, 0.75));
}

TEST_CASE("planted terms and noise combine as documented") {
  SyntheticGameSpec spec;
  spec.n = 3;
  spec.and_terms = {{0b011, 2.0}};
  spec.or_terms = {{0b110, -3.0}};
  const GeneratedGame g = generate_game(spec);
  CHECK(g.table.values().raw() == std::vector<double>{0, 0, -3, -1, -3, -3, -3, -1});
  CHECK(g.planted_l1() == 5.0);
  spec.noise_amp = 0.01;
  spec.seed = 5;
  const GeneratedGame noisy = generate_game(spec);
  CHECK(max_abs_diff(noisy.table.values().values(), g.table.values().values()) <= 0.01);
  CHECK(noisy.table == generate_game(spec).table);
}

TEST_CASE("spec validation") {
  SyntheticGameSpec spec;
  spec.n = 2;
  spec.or_terms = {{0, 1.0}};
  CHECK_THROWS_AS(generate_game(spec), InputError);
  spec.or_terms = {{4, 1.0}};
  CHECK_THROWS_AS(generate_game(spec), InputError);
  spec.or_terms = {};
  spec.noise_amp = -1;
  CHECK_THROWS_AS(generate_game(spec), InputError);
}

TEST_CASE("spec JSON accepts masks or members") {
  const auto doc = nlohmann::json::parse(R"({"n":3,"and_terms":[{"members":[0,1],"effect":2}],
      "or_terms":[{"mask":6,"effect":-3}],"bias":0.5,"noise_amp":0,"seed":9})");
  const SyntheticGameSpec spec = synthetic_spec_from_json(doc);
  CHECK(spec.and_terms[0].mask == 3);
  CHECK(spec.or_terms[0].mask == 6);
  CHECK(spec.bias == 0.5);
  const SyntheticGameSpec again = synthetic_spec_from_json(synthetic_spec_to_json(spec));
  CHECK(generate_game(again).table == generate_game(spec).table);
  CHECK_THROWS_AS(synthetic_spec_from_json(nlohmann::json::parse(R"({"n":"x"})")), InputError);
  CHECK_THROWS_AS(synthetic_spec_from_json(nlohmann::json::parse(R"({"n":2,"and_terms":[{"effect":1}]})")),
                  InputError);
}

TEST_CASE("random games") {
  CHECK(random_game(4, 1.0, 3) == random_game(4, 1.0, 3));
  CHECK_FALSE(random_game(4, 1.0, 3) == random_game(4, 1.0, 4));
  CHECK(random_game(3, 0.0, 1).values().norm_inf() == 0.0);
  const ValueTable r = random_game(3, 1.0, 12);
  CHECK(max_abs_diff(zeta_transform(mobius_transform(r.values())).values(), r.values().values()) <= 1e-15);
}

TEST_CASE("brute-force oracles agree with the fast transforms") {
  for (int g = 0; g < 50; ++g) {
    const int n = 1 + g % 6;
    const ValueTable v = random_game(n, 4.0, 900 + g);
    CHECK(max_abs_diff(oracle::brute_force_and(v).effects().values(),
                       and_interactions(v).effects().values()) <= 1e-12);
    CHECK(max_abs_diff(oracle::brute_force_or(v).effects().values(),
                       or_interactions(v).effects().values()) <= 1e-12);
  }
  const ValueTable ex = ikit::testing::table_of(2, {0, 1, 2, 5});
  CHECK(oracle::brute_force_and(ex).effects().raw() == std::vector<double>{0, 1, 2, 2});
  CHECK(oracle::brute_force_or(ex).effects().raw() == std::vector<double>{0, 3, 4, -2});
  CHECK_THROWS_AS(oracle::brute_force_and(random_game(13, 1.0, 0)), InputError);
}
