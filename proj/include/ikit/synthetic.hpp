#pragma once

// Ground-truth games and brute-force oracles.
//
// Everything under `oracle::` is computed straight from the defining sums
// with nested loops over subsets; none of it goes through the fast
// transforms, so it can be used to check them.

#include <cstdint>
#include <utility>
#include <vector>

#include "ikit/game_theory.hpp"
#include "ikit/interactions.hpp"
#include "json.hpp"

namespace ikit {

struct PlantedTerm {
  std::uint64_t mask = 0;
  double effect = 0.0;
};

struct SyntheticGameSpec {
  int n = 0;
  std::vector<PlantedTerm> and_terms;
  std::vector<PlantedTerm> or_terms;  // masks must be nonempty
  double bias = 0.0;
  double noise_amp = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratedGame {
  ValueTable table;
  // Noise-free truth. The bias sits in the AND empty slot; the OR empty slot is 0.
  InteractionVector and_truth;
  InteractionVector or_truth;

  // |bias| + sum of |planted effects|; the objective value of the planted split.
  double planted_l1() const;
};

// v(T) = bias + sum_and c 1[S subset of T] + sum_or c 1[S meets T] + noise_amp u(T),
// with u(T) uniform on [-1, 1] drawn from `seed`.
GeneratedGame generate_game(const SyntheticGameSpec& spec);

// 2^n iid uniform values on [-amplitude, amplitude].
ValueTable random_game(int n, double amplitude, std::uint64_t seed);

SyntheticGameSpec synthetic_spec_from_json(const nlohmann::json& doc);
nlohmann::json synthetic_spec_to_json(const SyntheticGameSpec& spec);

namespace oracle {

inline constexpr int kMaxOracleN = 12;

// Throws InputError above kMaxOracleN.
InteractionVector brute_force_and(const ValueTable& table);
InteractionVector brute_force_or(const ValueTable& table);

// Row-major 2^n x 2^n matrices implied by the interaction definitions.
std::vector<double> dense_T_and(int n);
std::vector<double> dense_T_or(int n);
std::vector<double> dense_apply(const std::vector<double>& matrix, std::span<const double> x);
std::vector<double> dense_apply_transpose(const std::vector<double>& matrix,
                                          std::span<const double> x);

// Average marginal contribution over all n! player orderings.
AttributionVector shapley_by_permutations(const ValueTable& table);

// sum_{S subset of N\T} |S|!(n-|S|-|T|)!/(n-|T|+1)! * dv_T(S),
// dv_T(S) = sum_{L subset of T} (-1)^{|T|-|L|} v(S + L).
double shapley_interaction_direct(const ValueTable& table, std::uint64_t t);

// The piecewise Shapley-Taylor formula evaluated from brute-force dividends.
IndexTable shapley_taylor_direct(const ValueTable& table, int k);

}  // namespace oracle

}  // namespace ikit
