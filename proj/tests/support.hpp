#pragma once

// Shared fixtures for the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "ikit/synthetic.hpp"

namespace ikit::testing {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline LatticeVector random_vector(int n, std::uint64_t seed, double amplitude = 1.0) {
  return random_game(n, amplitude, seed).values();
}

inline ValueTable table_of(int n, std::vector<double> values) {
  return ValueTable(LatticeVector(n, std::move(values)));
}

// Planted game used by the decomposer checks: 1 to 4 AND and 1 to 4 OR terms
// on distinct nonempty subsets, magnitudes in [1, 3] with random signs, a
// bias in [-1, 1] and noise_amp 0.01. Rerolled until |v(N) - v(empty)| >= 1
// so that the default tau (5% of that spread) exceeds the noise and the
// planted split stays feasible.
inline GeneratedGame planted_game(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_int_distribution<std::uint64_t> mask(1, full_mask(n));
  std::uniform_real_distribution<double> magnitude(1.0, 3.0), unit(-1.0, 1.0);
  std::bernoulli_distribution negative(0.5);
  for (;;) {
    SyntheticGameSpec spec;
    spec.n = n;
    spec.noise_amp = 0.01;
    spec.seed = rng();
    spec.bias = unit(rng);
    for (auto* terms : {&spec.and_terms, &spec.or_terms}) {
      std::set<std::uint64_t> used;
      const int k = count(rng);
      while (static_cast<int>(used.size()) < k) used.insert(mask(rng));
      for (std::uint64_t m : used) {
        terms->push_back({m, negative(rng) ? -magnitude(rng) : magnitude(rng)});
      }
    }
    GeneratedGame game = generate_game(spec);
    const double spread = std::abs(game.table[full_mask(n)] - game.table[0]);
    if (spread >= 1.0) return game;
  }
}

}  // namespace ikit::testing
