#pragma once

// Classical attributions recovered as weighted sums of Harsanyi dividends.

#include <cstdint>
#include <map>
#include <vector>

#include "ikit/interactions.hpp"
#include "json.hpp"

namespace ikit {

struct AttributionVector {
  int n = 0;
  std::vector<double> phi;
};

enum class IndexKind { kShapleyInteraction, kShapleyTaylor };

struct IndexTable {
  IndexKind kind = IndexKind::kShapleyTaylor;
  int order = 0;  // k, Shapley-Taylor only
  int n = 0;
  // Subsets absent from the map have index zero.
  std::map<std::uint64_t, double> entries;
};

// phi(i) = sum_{S subset of N\{i}} I(S + i) / (|S| + 1)
AttributionVector shapley_values(const ValueTable& table);
AttributionVector shapley_values(const InteractionVector& harsanyi);

// I^Shapley(T) = sum_{S subset of N\T} I(S + T) / (|S| + 1). T must be nonempty.
double shapley_interaction_index(const ValueTable& table, const SubsetIndex& t);
double shapley_interaction_index(const InteractionVector& harsanyi, const SubsetIndex& t);

// Order-k Shapley-Taylor index for every |T| <= k:
//   |T| < k: I(T)
//   |T| = k: sum_{S subset of N\T} I(S + T) / C(|S| + k, k)
// The empty set is included, so the entries sum to v(N).
IndexTable shapley_taylor(const ValueTable& table, int k);

nlohmann::json attribution_to_json(const AttributionVector& phi, const ValueTable& source);
nlohmann::json index_table_to_json(const IndexTable& table, const ValueTable& source);

}  // namespace ikit
