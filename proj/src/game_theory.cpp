#include "ikit/game_theory.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "ikit/error.hpp"

namespace ikit {

using nlohmann::json;

namespace {

double binomial(int m, int k) {
  if (k < 0 || k > m) return 0.0;
  k = std::min(k, m - k);
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c = c * (m - k + j) / j;
  return c;
}

void require_and(const InteractionVector& harsanyi) {
  if (harsanyi.kind() != InteractionKind::kAnd) {
    throw InputError("Shapley quantities need AND interactions (Harsanyi dividends)");
  }
}

}  // namespace

AttributionVector shapley_values(const InteractionVector& harsanyi) {
  require_and(harsanyi);
  const int n = harsanyi.n();
  AttributionVector out{n, std::vector<double>(n, 0.0)};
  // Each dividend is shared equally among its members.
  for (std::uint64_t s = 1; s < lattice_size(n); ++s) {
    const double share = harsanyi[s] / std::popcount(s);
    for (std::uint64_t rest = s; rest != 0; rest &= rest - 1) {
      out.phi[std::countr_zero(rest)] += share;
    }
  }
  return out;
}

AttributionVector shapley_values(const ValueTable& table) {
  return shapley_values(and_interactions(table));
}

double shapley_interaction_index(const InteractionVector& harsanyi, const SubsetIndex& t) {
  require_and(harsanyi);
  if (t.n() != harsanyi.n()) throw InputError("subset and game disagree on n");
  if (t.is_empty()) throw InputError("Shapley interaction index needs a nonempty subset");
  const std::uint64_t outside = t.complement().mask();
  double sum = 0.0;
  std::uint64_t s = outside;
  for (;;) {
    sum += harsanyi[s | t.mask()] / (std::popcount(s) + 1);
    if (s == 0) break;
    s = (s - 1) & outside;
  }
  return sum;
}

double shapley_interaction_index(const ValueTable& table, const SubsetIndex& t) {
  return shapley_interaction_index(and_interactions(table), t);
}

IndexTable shapley_taylor(const ValueTable& table, int k) {
  const int n = table.n();
  if (k < 1 || k > n) {
    throw InputError("Shapley-Taylor order k must be in [1, " + std::to_string(n) + "], got " +
                     std::to_string(k));
  }
  const InteractionVector h = and_interactions(table);
  IndexTable out;
  out.kind = IndexKind::kShapleyTaylor;
  out.order = k;
  out.n = n;
  const std::uint64_t full = full_mask(n);
  for (std::uint64_t t = 0; t <= full; ++t) {
    const int size = std::popcount(t);
    if (size < k) {
      out.entries[t] = h[t];
    } else if (size == k) {
      const std::uint64_t outside = full ^ t;
      double sum = 0.0;
      std::uint64_t s = outside;
      for (;;) {
        sum += h[s | t] / binomial(std::popcount(s) + k, k);
        if (s == 0) break;
        s = (s - 1) & outside;
      }
      out.entries[t] = sum;
    }
  }
  return out;
}

json attribution_to_json(const AttributionVector& phi, const ValueTable& source) {
  json values = json::array();
  for (int i = 0; i < phi.n; ++i) {
    values.push_back({{"player", i}, {"label", source.players().at(i)}, {"phi", phi.phi[i]}});
  }
  return {{"format", "shapley"},
          {"version", 1},
          {"n", phi.n},
          {"ordering", kOrdering},
          {"source_digest", "sha256:" + table_digest(source)},
          {"values", values}};
}

json index_table_to_json(const IndexTable& table, const ValueTable& source) {
  const char* kind =
      table.kind == IndexKind::kShapleyTaylor ? "SHAPLEY_TAYLOR" : "SHAPLEY_INTERACTION";
  json records = json::array();
  for (const auto& [mask, value] : table.entries) {
    records.push_back({{"mask", mask},
                       {"members", member_labels(SubsetIndex(mask, table.n), source.players())},
                       {"kind", kind},
                       {"effect", value}});
  }
  json doc = {{"format", "index_table"},
              {"version", 1},
              {"n", table.n},
              {"ordering", kOrdering},
              {"source_digest", "sha256:" + table_digest(source)},
              {"kind", kind},
              {"records", records}};
  if (table.kind == IndexKind::kShapleyTaylor) doc["order"] = table.order;
  return doc;
}

}  // namespace ikit
