#include "ikit/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "ikit/error.hpp"

namespace ikit {

using nlohmann::json;

std::string_view to_string(InteractionKind kind) {
  return kind == InteractionKind::kAnd ? "AND" : "OR";
}

InteractionKind parse_interaction_kind(std::string_view text) {
  if (text == "AND") return InteractionKind::kAnd;
  if (text == "OR") return InteractionKind::kOr;
  throw InputError("unknown interaction kind '" + std::string(text) + "'");
}

InteractionVector and_interactions(const ValueTable& table) {
  return {InteractionKind::kAnd, mobius_transform(table.values())};
}

InteractionVector or_interactions(const ValueTable& table) {
  return {InteractionKind::kOr, apply_T_or(table.values())};
}

namespace {

void require_kind(const InteractionVector& effects, InteractionKind kind) {
  if (effects.kind() != kind) {
    throw InputError(std::string("kind mismatch: expected ") + std::string(to_string(kind)) +
                     " interactions, got " + std::string(to_string(effects.kind())));
  }
}

void require_subset_n(const InteractionVector& effects, const SubsetIndex& t) {
  if (t.n() != effects.n()) {
    throw InputError("subset has n = " + std::to_string(t.n()) + ", interactions have n = " +
                     std::to_string(effects.n()));
  }
}

}  // namespace

double and_reconstruct(const InteractionVector& effects, const SubsetIndex& t) {
  require_kind(effects, InteractionKind::kAnd);
  require_subset_n(effects, t);
  // Enumerate the submasks of T.
  const std::uint64_t top = t.mask();
  double sum = effects[0];
  for (std::uint64_t s = top; s != 0; s = (s - 1) & top) sum += effects[s];
  return sum;
}

double or_reconstruct(const InteractionVector& effects, const SubsetIndex& t) {
  require_kind(effects, InteractionKind::kOr);
  require_subset_n(effects, t);
  // Every nonempty S that misses T lies inside the complement of T.
  double total = 0.0;
  for (double x : effects.effects().values()) total += x;
  const std::uint64_t outside = t.complement().mask();
  double missed = 0.0;
  for (std::uint64_t s = outside; s != 0; s = (s - 1) & outside) missed += effects[s];
  return total - missed;
}

LatticeVector reconstruct_all(const InteractionVector& effects) {
  if (effects.kind() == InteractionKind::kAnd) return zeta_transform(effects.effects());

  std::vector<double> data = effects.effects().raw();
  const double total = std::accumulate(data.begin(), data.end(), 0.0);
  data[0] = 0.0;
  inplace::zeta(data);     // data[A] = sum of nonempty S inside A
  inplace::reflect(data);  // data[T] = sum of nonempty S inside N \ T
  for (double& x : data) x = total - x;
  return LatticeVector(effects.n(), std::move(data));
}

double faithfulness_error(const ValueTable& table, const InteractionVector& effects) {
  require_same_n(table.values(), effects.effects(), "faithfulness_error");
  const LatticeVector rebuilt = reconstruct_all(effects);
  double worst = 0.0;
  for (std::size_t t = 0; t < rebuilt.size(); ++t) {
    worst = std::max(worst, std::abs(table[t] - rebuilt[t]));
  }
  return worst;
}

bool AxiomReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed; });
}

namespace {

double relative(double deviation, const LatticeVector& game) {
  return deviation / std::max(1.0, game.norm_inf());
}

LatticeVector harsanyi(const LatticeVector& game) { return mobius_transform(game); }

std::uint64_t permute_mask(std::uint64_t mask, std::span<const int> perm) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if ((mask >> i) & 1u) out |= std::uint64_t{1} << perm[i];
  }
  return out;
}

std::uint64_t swap_bits(std::uint64_t mask, int i, int j) {
  const std::uint64_t bi = (mask >> i) & 1u;
  const std::uint64_t bj = (mask >> j) & 1u;
  if (bi == bj) return mask;
  return mask ^ ((std::uint64_t{1} << i) | (std::uint64_t{1} << j));
}

double check_efficiency(const LatticeVector& v) {
  const LatticeVector h = harsanyi(v);
  double sum = 0.0;
  for (double x : h.values()) sum += x;
  return relative(std::abs(v[v.size() - 1] - sum), v);
}

double check_linearity(const LatticeVector& v, const LatticeVector& w) {
  std::vector<double> u(v.size());
  for (std::size_t s = 0; s < u.size(); ++s) u[s] = v[s] + w[s];
  const LatticeVector uu(v.n(), std::move(u));
  const LatticeVector hu = harsanyi(uu);
  const LatticeVector hv = harsanyi(v);
  const LatticeVector hw = harsanyi(w);
  double worst = 0.0;
  for (std::size_t s = 0; s < hu.size(); ++s) {
    worst = std::max(worst, std::abs(hu[s] - hv[s] - hw[s]));
  }
  return relative(worst, uu);
}

// g(S) = v(S \ {i}) - v(empty) + c [i in S] makes player i a dummy:
// g(S + i) = g(S) + g({i}) for every S without i.
double check_dummy(const LatticeVector& v, int i, double c) {
  const std::uint64_t bit = std::uint64_t{1} << i;
  std::vector<double> g(v.size());
  for (std::size_t s = 0; s < g.size(); ++s) {
    g[s] = v[s & ~bit] - v[0] + ((s & bit) ? c : 0.0);
  }
  const LatticeVector game(v.n(), std::move(g));
  const LatticeVector h = harsanyi(game);
  double worst = std::abs(h[bit] - c);
  for (std::size_t s = 1; s < h.size(); ++s) {
    if (s & bit) continue;
    worst = std::max(worst, std::abs(h[s | bit]));
  }
  return relative(worst, game);
}

// g(S) = v(S) + v(swap_ij(S)) treats i and j identically.
double check_symmetry(const LatticeVector& v, int i, int j) {
  std::vector<double> g(v.size());
  for (std::size_t s = 0; s < g.size(); ++s) g[s] = v[s] + v[swap_bits(s, i, j)];
  const LatticeVector game(v.n(), std::move(g));
  const LatticeVector h = harsanyi(game);
  const std::uint64_t bi = std::uint64_t{1} << i;
  const std::uint64_t bj = std::uint64_t{1} << j;
  double worst = 0.0;
  for (std::size_t s = 0; s < h.size(); ++s) {
    if (s & (bi | bj)) continue;
    worst = std::max(worst, std::abs(h[s | bi] - h[s | bj]));
  }
  return relative(worst, game);
}

double check_anonymity(const LatticeVector& v, std::span<const int> perm) {
  std::vector<double> pv(v.size());
  for (std::size_t s = 0; s < v.size(); ++s) pv[permute_mask(s, perm)] = v[s];
  const LatticeVector permuted(v.n(), std::move(pv));
  const LatticeVector h = harsanyi(v);
  const LatticeVector hp = harsanyi(permuted);
  double worst = 0.0;
  for (std::size_t s = 0; s < h.size(); ++s) {
    worst = std::max(worst, std::abs(h[s] - hp[permute_mask(s, perm)]));
  }
  return relative(worst, v);
}

// I(S + i) = I(S | i always present) - I(S), where the conditional term is
// sum_{L subset of S} (-1)^{|S|-|L|} v(L + i).
double check_recursive(const LatticeVector& v, std::span<const int> players) {
  const LatticeVector h = harsanyi(v);
  double worst = 0.0;
  for (int i : players) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    std::vector<double> present(v.size());
    for (std::size_t l = 0; l < v.size(); ++l) present[l] = v[l | bit];
    inplace::mobius(present);
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (s & bit) continue;
      worst = std::max(worst, std::abs(h[s | bit] - (present[s] - h[s])));
    }
  }
  return relative(worst, v);
}

double check_distribution(int n, std::span<const std::uint64_t> contexts,
                          std::span<const double> constants) {
  double worst = 0.0;
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    const std::uint64_t t = contexts[k];
    const double c = constants[k];
    std::vector<double> g(lattice_size(n));
    for (std::size_t s = 0; s < g.size(); ++s) g[s] = ((s & t) == t) ? c : 0.0;
    const LatticeVector game(n, std::move(g));
    const LatticeVector h = harsanyi(game);
    double dev = 0.0;
    for (std::size_t s = 0; s < h.size(); ++s) {
      dev = std::max(dev, std::abs(h[s] - (s == t ? c : 0.0)));
    }
    worst = std::max(worst, relative(dev, game));
  }
  return worst;
}

}  // namespace

AxiomReport verify_axioms(const ValueTable& table, std::span<const ValueTable> aux_games,
                          std::span<const int> permutation, std::uint64_t seed) {
  const LatticeVector& v = table.values();
  const int n = table.n();
  for (const auto& aux : aux_games) require_same_n(v, aux.values(), "verify_axioms");
  if (!permutation.empty()) {
    std::vector<int> sorted(permutation.begin(), permutation.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    if (sorted != expected) {
      throw InputError("permutation must be a rearrangement of 0.." + std::to_string(n - 1));
    }
  }

  std::mt19937_64 rng(seed);
  const double amplitude = std::max(1.0, v.norm_inf());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  AxiomReport report;
  auto add = [&report](std::string name, double deviation) {
    report.checks.push_back({std::move(name), deviation, deviation <= kRelativeTolerance});
  };

  add("efficiency", check_efficiency(v));

  double linearity = 0.0;
  if (aux_games.empty()) {
    std::vector<double> w(v.size());
    for (double& x : w) x = amplitude * unit(rng);
    linearity = check_linearity(v, LatticeVector(n, std::move(w)));
  } else {
    for (const auto& aux : aux_games) {
      linearity = std::max(linearity, check_linearity(v, aux.values()));
    }
  }
  add("linearity", linearity);

  std::vector<int> players(n);
  std::iota(players.begin(), players.end(), 0);

  double dummy = 0.0;
  double symmetry = 0.0;
  if (n >= 1) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    const int i = pick(rng);
    dummy = check_dummy(v, i, 3.0);
    if (n >= 2) {
      int j = pick(rng);
      if (j == i) j = (i + 1) % n;
      symmetry = check_symmetry(v, i, j);
    }
  }
  add("dummy", dummy);
  add("symmetry", symmetry);

  std::vector<int> perm(permutation.begin(), permutation.end());
  if (perm.empty()) {
    perm = players;
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  add("anonymity", check_anonymity(v, perm));

  // Every player up to n = 12; beyond that a seeded sample keeps this O(n 2^n).
  std::vector<int> recursive_players = players;
  if (n > 12) {
    std::shuffle(recursive_players.begin(), recursive_players.end(), rng);
    recursive_players.resize(4);
  }
  add("recursive", check_recursive(v, recursive_players));

  std::vector<std::uint64_t> contexts;
  if (n <= 6) {
    for (std::uint64_t t = 0; t < lattice_size(n); ++t) contexts.push_back(t);
  } else {
    std::uniform_int_distribution<std::uint64_t> pick_mask(0, full_mask(n));
    contexts.push_back(full_mask(n));
    for (int k = 0; k < 15; ++k) contexts.push_back(pick_mask(rng));
  }
  std::vector<double> constants;
  for (std::size_t k = 0; k < contexts.size(); ++k) constants.push_back(amplitude * unit(rng));
  add("interaction_distribution", check_distribution(n, contexts, constants));

  return report;
}

std::vector<std::string> member_labels(const SubsetIndex& s,
                                       const std::vector<std::string>& players) {
  std::vector<std::string> labels;
  for (int i : s.members()) labels.push_back(players.at(i));
  return labels;
}

json subset_records(const InteractionVector& effects, const std::vector<std::string>& players) {
  std::vector<std::uint64_t> order(effects.effects().size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
    return std::abs(effects[a]) > std::abs(effects[b]);
  });
  json records = json::array();
  for (std::uint64_t mask : order) {
    records.push_back({{"mask", mask},
                       {"members", member_labels(SubsetIndex(mask, effects.n()), players)},
                       {"kind", to_string(effects.kind())},
                       {"effect", effects[mask]}});
  }
  return records;
}

json interactions_to_json(const InteractionVector& effects, const ValueTable& source) {
  require_same_n(effects.effects(), source.values(), "interactions_to_json");
  return {{"format", "interactions"},
          {"version", 1},
          {"n", source.n()},
          {"players", source.players()},
          {"ordering", kOrdering},
          {"source_digest", "sha256:" + table_digest(source)},
          {"kind", to_string(effects.kind())},
          {"records", subset_records(effects, source.players())}};
}

InteractionVector interactions_from_records(const json& records, int n, InteractionKind kind) {
  if (!records.is_array()) throw InputError("interaction records must be an array");
  std::vector<double> data(lattice_size(n), 0.0);
  for (const auto& rec : records) {
    if (!rec.is_object() || !rec.contains("mask") || !rec.contains("effect")) {
      throw InputError("interaction record needs \"mask\" and \"effect\"");
    }
    if (rec.contains("kind") && parse_interaction_kind(rec["kind"].get<std::string>()) != kind) {
      throw InputError("interaction record of the wrong kind");
    }
    const auto mask = rec["mask"].get<std::uint64_t>();
    if (mask >= data.size()) {
      throw InputError("record mask " + std::to_string(mask) + " out of range");
    }
    data[mask] = rec["effect"].get<double>();
  }
  return {kind, LatticeVector(n, std::move(data))};
}

}  // namespace ikit
