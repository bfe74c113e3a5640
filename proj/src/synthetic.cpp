#include "ikit/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ikit/error.hpp"

namespace ikit {

using nlohmann::json;

double GeneratedGame::planted_l1() const {
  return and_truth.effects().norm_l1() + or_truth.effects().norm_l1();
}

namespace {

void validate(const SyntheticGameSpec& spec) {
  check_lattice_size(spec.n);
  const std::uint64_t limit = lattice_size(spec.n);
  for (const auto& term : spec.and_terms) {
    if (term.mask >= limit) {
      throw InputError("AND term mask " + std::to_string(term.mask) + " out of range");
    }
  }
  for (const auto& term : spec.or_terms) {
    if (term.mask >= limit) {
      throw InputError("OR term mask " + std::to_string(term.mask) + " out of range");
    }
    if (term.mask == 0) throw InputError("OR terms must be nonempty (use bias instead)");
  }
  if (!(spec.noise_amp >= 0.0)) throw InputError("noise_amp must be non-negative");
}

}  // namespace

GeneratedGame generate_game(const SyntheticGameSpec& spec) {
  validate(spec);
  const std::size_t size = lattice_size(spec.n);
  std::vector<double> and_truth(size, 0.0);
  std::vector<double> or_truth(size, 0.0);
  and_truth[0] = spec.bias;
  for (const auto& term : spec.and_terms) and_truth[term.mask] += term.effect;
  for (const auto& term : spec.or_terms) or_truth[term.mask] += term.effect;

  std::vector<double> values(size, spec.bias);
  for (std::uint64_t t = 0; t < size; ++t) {
    for (const auto& term : spec.and_terms) {
      if ((term.mask & t) == term.mask) values[t] += term.effect;
    }
    for (const auto& term : spec.or_terms) {
      if ((term.mask & t) != 0) values[t] += term.effect;
    }
  }
  if (spec.noise_amp > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double& x : values) x += spec.noise_amp * unit(rng);
  }
  return {ValueTable(LatticeVector(spec.n, std::move(values))),
          InteractionVector(InteractionKind::kAnd, LatticeVector(spec.n, std::move(and_truth))),
          InteractionVector(InteractionKind::kOr, LatticeVector(spec.n, std::move(or_truth)))};
}

ValueTable random_game(int n, double amplitude, std::uint64_t seed) {
  check_lattice_size(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> values(lattice_size(n));
  for (double& x : values) x = amplitude * unit(rng);
  return ValueTable(LatticeVector(n, std::move(values)));
}

namespace {

std::vector<PlantedTerm> terms_from_json(const json& arr, int n, const char* field) {
  std::vector<PlantedTerm> terms;
  if (arr.is_null()) return terms;
  if (!arr.is_array()) throw InputError(std::string("\"") + field + "\" must be an array");
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("effect")) {
      throw InputError(std::string("each entry of \"") + field + "\" needs an \"effect\"");
    }
    PlantedTerm term;
    term.effect = item["effect"].get<double>();
    if (item.contains("mask")) {
      term.mask = item["mask"].get<std::uint64_t>();
    } else if (item.contains("members")) {
      const auto members = item["members"].get<std::vector<int>>();
      term.mask = SubsetIndex::from_members(members, n).mask();
    } else {
      throw InputError(std::string("each entry of \"") + field +
                       "\" needs \"mask\" or \"members\"");
    }
    terms.push_back(term);
  }
  return terms;
}

json terms_to_json(const std::vector<PlantedTerm>& terms) {
  json arr = json::array();
  for (const auto& t : terms) arr.push_back({{"mask", t.mask}, {"effect", t.effect}});
  return arr;
}

}  // namespace

SyntheticGameSpec synthetic_spec_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("n") || !doc["n"].is_number_integer()) {
    throw InputError("synthetic spec needs an integer \"n\"");
  }
  SyntheticGameSpec spec;
  spec.n = doc["n"].get<int>();
  check_lattice_size(spec.n);
  spec.and_terms = terms_from_json(doc.value("and_terms", json()), spec.n, "and_terms");
  spec.or_terms = terms_from_json(doc.value("or_terms", json()), spec.n, "or_terms");
  spec.bias = doc.value("bias", 0.0);
  spec.noise_amp = doc.value("noise_amp", 0.0);
  spec.seed = doc.value("seed", std::uint64_t{0});
  validate(spec);
  return spec;
}

json synthetic_spec_to_json(const SyntheticGameSpec& spec) {
  return {{"n", spec.n},
          {"and_terms", terms_to_json(spec.and_terms)},
          {"or_terms", terms_to_json(spec.or_terms)},
          {"bias", spec.bias},
          {"noise_amp", spec.noise_amp},
          {"seed", spec.seed}};
}

namespace oracle {

namespace {

void guard(int n) {
  if (n > kMaxOracleN) {
    throw InputError("brute-force oracle limited to n <= " + std::to_string(kMaxOracleN) +
                     ", got n = " + std::to_string(n));
  }
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double sign_of(int exponent) { return (exponent % 2 == 0) ? 1.0 : -1.0; }

double factorial(int m) {
  double f = 1.0;
  for (int j = 2; j <= m; ++j) f *= j;
  return f;
}

bool is_subset(std::uint64_t a, std::uint64_t b) { return (a & ~b) == 0; }

}  // namespace

InteractionVector brute_force_and(const ValueTable& table) {
  const int n = table.n();
  guard(n);
  const std::uint64_t size = lattice_size(n);
  std::vector<double> out(size);
  std::vector<double> terms;
  for (std::uint64_t s = 0; s < size; ++s) {
    terms.clear();
    for (std::uint64_t l = 0; l < size; ++l) {
      if (!is_subset(l, s)) continue;
      terms.push_back(sign_of(std::popcount(s) - std::popcount(l)) * table[l]);
    }
    out[s] = pairwise_sum(terms);
  }
  return {InteractionKind::kAnd, LatticeVector(n, std::move(out))};
}

InteractionVector brute_force_or(const ValueTable& table) {
  const int n = table.n();
  guard(n);
  const std::uint64_t size = lattice_size(n);
  const std::uint64_t full = size - 1;
  std::vector<double> out(size);
  out[0] = table[0];
  std::vector<double> terms;
  for (std::uint64_t s = 1; s < size; ++s) {
    terms.clear();
    for (std::uint64_t l = 0; l < size; ++l) {
      if (!is_subset(l, s)) continue;
      terms.push_back(sign_of(std::popcount(s) - std::popcount(l)) * table[full & ~l]);
    }
    out[s] = -pairwise_sum(terms);
  }
  return {InteractionKind::kOr, LatticeVector(n, std::move(out))};
}

std::vector<double> dense_T_and(int n) {
  check_lattice_size(n);
  const std::uint64_t size = lattice_size(n);
  std::vector<double> m(size * size, 0.0);
  for (std::uint64_t s = 0; s < size; ++s) {
    for (std::uint64_t l = 0; l < size; ++l) {
      if (is_subset(l, s)) m[s * size + l] = sign_of(std::popcount(s) - std::popcount(l));
    }
  }
  return m;
}

std::vector<double> dense_T_or(int n) {
  check_lattice_size(n);
  const std::uint64_t size = lattice_size(n);
  const std::uint64_t full = size - 1;
  std::vector<double> m(size * size, 0.0);
  m[0] = 1.0;
  for (std::uint64_t s = 1; s < size; ++s) {
    for (std::uint64_t l = 0; l < size; ++l) {
      if (is_subset(l, s)) {
        m[s * size + (full & ~l)] = -sign_of(std::popcount(s) - std::popcount(l));
      }
    }
  }
  return m;
}

std::vector<double> dense_apply(const std::vector<double>& matrix, std::span<const double> x) {
  const std::size_t size = x.size();
  std::vector<double> y(size, 0.0);
  for (std::size_t r = 0; r < size; ++r) {
    const double* row = matrix.data() + r * size;
    double acc = 0.0;
    for (std::size_t c = 0; c < size; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> dense_apply_transpose(const std::vector<double>& matrix,
                                          std::span<const double> x) {
  const std::size_t size = x.size();
  std::vector<double> y(size, 0.0);
  for (std::size_t r = 0; r < size; ++r) {
    const double* row = matrix.data() + r * size;
    for (std::size_t c = 0; c < size; ++c) y[c] += row[c] * x[r];
  }
  return y;
}

AttributionVector shapley_by_permutations(const ValueTable& table) {
  const int n = table.n();
  if (n > 10) throw InputError("permutation oracle limited to n <= 10");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> marginals(n);
  do {
    std::uint64_t present = 0;
    for (int player : order) {
      const std::uint64_t next = present | (std::uint64_t{1} << player);
      marginals[player].push_back(table[next] - table[present]);
      present = next;
    }
  } while (std::next_permutation(order.begin(), order.end()));

  AttributionVector out{n, std::vector<double>(n, 0.0)};
  for (int i = 0; i < n; ++i) {
    out.phi[i] = pairwise_sum(marginals[i]) / static_cast<double>(marginals[i].size());
  }
  return out;
}

double shapley_interaction_direct(const ValueTable& table, std::uint64_t t) {
  const int n = table.n();
  guard(n);
  const std::uint64_t size = lattice_size(n);
  const int t_size = std::popcount(t);
  std::vector<double> terms;
  for (std::uint64_t s = 0; s < size; ++s) {
    if (s & t) continue;
    const int s_size = std::popcount(s);
    std::vector<double> derivative;
    for (std::uint64_t l = 0; l < size; ++l) {
      if (!is_subset(l, t)) continue;
      derivative.push_back(sign_of(t_size - std::popcount(l)) * table[s | l]);
    }
    const double weight =
        factorial(s_size) * factorial(n - s_size - t_size) / factorial(n - t_size + 1);
    terms.push_back(weight * pairwise_sum(derivative));
  }
  return pairwise_sum(terms);
}

IndexTable shapley_taylor_direct(const ValueTable& table, int k) {
  const int n = table.n();
  guard(n);
  const InteractionVector h = brute_force_and(table);
  const std::uint64_t size = lattice_size(n);
  IndexTable out;
  out.kind = IndexKind::kShapleyTaylor;
  out.order = k;
  out.n = n;
  for (std::uint64_t t = 0; t < size; ++t) {
    const int t_size = std::popcount(t);
    if (t_size < k) {
      out.entries[t] = h[t];
    } else if (t_size == k) {
      std::vector<double> terms;
      for (std::uint64_t s = 0; s < size; ++s) {
        if (s & t) continue;
        const int s_size = std::popcount(s);
        const double choose = factorial(s_size + k) / (factorial(k) * factorial(s_size));
        terms.push_back(h[s | t] / choose);
      }
      out.entries[t] = pairwise_sum(terms);
    }
  }
  return out;
}

}  // namespace oracle

}  // namespace ikit
