#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ikit/subset_algebra.hpp"
#include "ikit/value_table.hpp"
#include "json.hpp"

namespace ikit {

enum class InteractionKind { kAnd, kOr };

std::string_view to_string(InteractionKind kind);
InteractionKind parse_interaction_kind(std::string_view text);

// One interaction effect per subset.
//   AND: v(T) = sum_{S subset of T} I(S)
//   OR:  v(T) = I(empty) + sum_{S meets T} I(S)
class InteractionVector {
 public:
  InteractionVector(InteractionKind kind, LatticeVector effects)
      : kind_(kind), effects_(std::move(effects)) {}

  InteractionKind kind() const { return kind_; }
  int n() const { return effects_.n(); }
  const LatticeVector& effects() const { return effects_; }
  double operator[](std::size_t mask) const { return effects_[mask]; }

  friend bool operator==(const InteractionVector&, const InteractionVector&) = default;

 private:
  InteractionKind kind_;
  LatticeVector effects_;
};

// Harsanyi dividends.
InteractionVector and_interactions(const ValueTable& table);
InteractionVector or_interactions(const ValueTable& table);

// Reconstruct v(T) from effects. Throw InputError on a kind mismatch.
double and_reconstruct(const InteractionVector& effects, const SubsetIndex& t);
double or_reconstruct(const InteractionVector& effects, const SubsetIndex& t);
// All 2^n reconstructions at once, dispatching on kind.
LatticeVector reconstruct_all(const InteractionVector& effects);
// max_T |v(T) - reconstruct(I, T)|
double faithfulness_error(const ValueTable& table, const InteractionVector& effects);

// Relative tolerance used by every exactness check: 1e-9 * max(1, |v|_inf).
inline constexpr double kRelativeTolerance = 1e-9;

struct AxiomCheck {
  std::string name;
  double max_deviation = 0.0;  // already divided by the game's scale
  bool passed = false;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  bool all_passed() const;
};

// Checks the seven Harsanyi-dividend axioms on `table`:
// efficiency, linearity (against each aux game, or a seeded random one when
// none are given), dummy and symmetry (on games built from `table` to satisfy
// the hypothesis), anonymity (under `permutation`, or a seeded random one when
// empty), the recursive identity, and interaction distribution on v_T games.
AxiomReport verify_axioms(const ValueTable& table, std::span<const ValueTable> aux_games,
                          std::span<const int> permutation, std::uint64_t seed);

// Standard subset-record output:
//   {"format":"interactions","version":1,"n":..,"ordering":"bitmask-lsb",
//    "source_digest":"<sha256>","kind":"AND","records":[{"mask","members",
//    "kind","effect"}, ...]}
// Records are sorted by |effect| descending, ties by ascending mask.
nlohmann::json subset_records(const InteractionVector& effects,
                              const std::vector<std::string>& players);
nlohmann::json interactions_to_json(const InteractionVector& effects, const ValueTable& source);
// Rebuilds a dense vector from records; missing masks are zero.
InteractionVector interactions_from_records(const nlohmann::json& records, int n,
                                            InteractionKind kind);

std::vector<std::string> member_labels(const SubsetIndex& s,
                                       const std::vector<std::string>& players);

}  // namespace ikit
