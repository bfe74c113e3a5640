#pragma once

// Salient / noisy split of decomposition results.

#include <cstdint>
#include <string>
#include <vector>

#include "ikit/decomposer.hpp"
#include "json.hpp"

namespace ikit {

inline constexpr double kDefaultSalienceRatio = 0.05;

struct ThresholdPolicy {
  enum class Rule { kRatio, kTopK };

  Rule rule = Rule::kRatio;
  double theta = kDefaultSalienceRatio;  // ratio rule
  std::uint64_t top_k = 0;               // top-k rule

  static ThresholdPolicy ratio(double theta);
  static ThresholdPolicy top(std::uint64_t k);

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;
};

struct Concept {
  std::uint64_t mask = 0;
  InteractionKind kind = InteractionKind::kAnd;
  double effect = 0.0;
  double share = 0.0;  // |effect| / sum of all |effects|
  bool bias = false;   // empty-set term

  friend bool operator==(const Concept&, const Concept&) = default;
};

struct ConceptReport {
  int n = 0;
  std::vector<std::string> players;
  // Sorted by |effect| descending; ties AND before OR, then ascending mask.
  std::vector<Concept> concepts;
  // Largest |effect| among the entries that were not selected (0 if none).
  double noise_floor = 0.0;
  // sum_salient |I| / sum_all |I|; 1 when every effect is zero.
  double coverage = 1.0;
  ThresholdPolicy policy;

  friend bool operator==(const ConceptReport&, const ConceptReport&) = default;
};

// Ratio rule: keep |I(S)| >= theta * max |I| over both vectors (ties kept).
// Top-k rule: keep the k largest. Throws InputError for theta outside [0, 1]
// or k > 2^(n+1).
ConceptReport extract_salient(const InteractionVector& and_effects,
                              const InteractionVector& or_effects, const ThresholdPolicy& policy,
                              std::vector<std::string> players = {});
ConceptReport extract_salient(const DecompositionResult& result, const ThresholdPolicy& policy,
                              std::vector<std::string> players = {});

enum class ReportFormat { kText, kJson };
ReportFormat parse_report_format(std::string_view text);

// Text: a "kind members effect share" header, then one line per concept
// ("no salient concepts" when empty). JSON mirrors ConceptReport.
std::string render_report(const ConceptReport& report, ReportFormat format);
ConceptReport report_from_json(const nlohmann::json& doc);
// "rank,abs_effect" rows for plotting the magnitude decay.
std::string report_plot_csv(const ConceptReport& report);

}  // namespace ikit
