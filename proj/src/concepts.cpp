#include "ikit/concepts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "ikit/error.hpp"

namespace ikit {

using nlohmann::json;

ThresholdPolicy ThresholdPolicy::ratio(double theta) {
  ThresholdPolicy p;
  p.rule = Rule::kRatio;
  p.theta = theta;
  return p;
}

ThresholdPolicy ThresholdPolicy::top(std::uint64_t k) {
  ThresholdPolicy p;
  p.rule = Rule::kTopK;
  p.top_k = k;
  return p;
}

namespace {

std::string number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

bool before(const Concept& l, const Concept& r) {
  const double al = std::abs(l.effect), ar = std::abs(r.effect);
  if (al != ar) return al > ar;
  if (l.kind != r.kind) return l.kind == InteractionKind::kAnd;
  return l.mask < r.mask;
}

}  // namespace

ConceptReport extract_salient(const InteractionVector& and_effects,
                              const InteractionVector& or_effects, const ThresholdPolicy& policy,
                              std::vector<std::string> players) {
  if (and_effects.kind() != InteractionKind::kAnd || or_effects.kind() != InteractionKind::kOr) {
    throw InputError("extract_salient expects an AND vector and an OR vector");
  }
  const int n = and_effects.n();
  if (or_effects.n() != n) throw InputError("AND and OR vectors disagree on n");
  const std::uint64_t size = lattice_size(n);
  if (policy.rule == ThresholdPolicy::Rule::kRatio &&
      !(policy.theta >= 0.0 && policy.theta <= 1.0)) {
    throw InputError("theta must be in [0, 1], got " + number(policy.theta));
  }
  if (policy.rule == ThresholdPolicy::Rule::kTopK && policy.top_k > 2 * size) {
    throw InputError("top-k must be at most 2^(n+1) = " + std::to_string(2 * size) + ", got " +
                     std::to_string(policy.top_k));
  }
  if (players.empty()) players = default_player_labels(n);
  if (static_cast<int>(players.size()) != n) throw InputError("player label count must equal n");

  std::vector<Concept> all;
  all.reserve(2 * size);
  double total = 0.0, largest = 0.0;
  for (const auto* vec : {&and_effects, &or_effects}) {
    for (std::uint64_t s = 0; s < size; ++s) {
      const double e = (*vec)[s];
      all.push_back({s, vec->kind(), e, 0.0, s == 0});
      total += std::abs(e);
      largest = std::max(largest, std::abs(e));
    }
  }
  for (auto& c : all) c.share = total > 0.0 ? std::abs(c.effect) / total : 0.0;
  std::sort(all.begin(), all.end(), before);

  std::size_t keep = 0;
  if (policy.rule == ThresholdPolicy::Rule::kRatio) {
    const double cut = policy.theta * largest;
    while (keep < all.size() && std::abs(all[keep].effect) >= cut) ++keep;
  } else {
    keep = static_cast<std::size_t>(policy.top_k);
  }

  ConceptReport report;
  report.n = n;
  report.players = std::move(players);
  report.policy = policy;
  double kept = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept += std::abs(all[i].effect);
  report.coverage = total > 0.0 ? kept / total : 1.0;
  report.noise_floor = keep < all.size() ? std::abs(all[keep].effect) : 0.0;
  all.resize(keep);
  report.concepts = std::move(all);
  return report;
}

ConceptReport extract_salient(const DecompositionResult& result, const ThresholdPolicy& policy,
                              std::vector<std::string> players) {
  return extract_salient(result.and_hat, result.or_hat, policy, std::move(players));
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::kText;
  if (text == "json") return ReportFormat::kJson;
  throw InputError("unknown report format '" + std::string(text) + "' (expected text or json)");
}

namespace {

json policy_to_json(const ThresholdPolicy& p) {
  if (p.rule == ThresholdPolicy::Rule::kRatio) return {{"rule", "ratio"}, {"theta", p.theta}};
  return {{"rule", "top_k"}, {"k", p.top_k}};
}

ThresholdPolicy policy_from_json(const json& doc) {
  const std::string rule = doc.at("rule").get<std::string>();
  if (rule == "ratio") return ThresholdPolicy::ratio(doc.at("theta").get<double>());
  if (rule == "top_k") return ThresholdPolicy::top(doc.at("k").get<std::uint64_t>());
  throw InputError("unknown threshold rule '" + rule + "'");
}

std::string braced(const std::vector<std::string>& labels) {
  std::string out = "{";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ',';
    out += labels[i];
  }
  return out + "}";
}

}  // namespace

std::string render_report(const ConceptReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json concepts = json::array();
    for (const auto& c : report.concepts) {
      concepts.push_back({{"mask", c.mask},
                          {"members", member_labels(SubsetIndex(c.mask, report.n), report.players)},
                          {"kind", to_string(c.kind)},
                          {"effect", c.effect},
                          {"share", c.share},
                          {"bias", c.bias}});
    }
    const json doc = {{"format", "concept_report"},
                      {"version", 1},
                      {"n", report.n},
                      {"players", report.players},
                      {"ordering", kOrdering},
                      {"policy", policy_to_json(report.policy)},
                      {"noise_floor", report.noise_floor},
                      {"coverage", report.coverage},
                      {"concepts", concepts}};
    return doc.dump(2) + "\n";
  }
  std::string out = "kind members effect share\n";
  if (report.concepts.empty()) return out + "no salient concepts\n";
  for (const auto& c : report.concepts) {
    out += c.bias ? std::string("bias") : std::string(to_string(c.kind));
    out += ' ';
    out += braced(member_labels(SubsetIndex(c.mask, report.n), report.players));
    out += ' ';
    out += number(c.effect);
    out += ' ';
    out += number(c.share);
    out += '\n';
  }
  return out;
}

ConceptReport report_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "concept_report") {
      throw InputError("not a concept report (\"format\" must be \"concept_report\")");
    }
    ConceptReport report;
    report.n = doc.at("n").get<int>();
    check_lattice_size(report.n);
    report.players = doc.at("players").get<std::vector<std::string>>();
    report.policy = policy_from_json(doc.at("policy"));
    report.noise_floor = doc.at("noise_floor").get<double>();
    report.coverage = doc.at("coverage").get<double>();
    for (const auto& item : doc.at("concepts")) {
      Concept c;
      c.mask = item.at("mask").get<std::uint64_t>();
      SubsetIndex(c.mask, report.n);
      c.kind = parse_interaction_kind(item.at("kind").get<std::string>());
      c.effect = item.at("effect").get<double>();
      c.share = item.at("share").get<double>();
      c.bias = item.at("bias").get<bool>();
      report.concepts.push_back(c);
    }
    return report;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed concept report: ") + e.what());
  }
}

std::string report_plot_csv(const ConceptReport& report) {
  std::string out = "rank,abs_effect\n";
  for (std::size_t i = 0; i < report.concepts.size(); ++i) {
    out += std::to_string(i + 1) + ',' + number(std::abs(report.concepts[i].effect)) + '\n';
  }
  return out;
}

}  // namespace ikit
