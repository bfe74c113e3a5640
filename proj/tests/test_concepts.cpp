#include "doctest.h"
#include "ikit/concepts.hpp"
#include "ikit/error.hpp"
#include "ikit/synthetic.hpp"
#include "support.hpp"

using namespace ikit;

namespace {

InteractionVector and_vec(int n, std::vector<double> v) {
  return {InteractionKind::kAnd, LatticeVector(n, std::move(v))};
}
InteractionVector or_vec(int n, std::vector<double> v) {
  return {InteractionKind::kOr, LatticeVector(n, std::move(v))};
}

}  // namespace

TEST_CASE("planted game yields exactly the planted concepts") {
  SyntheticGameSpec spec;
  spec.n = 3;
  spec.and_terms = {{0b011, 2.0}};
  spec.or_terms = {{0b110, -3.0}};
  const GeneratedGame g = generate_game(spec);
  DecomposerConfig config;
  config.tau_override = std::vector<double>(8, 0.0);
  const DecompositionResult r = decompose(g.table, config);
  const ConceptReport report = extract_salient(r, ThresholdPolicy::ratio(0.05));
  std::vector<std::pair<InteractionKind, std::uint64_t>> found;
  for (const auto& c : report.concepts) {
    if (!c.bias) found.push_back({c.kind, c.mask});
  }
  const std::vector<std::pair<InteractionKind, std::uint64_t>> expected = {
      {InteractionKind::kOr, 0b110}, {InteractionKind::kAnd, 0b011}};
  CHECK(found == expected);
  CHECK(report.noise_floor <= 1e-3);
}

TEST_CASE("threshold boundaries") {
  const auto a = and_vec(1, {0.5, -2.0});
  const auto o = or_vec(1, {0.0, 2.0});
  const ConceptReport all = extract_salient(a, o, ThresholdPolicy::ratio(0.0));
  CHECK(all.concepts.size() == 4);
  CHECK(all.coverage == 1.0);
  CHECK(all.noise_floor == 0.0);

  const ConceptReport top = extract_salient(a, o, ThresholdPolicy::ratio(1.0));
  REQUIRE(top.concepts.size() == 2);  // tie at |2| kept
  CHECK(top.concepts[0].kind == InteractionKind::kAnd);
  CHECK(top.concepts[1].kind == InteractionKind::kOr);
  CHECK(top.noise_floor == 0.5);
  CHECK(top.coverage == doctest::Approx(4.0 / 4.5));

  const ConceptReport k1 = extract_salient(a, o, ThresholdPolicy::top(3));
  REQUIRE(k1.concepts.size() == 3);
  CHECK(k1.concepts[2].bias);
  CHECK(k1.concepts[2].effect == 0.5);

  CHECK_THROWS_AS(extract_salient(a, o, ThresholdPolicy::ratio(1.5)), InputError);
  CHECK_THROWS_AS(extract_salient(a, o, ThresholdPolicy::ratio(-0.1)), InputError);
  CHECK_THROWS_AS(extract_salient(a, o, ThresholdPolicy::top(5)), InputError);
  CHECK_THROWS_AS(extract_salient(o, a, ThresholdPolicy::top(1)), InputError);
}

TEST_CASE("report invariants and scale invariance") {
  const ValueTable v = random_game(4, 1.0, 31);
  const DecompositionResult r = decompose(v);
  const ThresholdPolicy policy = ThresholdPolicy::ratio(0.2);
  const ConceptReport report = extract_salient(r, policy);
  double largest = 0.0;
  for (const auto& c : report.concepts) largest = std::max(largest, std::abs(c.effect));
  for (std::size_t i = 0; i < report.concepts.size(); ++i) {
    CHECK(std::abs(report.concepts[i].effect) >= 0.2 * largest);
    if (i) CHECK(std::abs(report.concepts[i - 1].effect) >= std::abs(report.concepts[i].effect));
  }
  CHECK(report.coverage >= 0.0);
  CHECK(report.coverage <= 1.0);

  // Scaling both effect vectors keeps the selection.
  LatticeVector a = r.and_hat.effects(), o = r.or_hat.effects();
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] *= 3.5;
    o[i] *= 3.5;
  }
  const ConceptReport scaled = extract_salient(InteractionVector(InteractionKind::kAnd, a),
                                               InteractionVector(InteractionKind::kOr, o), policy);
  REQUIRE(scaled.concepts.size() == report.concepts.size());
  for (std::size_t i = 0; i < report.concepts.size(); ++i) {
    CHECK(scaled.concepts[i].mask == report.concepts[i].mask);
    CHECK(scaled.concepts[i].kind == report.concepts[i].kind);
  }
}

TEST_CASE("text rendering") {
  const auto a = and_vec(2, {0, 0, 0, 2});
  const auto o = or_vec(2, {0, -1, 0, 0});
  const ConceptReport two = extract_salient(a, o, ThresholdPolicy::ratio(0.1), {"x", "y"});
  CHECK(render_report(two, ReportFormat::kText) ==
        "kind members effect share\n"
        "AND {x,y} 2 0.6666666666666666\n"
        "OR {x} -1 0.3333333333333333\n");
  const ConceptReport none = extract_salient(a, o, ThresholdPolicy::top(0));
  CHECK(render_report(none, ReportFormat::kText) ==
        "kind members effect share\nno salient concepts\n");
  const ConceptReport bias =
      extract_salient(and_vec(1, {3, 0}), or_vec(1, {0, 0}), ThresholdPolicy::top(1));
  CHECK(render_report(bias, ReportFormat::kText).find("bias {} 3 1\n") != std::string::npos);
}

TEST_CASE("JSON report round trip and plot CSV") {
  const ValueTable v = random_game(3, 1.0, 5);
  const ConceptReport report = extract_salient(decompose(v), ThresholdPolicy::ratio(0.05));
  const std::string text = render_report(report, ReportFormat::kJson);
  CHECK(report_from_json(nlohmann::json::parse(text)) == report);
  const ConceptReport topk = extract_salient(decompose(v), ThresholdPolicy::top(4));
  CHECK(report_from_json(nlohmann::json::parse(render_report(topk, ReportFormat::kJson))) == topk);
  const std::string csv = report_plot_csv(topk);
  CHECK(csv.rfind("rank,abs_effect\n1,", 0) == 0);
  CHECK(parse_report_format("json") == ReportFormat::kJson);
  CHECK_THROWS_AS(parse_report_format("xml"), InputError);
  CHECK_THROWS_AS(report_from_json(nlohmann::json::parse(R"({"format":"concept_report"})")),
                  InputError);
}
