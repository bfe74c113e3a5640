#include <random>

#include "doctest.h"
#include "ikit/decomposer.hpp"
#include "ikit/error.hpp"
#include "ikit/synthetic.hpp"
#include "support.hpp"

using namespace ikit;
using ikit::testing::max_abs_diff;
using ikit::testing::table_of;

namespace {

// Dense reference for the objective, built from brute-force transforms.
double reference_objective(const ValueTable& v, const LatticeVector& p, const LatticeVector& eps) {
  std::vector<double> and_game(v.values().size()), or_game(v.values().size());
  for (std::size_t i = 0; i < and_game.size(); ++i) {
    and_game[i] = 0.5 * (v[i] + eps[i]) + p[i];
    or_game[i] = 0.5 * (v[i] + eps[i]) - p[i];
  }
  const int n = v.n();
  return oracle::brute_force_and(table_of(n, and_game)).effects().norm_l1() +
         oracle::brute_force_or(table_of(n, or_game)).effects().norm_l1();
}

const SolverKind kAllSolvers[] = {SolverKind::kInteriorPoint, SolverKind::kPrimalDual,
                                  SolverKind::kSubgradient};

}  // namespace

TEST_CASE("tau bounds") {
  const ValueTable v = table_of(2, {1, 1, 2, -3});
  CHECK(tau_bounds(v).raw() == std::vector<double>(4, 0.2));
  DecomposerConfig config;
  config.tau_ratio = 0.5;
  CHECK(tau_bounds(v, config)[3] == 2.0);
  config.tau_override = std::vector<double>{0, 1, 2, 3};
  CHECK(tau_bounds(v, config).raw() == std::vector<double>{0, 1, 2, 3});
  config.tau_override = std::vector<double>{0, 1};
  CHECK_THROWS_AS(tau_bounds(v, config), InputError);
}

TEST_CASE("config validation") {
  DecomposerConfig config;
  config.tau_ratio = -0.1;
  CHECK_THROWS_AS(config.validate(), InputError);
  config = {};
  config.step_size = 0.0;
  CHECK_THROWS_AS(config.validate(), InputError);
  config = {};
  config.max_iters = 0;
  CHECK_THROWS_AS(config.validate(), InputError);
  config = {};
  config.tau_override = std::vector<double>{-1.0};
  CHECK_THROWS_AS(config.validate(), InputError);
  CHECK(parse_solver_kind("primal-dual") == SolverKind::kPrimalDual);
  CHECK_THROWS_AS(parse_solver_kind("simplex"), InputError);
  CHECK(parse_step_decay("constant") == StepDecay::kConstant);
}

TEST_CASE("objective examples") {
  const ValueTable zero = table_of(2, {0, 0, 0, 0});
  CHECK(objective(zero, LatticeVector(2), LatticeVector(2)) == 0.0);

  const ValueTable v = table_of(2, {0, 1, 2, 5});
  const auto [a, o] = and_or_parts(v, LatticeVector(2), LatticeVector(2));
  CHECK(a.raw() == std::vector<double>{0, 0.5, 1, 1});
  CHECK(o.raw() == std::vector<double>{0, 1.5, 2, -1});
  CHECK(objective(v, LatticeVector(2), LatticeVector(2)) == 7.0);

  // p = v/2 puts the whole game on the AND side.
  LatticeVector half(2, {0, 0.5, 1, 2.5});
  CHECK(objective(v, half, LatticeVector(2)) == 5.0);
  CHECK(objective(v, half, LatticeVector(2)) == reference_objective(v, half, LatticeVector(2)));

  CHECK_THROWS_AS(objective(v, LatticeVector(2), LatticeVector(2, {0, 0, 0, 0.3})), InputError);
}

TEST_CASE("objective matches the brute-force reference") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1, 1);
  for (int n = 1; n <= 6; ++n) {
    const ValueTable v = random_game(n, 2.0, 1000 + n);
    const LatticeVector tau = tau_bounds(v);
    std::vector<double> p(lattice_size(n)), e(lattice_size(n));
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = unit(rng);
      e[i] = tau[i] * unit(rng);
    }
    const LatticeVector pv(n, p), ev(n, e);
    CHECK(std::abs(objective(v, pv, ev) - reference_objective(v, pv, ev)) <= 1e-10);
  }
}

TEST_CASE("subgradient of the zero game at the origin is zero") {
  const Subgradient g = subgradient(table_of(2, {0, 0, 0, 0}), LatticeVector(2), LatticeVector(2));
  CHECK(g.p.norm_inf() == 0.0);
  CHECK(g.epsilon.norm_inf() == 0.0);
}

TEST_CASE("subgradient matches central differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1, 1);
  for (int n = 1; n <= 6; ++n) {
    const ValueTable v = random_game(n, 3.0, 1100 + n);
    const LatticeVector tau = tau_bounds(v);
    const std::size_t size = lattice_size(n);
    for (int point = 0; point < 5; ++point) {
      LatticeVector p(n), e(n);
      for (std::size_t i = 0; i < size; ++i) {
        p[i] = unit(rng);
        e[i] = 0.5 * tau[i] * unit(rng);
      }
      const Subgradient g = subgradient(v, p, e);
      const double h = 1e-6 * v.scale();
      double err = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        LatticeVector hi = p, lo = p;
        hi[i] += h;
        lo[i] -= h;
        const double fd_p = (objective(v, hi, e) - objective(v, lo, e)) / (2 * h);
        LatticeVector ehi = e, elo = e;
        ehi[i] += h;
        elo[i] -= h;
        const double fd_e = (objective(v, p, ehi) - objective(v, p, elo)) / (2 * h);
        err = std::max({err, std::abs(fd_p - g.p[i]), std::abs(fd_e - g.epsilon[i])});
        norm = std::max({norm, std::abs(g.p[i]), std::abs(g.epsilon[i])});
      }
      CHECK(err <= 1e-5 * std::max(norm, 1.0));
      // Descent along -g.
      LatticeVector stepped = p;
      const double t = 1e-8;
      for (std::size_t i = 0; i < size; ++i) stepped[i] -= t * g.p[i];
      CHECK(objective(v, stepped, e) <= objective(v, p, e) + 1e-12);
    }
  }
}

TEST_CASE("zero game decomposes to nothing") {
  const ValueTable zero = table_of(3, std::vector<double>(8, 0.0));
  for (SolverKind solver : kAllSolvers) {
    DecomposerConfig config;
    config.solver = solver;
    const DecompositionResult r = decompose(zero, config);
    CHECK(r.final_objective == 0.0);
    CHECK(r.and_hat.effects().norm_inf() == 0.0);
    CHECK(r.or_hat.effects().norm_inf() == 0.0);
    CHECK(r.converged);
  }
}

TEST_CASE("planted three-player game reaches the planted objective") {
  SyntheticGameSpec spec;
  spec.n = 3;
  spec.and_terms = {{0b011, 2.0}};
  spec.or_terms = {{0b110, -3.0}};
  const GeneratedGame g = generate_game(spec);
  const DecompositionResult r = decompose(g.table);
  CHECK(r.solver == SolverKind::kInteriorPoint);
  CHECK(r.final_objective <= 5.0 + 1e-3);
  CHECK(mixed_faithfulness_error(g.table, r) <= 0.05 * 1.0 + 1e-12);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(r.epsilon[i]) <= r.tau[i]);
  // The best iterate is what gets reported.
  double best = r.objective_trace.front().objective;
  for (const auto& t : r.objective_trace) best = std::min(best, t.objective);
  CHECK(best == doctest::Approx(r.final_objective).epsilon(1e-12));
}

TEST_CASE("pure AND game") {
  std::vector<double> vt(8);
  for (std::uint64_t s = 0; s < 8; ++s) vt[s] = (s & 3) == 3 ? 4.0 : 0.0;
  for (SolverKind solver : {SolverKind::kInteriorPoint, SolverKind::kPrimalDual}) {
    DecomposerConfig config;
    config.solver = solver;
    const DecompositionResult r = decompose(table_of(3, vt), config);
    CHECK(r.final_objective <= 4.0 + 1e-3);
  }
}

TEST_CASE("every solver respects the tau bound and improves on the start") {
  const GeneratedGame g = ikit::testing::planted_game(5, 3);
  const double start = objective(g.table, LatticeVector(5), LatticeVector(5));
  for (SolverKind solver : kAllSolvers) {
    DecomposerConfig config;
    config.solver = solver;
    config.max_iters = 3000;
    const DecompositionResult r = decompose(g.table, config);
    INFO(to_string(solver));
    CHECK(r.final_objective <= start);
    CHECK(mixed_faithfulness_error(g.table, r) <= r.tau.norm_inf() * (1 + 1e-9));
    CHECK(r.iterations <= config.max_iters);
    CHECK(r.objective_trace.size() == static_cast<std::size_t>(r.iterations));
    const auto [a, o] = and_or_parts(g.table, r.p, r.epsilon);
    CHECK(a == r.and_hat.effects());
    CHECK(o == r.or_hat.effects());
  }
}

TEST_CASE("interior point beats the planted split on planted games") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GeneratedGame g = ikit::testing::planted_game(6, seed);
    const DecompositionResult r = decompose(g.table);
    CHECK(r.final_objective <= g.planted_l1() + 1e-3);
  }
}

TEST_CASE("subgradient step options") {
  const GeneratedGame g = ikit::testing::planted_game(4, 8);
  DecomposerConfig config;
  config.solver = SolverKind::kSubgradient;
  config.max_iters = 50;
  config.step_size = 0.05;
  config.step_decay = StepDecay::kConstant;
  const DecompositionResult r = decompose(g.table, config);
  CHECK(r.iterations <= 50);
  CHECK(r.final_objective <= objective(g.table, LatticeVector(4), LatticeVector(4)));
}

TEST_CASE("interior point refuses large n") {
  DecomposerConfig config;
  config.solver = SolverKind::kInteriorPoint;
  CHECK_THROWS_AS(decompose(random_game(kInteriorPointMaxN + 1, 1.0, 0), config), InputError);
}

TEST_CASE("mixed faithfulness") {
  const ValueTable v = random_game(4, 1.0, 21);
  // eps = 0 makes the split exact.
  DecompositionResult exact = decompose(v);
  LatticeVector p = exact.p;
  const auto [a, o] = and_or_parts(v, p, LatticeVector(4));
  exact.and_hat = InteractionVector(InteractionKind::kAnd, a);
  exact.or_hat = InteractionVector(InteractionKind::kOr, o);
  CHECK(mixed_faithfulness_error(v, exact) <= 1e-9 * v.scale());

  // Dropping the AND half leaves at least its reconstruction as error.
  DecompositionResult broken = exact;
  broken.and_hat = InteractionVector(InteractionKind::kAnd, LatticeVector(4));
  const LatticeVector lost = zeta_transform(a);
  CHECK(mixed_faithfulness_error(v, broken) >= lost.norm_inf() - 1e-9);
}

TEST_CASE("result JSON round trip and determinism") {
  const GeneratedGame g = ikit::testing::planted_game(4, 2);
  DecomposerConfig config;
  config.seed = 99;
  const DecompositionResult r = decompose(g.table, config);
  const nlohmann::json doc = result_to_json(r, g.table, config);
  CHECK(doc["format"] == "decomposition");
  CHECK(doc["config"]["seed"] == 99);
  CHECK(doc["solver"] == "interior-point");
  CHECK(doc.dump() == result_to_json(decompose(g.table, config), g.table, config).dump());
  for (SolverKind solver : kAllSolvers) {
    DecomposerConfig c;
    c.solver = solver;
    c.max_iters = 2000;
    CHECK(trace_to_csv(decompose(g.table, c)) == trace_to_csv(decompose(g.table, c)));
  }
  const DecompositionResult back = result_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back.and_hat == r.and_hat);
  CHECK(back.or_hat == r.or_hat);
  CHECK(back.p == r.p);
  CHECK(back.epsilon == r.epsilon);
  CHECK(back.final_objective == r.final_objective);
  CHECK(result_players(doc) == g.table.players());
  CHECK_THROWS_AS(result_from_json(nlohmann::json::parse(R"({"format":"x"})")), InputError);
  CHECK_THROWS_AS(result_from_json(nlohmann::json::parse(R"({"format":"decomposition"})")),
                  InputError);
}

TEST_CASE("trace CSV") {
  DecompositionResult r = decompose(table_of(1, {0, 1}));
  const std::string csv = trace_to_csv(r);
  CHECK(csv.rfind("iteration,objective\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == r.objective_trace.size() + 1);
}
