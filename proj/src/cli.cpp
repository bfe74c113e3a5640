#include "ikit/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "ikit/bench.hpp"
#include "ikit/concepts.hpp"
#include "ikit/decomposer.hpp"
#include "ikit/error.hpp"
#include "ikit/game_theory.hpp"
#include "ikit/interactions.hpp"
#include "ikit/synthetic.hpp"
#include "ikit/value_table.hpp"

namespace ikit {

using nlohmann::json;

namespace {

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot write '" + path + "'");
  file << text;
  if (!file.flush()) throw InputError("failed writing '" + path + "'");
}

void write_json(const std::string& path, const json& doc, std::ostream& fallback) {
  write_text(path, doc.dump(2) + "\n", fallback);
}

json read_json(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(file);
  } catch (const json::parse_error& e) {
    throw InputError("malformed JSON in '" + path + "': " + e.what());
  }
}

ValueTable read_table(const std::string& path) {
  try {
    return load_value_table_file(path);
  } catch (const InputError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

void guard_faithful(const ValueTable& table, const InteractionVector& effects) {
  const double error = faithfulness_error(table, effects);
  if (!(error <= kRelativeTolerance * table.scale())) {
    std::ostringstream msg;
    msg << to_string(effects.kind()) << " reconstruction error " << error
        << " exceeds tolerance " << kRelativeTolerance * table.scale();
    throw GuardError(msg.str());
  }
}

struct Options {
  std::string in, out, spec, cmd, trace, truth, plot_csv, format = "text", solver = "auto";
  std::string step_decay = "1/sqrt(t)", players;
  int k = 2, n = 0, max_iters = DecomposerConfig{}.max_iters, dense_n = 12, repeats = 3;
  double tau_ratio = DecomposerConfig{}.tau_ratio, theta = kDefaultSalienceRatio;
  std::optional<double> step;
  std::optional<std::uint64_t> top_k;
  std::uint64_t seed = 0;
  long timeout_ms = 30000;
};

std::vector<std::string> split_labels(const std::string& text) {
  std::vector<std::string> labels;
  if (text.empty()) return labels;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) labels.push_back(item);
  return labels;
}

int cmd_interactions(const Options& o, InteractionKind kind, std::ostream& out) {
  const ValueTable table = read_table(o.in);
  const InteractionVector effects =
      kind == InteractionKind::kAnd ? and_interactions(table) : or_interactions(table);
  guard_faithful(table, effects);
  write_json(o.out, interactions_to_json(effects, table), out);
  return kExitOk;
}

int cmd_shapley(const Options& o, std::ostream& out) {
  const ValueTable table = read_table(o.in);
  const InteractionVector h = and_interactions(table);
  guard_faithful(table, h);
  write_json(o.out, attribution_to_json(shapley_values(h), table), out);
  return kExitOk;
}

int cmd_taylor(const Options& o, std::ostream& out) {
  const ValueTable table = read_table(o.in);
  const IndexTable index = shapley_taylor(table, o.k);
  double total = 0.0;
  for (const auto& [mask, value] : index.entries) total += value;
  const double full_value = table[lattice_size(table.n()) - 1];
  if (!(std::abs(total - full_value) <= kRelativeTolerance * table.scale())) {
    throw GuardError("Shapley-Taylor entries do not sum to v(N)");
  }
  write_json(o.out, index_table_to_json(index, table), out);
  return kExitOk;
}

int cmd_decompose(const Options& o, std::ostream& out) {
  const ValueTable table = read_table(o.in);
  DecomposerConfig config;
  config.solver = parse_solver_kind(o.solver);
  config.max_iters = o.max_iters;
  config.step_size = o.step;
  config.step_decay = parse_step_decay(o.step_decay);
  config.tau_ratio = o.tau_ratio;
  config.seed = o.seed;
  const DecompositionResult result = decompose(table, config);
  const double mixed = mixed_faithfulness_error(table, result);
  if (!(mixed <= result.tau.norm_inf() + kRelativeTolerance * table.scale())) {
    throw GuardError("mixed reconstruction error exceeds the tau bound");
  }
  write_json(o.out, result_to_json(result, table, config), out);
  if (!o.trace.empty()) write_text(o.trace, trace_to_csv(result), out);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const json doc = read_json(o.in);
  const DecompositionResult result = result_from_json(doc);
  const ThresholdPolicy policy =
      o.top_k ? ThresholdPolicy::top(*o.top_k) : ThresholdPolicy::ratio(o.theta);
  const ConceptReport report = extract_salient(result, policy, result_players(doc));
  write_text(o.out, render_report(report, parse_report_format(o.format)), out);
  if (!o.plot_csv.empty()) write_text(o.plot_csv, report_plot_csv(report), out);
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const ValueTable table = read_table(o.in);
  const AxiomReport report = verify_axioms(table, {}, {}, o.seed);
  for (const auto& check : report.checks) {
    out << check.name << ' ' << (check.passed ? "pass" : "FAIL") << " max_deviation "
        << check.max_deviation << '\n';
  }
  if (!report.all_passed()) throw GuardError("axiom check failed");
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const GeneratedGame game = generate_game(synthetic_spec_from_json(read_json(o.spec)));
  if (o.out.empty()) {
    save_value_table(game.table, out, TableFormat::kJson);
  } else {
    save_value_table_file(game.table, o.out);
  }
  if (!o.truth.empty()) {
    const json truth = {{"format", "planted_truth"},
                        {"version", 1},
                        {"n", game.table.n()},
                        {"ordering", kOrdering},
                        {"planted_l1", game.planted_l1()},
                        {"and", subset_records(game.and_truth, game.table.players())},
                        {"or", subset_records(game.or_truth, game.table.players())}};
    write_json(o.truth, truth, out);
  }
  return kExitOk;
}

int cmd_oracle_fill(const Options& o, std::ostream& out) {
  OracleOptions options;
  options.timeout = std::chrono::milliseconds(o.timeout_ms);
  options.players = split_labels(o.players);
  const ValueTable table = subprocess_oracle_fill(o.n, o.cmd, options);
  if (o.out.empty()) {
    save_value_table(table, out, TableFormat::kJson);
  } else {
    save_value_table_file(table, o.out);
  }
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const BenchReport report = run_bench(o.n, o.dense_n, o.repeats);
  out << render_bench(report);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interaction toolkit: AND/OR interactions, Shapley bridges, sparse decomposition"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_in = [&](CLI::App* sub) {
    sub->add_option("--in", o.in, "input path")->required();
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "output path (stdout when omitted)");
  };

  auto* and_cmd = app.add_subcommand("and", "AND interactions (Harsanyi dividends)");
  auto* or_cmd = app.add_subcommand("or", "OR interactions");
  for (auto* sub : {and_cmd, or_cmd}) {
    add_in(sub);
    add_out(sub);
  }
  auto* shapley_cmd = app.add_subcommand("shapley", "Shapley values from dividends");
  add_in(shapley_cmd);
  add_out(shapley_cmd);
  auto* taylor_cmd = app.add_subcommand("taylor", "order-k Shapley-Taylor indices");
  add_in(taylor_cmd);
  add_out(taylor_cmd);
  taylor_cmd->add_option("-k", o.k, "order")->required();

  auto* decompose_cmd = app.add_subcommand("decompose", "sparse AND-OR decomposition");
  add_in(decompose_cmd);
  add_out(decompose_cmd);
  decompose_cmd->add_option("--tau-ratio", o.tau_ratio, "tau = ratio * |v(N) - v(empty)|");
  decompose_cmd->add_option("--max-iters", o.max_iters, "iteration budget");
  decompose_cmd->add_option("--step", o.step, "subgradient step size");
  decompose_cmd->add_option("--step-decay", o.step_decay, "constant or 1/sqrt(t)");
  decompose_cmd->add_option("--seed", o.seed, "echoed in the result");
  decompose_cmd->add_option("--trace", o.trace, "objective trace CSV path");
  decompose_cmd->add_option("--solver", o.solver,
                            "auto, interior-point, primal-dual or subgradient");

  auto* report_cmd = app.add_subcommand("report", "salient concepts of a decomposition");
  add_in(report_cmd);
  add_out(report_cmd);
  auto* theta_opt = report_cmd->add_option("--theta", o.theta, "keep |I| >= theta * max |I|");
  auto* top_opt = report_cmd->add_option("--top-k", o.top_k, "keep the k largest");
  theta_opt->excludes(top_opt);
  report_cmd->add_option("--format", o.format, "text or json");
  report_cmd->add_option("--plot-csv", o.plot_csv, "rank,abs_effect CSV path");

  auto* verify_cmd = app.add_subcommand("verify", "check the dividend axioms on a table");
  add_in(verify_cmd);
  verify_cmd->add_option("--seed", o.seed, "seed for auxiliary games");

  auto* synth_cmd = app.add_subcommand("synth", "build a planted game");
  synth_cmd->add_option("--spec", o.spec, "synthetic spec JSON")->required();
  add_out(synth_cmd);
  synth_cmd->add_option("--truth", o.truth, "planted truth JSON path");

  auto* oracle_cmd = app.add_subcommand("oracle-fill", "query a subprocess oracle");
  oracle_cmd->add_option("-n", o.n, "number of players")->required();
  oracle_cmd->add_option("--cmd", o.cmd, "shell command speaking EVAL/QUIT")->required();
  add_out(oracle_cmd);
  oracle_cmd->add_option("--timeout", o.timeout_ms, "per-request timeout in ms");
  oracle_cmd->add_option("--players", o.players, "comma-separated labels");

  auto* bench_cmd = app.add_subcommand("bench", "transform throughput");
  bench_cmd->add_option("-n", o.n, "lattice size exponent")->required();
  bench_cmd->add_option("--dense-n", o.dense_n, "dense comparison size (<= 12)");
  bench_cmd->add_option("--repeats", o.repeats, "timing repeats");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << " (run with --help for usage)\n";
    return kExitInput;
  }

  try {
    if (and_cmd->parsed()) return cmd_interactions(o, InteractionKind::kAnd, out);
    if (or_cmd->parsed()) return cmd_interactions(o, InteractionKind::kOr, out);
    if (shapley_cmd->parsed()) return cmd_shapley(o, out);
    if (taylor_cmd->parsed()) return cmd_taylor(o, out);
    if (decompose_cmd->parsed()) return cmd_decompose(o, out);
    if (report_cmd->parsed()) return cmd_report(o, out);
    if (verify_cmd->parsed()) return cmd_verify(o, out);
    if (synth_cmd->parsed()) return cmd_synth(o, out);
    if (oracle_cmd->parsed()) return cmd_oracle_fill(o, out);
    if (bench_cmd->parsed()) return cmd_bench(o, out);
  } catch (const GuardError& e) {
    err << "guard failure: " << e.what() << '\n';
    return kExitGuard;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const OracleError& e) {
    err << "oracle error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitGuard;
  }
  err << "error: no subcommand\n";
  return kExitInput;
}

}  // namespace ikit
