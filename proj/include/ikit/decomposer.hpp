#pragma once

// Sparse AND-OR decomposition.
//
// The game is split as v_and = (v + eps)/2 + p and v_or = (v + eps)/2 - p,
// and the solver minimizes
//
//     |T_and v_and|_1 + |T_or v_or|_1    subject to |eps_i| <= tau_i
//
// over p (free) and eps (boxed). Any (p, eps) explains the perturbed game
// v + eps exactly, so the mixed reconstruction error on v is at most
// max_i tau_i.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ikit/interactions.hpp"
#include "json.hpp"

namespace ikit {

enum class SolverKind {
  kAuto,           // interior point for n <= kInteriorPointAutoMaxN, else primal-dual
  kInteriorPoint,  // exact LP optimum (dense normal equations)
  kPrimalDual,     // diagonally preconditioned Chambolle-Pock, matrix-free
  kSubgradient,    // projected subgradient with best-iterate tracking
};

enum class StepDecay { kConstant, kInverseSqrt };

inline constexpr int kInteriorPointAutoMaxN = 10;
inline constexpr int kInteriorPointMaxN = 12;

std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view text);
std::string_view to_string(StepDecay decay);
StepDecay parse_step_decay(std::string_view text);

struct DecomposerConfig {
  SolverKind solver = SolverKind::kAuto;
  int max_iters = 20000;
  // Subgradient step; defaults to 1e-2 * |v|_inf / 2^(n/2).
  std::optional<double> step_size;
  StepDecay step_decay = StepDecay::kInverseSqrt;
  // tau_i = tau_ratio * |v(N) - v(empty)| unless tau_override is set.
  double tau_ratio = 0.05;
  std::optional<std::vector<double>> tau_override;
  // Stop when the best objective improves by less than stop_tol (relative)
  // over a window of iterations.
  double stop_tol = 1e-7;
  // Echoed in results; every solver is deterministic.
  std::uint64_t seed = 0;

  // Throws InputError on tau_ratio < 0, step_size <= 0, max_iters < 1, ...
  void validate() const;
};

struct TracePoint {
  int iteration = 0;
  double objective = 0.0;
};

struct DecompositionResult {
  InteractionVector and_hat;
  InteractionVector or_hat;
  LatticeVector p;
  LatticeVector epsilon;
  LatticeVector tau;
  std::vector<TracePoint> objective_trace;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  SolverKind solver = SolverKind::kAuto;
};

// Per-subset error bounds for `table` under `config`.
LatticeVector tau_bounds(const ValueTable& table, const DecomposerConfig& config = {});

// (T_and ((v + eps)/2 + p), T_or ((v + eps)/2 - p))
std::pair<LatticeVector, LatticeVector> and_or_parts(const ValueTable& table,
                                                     const LatticeVector& p,
                                                     const LatticeVector& epsilon);

// |I_and|_1 + |I_or|_1. Throws InputError if some |eps_i| > tau_i.
double objective(const ValueTable& table, const LatticeVector& p, const LatticeVector& epsilon,
                 const DecomposerConfig& config = {});

struct Subgradient {
  LatticeVector p;
  LatticeVector epsilon;
};

// g_p = T_and^T sign(I_and) - T_or^T sign(I_or)
// g_eps = (T_and^T sign(I_and) + T_or^T sign(I_or)) / 2, with sign(0) = 0.
Subgradient subgradient(const ValueTable& table, const LatticeVector& p,
                        const LatticeVector& epsilon);

DecompositionResult decompose(const ValueTable& table, const DecomposerConfig& config = {});

// max_T |v(T) - sum_{S subset of T} I_and(S) - I_or(empty) - sum_{S meets T} I_or(S)|
double mixed_faithfulness_error(const ValueTable& table, const DecompositionResult& result);

// Result payload. Contains no timing data, so identical inputs give identical bytes.
nlohmann::json result_to_json(const DecompositionResult& result, const ValueTable& source,
                              const DecomposerConfig& config);
// Rebuilds a result (without trace) from result_to_json output.
DecompositionResult result_from_json(const nlohmann::json& doc);
std::vector<std::string> result_players(const nlohmann::json& doc);
// "iteration,objective" CSV.
std::string trace_to_csv(const DecompositionResult& result);

nlohmann::json config_to_json(const DecomposerConfig& config);

}  // namespace ikit
