#include "ikit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "ikit/error.hpp"
#include "ikit/subset_algebra.hpp"
#include "ikit/synthetic.hpp"

namespace ikit {

namespace {

double best_time(int repeats, const std::function<void()>& body) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    best = std::min(best, took.count());
  }
  return best;
}

}  // namespace

BenchReport run_bench(int n, int dense_n, int repeats) {
  check_lattice_size(n);
  if (dense_n < 1 || dense_n > oracle::kMaxOracleN) {
    throw InputError("dense size must be in [1, " + std::to_string(oracle::kMaxOracleN) + "]");
  }
  if (repeats < 1) throw InputError("repeats must be at least 1");
  BenchReport report;
  report.n = n;
  const std::vector<double> base = random_game(n, 1.0, 7).values().raw();
  std::vector<double> work;
  using Kernel = void (*)(std::span<double>);
  const std::pair<const char*, Kernel> kernels[] = {
      {"mobius", inplace::mobius},
      {"zeta", inplace::zeta},
      {"mobius_superset", inplace::mobius_superset},
      {"zeta_superset", inplace::zeta_superset},
      {"T_or", inplace::apply_or},
      {"T_or_transpose", inplace::apply_or_transpose},
  };
  for (const auto& [name, kernel] : kernels) {
    const double t = best_time(repeats, [&] {
      work = base;
      kernel(work);
    });
    report.fast.push_back({name, t});
  }

  report.dense_n = std::min(n, dense_n);
  const std::vector<double> small = random_game(report.dense_n, 1.0, 7).values().raw();
  const std::vector<double> matrix = oracle::dense_T_and(report.dense_n);
  std::vector<double> sink;
  report.dense_seconds = best_time(repeats, [&] { sink = oracle::dense_apply(matrix, small); });
  report.fast_seconds_at_dense_n = best_time(std::max(repeats, 20), [&] {
    work = small;
    inplace::mobius(work);
  });
  report.speedup_at_dense_n =
      report.dense_seconds / std::max(report.fast_seconds_at_dense_n, 1e-12);
  report.dense_estimate_seconds =
      report.dense_seconds * std::pow(4.0, n - report.dense_n);
  report.speedup_estimate = report.dense_estimate_seconds / std::max(report.fast[0].seconds, 1e-12);
  return report;
}

std::string render_bench(const BenchReport& r) {
  std::string out;
  char line[160];
  for (const auto& t : r.fast) {
    std::snprintf(line, sizeof line, "fast %-16s n=%d  %.6f s  (%.3g entries/s)\n",
                  t.name.c_str(), r.n, t.seconds,
                  static_cast<double>(lattice_size(r.n)) / std::max(t.seconds, 1e-12));
    out += line;
  }
  std::snprintf(line, sizeof line, "dense T_and matvec n=%d  %.6f s\n", r.dense_n,
                r.dense_seconds);
  out += line;
  std::snprintf(line, sizeof line, "fast mobius n=%d  %.6f s  speedup %.1fx\n", r.dense_n,
                r.fast_seconds_at_dense_n, r.speedup_at_dense_n);
  out += line;
  std::snprintf(line, sizeof line, "dense estimate n=%d  %.3f s  speedup %.1fx\n", r.n,
                r.dense_estimate_seconds, r.speedup_estimate);
  out += line;
  return out;
}

}  // namespace ikit
