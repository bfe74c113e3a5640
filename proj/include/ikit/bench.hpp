#pragma once

#include <string>
#include <vector>

namespace ikit {

struct TransformTiming {
  std::string name;
  double seconds = 0.0;  // best of the repeats
};

struct BenchReport {
  int n = 0;
  std::vector<TransformTiming> fast;  // every fast transform at n
  int dense_n = 0;                    // size at which the dense matrix was built
  double dense_seconds = 0.0;         // one dense T_and matvec at dense_n
  double fast_seconds_at_dense_n = 0.0;
  double speedup_at_dense_n = 0.0;
  // Dense cost extrapolated to n by the 4^n scaling of a matvec.
  double dense_estimate_seconds = 0.0;
  double speedup_estimate = 0.0;
};

// Times the fast transforms at n and one dense matvec at min(n, dense_n).
BenchReport run_bench(int n, int dense_n = 12, int repeats = 3);
std::string render_bench(const BenchReport& report);

}  // namespace ikit
