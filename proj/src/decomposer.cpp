#include "ikit/decomposer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ikit/error.hpp"

namespace ikit {

using nlohmann::json;

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kAuto: return "auto";
    case SolverKind::kInteriorPoint: return "interior-point";
    case SolverKind::kPrimalDual: return "primal-dual";
    case SolverKind::kSubgradient: return "subgradient";
  }
  return "auto";
}

SolverKind parse_solver_kind(std::string_view text) {
  for (auto kind : {SolverKind::kAuto, SolverKind::kInteriorPoint, SolverKind::kPrimalDual,
                    SolverKind::kSubgradient}) {
    if (text == to_string(kind)) return kind;
  }
  throw InputError("unknown solver '" + std::string(text) +
                   "' (expected auto, interior-point, primal-dual or subgradient)");
}

std::string_view to_string(StepDecay decay) {
  return decay == StepDecay::kConstant ? "constant" : "1/sqrt(t)";
}

StepDecay parse_step_decay(std::string_view text) {
  if (text == "constant") return StepDecay::kConstant;
  if (text == "1/sqrt(t)" || text == "inverse-sqrt") return StepDecay::kInverseSqrt;
  throw InputError("unknown step decay '" + std::string(text) + "'");
}

void DecomposerConfig::validate() const {
  if (max_iters < 1) throw InputError("max_iters must be at least 1");
  if (!(tau_ratio >= 0.0) || !std::isfinite(tau_ratio)) {
    throw InputError("tau_ratio must be a finite non-negative number");
  }
  if (step_size && !(*step_size > 0.0 && std::isfinite(*step_size))) {
    throw InputError("step_size must be positive");
  }
  if (!(stop_tol >= 0.0)) throw InputError("stop_tol must be non-negative");
  if (tau_override) {
    for (std::size_t i = 0; i < tau_override->size(); ++i) {
      const double t = (*tau_override)[i];
      if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InputError("tau_override[" + std::to_string(i) + "] must be finite and >= 0");
      }
    }
  }
}

LatticeVector tau_bounds(const ValueTable& table, const DecomposerConfig& config) {
  config.validate();
  const int n = table.n();
  if (config.tau_override) {
    if (config.tau_override->size() != lattice_size(n)) {
      throw InputError("tau_override length mismatch: expected " +
                       std::to_string(lattice_size(n)));
    }
    return LatticeVector(n, *config.tau_override);
  }
  const double spread = std::abs(table[lattice_size(n) - 1] - table[0]);
  return LatticeVector(n, std::vector<double>(lattice_size(n), config.tau_ratio * spread));
}

namespace {

// Fills and_part = T_and((v+eps)/2 + p) and or_part = T_or((v+eps)/2 - p).
void parts_into(std::span<const double> v, std::span<const double> p,
                std::span<const double> eps, std::vector<double>& and_part,
                std::vector<double>& or_part) {
  const std::size_t size = v.size();
  and_part.resize(size);
  or_part.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double half = 0.5 * (v[i] + eps[i]);
    and_part[i] = half + p[i];
    or_part[i] = half - p[i];
  }
  inplace::mobius(and_part);
  inplace::apply_or(or_part);
}

double l1(std::span<const double> x) {
  double s = 0.0;
  for (double xi : x) s += std::abs(xi);
  return s;
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Adjoint of (p, eps) -> (and_part, or_part) applied to (g_and, g_or);
// both inputs are overwritten.
void adjoint_into(std::vector<double>& g_and, std::vector<double>& g_or,
                  std::vector<double>& out_p, std::vector<double>& out_eps) {
  inplace::mobius_superset(g_and);
  inplace::apply_or_transpose(g_or);
  const std::size_t size = g_and.size();
  out_p.resize(size);
  out_eps.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    out_p[i] = g_and[i] - g_or[i];
    out_eps[i] = 0.5 * (g_and[i] + g_or[i]);
  }
}

struct Iterate {
  std::vector<double> p;
  std::vector<double> eps;
  double objective = std::numeric_limits<double>::infinity();
};

// Best-so-far bookkeeping shared by all solvers.
class Tracker {
 public:
  Tracker(std::size_t size, int window, double stop_tol)
      : window_(window), stop_tol_(stop_tol) {
    best_.p.assign(size, 0.0);
    best_.eps.assign(size, 0.0);
  }

  void record(int iteration, double f, std::span<const double> p, std::span<const double> eps) {
    trace_.push_back({iteration, f});
    if (f < best_.objective) {
      best_.objective = f;
      best_.p.assign(p.begin(), p.end());
      best_.eps.assign(eps.begin(), eps.end());
    }
    running_best_.push_back(best_.objective);
  }

  // Improvement of the best objective over the last `window` records is below
  // stop_tol relative to the current best.
  bool stalled() const {
    const std::size_t count = running_best_.size();
    if (count <= static_cast<std::size_t>(window_)) return false;
    const double now = running_best_.back();
    const double before = running_best_[count - 1 - window_];
    return before - now <= stop_tol_ * std::max(std::abs(now), 1e-300);
  }

  const Iterate& best() const { return best_; }
  std::vector<TracePoint> take_trace() { return std::move(trace_); }

 private:
  int window_;
  double stop_tol_;
  Iterate best_;
  std::vector<TracePoint> trace_;
  std::vector<double> running_best_;
};

struct SolveOutcome {
  Iterate best;
  std::vector<TracePoint> trace;
  int iterations = 0;
  bool converged = false;
};

constexpr int kSubgradientWindow = 100;
constexpr int kPrimalDualWindow = 1000;

SolveOutcome solve_subgradient(std::span<const double> v, std::span<const double> tau, int n,
                               const DecomposerConfig& config) {
  const std::size_t size = v.size();
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  const double step0 =
      config.step_size.value_or(1e-2 * (vmax > 0.0 ? vmax : 1.0) / std::pow(2.0, 0.5 * n));

  std::vector<double> p(size, 0.0), eps(size, 0.0);
  std::vector<double> a, o, gp, ge;
  Tracker tracker(size, kSubgradientWindow, config.stop_tol);
  SolveOutcome out;
  for (int t = 0; t < config.max_iters; ++t) {
    parts_into(v, p, eps, a, o);
    const double f = l1(a) + l1(o);
    tracker.record(t, f, p, eps);
    out.iterations = t + 1;
    if (f == 0.0 || tracker.stalled()) {
      out.converged = true;
      break;
    }
    for (double& x : a) x = sign(x);
    for (double& x : o) x = sign(x);
    adjoint_into(a, o, gp, ge);
    const double step =
        config.step_decay == StepDecay::kInverseSqrt ? step0 / std::sqrt(t + 1.0) : step0;
    for (std::size_t i = 0; i < size; ++i) {
      p[i] -= step * gp[i];
      eps[i] = std::clamp(eps[i] - step * ge[i], -tau[i], tau[i]);
    }
  }
  out.best = tracker.best();
  out.trace = tracker.take_trace();
  return out;
}

// Chambolle-Pock on min_{(p,eps) in box} |K(p,eps) + c|_1 with the diagonal
// preconditioner sigma_i = 1/sum_j |K_ij|, tau_j = 1/sum_i |K_ij|.
SolveOutcome solve_primal_dual(std::span<const double> v, std::span<const double> tau, int n,
                               const DecomposerConfig& config) {
  const std::size_t size = v.size();
  const std::uint64_t full = full_mask(n);

  // Row sums: both blocks have 2^|S| unit entries in row S (1 in the OR empty
  // row), times 1 + 1/2 for the p and eps columns.
  std::vector<double> sigma_and(size), sigma_or(size), step_p(size), step_eps(size);
  for (std::uint64_t s = 0; s < size; ++s) {
    const double row = std::ldexp(1.0, std::popcount(s));
    sigma_and[s] = 1.0 / (1.5 * row);
    sigma_or[s] = 1.0 / (1.5 * (s == 0 ? 1.0 : row));
    // Column L: 2^(n-|L|) entries from T_and; 2^|L| from T_or minus the
    // masked empty row when L = N, plus the empty row itself when L is empty.
    const int k = std::popcount(s);
    double col = std::ldexp(1.0, n - k) + std::ldexp(1.0, k);
    if (s == full) col -= 1.0;
    if (s == 0) col += 1.0;
    step_p[s] = 1.0 / col;
    step_eps[s] = 1.0 / (0.5 * col);
  }

  std::vector<double> p(size, 0.0), eps(size, 0.0);
  std::vector<double> y_and(size, 0.0), y_or(size, 0.0);
  std::vector<double> a, o, a_prev, o_prev, g_and, g_or, kp, ke;
  parts_into(v, p, eps, a_prev, o_prev);

  Tracker tracker(size, kPrimalDualWindow, config.stop_tol);
  SolveOutcome out;
  for (int t = 0; t < config.max_iters; ++t) {
    g_and = y_and;
    g_or = y_or;
    adjoint_into(g_and, g_or, kp, ke);
    for (std::size_t i = 0; i < size; ++i) {
      p[i] -= step_p[i] * kp[i];
      eps[i] = std::clamp(eps[i] - step_eps[i] * ke[i], -tau[i], tau[i]);
    }
    parts_into(v, p, eps, a, o);
    const double f = l1(a) + l1(o);
    tracker.record(t, f, p, eps);
    out.iterations = t + 1;
    if (f == 0.0 || tracker.stalled()) {
      out.converged = true;
      break;
    }
    // K(2x_new - x_old) + c = 2 parts_new - parts_old
    for (std::size_t i = 0; i < size; ++i) {
      y_and[i] = std::clamp(y_and[i] + sigma_and[i] * (2.0 * a[i] - a_prev[i]), -1.0, 1.0);
      y_or[i] = std::clamp(y_or[i] + sigma_or[i] * (2.0 * o[i] - o_prev[i]), -1.0, 1.0);
    }
    std::swap(a, a_prev);
    std::swap(o, o_prev);
  }
  out.best = tracker.best();
  out.trace = tracker.take_trace();
  return out;
}

// ---------------------------------------------------------------------------
// Interior point.
//
// In terms of the effects themselves (a = AND effects, b = OR effects with
// b(empty) = 0 since the AND empty slot already carries the constant), the
// problem is the linear program
//
//   min |a|_1 + |b|_1   s.t.   v - tau <= Z a + O b <= v + tau
//
// with Z[T,S] = 1[S subset of T] and O[T,S] = 1[S meets T]. Splitting a and b
// into positive and negative parts and writing s = Z a + O b - v + tau in
// [0, 2 tau] gives a standard-form LP with upper bounds on s only, solved by
// Mehrotra's predictor-corrector method. The normal matrix entries reduce to
// zeta transforms of the scaling weights:
//   (Z D Z^T)[T1,T2] = zeta(d)(T1 & T2)
//   (O D O^T)[T1,T2] = sum(d) - zeta(d)(~T1) - zeta(d)(~T2) + zeta(d)(~(T1 | T2))
// ---------------------------------------------------------------------------

class EffectLp {
 public:
  EffectLp(int n, std::span<const double> rhs, std::span<const double> upper)
      : n_(n), size_(lattice_size(n)), full_(full_mask(n)), rhs_(rhs.begin(), rhs.end()),
        upper_(upper.begin(), upper.end()), has_slack_(size_) {
    for (std::size_t i = 0; i < size_; ++i) has_slack_[i] = upper_[i] > 0.0;
  }

  std::size_t size() const { return size_; }
  bool has_slack(std::size_t i) const { return has_slack_[i]; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<double>& upper() const { return upper_; }

  // Z a + O b
  void reconstruct(std::span<const double> a, std::span<const double> b,
                   std::vector<double>& out) const {
    out.assign(a.begin(), a.end());
    inplace::zeta(out);
    std::vector<double> zb(b.begin(), b.end());
    zb[0] = 0.0;
    const double total = std::accumulate(zb.begin(), zb.end(), 0.0);
    inplace::zeta(zb);
    for (std::size_t t = 0; t < size_; ++t) out[t] += total - zb[full_ ^ t];
  }

  // Z^T y and O^T y (O^T y at the empty set is unused and set to zero).
  void transpose(std::span<const double> y, std::vector<double>& zt,
                 std::vector<double>& ot) const {
    zt.assign(y.begin(), y.end());
    inplace::zeta_superset(zt);
    std::vector<double> zy(y.begin(), y.end());
    const double total = std::accumulate(zy.begin(), zy.end(), 0.0);
    inplace::zeta(zy);
    ot.resize(size_);
    for (std::size_t s = 0; s < size_; ++s) ot[s] = total - zy[full_ ^ s];
    ot[0] = 0.0;
  }

  // A diag(theta) A^T given the per-block weights.
  Eigen::MatrixXd normal_matrix(std::span<const double> da, std::span<const double> db,
                                std::span<const double> ds) const {
    std::vector<double> za(da.begin(), da.end());
    inplace::zeta(za);
    std::vector<double> zb(db.begin(), db.end());
    zb[0] = 0.0;
    const double total = std::accumulate(zb.begin(), zb.end(), 0.0);
    inplace::zeta(zb);
    Eigen::MatrixXd m(size_, size_);
    for (std::size_t t1 = 0; t1 < size_; ++t1) {
      const double z1 = zb[full_ ^ t1];
      for (std::size_t t2 = 0; t2 <= t1; ++t2) {
        const double value =
            za[t1 & t2] + total - z1 - zb[full_ ^ t2] + zb[full_ ^ (t1 | t2)];
        m(t1, t2) = value;
        m(t2, t1) = value;
      }
      m(t1, t1) += ds[t1];
    }
    return m;
  }

 private:
  int n_;
  std::size_t size_;
  std::uint64_t full_;
  std::vector<double> rhs_;
  std::vector<double> upper_;
  std::vector<bool> has_slack_;
};

// Primal variables: ap, am, bp, bm (>= 0) and s in [0, u]; t = u - s.
// Duals: y (free), z for every lower bound, w for the upper bounds on s.
struct LpPoint {
  std::vector<double> ap, am, bp, bm, s, t;
  std::vector<double> zap, zam, zbp, zbm, zs, ws;
  std::vector<double> y;
};

struct LpDirection {
  std::vector<double> ap, am, bp, bm, s;
  std::vector<double> zap, zam, zbp, zbm, zs, ws;
  std::vector<double> y;
};

double max_step(std::span<const double> x, std::span<const double> dx,
                const std::vector<bool>* active = nullptr) {
  double alpha = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (active && !(*active)[i]) continue;
    if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
  }
  return alpha;
}

SolveOutcome solve_interior_point(std::span<const double> v, std::span<const double> tau, int n,
                                  const DecomposerConfig& config) {
  if (n > kInteriorPointMaxN) {
    throw InputError("interior-point solver limited to n <= " +
                     std::to_string(kInteriorPointMaxN) + "; use primal-dual");
  }
  const std::size_t size = v.size();
  Tracker tracker(size, kSubgradientWindow, config.stop_tol);
  SolveOutcome out;

  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) {
    // Zero game: p = eps = 0 is optimal with objective 0.
    std::vector<double> zeros(size, 0.0);
    tracker.record(0, 0.0, zeros, zeros);
    out.best = tracker.best();
    out.trace = tracker.take_trace();
    out.iterations = 1;
    out.converged = true;
    return out;
  }

  std::vector<double> rhs(size), upper(size);
  for (std::size_t i = 0; i < size; ++i) {
    rhs[i] = (v[i] - tau[i]) / scale;
    upper[i] = 2.0 * tau[i] / scale;
  }
  const EffectLp lp(n, rhs, upper);
  std::vector<bool> slack_mask(size), b_mask(size, true);
  for (std::size_t i = 0; i < size; ++i) slack_mask[i] = lp.has_slack(i);
  b_mask[0] = false;

  LpPoint x;
  x.ap.assign(size, 1.0);
  x.am.assign(size, 1.0);
  x.bp.assign(size, 1.0);
  x.bm.assign(size, 1.0);
  x.bp[0] = x.bm[0] = 0.0;
  x.s.assign(size, 0.0);
  x.t.assign(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    if (slack_mask[i]) x.s[i] = x.t[i] = 0.5 * upper[i];
  }
  x.zap.assign(size, 1.0);
  x.zam.assign(size, 1.0);
  x.zbp.assign(size, 1.0);
  x.zbm.assign(size, 1.0);
  x.zbp[0] = x.zbm[0] = 0.0;
  x.zs.assign(size, 0.0);
  x.ws.assign(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    if (slack_mask[i]) x.zs[i] = x.ws[i] = 1.0;
  }
  x.y.assign(size, 0.0);

  std::size_t complementarity_count = 4 * size - 2;
  for (std::size_t i = 0; i < size; ++i) complementarity_count += slack_mask[i] ? 2 : 0;

  std::vector<double> a(size), b(size), rec, zt, ot;
  std::vector<double> rp(size), rd_ap(size), rd_am(size), rd_bp(size), rd_bm(size), rd_s(size);
  std::vector<double> th_ap(size), th_am(size), th_bp(size), th_bm(size), th_s(size);
  std::vector<double> da(size), db(size), ds(size);
  std::vector<double> map_p(size), map_eps(size), pa, po;

  // Feasible (p, eps) for the current effects, in the original scale.
  auto record_iterate = [&](int iteration) {
    for (std::size_t i = 0; i < size; ++i) {
      a[i] = (x.ap[i] - x.am[i]) * scale;
      b[i] = (x.bp[i] - x.bm[i]) * scale;
    }
    b[0] = 0.0;
    lp.reconstruct(a, b, rec);
    std::vector<double> and_game(a);
    inplace::zeta(and_game);
    for (std::size_t i = 0; i < size; ++i) {
      map_eps[i] = std::clamp(rec[i] - v[i], -tau[i], tau[i]);
      map_p[i] = and_game[i] - 0.5 * (v[i] + map_eps[i]);
    }
    parts_into(v, map_p, map_eps, pa, po);
    tracker.record(iteration, l1(pa) + l1(po), map_p, map_eps);
  };

  constexpr double kTolerance = 1e-9;
  const double kPrimalTolerance = 1e-8 * static_cast<double>(size) / 256.0;
  constexpr double kBoundaryFraction = 0.995;
  constexpr int kRefinementPasses = 2;
  const int max_outer = std::min(config.max_iters, 200);
  const double rhs_norm = std::max(
      1.0, std::abs(*std::max_element(rhs.begin(), rhs.end(),
                                      [](double l, double r) { return std::abs(l) < std::abs(r); })));

  for (int iter = 0; iter < max_outer; ++iter) {
    // Residuals.
    for (std::size_t i = 0; i < size; ++i) {
      a[i] = x.ap[i] - x.am[i];
      b[i] = x.bp[i] - x.bm[i];
    }
    lp.reconstruct(a, b, rec);
    lp.transpose(x.y, zt, ot);
    double rp_norm = 0.0, rd_norm = 0.0, primal = 0.0, dual = 0.0, mu_sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      const double s_i = slack_mask[i] ? x.s[i] : 0.0;
      rp[i] = rhs[i] - (rec[i] - s_i);
      rp_norm = std::max(rp_norm, std::abs(rp[i]));
      rd_ap[i] = 1.0 - zt[i] - x.zap[i];
      rd_am[i] = 1.0 + zt[i] - x.zam[i];
      rd_bp[i] = b_mask[i] ? 1.0 - ot[i] - x.zbp[i] : 0.0;
      rd_bm[i] = b_mask[i] ? 1.0 + ot[i] - x.zbm[i] : 0.0;
      rd_s[i] = slack_mask[i] ? x.y[i] - x.zs[i] + x.ws[i] : 0.0;
      rd_norm = std::max({rd_norm, std::abs(rd_ap[i]), std::abs(rd_am[i]), std::abs(rd_bp[i]),
                          std::abs(rd_bm[i]), std::abs(rd_s[i])});
      primal += x.ap[i] + x.am[i] + x.bp[i] + x.bm[i];
      dual += rhs[i] * x.y[i] - (slack_mask[i] ? upper[i] * x.ws[i] : 0.0);
      mu_sum += x.ap[i] * x.zap[i] + x.am[i] * x.zam[i] + x.bp[i] * x.zbp[i] +
                x.bm[i] * x.zbm[i] + x.s[i] * x.zs[i] + x.t[i] * x.ws[i];
    }
    const double mu = mu_sum / static_cast<double>(complementarity_count);

    if (!std::isfinite(mu) || !std::isfinite(primal)) break;
    record_iterate(iter);
    out.iterations = iter + 1;
    // The primal residual floors around 1e-9 for n near 10 since the OR
    // block sums up to 2^n entries per row.
    if (rp_norm <= kPrimalTolerance * rhs_norm && rd_norm <= kTolerance &&
        std::abs(primal - dual) <= 10.0 * kTolerance * (1.0 + std::abs(primal))) {
      out.converged = true;
      break;
    }

    // Scaling weights and normal matrix.
    for (std::size_t i = 0; i < size; ++i) {
      th_ap[i] = x.ap[i] / x.zap[i];
      th_am[i] = x.am[i] / x.zam[i];
      th_bp[i] = b_mask[i] ? x.bp[i] / x.zbp[i] : 0.0;
      th_bm[i] = b_mask[i] ? x.bm[i] / x.zbm[i] : 0.0;
      th_s[i] = slack_mask[i] ? 1.0 / (x.zs[i] / x.s[i] + x.ws[i] / x.t[i]) : 0.0;
      da[i] = th_ap[i] + th_am[i];
      db[i] = th_bp[i] + th_bm[i];
      ds[i] = th_s[i];
    }
    Eigen::MatrixXd normal = lp.normal_matrix(da, db, ds);
    const double ridge = 1e-14 * std::max(1.0, normal.diagonal().maxCoeff());
    normal.diagonal().array() += ridge;
    const Eigen::LLT<Eigen::MatrixXd> chol(normal);
    if (chol.info() != Eigen::Success || !(mu > 0.0)) break;

    // A diag(theta) A^T without forming it.
    auto apply_normal = [&](const Eigen::VectorXd& u) {
      std::vector<double> uz(u.data(), u.data() + size), ut, uo, out;
      lp.transpose(uz, ut, uo);
      for (std::size_t i = 0; i < size; ++i) {
        ut[i] *= da[i];
        uo[i] *= db[i];
      }
      lp.reconstruct(ut, uo, out);
      Eigen::VectorXd result(size);
      for (std::size_t i = 0; i < size; ++i) result[i] = out[i] + ds[i] * u[i];
      return result;
    };

    // Solves for a direction given complementarity targets r_xz = target - x z
    // (per variable) and r_tw for the upper bounds.
    auto direction = [&](auto&& rxz, auto&& rtw) {
      LpDirection d;
      std::vector<double> rho_ap(size), rho_am(size), rho_bp(size), rho_bm(size), rho_s(size);
      for (std::size_t i = 0; i < size; ++i) {
        rho_ap[i] = rd_ap[i] - rxz(0, i) / x.ap[i];
        rho_am[i] = rd_am[i] - rxz(1, i) / x.am[i];
        rho_bp[i] = b_mask[i] ? rd_bp[i] - rxz(2, i) / x.bp[i] : 0.0;
        rho_bm[i] = b_mask[i] ? rd_bm[i] - rxz(3, i) / x.bm[i] : 0.0;
        rho_s[i] = slack_mask[i] ? rd_s[i] - rxz(4, i) / x.s[i] + rtw(i) / x.t[i] : 0.0;
      }
      // rhs = r_p + A Theta rho
      std::vector<double> ta(size), tb(size), arec;
      for (std::size_t i = 0; i < size; ++i) {
        ta[i] = th_ap[i] * rho_ap[i] - th_am[i] * rho_am[i];
        tb[i] = th_bp[i] * rho_bp[i] - th_bm[i] * rho_bm[i];
      }
      lp.reconstruct(ta, tb, arec);
      Eigen::VectorXd r(size);
      for (std::size_t i = 0; i < size; ++i) r[i] = rp[i] + arec[i] - th_s[i] * rho_s[i];
      Eigen::VectorXd dy = chol.solve(r);
      // The factor carries a ridge and the weights are badly scaled near the
      // optimum, so refine against the exact operator.
      for (int pass = 0; pass < kRefinementPasses; ++pass) {
        const Eigen::VectorXd residual = r - apply_normal(dy);
        dy += chol.solve(residual);
      }
      d.y.assign(dy.data(), dy.data() + size);
      std::vector<double> dzt, dot;
      lp.transpose(d.y, dzt, dot);
      d.ap.resize(size);
      d.am.resize(size);
      d.bp.resize(size);
      d.bm.resize(size);
      d.s.resize(size);
      d.zap.resize(size);
      d.zam.resize(size);
      d.zbp.resize(size);
      d.zbm.resize(size);
      d.zs.resize(size);
      d.ws.resize(size);
      for (std::size_t i = 0; i < size; ++i) {
        d.ap[i] = th_ap[i] * (dzt[i] - rho_ap[i]);
        d.am[i] = th_am[i] * (-dzt[i] - rho_am[i]);
        d.bp[i] = b_mask[i] ? th_bp[i] * (dot[i] - rho_bp[i]) : 0.0;
        d.bm[i] = b_mask[i] ? th_bm[i] * (-dot[i] - rho_bm[i]) : 0.0;
        d.s[i] = slack_mask[i] ? th_s[i] * (-d.y[i] - rho_s[i]) : 0.0;
        d.zap[i] = (rxz(0, i) - x.zap[i] * d.ap[i]) / x.ap[i];
        d.zam[i] = (rxz(1, i) - x.zam[i] * d.am[i]) / x.am[i];
        d.zbp[i] = b_mask[i] ? (rxz(2, i) - x.zbp[i] * d.bp[i]) / x.bp[i] : 0.0;
        d.zbm[i] = b_mask[i] ? (rxz(3, i) - x.zbm[i] * d.bm[i]) / x.bm[i] : 0.0;
        if (slack_mask[i]) {
          d.zs[i] = (rxz(4, i) - x.zs[i] * d.s[i]) / x.s[i];
          // dt = -ds
          d.ws[i] = (rtw(i) + x.ws[i] * d.s[i]) / x.t[i];
        } else {
          d.zs[i] = d.ws[i] = 0.0;
        }
      }
      return d;
    };

    auto primal_step = [&](const LpDirection& d) {
      std::vector<double> neg_ds(size);
      for (std::size_t i = 0; i < size; ++i) neg_ds[i] = -d.s[i];
      return std::min({max_step(x.ap, d.ap), max_step(x.am, d.am), max_step(x.bp, d.bp, &b_mask),
                       max_step(x.bm, d.bm, &b_mask), max_step(x.s, d.s, &slack_mask),
                       max_step(x.t, neg_ds, &slack_mask)});
    };
    auto dual_step = [&](const LpDirection& d) {
      return std::min({max_step(x.zap, d.zap), max_step(x.zam, d.zam),
                       max_step(x.zbp, d.zbp, &b_mask), max_step(x.zbm, d.zbm, &b_mask),
                       max_step(x.zs, d.zs, &slack_mask), max_step(x.ws, d.ws, &slack_mask)});
    };

    auto xz = [&](int block, std::size_t i) {
      switch (block) {
        case 0: return x.ap[i] * x.zap[i];
        case 1: return x.am[i] * x.zam[i];
        case 2: return b_mask[i] ? x.bp[i] * x.zbp[i] : 0.0;
        case 3: return b_mask[i] ? x.bm[i] * x.zbm[i] : 0.0;
        default: return slack_mask[i] ? x.s[i] * x.zs[i] : 0.0;
      }
    };
    auto tw = [&](std::size_t i) { return slack_mask[i] ? x.t[i] * x.ws[i] : 0.0; };

    // Predictor.
    const LpDirection aff = direction([&](int blk, std::size_t i) { return -xz(blk, i); },
                                      [&](std::size_t i) { return -tw(i); });
    const double ap_aff = primal_step(aff);
    const double ad_aff = dual_step(aff);
    double mu_aff_sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      mu_aff_sum += (x.ap[i] + ap_aff * aff.ap[i]) * (x.zap[i] + ad_aff * aff.zap[i]);
      mu_aff_sum += (x.am[i] + ap_aff * aff.am[i]) * (x.zam[i] + ad_aff * aff.zam[i]);
      if (b_mask[i]) {
        mu_aff_sum += (x.bp[i] + ap_aff * aff.bp[i]) * (x.zbp[i] + ad_aff * aff.zbp[i]);
        mu_aff_sum += (x.bm[i] + ap_aff * aff.bm[i]) * (x.zbm[i] + ad_aff * aff.zbm[i]);
      }
      if (slack_mask[i]) {
        mu_aff_sum += (x.s[i] + ap_aff * aff.s[i]) * (x.zs[i] + ad_aff * aff.zs[i]);
        mu_aff_sum += (x.t[i] - ap_aff * aff.s[i]) * (x.ws[i] + ad_aff * aff.ws[i]);
      }
    }
    const double mu_aff = mu_aff_sum / static_cast<double>(complementarity_count);
    const double centering = std::pow(mu_aff / mu, 3.0);
    const double target = centering * mu;

    // Corrector.
    auto dxz_aff = [&](int block, std::size_t i) {
      switch (block) {
        case 0: return aff.ap[i] * aff.zap[i];
        case 1: return aff.am[i] * aff.zam[i];
        case 2: return aff.bp[i] * aff.zbp[i];
        case 3: return aff.bm[i] * aff.zbm[i];
        default: return aff.s[i] * aff.zs[i];
      }
    };
    const LpDirection cor = direction(
        [&](int blk, std::size_t i) {
          const bool on = (blk < 2) || (blk < 4 ? b_mask[i] : slack_mask[i]);
          return on ? target - xz(blk, i) - dxz_aff(blk, i) : 0.0;
        },
        [&](std::size_t i) {
          return slack_mask[i] ? target - tw(i) + aff.s[i] * aff.ws[i] : 0.0;
        });
    const double alpha_p = std::min(1.0, kBoundaryFraction * primal_step(cor));
    const double alpha_d = std::min(1.0, kBoundaryFraction * dual_step(cor));

    for (std::size_t i = 0; i < size; ++i) {
      x.ap[i] += alpha_p * cor.ap[i];
      x.am[i] += alpha_p * cor.am[i];
      x.zap[i] += alpha_d * cor.zap[i];
      x.zam[i] += alpha_d * cor.zam[i];
      x.y[i] += alpha_d * cor.y[i];
      if (b_mask[i]) {
        x.bp[i] += alpha_p * cor.bp[i];
        x.bm[i] += alpha_p * cor.bm[i];
        x.zbp[i] += alpha_d * cor.zbp[i];
        x.zbm[i] += alpha_d * cor.zbm[i];
      }
      if (slack_mask[i]) {
        x.s[i] += alpha_p * cor.s[i];
        x.t[i] = upper[i] - x.s[i];
        x.zs[i] += alpha_d * cor.zs[i];
        x.ws[i] += alpha_d * cor.ws[i];
      }
    }
  }
  out.best = tracker.best();
  out.trace = tracker.take_trace();
  return out;
}

}  // namespace

std::pair<LatticeVector, LatticeVector> and_or_parts(const ValueTable& table,
                                                     const LatticeVector& p,
                                                     const LatticeVector& epsilon) {
  require_same_n(table.values(), p, "and_or_parts");
  require_same_n(table.values(), epsilon, "and_or_parts");
  std::vector<double> a, o;
  parts_into(table.values().values(), p.values(), epsilon.values(), a, o);
  return {LatticeVector(table.n(), std::move(a)), LatticeVector(table.n(), std::move(o))};
}

double objective(const ValueTable& table, const LatticeVector& p, const LatticeVector& epsilon,
                 const DecomposerConfig& config) {
  const LatticeVector tau = tau_bounds(table, config);
  require_same_n(tau, epsilon, "objective");
  for (std::size_t i = 0; i < epsilon.size(); ++i) {
    if (std::abs(epsilon[i]) > tau[i]) {
      throw InputError("epsilon out of bounds at index " + std::to_string(i) + ": |" +
                       std::to_string(epsilon[i]) + "| > " + std::to_string(tau[i]));
    }
  }
  const auto [a, o] = and_or_parts(table, p, epsilon);
  return a.norm_l1() + o.norm_l1();
}

Subgradient subgradient(const ValueTable& table, const LatticeVector& p,
                        const LatticeVector& epsilon) {
  require_same_n(table.values(), p, "subgradient");
  require_same_n(table.values(), epsilon, "subgradient");
  std::vector<double> a, o, gp, ge;
  parts_into(table.values().values(), p.values(), epsilon.values(), a, o);
  for (double& x : a) x = sign(x);
  for (double& x : o) x = sign(x);
  adjoint_into(a, o, gp, ge);
  return {LatticeVector(table.n(), std::move(gp)), LatticeVector(table.n(), std::move(ge))};
}

DecompositionResult decompose(const ValueTable& table, const DecomposerConfig& config) {
  config.validate();
  const int n = table.n();
  const LatticeVector tau = tau_bounds(table, config);

  SolverKind solver = config.solver;
  if (solver == SolverKind::kAuto) {
    solver = n <= kInteriorPointAutoMaxN ? SolverKind::kInteriorPoint : SolverKind::kPrimalDual;
  }
  const auto v = table.values().values();
  SolveOutcome outcome;
  switch (solver) {
    case SolverKind::kInteriorPoint:
      outcome = solve_interior_point(v, tau.values(), n, config);
      break;
    case SolverKind::kPrimalDual:
      outcome = solve_primal_dual(v, tau.values(), n, config);
      break;
    default:
      outcome = solve_subgradient(v, tau.values(), n, config);
      break;
  }

  LatticeVector p(n, std::move(outcome.best.p));
  LatticeVector eps(n, std::move(outcome.best.eps));
  auto [a, o] = and_or_parts(table, p, eps);
  const double final_objective = a.norm_l1() + o.norm_l1();
  return DecompositionResult{InteractionVector(InteractionKind::kAnd, std::move(a)),
                             InteractionVector(InteractionKind::kOr, std::move(o)),
                             std::move(p),
                             std::move(eps),
                             tau,
                             std::move(outcome.trace),
                             final_objective,
                             outcome.iterations,
                             outcome.converged,
                             solver};
}

double mixed_faithfulness_error(const ValueTable& table, const DecompositionResult& result) {
  require_same_n(table.values(), result.and_hat.effects(), "mixed_faithfulness_error");
  const LatticeVector from_and = reconstruct_all(result.and_hat);
  const LatticeVector from_or = reconstruct_all(result.or_hat);
  double worst = 0.0;
  for (std::size_t t = 0; t < from_and.size(); ++t) {
    worst = std::max(worst, std::abs(table[t] - from_and[t] - from_or[t]));
  }
  return worst;
}

json config_to_json(const DecomposerConfig& config) {
  json doc = {{"solver", to_string(config.solver)},
              {"max_iters", config.max_iters},
              {"step_size", config.step_size ? json(*config.step_size) : json()},
              {"step_decay", to_string(config.step_decay)},
              {"tau_ratio", config.tau_ratio},
              {"tau_override", config.tau_override ? json(*config.tau_override) : json()},
              {"stop_tol", config.stop_tol},
              {"seed", config.seed}};
  return doc;
}

json result_to_json(const DecompositionResult& result, const ValueTable& source,
                    const DecomposerConfig& config) {
  double eps_max = result.epsilon.norm_inf();
  return {{"format", "decomposition"},
          {"version", 1},
          {"n", source.n()},
          {"players", source.players()},
          {"ordering", kOrdering},
          {"source_digest", "sha256:" + table_digest(source)},
          {"config", config_to_json(config)},
          {"solver", to_string(result.solver)},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"final_objective", result.final_objective},
          {"tau_max", result.tau.norm_inf()},
          {"epsilon_stats", {{"max", eps_max}, {"l1", result.epsilon.norm_l1()}}},
          {"mixed_faithfulness_error", mixed_faithfulness_error(source, result)},
          {"and", subset_records(result.and_hat, source.players())},
          {"or", subset_records(result.or_hat, source.players())},
          {"p", result.p.raw()},
          {"epsilon", result.epsilon.raw()},
          {"tau", result.tau.raw()}};
}

std::vector<std::string> result_players(const json& doc) {
  if (!doc.contains("players")) return default_player_labels(doc.at("n").get<int>());
  return doc["players"].get<std::vector<std::string>>();
}

DecompositionResult result_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "decomposition") {
      throw InputError("not a decomposition result (\"format\" must be \"decomposition\")");
    }
    const int n = doc.at("n").get<int>();
    check_lattice_size(n);
    auto vec = [&](const char* key) {
      return LatticeVector(n, doc.at(key).get<std::vector<double>>());
    };
    DecompositionResult result{
        interactions_from_records(doc.at("and"), n, InteractionKind::kAnd),
        interactions_from_records(doc.at("or"), n, InteractionKind::kOr),
        vec("p"),
        vec("epsilon"),
        vec("tau"),
        {},
        doc.at("final_objective").get<double>(),
        doc.value("iterations", 0),
        doc.value("converged", false),
        parse_solver_kind(doc.value("solver", "auto"))};
    return result;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed decomposition result: ") + e.what());
  }
}

std::string trace_to_csv(const DecompositionResult& result) {
  std::string out = "iteration,objective\n";
  char buf[64];
  for (const auto& point : result.objective_trace) {
    out += std::to_string(point.iteration);
    out += ',';
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, point.objective);
    out.append(buf, end);
    out += '\n';
  }
  return out;
}

}  // namespace ikit
