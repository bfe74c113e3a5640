#include "ikit/subset_algebra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>

#include "ikit/error.hpp"

namespace ikit {

namespace {

int cap_from_env() {
  const char* env = std::getenv("IKIT_N_CAP");
  if (env == nullptr || *env == '\0') return kDefaultNCap;
  char* end = nullptr;
  long value = std::strtol(env, &end, 10);
  if (*end != '\0' || value < 0 || value > kHardNLimit) {
    throw InputError("IKIT_N_CAP must be an integer in [0, " +
                     std::to_string(kHardNLimit) + "], got '" + env + "'");
  }
  return static_cast<int>(value);
}

std::atomic<int>& cap_storage() {
  static std::atomic<int> cap{cap_from_env()};
  return cap;
}

}  // namespace

int lattice_cap() { return cap_storage().load(std::memory_order_relaxed); }

void set_lattice_cap(int cap) {
  if (cap < 0 || cap > kHardNLimit) {
    throw InputError("lattice cap out of range: " + std::to_string(cap));
  }
  cap_storage().store(cap, std::memory_order_relaxed);
}

void check_lattice_size(int n) {
  if (n < 0) throw InputError("player count must be non-negative");
  if (n > lattice_cap()) {
    throw CapError("n = " + std::to_string(n) + " exceeds the lattice cap of " +
                   std::to_string(lattice_cap()) + " (set IKIT_N_CAP to raise it)");
  }
}

SubsetIndex::SubsetIndex(std::uint64_t mask, int n) : mask_(mask), n_(n) {
  if (n < 0 || n > kHardNLimit || (mask >> n) != 0) {
    throw InputError("subset mask " + std::to_string(mask) +
                     " out of range for n = " + std::to_string(n));
  }
}

SubsetIndex SubsetIndex::from_members(std::span<const int> members, int n) {
  std::uint64_t mask = 0;
  for (int i : members) {
    if (i < 0 || i >= n) {
      throw InputError("player " + std::to_string(i) + " out of range for n = " +
                       std::to_string(n));
    }
    mask |= std::uint64_t{1} << i;
  }
  return {mask, n};
}

std::vector<int> SubsetIndex::members() const {
  std::vector<int> out;
  out.reserve(size());
  for (int i = 0; i < n_; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

LatticeVector::LatticeVector(int n) : n_(n) {
  check_lattice_size(n);
  data_.assign(lattice_size(n), 0.0);
}

LatticeVector::LatticeVector(int n, std::vector<double> data)
    : n_(n), data_(std::move(data)) {
  check_lattice_size(n);
  if (data_.size() != lattice_size(n)) {
    throw InputError("length mismatch: expected " +
                     std::to_string(lattice_size(n)) + ", got " +
                     std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw InputError("non-finite value at index " + std::to_string(i));
    }
  }
}

double LatticeVector::norm_inf() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double LatticeVector::norm_l1() const {
  double s = 0.0;
  for (double x : data_) s += std::abs(x);
  return s;
}

void require_same_n(const LatticeVector& a, const LatticeVector& b,
                    const std::string& context) {
  if (a.n() != b.n()) {
    throw InputError(context + ": dimension mismatch (n = " +
                     std::to_string(a.n()) + " vs n = " + std::to_string(b.n()) +
                     ")");
  }
}

double dot(const LatticeVector& a, const LatticeVector& b) {
  require_same_n(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace inplace {

// Each kernel walks bit b and pairs every mask without b (lo) with lo | b (hi).
// Pairs are visited in blocks of 2*bit so the inner loop is contiguous.

void mobius(std::span<double> data) {
  const std::size_t size = data.size();
  for (std::size_t bit = 1; bit < size; bit <<= 1) {
    for (std::size_t base = 0; base < size; base += bit << 1) {
      for (std::size_t lo = base; lo < base + bit; ++lo) data[lo | bit] -= data[lo];
    }
  }
}

void zeta(std::span<double> data) {
  const std::size_t size = data.size();
  for (std::size_t bit = 1; bit < size; bit <<= 1) {
    for (std::size_t base = 0; base < size; base += bit << 1) {
      for (std::size_t lo = base; lo < base + bit; ++lo) data[lo | bit] += data[lo];
    }
  }
}

void mobius_superset(std::span<double> data) {
  const std::size_t size = data.size();
  for (std::size_t bit = 1; bit < size; bit <<= 1) {
    for (std::size_t base = 0; base < size; base += bit << 1) {
      for (std::size_t lo = base; lo < base + bit; ++lo) data[lo] -= data[lo | bit];
    }
  }
}

void zeta_superset(std::span<double> data) {
  const std::size_t size = data.size();
  for (std::size_t bit = 1; bit < size; bit <<= 1) {
    for (std::size_t base = 0; base < size; base += bit << 1) {
      for (std::size_t lo = base; lo < base + bit; ++lo) data[lo] += data[lo | bit];
    }
  }
}

void reflect(std::span<double> data) {
  const std::size_t size = data.size();
  // Complementing every bit reverses the index order.
  for (std::size_t i = 0, j = size - 1; i < j; ++i, --j) std::swap(data[i], data[j]);
}

void apply_or(std::span<double> data) {
  const double empty_value = data[0];
  reflect(data);
  mobius(data);
  for (double& x : data) x = -x;
  data[0] = empty_value;
}

// T^OR = e0 e0^T - D M R with D = diag(0, 1, ..., 1), so
// (T^OR)^T g = e0 g(empty) - R M^T D g.
void apply_or_transpose(std::span<double> data) {
  const double empty_value = data[0];
  data[0] = 0.0;
  mobius_superset(data);
  reflect(data);
  for (double& x : data) x = -x;
  data[0] += empty_value;
}

}  // namespace inplace

namespace {

template <typename Kernel>
LatticeVector transformed(const LatticeVector& in, Kernel kernel) {
  check_lattice_size(in.n());
  std::vector<double> data = in.raw();
  kernel(std::span<double>(data));
  return LatticeVector(in.n(), std::move(data));
}

}  // namespace

LatticeVector mobius_transform(const LatticeVector& w) {
  return transformed(w, inplace::mobius);
}

LatticeVector zeta_transform(const LatticeVector& h) {
  return transformed(h, inplace::zeta);
}

LatticeVector reflect(const LatticeVector& w) { return transformed(w, inplace::reflect); }

LatticeVector apply_T_and(const LatticeVector& w) { return mobius_transform(w); }

LatticeVector apply_T_or(const LatticeVector& w) {
  return transformed(w, inplace::apply_or);
}

LatticeVector apply_T_and_transpose(const LatticeVector& g) {
  return transformed(g, inplace::mobius_superset);
}

LatticeVector apply_T_or_transpose(const LatticeVector& g) {
  return transformed(g, inplace::apply_or_transpose);
}

}  // namespace ikit
