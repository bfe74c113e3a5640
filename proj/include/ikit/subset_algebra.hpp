#pragma once

// Subset lattice conventions and matrix-free linear operators on it.
//
// A subset S of the players {0, ..., n-1} is stored as the bitmask
// sum_{i in S} 2^i ("bitmask-lsb" ordering). Every vector over the lattice
// has exactly 2^n entries and entry m belongs to the subset with mask m, so
// the empty set is index 0 and the full set N is index 2^n - 1.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ikit {

inline constexpr const char* kOrdering = "bitmask-lsb";
inline constexpr int kDefaultNCap = 24;
// Players are indexed by 16-bit values in the binary format; masks are 64 bit.
inline constexpr int kHardNLimit = 62;

// Current lattice cap. Initialized from the IKIT_N_CAP environment variable
// on first use, otherwise kDefaultNCap.
int lattice_cap();
void set_lattice_cap(int cap);
// Throws CapError when n is negative or above lattice_cap().
void check_lattice_size(int n);

inline std::size_t lattice_size(int n) { return std::size_t{1} << n; }
inline std::uint64_t full_mask(int n) { return (std::uint64_t{1} << n) - 1; }

class SubsetIndex {
 public:
  // Throws InputError when mask has bits at or above position n.
  SubsetIndex(std::uint64_t mask, int n);

  static SubsetIndex empty(int n) { return {0, n}; }
  static SubsetIndex full(int n) { return {full_mask(n), n}; }
  static SubsetIndex from_members(std::span<const int> members, int n);

  std::uint64_t mask() const { return mask_; }
  int n() const { return n_; }
  int size() const { return std::popcount(mask_); }
  bool is_empty() const { return mask_ == 0; }
  bool contains(int player) const { return (mask_ >> player) & 1u; }
  bool is_subset_of(const SubsetIndex& other) const {
    return (mask_ & ~other.mask_) == 0;
  }
  SubsetIndex complement() const { return {full_mask(n_) ^ mask_, n_}; }
  std::vector<int> members() const;

  friend bool operator==(const SubsetIndex&, const SubsetIndex&) = default;

 private:
  std::uint64_t mask_;
  int n_;
};

// 2^n finite reals indexed by subset mask.
class LatticeVector {
 public:
  LatticeVector() : LatticeVector(0) {}
  // All-zero vector. Throws CapError beyond the cap.
  explicit LatticeVector(int n);
  // Throws InputError on length != 2^n or a non-finite entry (naming the index).
  LatticeVector(int n, std::vector<double> data);

  int n() const { return n_; }
  std::size_t size() const { return data_.size(); }
  double operator[](std::size_t mask) const { return data_[mask]; }
  double& operator[](std::size_t mask) { return data_[mask]; }
  double at(const SubsetIndex& s) const { return data_[s.mask()]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double norm_inf() const;
  double norm_l1() const;

  friend bool operator==(const LatticeVector&, const LatticeVector&) = default;

 private:
  int n_;
  std::vector<double> data_;
};

// Throws InputError unless a and b have the same n.
void require_same_n(const LatticeVector& a, const LatticeVector& b,
                    const std::string& context);

double dot(const LatticeVector& a, const LatticeVector& b);

// In-place kernels. `data.size()` must be 2^n; callers own the buffer.
namespace inplace {
// data[S] <- sum_{L subset of S} (-1)^{|S|-|L|} data[L]
void mobius(std::span<double> data);
// data[T] <- sum_{S subset of T} data[S]
void zeta(std::span<double> data);
// Transposes of the two above: sums over supersets.
void mobius_superset(std::span<double> data);
void zeta_superset(std::span<double> data);
// data[m] <-> data[full ^ m]
void reflect(std::span<double> data);
// Matrix-free OR interaction map and its adjoint.
void apply_or(std::span<double> data);
void apply_or_transpose(std::span<double> data);
}  // namespace inplace

// Harsanyi dividend: h(S) = sum_{L subset of S} (-1)^{|S|-|L|} w(L).
LatticeVector mobius_transform(const LatticeVector& w);
// Subset sum w(T) = sum_{S subset of T} h(S); the inverse of mobius_transform.
LatticeVector zeta_transform(const LatticeVector& h);
LatticeVector reflect(const LatticeVector& w);

// T^AND w: identical to mobius_transform.
LatticeVector apply_T_and(const LatticeVector& w);
// T^OR w: out(empty) = w(empty); out(S) = -mobius_transform(reflect(w))(S).
LatticeVector apply_T_or(const LatticeVector& w);
LatticeVector apply_T_and_transpose(const LatticeVector& g);
LatticeVector apply_T_or_transpose(const LatticeVector& g);

}  // namespace ikit
