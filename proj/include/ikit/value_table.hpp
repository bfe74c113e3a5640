#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ikit/subset_algebra.hpp"

namespace ikit {

// The game: one scalar model output v(S) per subset of present players.
// values[0] is v(empty) (everything masked), values[2^n - 1] is v(N).
class ValueTable {
 public:
  // Empty `players` gets default labels x0, x1, ...; otherwise it must have
  // exactly n entries.
  ValueTable(LatticeVector values, std::vector<std::string> players = {},
             std::string baseline_note = {});

  int n() const { return values_.n(); }
  const LatticeVector& values() const { return values_; }
  double operator[](std::size_t mask) const { return values_[mask]; }
  const std::vector<std::string>& players() const { return players_; }
  const std::string& baseline_note() const { return baseline_note_; }

  // max(1, |v|_inf); the reference scale for relative tolerances.
  double scale() const;

  friend bool operator==(const ValueTable&, const ValueTable&) = default;

 private:
  LatticeVector values_;
  std::vector<std::string> players_;
  std::string baseline_note_;
};

std::vector<std::string> default_player_labels(int n);

enum class TableFormat { kJson, kBinary };

// JSON:   {"format":"vtable","version":1,"n":..,"players":[..],
//          "ordering":"bitmask-lsb","values":[..],"baseline_note":".."}
// Binary: "VTBL", u16 version (1), u16 n, then 2^n float64, all little-endian.
ValueTable load_value_table(std::istream& in, TableFormat format);
void save_value_table(const ValueTable& table, std::ostream& out, TableFormat format);

// Format is sniffed from the leading magic bytes.
ValueTable load_value_table_file(const std::filesystem::path& path);
// ".bin" / ".vtbl" extensions select the binary format, anything else JSON.
void save_value_table_file(const ValueTable& table, const std::filesystem::path& path);
TableFormat format_for_path(const std::filesystem::path& path);

// Lowercase hex SHA-256 of the binary serialization.
std::string table_digest(const ValueTable& table);

struct OracleOptions {
  std::chrono::milliseconds timeout{30000};  // per request
  std::vector<std::string> players;
  std::string baseline_note;
};

// Spawns `command` through /bin/sh and queries every mask in ascending order
// with "EVAL <mask>\n", expecting one decimal float per line back; ends with
// "QUIT\n". Throws OracleError naming the first mask that got no valid answer.
ValueTable subprocess_oracle_fill(int n, const std::string& command,
                                  const OracleOptions& options = {});

}  // namespace ikit
