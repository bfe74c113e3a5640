#include "ikit/value_table.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <utility>

#include "ikit/error.hpp"
#include "json.hpp"

extern char** environ;

namespace ikit {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'T', 'B', 'L'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return value;
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  const auto le = to_little_endian(value);
  out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T raw{};
  if (!in.read(reinterpret_cast<char*>(&raw), sizeof(T))) {
    throw InputError(std::string("malformed header: truncated ") + what);
  }
  return to_little_endian(raw);
}

ValueTable load_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw InputError("malformed header: missing VTBL magic");
  }
  const auto version = read_le<std::uint16_t>(in, "version");
  if (version != kVersion) {
    throw InputError("malformed header: unsupported version " + std::to_string(version));
  }
  const int n = read_le<std::uint16_t>(in, "player count");
  check_lattice_size(n);
  const std::size_t expected = lattice_size(n);
  std::vector<double> values;
  values.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits{};
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw InputError("length mismatch: expected " + std::to_string(expected) +
                       " values, got " + std::to_string(i));
    }
    values.push_back(std::bit_cast<double>(to_little_endian(bits)));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError("length mismatch: expected " + std::to_string(expected) +
                     " values, found trailing bytes");
  }
  return ValueTable(LatticeVector(n, std::move(values)));
}

ValueTable load_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("malformed header: expected a JSON object");
  if (doc.value("format", "") != "vtable") {
    throw InputError("malformed header: \"format\" must be \"vtable\"");
  }
  if (!doc.contains("version") || doc["version"] != kVersion) {
    throw InputError("malformed header: \"version\" must be 1");
  }
  if (doc.contains("ordering") && doc["ordering"] != kOrdering) {
    throw InputError("malformed header: unsupported ordering, expected \"bitmask-lsb\"");
  }
  if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long long>() < 0) {
    throw InputError("malformed header: \"n\" must be a non-negative integer");
  }
  const long long n_raw = doc["n"].get<long long>();
  if (n_raw > kHardNLimit) throw CapError("n = " + std::to_string(n_raw) + " is too large");
  const int n = static_cast<int>(n_raw);
  check_lattice_size(n);

  if (!doc.contains("values") || !doc["values"].is_array()) {
    throw InputError("malformed header: \"values\" must be an array");
  }
  const auto& arr = doc["values"];
  const std::size_t expected = lattice_size(n);
  if (arr.size() != expected) {
    throw InputError("length mismatch: expected " + std::to_string(expected) + ", got " +
                     std::to_string(arr.size()));
  }
  std::vector<double> values(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    if (!arr[i].is_number()) {
      throw InputError("non-numeric value at index " + std::to_string(i));
    }
    values[i] = arr[i].get<double>();
    if (!std::isfinite(values[i])) {
      throw InputError("non-finite value at index " + std::to_string(i));
    }
  }

  std::vector<std::string> players;
  if (doc.contains("players")) {
    if (!doc["players"].is_array()) throw InputError("\"players\" must be an array");
    for (const auto& p : doc["players"]) {
      if (!p.is_string()) throw InputError("player labels must be strings");
      players.push_back(p.get<std::string>());
    }
  }
  std::string note;
  if (doc.contains("baseline_note") && !doc["baseline_note"].is_null()) {
    note = doc["baseline_note"].get<std::string>();
  }
  return ValueTable(LatticeVector(n, std::move(values)), std::move(players), std::move(note));
}

void save_binary(const ValueTable& table, std::ostream& out) {
  if (table.n() > 0xFFFF) throw InputError("n too large for the binary format");
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint16_t>(out, kVersion);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(table.n()));
  for (double x : table.values().values()) write_le(out, std::bit_cast<std::uint64_t>(x));
}

void save_json(const ValueTable& table, std::ostream& out) {
  json doc = {{"format", "vtable"},
              {"version", kVersion},
              {"n", table.n()},
              {"players", table.players()},
              {"ordering", kOrdering},
              {"values", table.values().raw()}};
  if (!table.baseline_note().empty()) doc["baseline_note"] = table.baseline_note();
  out << doc.dump(2) << '\n';
}

}  // namespace

ValueTable::ValueTable(LatticeVector values, std::vector<std::string> players,
                       std::string baseline_note)
    : values_(std::move(values)),
      players_(std::move(players)),
      baseline_note_(std::move(baseline_note)) {
  if (players_.empty()) players_ = default_player_labels(values_.n());
  if (players_.size() != static_cast<std::size_t>(values_.n())) {
    throw InputError("expected " + std::to_string(values_.n()) + " player labels, got " +
                     std::to_string(players_.size()));
  }
}

double ValueTable::scale() const { return std::max(1.0, values_.norm_inf()); }

std::vector<std::string> default_player_labels(int n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (int i = 0; i < n; ++i) labels.push_back("x" + std::to_string(i));
  return labels;
}

ValueTable load_value_table(std::istream& in, TableFormat format) {
  return format == TableFormat::kBinary ? load_binary(in) : load_json(in);
}

void save_value_table(const ValueTable& table, std::ostream& out, TableFormat format) {
  if (format == TableFormat::kBinary) {
    save_binary(table, out);
  } else {
    save_json(table, out);
  }
}

TableFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".vtbl") ? TableFormat::kBinary : TableFormat::kJson;
}

ValueTable load_value_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 4 && head == kMagic;
  in.clear();
  in.seekg(0);
  return load_value_table(in, binary ? TableFormat::kBinary : TableFormat::kJson);
}

void save_value_table_file(const ValueTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  save_value_table(table, out, format_for_path(path));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::string table_digest(const ValueTable& table) {
  std::ostringstream buf(std::ios::binary);
  save_binary(table, buf);
  const std::string bytes = buf.str();

  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xF]);
  }
  return hex;
}

namespace {

// Owns the child process and both pipe ends; kills and reaps on destruction.
class OracleProcess {
 public:
  explicit OracleProcess(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0 || pipe2(from_child, O_CLOEXEC) != 0) {
      throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    // Own process group, so teardown also reaches anything the shell started.
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, &attr,
                               const_cast<char* const*>(argv), environ);
    posix_spawnattr_destroy(&attr);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    if (rc != 0) {
      close_fds();
      throw std::runtime_error(std::string("cannot spawn oracle: ") + std::strerror(rc));
    }
  }

  OracleProcess(const OracleProcess&) = delete;
  OracleProcess& operator=(const OracleProcess&) = delete;

  ~OracleProcess() {
    close_fds();
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        ::kill(-pid_, SIGKILL);
        waitpid(pid_, &status, 0);
      } else {
        ::kill(-pid_, SIGKILL);
      }
    }
  }

  bool send(const std::string& line) {
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t w = ::write(write_fd_, line.data() + done, line.size() - done);
      if (w < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      done += static_cast<std::size_t>(w);
    }
    return true;
  }

  enum class ReadStatus { kLine, kEof, kTimeout };

  ReadStatus read_line(std::string& line, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return ReadStatus::kLine;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return ReadStatus::kTimeout;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::kEof;
      }
      if (ready == 0) return ReadStatus::kTimeout;
      char chunk[4096];
      const ssize_t r = ::read(read_fd_, chunk, sizeof chunk);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) return ReadStatus::kEof;
      buffer_.append(chunk, static_cast<std::size_t>(r));
    }
  }

  void finish(std::chrono::milliseconds grace) {
    send("QUIT\n");
    ::close(write_fd_);
    write_fd_ = -1;
    const auto deadline = std::chrono::steady_clock::now() + grace;
    int status = 0;
    while (std::chrono::steady_clock::now() < deadline) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);
        pid_ = -1;
        return;
      }
      ::usleep(1000);
    }
  }

 private:
  void close_fds() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

// Writes to a dead oracle must surface as EPIPE, not kill this process.
class ScopedIgnoreSigpipe {
 public:
  ScopedIgnoreSigpipe() { previous_ = ::signal(SIGPIPE, SIG_IGN); }
  ~ScopedIgnoreSigpipe() { ::signal(SIGPIPE, previous_); }
  ScopedIgnoreSigpipe(const ScopedIgnoreSigpipe&) = delete;
  ScopedIgnoreSigpipe& operator=(const ScopedIgnoreSigpipe&) = delete;

 private:
  void (*previous_)(int);
};

bool parse_reply(const std::string& line, double& out) {
  const char* begin = line.data();
  const char* end = begin + line.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return false;
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

}  // namespace

ValueTable subprocess_oracle_fill(int n, const std::string& command,
                                  const OracleOptions& options) {
  check_lattice_size(n);
  ScopedIgnoreSigpipe sigpipe_guard;
  OracleProcess oracle(command);

  const std::size_t count = lattice_size(n);
  std::vector<double> values(count);
  std::string line;
  for (std::size_t mask = 0; mask < count; ++mask) {
    if (!oracle.send("EVAL " + std::to_string(mask) + "\n")) {
      throw OracleError("oracle exited before answering mask " + std::to_string(mask), mask);
    }
    switch (oracle.read_line(line, options.timeout)) {
      case OracleProcess::ReadStatus::kTimeout:
        throw OracleError("oracle timed out on mask " + std::to_string(mask), mask);
      case OracleProcess::ReadStatus::kEof:
        throw OracleError("oracle exited before answering mask " + std::to_string(mask), mask);
      case OracleProcess::ReadStatus::kLine:
        break;
    }
    if (!parse_reply(line, values[mask])) {
      throw OracleError("non-numeric reply '" + line + "' for mask " + std::to_string(mask),
                        mask);
    }
  }
  oracle.finish(std::chrono::milliseconds(1000));
  return ValueTable(LatticeVector(n, std::move(values)), options.players,
                    options.baseline_note);
}

}  // namespace ikit
