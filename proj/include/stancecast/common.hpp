#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Shared plumbing: error taxonomy, deterministic RNG, hashing, timestamp
// parsing and small string helpers used across the pipeline.

namespace stancecast {

inline constexpr const char* kToolName = "stancecast";
inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 usage, 2 data error, 3 internal.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Per-account rejection during labeling-date resolution. Callers skip the
// account and log the reason; this is not fatal to the run.
class AccountRejected : public DataError {
 public:
  AccountRejected(const std::string& account_id, const std::string& reason)
      : DataError("account '" + account_id + "' rejected: " + reason),
        account_id_(account_id) {}
  const std::string& account_id() const { return account_id_; }

 private:
  std::string account_id_;
};

// FNV-1a, used for artifact checksums and config hashes.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view s,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic RNG. The engine (mt19937_64) is fully specified by the
// standard; distributions are not, so the draws below are derived from raw
// engine output only. Every seeded result is reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal via Box-Muller (no cached spare; two draws per call).
  double gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ISO-8601 UTC timestamp handling. Accepts YYYY-MM-DD[T ]hh:mm:ss with
// optional fractional seconds (ignored) and optional Z / +hh:mm / -hh:mm
// offset; a bare date is midnight UTC. Returns unix seconds.
std::optional<std::int64_t> parse_iso8601(std::string_view s);
std::string format_iso8601(std::int64_t unix_seconds);

// floor(a / b) for possibly negative a, b > 0.
std::int64_t floor_div(std::int64_t a, std::int64_t b);

std::string lowercase_ascii(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split_char(std::string_view s, char delim);
std::string trim(std::string_view s);

std::string read_file(const std::string& path);      // DataError if missing
void write_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);

// Fixed-precision float formatting for byte-stable reports.
std::string format_double(double v, int precision = 6);

}  // namespace stancecast
