#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynregret {

using Vec = std::vector<double>;

// Error taxonomy. The CLI maps these to distinct exit codes, so every throw
// site should pick the category that matches what the caller can do about it:
//   ValidationError  -> bad input/config (exit 2); message names the offender.
//   CapabilityError  -> a requested operation the chosen component cannot
//                       provide (exit 3), e.g. no stationary loss.
//   BudgetError      -> an enumeration whose computed cost exceeds the hard
//                       budget (exit 4); message carries the computed cost.
//   NumericError     -> numerical failure (singular solve, divergence).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CapabilityError : std::runtime_error {
  explicit CapabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BudgetError : std::runtime_error {
  double computed_budget;
  BudgetError(const std::string& msg, double budget)
      : std::runtime_error(msg), computed_budget(budget) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shortest round-trip-safe rendering of a double ("%.17g").  Used everywhere
// a double reaches an output file so that reruns are byte-identical.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string fmt_int(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", v);
  return std::string(buf);
}

// FNV-1a over raw bytes; stable across platforms for our fixed-width inputs.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t seed = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t hash_vec(const Vec& v) {
  return v.empty() ? fnv1a(nullptr, 0) : fnv1a(v.data(), v.size() * sizeof(double));
}

inline std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace dynregret
