#include "dynregret/rng.hpp"

#include <cmath>

#include "dynregret/common.hpp"

namespace dynregret {

double RngStream::next_gaussian() {
  if (have_cached_gaussian_) {
    have_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  // Box-Muller; u1 is kept away from zero so the log is finite.
  double u1 = next_unit();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  cached_gaussian_ = r * std::sin(theta);
  have_cached_gaussian_ = true;
  return r * std::cos(theta);
}

double RngStream::next_exponential(double rate) {
  if (!(rate > 0.0)) throw ValidationError("next_exponential: rate must be positive");
  double u = next_unit();
  if (u <= 0.0) u = 0x1.0p-53;
  return -std::log(u) / rate;
}

int RngStream::next_index(int n) {
  if (n <= 0) throw ValidationError("next_index: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = (~0ull / un) * un;  // reject the biased tail
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

RngStream stream_for(std::uint64_t master, std::uint64_t run, std::uint64_t round,
                     Purpose purpose) {
  return RngStream(
      mix_seed({master, run, round, static_cast<std::uint64_t>(purpose)}));
}

RngStream stream_for(std::uint64_t master, std::uint64_t run, std::uint64_t round,
                     Purpose purpose, std::uint64_t rep) {
  return RngStream(
      mix_seed({master, run, round, static_cast<std::uint64_t>(purpose), rep}));
}

}  // namespace dynregret
