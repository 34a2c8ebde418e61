#pragma once

// Deterministic randomness with counter-based substreams.
//
// A single 64-bit master seed governs a run set.  Every consumer derives its
// own stream as stream_for(master, run, round, purpose): the four components
// are folded through the splitmix64 finalizer one at a time, so streams for
// distinct (run, round, purpose) tuples are independent for practical
// purposes and no consumer ever shares or advances another's state.  This is
// what makes replays byte-identical and lets counterfactual probes reuse the
// same noise draws across candidate policies (common random numbers).
//
// Samplers are implemented from raw 64-bit outputs rather than
// std::*_distribution, so sampled values are identical across standard
// libraries.

#include <cstdint>
#include <initializer_list>

namespace dynregret {

// Stream purposes; values are part of the reproducibility contract.
enum class Purpose : std::uint64_t {
  dynamics_noise = 1,   // environment noise w_t during the played game
  learner = 2,          // learner's own randomization (e.g. FTPL draws)
  adversary = 3,        // adversary randomization (signs, instance draws)
  counterfactual = 4,   // noise replay for counterfactual rollouts
  declared = 5,         // Monte Carlo estimation of a declared mixture mean
  tree = 6,             // random tree nodes for Rademacher estimation
  epsilon = 7,          // sign paths for Rademacher estimation
  instance_gen = 8,     // random instance generation in tests/harness
};

inline std::uint64_t splitmix64_step(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Folds parts into a single well-mixed 64-bit value.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = 0x8f5e9c3ab1d2e4f7ull;
  for (std::uint64_t p : parts) {
    s ^= p + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
    (void)splitmix64_step(s);
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ull;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebull;
    s ^= s >> 31;
  }
  return s;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_step(state_); }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller (two uniforms per pair; second is cached).
  double next_gaussian();

  // Exponential with the given rate (mean 1/rate) via inverse CDF.
  double next_exponential(double rate);

  // Unbiased integer in [0, n) by rejection on the top bits.
  int next_index(int n);

  int next_sign() { return (next_u64() >> 63) ? 1 : -1; }

 private:
  std::uint64_t state_;
  bool have_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

RngStream stream_for(std::uint64_t master, std::uint64_t run, std::uint64_t round,
                     Purpose purpose);

// Extra discriminator for per-repetition substreams (e.g. Monte Carlo reps).
RngStream stream_for(std::uint64_t master, std::uint64_t run, std::uint64_t round,
                     Purpose purpose, std::uint64_t rep);

}  // namespace dynregret
