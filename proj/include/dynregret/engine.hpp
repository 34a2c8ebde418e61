#pragma once

// Game execution and measurement: plays learner vs adversary, evaluates
// constant-policy counterfactuals, policy regret, per-round stability and
// mixing-gap profiles.  Single-threaded and deterministic given the master
// seed; repeated runs are byte-identical.

#include <functional>

#include "dynregret/protocol.hpp"

namespace dynregret {

struct RunSpec {
  std::uint64_t master_seed = 1;
  std::uint64_t run_index = 0;
  int horizon = 0;
  int n_w = 64;  // Monte Carlo repetitions for noisy counterfactuals
};

struct GameRecord {
  std::string env_id, learner_id, adversary_id;
  std::uint64_t master_seed = 0, run_index = 0;
  int horizon = 0;
  std::vector<Vec> policies;        // pi_t at index t-1
  std::vector<Instance> instances;  // (z_t, zeta_t) at index t-1
  std::vector<Vec> states;          // engine-visible x_t at index t-1
  Vec losses;                       // realized (or exact expected) loss per round
};

GameRecord run_game(const Environment& env, Learner& learner, Adversary& adversary,
                    const RunSpec& spec);

// Expected round-t counterfactual loss of the constant policy pi: replays
// instances 1..t-1 from the initial state under pi, then evaluates the loss
// on z_t.  Noisy environments average n_w rollouts; the noise substream for
// step s of repetition r depends only on (master, run, s, r), so probes of
// different policies share draws (common random numbers).
double counterfactual_loss(const Environment& env, const Vec& pi,
                           const std::vector<Instance>& instances, int t,
                           const RunSpec& spec);

// Sum of counterfactual_loss over t = 1..upto, accumulated in round order.
double cumulative_counterfactual(const Environment& env, const Vec& pi,
                                 const std::vector<Instance>& instances, int upto,
                                 const RunSpec& spec);

struct SearchConfig {
  int grid_points = 17;    // per-coordinate grid resolution on the box
  int refine_rounds = 3;   // coordinate-shrinking refinement passes
  long max_evals = 10000000;  // hard budget on objective evaluations
};

struct SearchResult {
  Vec arg;
  double value = 0.0;
  long evals = 0;
};

// Minimizes the objective over the environment's policy space: exhaustive
// over the finite candidate list when one exists (first minimum wins),
// otherwise a uniform grid over the box followed by refinement rounds, each
// re-gridding a box of one previous cell's half-width around the incumbent
// (lexicographically first minimum wins).  Candidates failing
// env.policy_valid are skipped.  Exceeding max_evals raises BudgetError.
SearchResult minimize_over_policies(const Environment& env,
                                    const std::function<double(const Vec&)>& objective,
                                    const SearchConfig& cfg);

struct RegretReport {
  double learner_cum = 0.0;
  double comparator_cum = 0.0;
  Vec comparator;
  double regret = 0.0;
  long comparator_evals = 0;
  // Cumulative counterfactual of the final comparator after each round
  // (same length as the game); last entry equals comparator_cum.
  Vec comparator_cum_prefix;
};

// Learner cumulative loss minus the best constant policy's cumulative
// counterfactual, both summed in round order.
RegretReport policy_regret(const Environment& env, const GameRecord& rec,
                           const SearchConfig& scfg, const RunSpec& spec);

// Per-round dynamic stability: beta_t = |E_w loss on the played trajectory -
// round-t counterfactual of pi_t|.  Deterministic environments reuse the
// recorded loss for the first term, so policies replayed onto identical
// states yield an exact 0.
Vec dynamic_stability_profile(const Environment& env, const GameRecord& rec,
                              const RunSpec& spec);

// Per-round ergodic stability: beta*_t = |E_w loss on the played trajectory -
// stationary_loss(pi_t, z_t)|.  Requires has_stationary_loss().
Vec ergodic_stability_profile(const Environment& env, const GameRecord& rec,
                              const RunSpec& spec);

// gap_t = |round-t counterfactual of pi under constant instances (z, zeta) -
// stationary_loss(pi, z)| for t = 1..horizon.  Exact for environments with
// distribution-valued states.
Vec mixing_gap_profile(const Environment& env, const Vec& pi, const Vec& z,
                       const Vec& zeta, int horizon);

}  // namespace dynregret
