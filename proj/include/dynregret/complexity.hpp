#pragma once

// Complexity measurements and bound assembly.
//
// The central object is the sequential (tree) Rademacher complexity of the
// environment's policy-indexed loss class
//   phi_pi(z) = stationary_loss(pi, z)   (loss at the initial state when no
//                                         stationary loss is declared),
// namely  sup_tree E_eps sup_pi sum_t eps_t phi_pi(z_t(eps)),  where the
// supremum ranges over depth-T instance-valued complete binary trees and
// eps is a uniform sign sequence.  Exhaustive enumeration is exact but
// budget-guarded; the Monte Carlo search below approaches the supremum from
// inside (sampled trees plus greedy node improvement), so its value is a
// lower estimate.
//
// Also here: the explicit regret-bound assemblies, a budget-guarded
// backward-induction oracle for the pure minimax regret of short games, a
// fictitious-play solver for one-round mixed values, and log-log slope fits
// for rate measurements.

#include <cstdint>
#include <functional>
#include <utility>

#include "dynregret/engine.hpp"
#include "dynregret/protocol.hpp"

namespace dynregret {

// Complete binary instance tree of a given depth; level t (1-based) is read
// with the first t-1 signs of the path, bit s-1 set when eps_s = +1.  An
// oblivious tree stores one node per level and ignores the path.
struct RademacherTree {
  int depth = 0;
  bool oblivious = false;
  std::vector<Vec> nodes;  // level-major: level t at [2^{t-1}-1, 2^t-1), or
                           // one node per level when oblivious

  const Vec& node(int t, std::uint32_t path) const;
  static RademacherTree sequence(std::vector<Vec> seq);
};

// Exact sequential Rademacher complexity by enumerating every labeling of
// the depth-T tree with the environment's finite instance list and every
// sign path.  Enumeration cost |Z|^(2^T - 1) * 2^T * |Pi| above budget_cap
// raises BudgetError carrying the computed figure.
double seq_rademacher_exhaustive(const Environment& env, int T, double budget_cap = 1e7);

struct SeqRadConfig {
  int n_trees = 32;         // random restarts of the tree search
  int n_eps = 512;          // sign samples per estimate when not exact
  int improve_passes = 8;   // greedy node-improvement sweeps (0 disables)
  int improve_probes = 4;   // fresh candidates per node for box instances
  int exact_eps_cap = 4096;  // enumerate signs exactly up to this many paths
  int full_tree_depth_cap = 12;  // deeper trees are searched as sequences
};

struct SeqRadEstimate {
  double value = 0.0;     // best tree found: a lower estimate of the sup
  double std_error = 0.0;  // 0 when the sign average is exact
  double ci_low = 0.0, ci_high = 0.0;  // 95% normal interval around value
  bool exact_eps = false;
  bool oblivious = false;
};

// Monte Carlo lower estimate of the sequential Rademacher complexity:
// sample trees, greedily improve one node at a time while the objective
// rises, and report the best tree's sign average.  Shallow depths enumerate
// every sign path (std_error 0); otherwise the winning tree is rescored on a
// fresh sign sample so the estimate is free of the optimizer's selection
// bias.  Policies come from the finite menu; for box policy spaces pass
// linear_sup, which must return sup_pi phi_pi(s) for the summed signed
// instance s (valid whenever phi is linear in z, e.g. |s|_2 for inner
// products over the unit ball).
SeqRadEstimate seq_rademacher_mc(const Environment& env, int T, const SeqRadConfig& cfg,
                                 std::uint64_t seed,
                                 std::function<double(const Vec&)> linear_sup = {});

// ---------------------------------------------------------------------------
// Regret-bound assembly
// ---------------------------------------------------------------------------

// stability_sum + 2 rad + 2 lambda sup_omega.
double bound_main(double stability_sum, double rad, double lambda, double sup_omega);

// Ergodic variant: the stationary stability sum plus the mixing-gap sum
// replace the dynamic stability term.
double bound_ergodic(double stability_sum, double mixing_gap_sum, double rad, double lambda,
                     double sup_omega);

// One block-length option: the stability sum measured under that schedule
// and the complexity of the length-(T/tau) subsampled game.
struct MinibatchBoundTerm {
  int tau = 1;
  double stability_sum = 0.0;
  double rad_sub = 0.0;
};
struct MinibatchBound {
  int tau = 1;
  double value = 0.0;
};

// Evaluates stability_sum + 2 tau rad_sub per option and returns the
// minimizer (ties resolve to the smallest tau).
MinibatchBound bound_minibatch(const std::vector<MinibatchBoundTerm>& terms);

// ---------------------------------------------------------------------------
// Minimax oracles for short finite games
// ---------------------------------------------------------------------------

struct MinimaxResult {
  double value = 0.0;
  std::int64_t nodes = 0;  // game-tree nodes expanded
};

// Exact minimax policy regret of the T-round game by backward induction:
// each round the learner commits a policy from the finite menu, then the
// adversary picks an instance from the finite list; the leaf payoff is paid
// loss minus the best constant-policy counterfactual.  Enumeration cost
// |Pi| * (|Pi| |Z|)^T above budget_cap raises BudgetError.
MinimaxResult pure_minimax_oracle(const Environment& env, int T, double budget_cap = 1e7);

// Round-1 regret matrix M[i][j] = loss(pi_i, x_1, z_j) - min_f loss(f, x_1, z_j).
std::vector<Vec> t1_regret_matrix(const Environment& env);

// Value of the zero-sum matrix game (row minimizes, column maximizes) by
// fictitious play, stopping when the upper and lower value estimates are
// within tol.  NumericError if the gap has not closed within max_rounds.
double fictitious_play_value(const std::vector<Vec>& M, double tol = 1e-6,
                             std::int64_t max_rounds = 20000000);

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log space
  int points = 0;
};

// Least squares on (log T, log regret).  Needs >= 3 points with positive
// horizon and regret.
SlopeFit slope_fit(const std::vector<std::pair<double, double>>& horizon_regret);

}  // namespace dynregret
