#pragma once

// Core protocol for online learning over a stateful environment.
//
// One round t of the repeated game, with full information:
//   1. the learner commits to a policy pi_t (its declared action — the mean
//      of its randomization — is fixed before the adversary moves);
//   2. the adversary picks a loss instance z_t and a dynamics instance
//      zeta_t, possibly after inspecting the declared action;
//   3. the learner pays loss(pi_t, x_t, z_t), both sides observe everything;
//   4. the state advances: x_{t+1} = step(x_t, pi_t, zeta_t) [+ noise w_t].
//
// Performance is measured against constant-policy counterfactuals: the
// comparator replays the realized instance sequence under a fixed policy,
// so the baseline pays the state drift its own choice induces.  Environments
// whose per-round quantities are expectations over dynamics noise may expose
// the exact distribution as the engine-visible state (e.g. Gaussian states
// carry mean and covariance), which makes replays exact and deterministic.

#include <memory>
#include <optional>
#include <string>

#include "dynregret/common.hpp"
#include "dynregret/rng.hpp"

namespace dynregret {

// Axis-aligned box, one [lo, hi] interval per coordinate.
struct BoxSpace {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& v, double tol = 1e-9) const;
};

// Describes a policy or instance space: an optional finite candidate list
// (enumeration order is the tie-break order) and/or a box for grid search.
// Environment-specific membership beyond the box (norm balls, certificates)
// lives in the environment's validity predicates.
struct SpaceDesc {
  std::vector<Vec> finite;
  std::optional<BoxSpace> box;

  bool has_finite() const { return !finite.empty(); }
  int dim() const;
  bool contains(const Vec& v, double tol = 1e-9) const;
};

// A learner's committed action for the round: the mean of its randomization,
// flagged deterministic when there is no randomization around it.
struct Declared {
  Vec mean;
  bool deterministic = true;
};

struct Instance {
  Vec z;     // loss instance
  Vec zeta;  // dynamics instance (may be empty when dynamics are fixed)
};

// Incrementally evaluates the cumulative counterfactual loss
//   eval(pi) = sum_{s<=t} loss_s(pi | instances 1..s)
// where round s's counterfactual replays instances 1..s-1 under the constant
// policy pi from the initial state.  The generic implementation replays in
// O(t) per eval; environments can supply closed-form accumulators.
class CfCumulative {
 public:
  virtual ~CfCumulative() = default;
  virtual void append(const Instance& inst) = 0;
  virtual double eval(const Vec& pi) const = 0;
  virtual int rounds() const = 0;
};

// Incrementally evaluates cumulative stationary loss sum_{s<=t} loss*(pi, z_s)
// for environments with a stationary loss.  The generic implementation stores
// the instances (or their sum when the stationary loss is linear in z);
// environments can supply cached evaluators for fixed candidate sets.
class StationaryCum {
 public:
  virtual ~StationaryCum() = default;
  virtual void append(const Vec& z) = 0;
  virtual double eval(const Vec& pi) const = 0;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual Vec initial_state() const = 0;

  virtual const SpaceDesc& policy_space() const = 0;
  virtual const SpaceDesc& loss_instance_space() const = 0;
  virtual const SpaceDesc& dynamics_instance_space() const = 0;

  // Membership beyond the raw space descriptors (norm balls, stability
  // certificates).  Defaults delegate to the descriptors.
  virtual bool policy_valid(const Vec& pi) const;
  virtual bool instance_valid(const Instance& inst) const;

  // Deterministic part of the transition.  Environments with process noise
  // either fold it into a distribution-valued state (preferred) or return
  // has_noise() = true and let the engine add sample_noise() draws.
  virtual Vec step(const Vec& x, const Vec& pi, const Vec& zeta) const = 0;
  virtual bool has_noise() const { return false; }
  virtual Vec sample_noise(RngStream& rng) const;

  virtual double loss(const Vec& pi, const Vec& x, const Vec& z) const = 0;
  // Uniform bound on |loss| over valid arguments (used by budget/bound code).
  virtual double loss_bound() const = 0;

  // Stationary (steady-state) loss for ergodic environments.
  virtual bool has_stationary_loss() const { return false; }
  virtual double stationary_loss(const Vec& pi, const Vec& z) const;
  // True when stationary_loss(pi, .) is linear in z, enabling summed-instance
  // accumulation.
  virtual bool stationary_loss_linear_in_z() const { return false; }

  // Factories for the incremental evaluators; overrides provide fast paths.
  virtual std::unique_ptr<CfCumulative> make_cf_cumulative() const;
  virtual std::unique_ptr<StationaryCum> make_stationary_cum() const;

  // Draws a "typical" loss/dynamics instance; used by i.i.d. adversaries and
  // Monte Carlo tree sampling.  Default: uniform over the loss box (or the
  // finite list), empty dynamics instance.
  virtual Instance sample_instance(RngStream& rng) const;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string id() const = 0;

  // Called once before round 1.  run_index distinguishes repetitions that
  // share a master seed.
  virtual void reset(const Environment& env, int horizon, std::uint64_t master_seed,
                     std::uint64_t run_index) = 0;

  // The committed action for round t, available to the adversary before z_t
  // is revealed.  Computing it must not perturb the learner's play.
  virtual Declared declared(int t) = 0;

  // The policy actually played at round t.
  virtual Vec act(int t) = 0;

  // Full-information feedback after round t.
  virtual void observe(int t, const Instance& inst) = 0;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string id() const = 0;
  virtual void reset(const Environment& env, int horizon, std::uint64_t master_seed,
                     std::uint64_t run_index) = 0;
  // True when the adversary inspects the learner's declared action.
  virtual bool wants_declared() const { return false; }
  virtual Instance move(int t, const Declared& declared) = 0;
  // Feedback: the policy the learner actually played at round t.
  virtual void observe_play(int t, const Vec& pi) = 0;
};

}  // namespace dynregret
