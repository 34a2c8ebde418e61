#pragma once

// Discrete and low-dimensional environments: finite stateless games, a
// one-step-memory wrapper that charges for policy switches, finite MDPs with
// exact distribution states, a bounded single-index regression game whose
// state remembers one policy coordinate, and the last-action environment
// used to exhibit policy-regret lower bounds.

#include <map>
#include <memory>

#include "dynregret/engine.hpp"
#include "dynregret/linalg.hpp"
#include "dynregret/protocol.hpp"

namespace dynregret {

// ---------------------------------------------------------------------------
// Finite stateless game.  Policies and instances are single-index vectors
// {i} / {j}; losses come from a table.  The state never moves, so policy
// regret coincides with classical external regret.
// ---------------------------------------------------------------------------
class TableGameEnv final : public Environment {
 public:
  // table[i][j] = loss of policy i against instance j.
  explicit TableGameEnv(std::vector<Vec> table);

  std::string id() const override { return "table_game"; }
  int state_dim() const override { return 1; }
  Vec initial_state() const override { return {0.0}; }
  const SpaceDesc& policy_space() const override { return policies_; }
  const SpaceDesc& loss_instance_space() const override { return instances_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_; }
  Vec step(const Vec& x, const Vec&, const Vec&) const override { return x; }
  double loss(const Vec& pi, const Vec&, const Vec& z) const override;
  double loss_bound() const override { return bound_; }
  // Stateless: steady-state play costs exactly what instantaneous play does.
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override {
    return loss(pi, {0.0}, z);
  }

  int n_policies() const { return static_cast<int>(table_.size()); }
  int n_instances() const { return static_cast<int>(table_.front().size()); }
  double entry(int i, int j) const { return table_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

 private:
  std::vector<Vec> table_;
  double bound_ = 0.0;
  SpaceDesc policies_, instances_, dyn_;
};

// ---------------------------------------------------------------------------
// One-step-memory wrapper around a finite stateless game.  The state is the
// previous policy; each round pays
//   sign * inner_loss(f, z_inner) + 1[f != previous policy],
// where the instance is [sign; z_inner] with sign in {+1, -1}.  Under this
// wrapper the summed dynamic stability of any play equals its number of
// policy switches exactly.
// ---------------------------------------------------------------------------
class MemoryWrapperEnv final : public Environment {
 public:
  explicit MemoryWrapperEnv(std::shared_ptr<const TableGameEnv> inner);

  std::string id() const override { return "memory_wrapper"; }
  int state_dim() const override { return 1; }
  // Convention: the game starts as if policy 0 had just been played.
  Vec initial_state() const override { return {0.0}; }
  const SpaceDesc& policy_space() const override { return inner_->policy_space(); }
  const SpaceDesc& loss_instance_space() const override { return instances_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_; }
  Vec step(const Vec&, const Vec& pi, const Vec&) const override { return pi; }
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return inner_->loss_bound() + 1.0; }
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override;

  const TableGameEnv& inner() const { return *inner_; }

 private:
  std::shared_ptr<const TableGameEnv> inner_;
  SpaceDesc instances_, dyn_;
};

// ---------------------------------------------------------------------------
// Finite Markov decision process with an exact distribution-valued state.
// ---------------------------------------------------------------------------

struct MdpSystem {
  int S = 0, A = 0;
  // transition[u] is the S x S row-stochastic matrix for action u.
  std::vector<Mat> transition;
  // Declared uniform mixing time: every policy's chain contracts the L1
  // distance between state distributions by exp(-1/tau) per step.  0 means
  // no declared bound (mixing-gap envelopes unavailable).
  double tau = 0.0;
  void validate() const;
};

// Blends every transition row with the uniform distribution:
// P <- (1-alpha) P + alpha/S.  The result contracts L1 by (1-alpha) per step
// under any policy, certifying tau = -1/log(1-alpha).
MdpSystem mdp_uniform_smoothing(const MdpSystem& raw, double alpha);

// Row-stochastic S x S chain induced by policy pi (flattened S x A matrix):
// P_pi(x, x') = sum_u pi(x, u) P_u(x, x').
Mat mdp_induced_transition(const MdpSystem& sys, const Vec& pi);

// Unique stationary distribution of a row-stochastic chain by power
// iteration from uniform (L1 step < 1e-12, residual <= 1e-10).  Requires the
// chain to be unichain: exactly one terminal communicating class, verified
// by reachability analysis; multiple closed classes raise ValidationError.
Vec stationary_distribution(const Mat& chain);

// Deterministic policies enumerated with state 0 as the least significant
// base-A digit; entry p is the flattened one-hot policy matrix.
std::vector<Vec> mdp_deterministic_policies(int S, int A);

class MdpEnv final : public Environment {
 public:
  // start: initial state distribution (defaults to uniform).  Enumerates the
  // A^S deterministic policies as the comparator list; counts above 4096
  // raise BudgetError.
  explicit MdpEnv(MdpSystem sys, Vec start = {});

  std::string id() const override { return "mdp"; }
  int state_dim() const override { return sys_.S; }
  Vec initial_state() const override { return start_; }
  const SpaceDesc& policy_space() const override { return policy_space_; }
  const SpaceDesc& loss_instance_space() const override { return loss_space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_space_; }
  bool policy_valid(const Vec& pi) const override;
  Vec step(const Vec& x, const Vec& pi, const Vec& zeta) const override;
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return 1.0; }
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override;
  bool stationary_loss_linear_in_z() const override { return true; }

  const MdpSystem& system() const { return sys_; }
  // Expected per-state loss vector of pi under z: v(x) = sum_u pi(x,u) z(x,u).
  Vec per_state_loss(const Vec& pi, const Vec& z) const;
  const Vec& cached_stationary_distribution(const Vec& pi) const;

 private:
  MdpSystem sys_;
  Vec start_;
  SpaceDesc policy_space_, loss_space_, dyn_space_;
  mutable std::map<std::uint64_t, Vec> dpi_cache_;
};

// ---------------------------------------------------------------------------
// Single-index regression with one remembered coordinate.  Policies are
// (w1, w, sigma): a scalar memory target |w1| <= 1, weights ||w||_2 <= 1, and
// a 1-Lipschitz piecewise-linear link on [-1, 1] with M = 16 segments,
// |sigma| <= 1.  Instances are z = [z1; features; y]; the loss is
//   (y - sigma(<features, w>))^2 + (z1 - w1)^2 + (state - w1)^2  in [0, 12],
// and the state remembers the last played w1.
// ---------------------------------------------------------------------------

struct IsotronSystem {
  int d = 1;          // feature dimension
  int segments = 16;  // piecewise-linear segments of the link on [-1, 1]
  int policy_dim() const { return d + segments + 2; }  // [w1; w; v0; slopes]
};

class IsotronEnv final : public Environment {
 public:
  explicit IsotronEnv(IsotronSystem sys);

  std::string id() const override { return "isotron"; }
  int state_dim() const override { return 1; }
  Vec initial_state() const override { return {0.0}; }
  const SpaceDesc& policy_space() const override { return policy_space_; }
  const SpaceDesc& loss_instance_space() const override { return loss_space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_space_; }
  bool policy_valid(const Vec& pi) const override;
  bool instance_valid(const Instance& inst) const override;
  Vec step(const Vec&, const Vec& pi, const Vec&) const override { return {pi[0]}; }
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return 12.0; }
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override;
  Instance sample_instance(RngStream& rng) const override;

  const IsotronSystem& system() const { return sys_; }
  double link(const Vec& pi, double u) const;  // sigma(u) for u in [-1, 1]
  double w1(const Vec& pi) const { return pi[0]; }
  Vec weights(const Vec& pi) const;
  Vec assemble_policy(double w1, const Vec& w, double v0, const Vec& slopes) const;

 private:
  IsotronSystem sys_;
  SpaceDesc policy_space_, loss_space_, dyn_space_;
};

// Closed-form memory coordinate of the observed-history empirical minimizer:
// the running mean of z_{s,1} clipped to [-1, 1].
double isotron_erm_w1(const std::vector<Instance>& instances);

// Full empirical fit by alternating minimization (50 outer rounds by
// default): the link is fit by cyclic coordinate descent over its knot
// values (each step an exact clipped quadratic minimization, which keeps
// |sigma| <= 1 and the slopes in [-1, 1] by construction), and the weights
// by projected gradient descent on the unit ball.  Deterministic.
Vec isotron_erm_fit(const IsotronEnv& env, const std::vector<Instance>& instances,
                    int outer_rounds = 50);

// ---------------------------------------------------------------------------
// Last-action environment with a movement charge, the lower-bound instance:
// unit balls, loss <f, z> + min(L |f - x|_2, 1), state = previous action.
// ---------------------------------------------------------------------------

class LinLowerBoundEnv final : public Environment {
 public:
  LinLowerBoundEnv(int d, double movement_scale);

  std::string id() const override { return "linlb"; }
  int state_dim() const override { return d_; }
  Vec initial_state() const override { return Vec(static_cast<std::size_t>(d_), 0.0); }
  const SpaceDesc& policy_space() const override { return space_; }
  const SpaceDesc& loss_instance_space() const override { return space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_; }
  bool policy_valid(const Vec& pi) const override;
  bool instance_valid(const Instance& inst) const override;
  Vec step(const Vec&, const Vec& pi, const Vec&) const override { return pi; }
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return 2.0; }
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override { return dot(pi, z); }
  bool stationary_loss_linear_in_z() const override { return true; }
  // Closed-form cumulative counterfactual: only round 1 pays the movement
  // charge (the state equals the policy from round 2 on), so
  //   eval(f) = <f, sum_t z_t> + min(L |f|, 1).
  std::unique_ptr<CfCumulative> make_cf_cumulative() const override;
  Instance sample_instance(RngStream& rng) const override;

  double movement_scale() const { return scale_; }

 private:
  int d_;
  double scale_;
  SpaceDesc space_, dyn_;
};

}  // namespace dynregret
