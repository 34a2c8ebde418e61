#pragma once

// Shipped learners and adversaries for the repeated game.
//
// Learners:
//   FixedLearner        — plays one policy forever.
//   MinibatchErmLearner — empirical minimization of the cumulative
//                         counterfactual loss, refreshed on a block schedule.
//   FtplRermLearner     — follow the perturbed leader over a finite policy
//                         menu, with exponential perturbations redrawn each
//                         round and a Monte Carlo declared mean.
//   ExpWeightsMdpLearner— exponential weights over the deterministic-policy
//                         menu of an MDP, played as the posterior mixture.
//   TrackingErmLearner  — fixed feedback gain, bias refit to the running
//                         mean target in closed form each round.
//   IsotronErmLearner   — full empirical refit of the single-index model
//                         each round by alternating minimization.
//
// Adversaries:
//   ObliviousSequenceAdversary — replays a fixed instance script.
//   IidAdversary               — samples env.sample_instance each round from
//                                a per-round substream.
//   SwitchingAdversary         — orthogonal-direction switching play that
//                                punishes learner movement (see below).

#include <memory>
#include <optional>

#include "dynregret/control_envs.hpp"
#include "dynregret/discrete_envs.hpp"
#include "dynregret/engine.hpp"
#include "dynregret/protocol.hpp"

namespace dynregret {

// ---------------------------------------------------------------------------
// Learners
// ---------------------------------------------------------------------------

class FixedLearner final : public Learner {
 public:
  explicit FixedLearner(Vec pi) : pi_(std::move(pi)) {}
  std::string id() const override { return "fixed"; }
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Declared declared(int) override { return {pi_, true}; }
  Vec act(int) override { return pi_; }
  void observe(int, const Instance&) override {}

 private:
  Vec pi_;
};

// Empirical minimizer of the cumulative counterfactual loss over rounds
// 1..t-1, recomputed at rounds t == 0 (mod tau) and held in between.  The
// initial policy is the first valid candidate of the policy space (finite:
// list order; box: the midpoint, else the first valid grid corner scan hit).
// Deterministic: declared == played.
class MinibatchErmLearner final : public Learner {
 public:
  explicit MinibatchErmLearner(int tau, SearchConfig scfg = {});
  std::string id() const override;
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Declared declared(int t) override;
  Vec act(int t) override;
  void observe(int t, const Instance& inst) override;

 private:
  void ensure_round(int t);
  Vec erm_policy() const;

  int tau_;
  SearchConfig scfg_;
  const Environment* env_ = nullptr;
  std::unique_ptr<CfCumulative> cum_;
  Vec current_;
  int prepared_round_ = 0;
};

// Which cumulative objective follow-the-perturbed-leader minimizes.
enum class FtplObjective {
  counterfactual,  // replayed constant-policy losses over the history
  stationary,      // steady-state losses of the observed instances
};

// Follow the perturbed leader over the environment's finite policy menu:
//   pi_t = argmin_pi  C_{t-1}(pi) - <sigma_t, pi>,
// with sigma_t drawn fresh each round, one Exp(lambda) variate per policy
// coordinate, from the round's learner substream.  declared(t) reports the
// Monte Carlo mean of the argmin over declared-purpose perturbation draws,
// leaving the played draw untouched.  Ties break by menu order.
class FtplRermLearner final : public Learner {
 public:
  FtplRermLearner(double lambda, FtplObjective objective = FtplObjective::counterfactual,
                  int declared_samples = 64);
  std::string id() const override;
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Declared declared(int t) override;
  Vec act(int t) override;
  void observe(int t, const Instance& inst) override;

 private:
  Vec argmin_for(RngStream& rng) const;
  void ensure_played(int t);

  double lambda_;
  FtplObjective objective_;
  int declared_samples_;
  const Environment* env_ = nullptr;
  std::uint64_t master_seed_ = 0, run_index_ = 0;
  std::unique_ptr<CfCumulative> cf_;
  std::unique_ptr<StationaryCum> stat_;
  Vec current_;
  int prepared_round_ = 0;
};

// Posterior q over candidates given cumulative losses: q_p proportional to
// exp(-cum_p / lambda), computed stably against the running minimum.
Vec expweights_posterior(const Vec& cum_losses, double lambda);

// Exponential weights over an MDP's deterministic-policy menu.  Maintains
// each candidate's constant-policy counterfactual loss incrementally (one
// distribution per candidate, advanced by its own induced chain) and plays
// the posterior mixture, which is itself a valid row-stochastic policy.
class ExpWeightsMdpLearner final : public Learner {
 public:
  explicit ExpWeightsMdpLearner(double lambda);
  std::string id() const override;
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Declared declared(int) override { return {mixture(), true}; }
  Vec act(int) override { return mixture(); }
  void observe(int t, const Instance& inst) override;

  // Current posterior over the deterministic-policy menu.
  Vec posterior() const { return expweights_posterior(cum_, lambda_); }

 private:
  Vec mixture() const;

  double lambda_;
  const MdpEnv* env_ = nullptr;
  std::vector<Vec> menu_;
  std::vector<Mat> chains_;     // induced transition per candidate
  std::vector<Vec> cf_states_;  // counterfactual distribution per candidate
  Vec cum_;                     // cumulative counterfactual loss per candidate
};

// Fixed gain K; the bias is refit each round to the running mean target in
// closed form (eta_1 = 0 from the empty history).
class TrackingErmLearner final : public Learner {
 public:
  explicit TrackingErmLearner(Mat K);
  std::string id() const override { return "tracking_erm"; }
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Declared declared(int) override { return {policy(), true}; }
  Vec act(int) override { return policy(); }
  void observe(int t, const Instance& inst) override;

 private:
  Vec policy() const;

  Mat K_;
  const TrackingEnv* env_ = nullptr;
  Vec z_sum_;
  int observed_ = 0;
};

// Refits the single-index model to the full history each round; round 1
// plays the identity-link unit policy.  Deterministic.
class IsotronErmLearner final : public Learner {
 public:
  explicit IsotronErmLearner(int outer_rounds = 50);
  std::string id() const override { return "isotron_erm"; }
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Declared declared(int t) override;
  Vec act(int t) override;
  void observe(int t, const Instance& inst) override;

 private:
  void ensure_round(int t);

  int outer_rounds_;
  const IsotronEnv* env_ = nullptr;
  std::vector<Instance> history_;
  Vec current_;
  int prepared_round_ = 0;
};

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

class ObliviousSequenceAdversary final : public Adversary {
 public:
  explicit ObliviousSequenceAdversary(std::vector<Instance> seq) : seq_(std::move(seq)) {}
  std::string id() const override { return "oblivious_sequence"; }
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Instance move(int t, const Declared&) override {
    return seq_[static_cast<std::size_t>(t - 1)];
  }
  void observe_play(int, const Vec&) override {}

 private:
  std::vector<Instance> seq_;
};

class IidAdversary final : public Adversary {
 public:
  std::string id() const override { return "iid"; }
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  Instance move(int t, const Declared&) override;
  void observe_play(int, const Vec&) override {}

 private:
  const Environment* env_ = nullptr;
  std::uint64_t master_seed_ = 0, run_index_ = 0;
};

// Movement-punishing adversary for movement-cost environments with a box
// loss-instance space of dimension >= 3.  It holds a unit direction z and
// replays it until a switch fires, then picks a fresh unit direction
// orthogonal to both the cumulative played sum Z_{t-1} and the learner's
// declared mean (Gram-Schmidt over the canonical basis; the first
// substantial coordinate of the result is made positive).  Switch triggers:
//   - round 1, and every round with t == 0 (mod block_len);
//   - accumulated declared movement since the last switch exceeding 1/L,
//     measured as sum_t |declared_t - declared_{t-1}|_2.
// block_len defaults to max(1, floor(L)).
class SwitchingAdversary final : public Adversary {
 public:
  explicit SwitchingAdversary(double L, int block_len = 0);
  std::string id() const override;
  void reset(const Environment& env, int horizon, std::uint64_t master_seed,
             std::uint64_t run_index) override;
  bool wants_declared() const override { return true; }
  Instance move(int t, const Declared& declared) override;
  void observe_play(int, const Vec&) override {}

  // Rounds at which a fresh direction was emitted (for diagnostics/tests).
  const std::vector<int>& switch_rounds() const { return switch_rounds_; }

 private:
  Vec fresh_direction(const Vec& declared_mean) const;

  double L_;
  int block_len_;
  int dim_ = 0;
  Vec z_sum_, current_z_;
  std::optional<Vec> prev_declared_;
  double moved_ = 0.0;
  std::vector<int> switch_rounds_;
};

// Proved floor on the achievable regret of any learner against the switching
// construction at movement scale L over T rounds:
//   sqrt(T)/2                 for 0 < L < 1,
//   sqrt(floor(L) T / 2)      for 1 <= floor(L) <= (32 T)^{1/3},
//   2^{1/3} T^{2/3}           above that,
// with non-integer L >= 1 rounded down to the block length actually played.
double switching_lower_bound_value(double L, int T);

}  // namespace dynregret
