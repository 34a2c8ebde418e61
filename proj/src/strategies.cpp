#include "dynregret/strategies.hpp"

#include <algorithm>
#include <cmath>

#include "dynregret/linalg.hpp"

namespace dynregret {

namespace {

// First valid policy of a space: list order for finite menus, the box
// midpoint otherwise (falling back to a grid scan via the search routine
// when the midpoint fails the environment's validity predicate).
Vec first_valid_policy(const Environment& env, const SearchConfig& scfg) {
  const SpaceDesc& space = env.policy_space();
  if (space.has_finite()) {
    for (const Vec& c : space.finite)
      if (env.policy_valid(c)) return c;
    throw ValidationError("policy menu contains no valid candidate");
  }
  if (!space.box) throw ValidationError("policy space has neither a menu nor a box");
  Vec mid(space.box->lo.size());
  for (std::size_t i = 0; i < mid.size(); ++i)
    mid[i] = 0.5 * (space.box->lo[i] + space.box->hi[i]);
  if (env.policy_valid(mid)) return mid;
  return minimize_over_policies(env, [](const Vec&) { return 0.0; }, scfg).arg;
}

}  // namespace

// ---------------------------------------------------------------------------
// FixedLearner
// ---------------------------------------------------------------------------

void FixedLearner::reset(const Environment& env, int, std::uint64_t, std::uint64_t) {
  if (!env.policy_valid(pi_))
    throw ValidationError("fixed learner's policy is not valid for this environment");
}

// ---------------------------------------------------------------------------
// MinibatchErmLearner
// ---------------------------------------------------------------------------

MinibatchErmLearner::MinibatchErmLearner(int tau, SearchConfig scfg)
    : tau_(tau), scfg_(scfg) {
  if (tau < 1) throw ValidationError("minibatch block length must be at least 1");
}

std::string MinibatchErmLearner::id() const { return "minibatch_erm:" + fmt_int(tau_); }

void MinibatchErmLearner::reset(const Environment& env, int, std::uint64_t, std::uint64_t) {
  env_ = &env;
  cum_ = env.make_cf_cumulative();
  current_ = first_valid_policy(env, scfg_);
  prepared_round_ = 0;
}

Vec MinibatchErmLearner::erm_policy() const {
  const SpaceDesc& space = env_->policy_space();
  if (space.has_finite()) {
    bool found = false;
    double best = 0.0;
    Vec arg;
    for (const Vec& c : space.finite) {
      if (!env_->policy_valid(c)) continue;
      double v = cum_->eval(c);
      if (!found || v < best) {
        found = true;
        best = v;
        arg = c;
      }
    }
    if (!found) throw ValidationError("policy menu contains no valid candidate");
    return arg;
  }
  return minimize_over_policies(
             *env_, [this](const Vec& pi) { return cum_->eval(pi); }, scfg_)
      .arg;
}

void MinibatchErmLearner::ensure_round(int t) {
  if (t == prepared_round_) return;
  if (t % tau_ == 0) current_ = erm_policy();
  prepared_round_ = t;
}

Declared MinibatchErmLearner::declared(int t) {
  ensure_round(t);
  return {current_, true};
}

Vec MinibatchErmLearner::act(int t) {
  ensure_round(t);
  return current_;
}

void MinibatchErmLearner::observe(int, const Instance& inst) { cum_->append(inst); }

// ---------------------------------------------------------------------------
// FtplRermLearner
// ---------------------------------------------------------------------------

FtplRermLearner::FtplRermLearner(double lambda, FtplObjective objective, int declared_samples)
    : lambda_(lambda), objective_(objective), declared_samples_(declared_samples) {
  if (!(lambda > 0.0)) throw ValidationError("perturbation rate must be positive");
  if (declared_samples < 0) throw ValidationError("declared sample count must be >= 0");
}

std::string FtplRermLearner::id() const {
  return std::string("ftpl_rerm:") +
         (objective_ == FtplObjective::counterfactual ? "cf:" : "stat:") + fmt_double(lambda_);
}

void FtplRermLearner::reset(const Environment& env, int, std::uint64_t master_seed,
                            std::uint64_t run_index) {
  env_ = &env;
  master_seed_ = master_seed;
  run_index_ = run_index;
  if (!env.policy_space().has_finite())
    throw CapabilityError("follow-the-perturbed-leader needs a finite policy menu");
  cf_.reset();
  stat_.reset();
  if (objective_ == FtplObjective::counterfactual) {
    cf_ = env.make_cf_cumulative();
  } else {
    if (!env.has_stationary_loss())
      throw CapabilityError("stationary objective needs a stationary loss");
    stat_ = env.make_stationary_cum();
  }
  current_.clear();
  prepared_round_ = 0;
}

Vec FtplRermLearner::argmin_for(RngStream& rng) const {
  const std::vector<Vec>& menu = env_->policy_space().finite;
  Vec sigma(static_cast<std::size_t>(env_->policy_space().dim()));
  for (double& s : sigma) s = rng.next_exponential(lambda_);
  bool found = false;
  double best = 0.0;
  Vec arg;
  for (const Vec& c : menu) {
    if (!env_->policy_valid(c)) continue;
    double base = cf_ ? cf_->eval(c) : stat_->eval(c);
    double v = base - dot(sigma, c);
    if (!found || v < best) {
      found = true;
      best = v;
      arg = c;
    }
  }
  if (!found) throw ValidationError("policy menu contains no valid candidate");
  return arg;
}

void FtplRermLearner::ensure_played(int t) {
  if (t == prepared_round_) return;
  RngStream rng = stream_for(master_seed_, run_index_, t, Purpose::learner);
  current_ = argmin_for(rng);
  prepared_round_ = t;
}

Declared FtplRermLearner::declared(int t) {
  if (declared_samples_ == 0) {
    ensure_played(t);
    return {current_, false};
  }
  Vec mean(static_cast<std::size_t>(env_->policy_space().dim()), 0.0);
  for (int rep = 0; rep < declared_samples_; ++rep) {
    RngStream rng = stream_for(master_seed_, run_index_, t, Purpose::declared, rep);
    Vec draw = argmin_for(rng);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += draw[i];
  }
  for (double& v : mean) v /= static_cast<double>(declared_samples_);
  return {mean, false};
}

Vec FtplRermLearner::act(int t) {
  ensure_played(t);
  return current_;
}

void FtplRermLearner::observe(int, const Instance& inst) {
  if (cf_) cf_->append(inst);
  if (stat_) stat_->append(inst.z);
}

// ---------------------------------------------------------------------------
// expweights
// ---------------------------------------------------------------------------

Vec expweights_posterior(const Vec& cum_losses, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("posterior temperature must be positive");
  if (cum_losses.empty()) throw ValidationError("posterior over an empty menu");
  double m = *std::min_element(cum_losses.begin(), cum_losses.end());
  Vec q(cum_losses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = std::exp(-(cum_losses[i] - m) / lambda);
    total += q[i];
  }
  for (double& v : q) v /= total;
  return q;
}

ExpWeightsMdpLearner::ExpWeightsMdpLearner(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0)) throw ValidationError("posterior temperature must be positive");
}

std::string ExpWeightsMdpLearner::id() const { return "expweights_mdp:" + fmt_double(lambda_); }

void ExpWeightsMdpLearner::reset(const Environment& env, int, std::uint64_t, std::uint64_t) {
  env_ = dynamic_cast<const MdpEnv*>(&env);
  if (env_ == nullptr)
    throw CapabilityError("exponential weights runs on mdp environments only");
  menu_ = env_->policy_space().finite;
  chains_.clear();
  cf_states_.clear();
  for (const Vec& pi : menu_) {
    chains_.push_back(mdp_induced_transition(env_->system(), pi));
    cf_states_.push_back(env_->initial_state());
  }
  cum_.assign(menu_.size(), 0.0);
}

Vec ExpWeightsMdpLearner::mixture() const {
  Vec q = posterior();
  Vec pi(menu_.front().size(), 0.0);
  for (std::size_t p = 0; p < menu_.size(); ++p)
    for (std::size_t i = 0; i < pi.size(); ++i) pi[i] += q[p] * menu_[p][i];
  return pi;
}

void ExpWeightsMdpLearner::observe(int, const Instance& inst) {
  int S = env_->system().S;
  for (std::size_t p = 0; p < menu_.size(); ++p) {
    cum_[p] += env_->loss(menu_[p], cf_states_[p], inst.z);
    Vec next(static_cast<std::size_t>(S), 0.0);
    for (int x = 0; x < S; ++x)
      for (int y = 0; y < S; ++y)
        next[static_cast<std::size_t>(y)] +=
            cf_states_[p][static_cast<std::size_t>(x)] * chains_[p](x, y);
    cf_states_[p] = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// TrackingErmLearner
// ---------------------------------------------------------------------------

TrackingErmLearner::TrackingErmLearner(Mat K) : K_(std::move(K)) {}

void TrackingErmLearner::reset(const Environment& env, int, std::uint64_t, std::uint64_t) {
  env_ = dynamic_cast<const TrackingEnv*>(&env);
  if (env_ == nullptr)
    throw CapabilityError("the bias-refit learner runs on tracking environments only");
  Vec zero_eta(static_cast<std::size_t>(env_->system().k()), 0.0);
  if (!env_->policy_valid(env_->flatten_policy(K_, zero_eta)))
    throw ValidationError("gain is not feasible for this tracking system");
  z_sum_.assign(static_cast<std::size_t>(env_->system().d()), 0.0);
  observed_ = 0;
}

Vec TrackingErmLearner::policy() const {
  Vec mean(z_sum_.size(), 0.0);
  if (observed_ > 0)
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] = z_sum_[i] / static_cast<double>(observed_);
  Vec eta = tracking_erm_bias(K_, mean, env_->system());
  return env_->flatten_policy(K_, eta);
}

void TrackingErmLearner::observe(int, const Instance& inst) {
  for (std::size_t i = 0; i < z_sum_.size(); ++i) z_sum_[i] += inst.z[i];
  ++observed_;
}

// ---------------------------------------------------------------------------
// IsotronErmLearner
// ---------------------------------------------------------------------------

IsotronErmLearner::IsotronErmLearner(int outer_rounds) : outer_rounds_(outer_rounds) {
  if (outer_rounds < 1) throw ValidationError("fit needs at least one outer round");
}

void IsotronErmLearner::reset(const Environment& env, int, std::uint64_t, std::uint64_t) {
  env_ = dynamic_cast<const IsotronEnv*>(&env);
  if (env_ == nullptr)
    throw CapabilityError("the single-index refit learner runs on isotron environments only");
  history_.clear();
  // Round-1 default: identity link, first-coordinate weights, no memory bias.
  Vec w(static_cast<std::size_t>(env_->system().d), 0.0);
  w[0] = 1.0;
  Vec slopes(static_cast<std::size_t>(env_->system().segments), 1.0);
  current_ = env_->assemble_policy(0.0, w, -1.0, slopes);
  prepared_round_ = 1;
}

void IsotronErmLearner::ensure_round(int t) {
  if (t == prepared_round_) return;
  if (t > 1) current_ = isotron_erm_fit(*env_, history_, outer_rounds_);
  prepared_round_ = t;
}

Declared IsotronErmLearner::declared(int t) {
  ensure_round(t);
  return {current_, true};
}

Vec IsotronErmLearner::act(int t) {
  ensure_round(t);
  return current_;
}

void IsotronErmLearner::observe(int, const Instance& inst) { history_.push_back(inst); }

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

void ObliviousSequenceAdversary::reset(const Environment&, int horizon, std::uint64_t,
                                       std::uint64_t) {
  if (static_cast<int>(seq_.size()) < horizon)
    throw ValidationError("instance script is shorter than the horizon");
}

void IidAdversary::reset(const Environment& env, int, std::uint64_t master_seed,
                         std::uint64_t run_index) {
  env_ = &env;
  master_seed_ = master_seed;
  run_index_ = run_index;
}

Instance IidAdversary::move(int t, const Declared&) {
  RngStream rng = stream_for(master_seed_, run_index_, t, Purpose::adversary);
  return env_->sample_instance(rng);
}

// ---------------------------------------------------------------------------
// SwitchingAdversary
// ---------------------------------------------------------------------------

SwitchingAdversary::SwitchingAdversary(double L, int block_len) : L_(L), block_len_(block_len) {
  if (!(L > 0.0)) throw ValidationError("movement scale must be positive");
  if (block_len_ <= 0) block_len_ = std::max(1, static_cast<int>(std::floor(L)));
}

std::string SwitchingAdversary::id() const { return "switching:" + fmt_double(L_); }

void SwitchingAdversary::reset(const Environment& env, int, std::uint64_t, std::uint64_t) {
  const SpaceDesc& space = env.loss_instance_space();
  if (!space.box || space.box->dim() < 3)
    throw CapabilityError(
        "switching adversary needs a box loss-instance space of dimension >= 3");
  dim_ = space.box->dim();
  z_sum_.assign(static_cast<std::size_t>(dim_), 0.0);
  current_z_.clear();
  prev_declared_.reset();
  moved_ = 0.0;
  switch_rounds_.clear();
}

Vec SwitchingAdversary::fresh_direction(const Vec& declared_mean) const {
  // Orthonormal basis of the span to avoid: the cumulative played sum and
  // the learner's declared mean.
  std::vector<Vec> basis;
  auto push = [&basis](Vec v) {
    for (const Vec& b : basis) {
      double c = dot(v, b);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
    }
    double n = norm2(v);
    if (n > 1e-12) {
      for (double& x : v) x /= n;
      basis.push_back(std::move(v));
    }
  };
  push(z_sum_);
  push(declared_mean);

  for (int i = 0; i < dim_; ++i) {
    Vec v(static_cast<std::size_t>(dim_), 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    // Two projection passes keep the residual orthogonal to working accuracy.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& b : basis) {
        double c = dot(v, b);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= c * b[j];
      }
    }
    double n = norm2(v);
    if (n <= 1e-3) continue;  // this axis lies (almost) inside the span
    for (double& x : v) x /= n;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (std::abs(v[j]) <= 1e-9) continue;
      if (v[j] < 0.0)
        for (double& x : v) x = -x;
      break;
    }
    return v;
  }
  throw NumericError("no direction orthogonal to the played sum and declared mean");
}

Instance SwitchingAdversary::move(int t, const Declared& declared) {
  bool sw = (t == 1) || (t % block_len_ == 0);
  if (prev_declared_)
    moved_ += norm2(vec_sub(declared.mean, *prev_declared_));
  if (moved_ > 1.0 / L_) sw = true;
  if (sw) {
    current_z_ = fresh_direction(declared.mean);
    moved_ = 0.0;
    switch_rounds_.push_back(t);
  }
  prev_declared_ = declared.mean;
  for (std::size_t i = 0; i < z_sum_.size(); ++i) z_sum_[i] += current_z_[i];
  return {current_z_, {}};
}

double switching_lower_bound_value(double L, int T) {
  if (!(L > 0.0)) throw ValidationError("movement scale must be positive");
  if (T < 1) throw ValidationError("horizon must be at least 1");
  double Td = static_cast<double>(T);
  if (L < 1.0) return 0.5 * std::sqrt(Td);
  double Lf = std::floor(L);
  if (Lf <= std::cbrt(32.0 * Td)) return std::sqrt(Lf * Td / 2.0);
  return std::cbrt(2.0) * std::pow(Td, 2.0 / 3.0);
}

}  // namespace dynregret
