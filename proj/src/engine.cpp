#include "dynregret/engine.hpp"

#include <cmath>

#include "dynregret/linalg.hpp"

namespace dynregret {

GameRecord run_game(const Environment& env, Learner& learner, Adversary& adversary,
                    const RunSpec& spec) {
  if (spec.horizon <= 0) throw ValidationError("run_game: horizon must be positive");
  GameRecord rec;
  rec.env_id = env.id();
  rec.learner_id = learner.id();
  rec.adversary_id = adversary.id();
  rec.master_seed = spec.master_seed;
  rec.run_index = spec.run_index;
  rec.horizon = spec.horizon;
  rec.policies.reserve(spec.horizon);
  rec.instances.reserve(spec.horizon);
  rec.states.reserve(spec.horizon);
  rec.losses.reserve(spec.horizon);

  learner.reset(env, spec.horizon, spec.master_seed, spec.run_index);
  adversary.reset(env, spec.horizon, spec.master_seed, spec.run_index);

  Vec x = env.initial_state();
  const bool noisy = env.has_noise();
  for (int t = 1; t <= spec.horizon; ++t) {
    Declared decl;
    if (adversary.wants_declared()) decl = learner.declared(t);
    const Instance inst = adversary.move(t, decl);
    if (!env.instance_valid(inst))
      throw ValidationError("run_game: adversary '" + adversary.id() +
                            "' produced an invalid instance at round " + fmt_int(t));
    const Vec pi = learner.act(t);
    if (!env.policy_valid(pi))
      throw ValidationError("run_game: learner '" + learner.id() +
                            "' played an invalid policy at round " + fmt_int(t));
    const double l = env.loss(pi, x, inst.z);

    rec.policies.push_back(pi);
    rec.instances.push_back(inst);
    rec.states.push_back(x);
    rec.losses.push_back(l);

    learner.observe(t, inst);
    adversary.observe_play(t, pi);

    if (t < spec.horizon) {
      x = env.step(x, pi, inst.zeta);
      if (noisy) {
        RngStream noise = stream_for(spec.master_seed, spec.run_index,
                                     static_cast<std::uint64_t>(t), Purpose::dynamics_noise);
        const Vec w = env.sample_noise(noise);
        if (w.size() != x.size())
          throw ValidationError("run_game: noise dimension mismatch");
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[i];
      }
    }
  }
  return rec;
}

namespace {

// One noisy constant-policy rollout; repetition rep uses noise substreams
// keyed by (round, rep) only, independent of pi.
double noisy_cf_rollout(const Environment& env, const Vec& pi,
                        const std::vector<Instance>& instances, int t,
                        const RunSpec& spec, std::uint64_t rep) {
  Vec x = env.initial_state();
  for (int s = 1; s < t; ++s) {
    x = env.step(x, pi, instances[static_cast<std::size_t>(s - 1)].zeta);
    RngStream noise = stream_for(spec.master_seed, spec.run_index,
                                 static_cast<std::uint64_t>(s), Purpose::counterfactual, rep);
    const Vec w = env.sample_noise(noise);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[i];
  }
  return env.loss(pi, x, instances[static_cast<std::size_t>(t - 1)].z);
}

}  // namespace

double counterfactual_loss(const Environment& env, const Vec& pi,
                           const std::vector<Instance>& instances, int t,
                           const RunSpec& spec) {
  if (t < 1 || t > static_cast<int>(instances.size()))
    throw ValidationError("counterfactual_loss: round out of range");
  if (!env.has_noise()) {
    Vec x = env.initial_state();
    for (int s = 1; s < t; ++s)
      x = env.step(x, pi, instances[static_cast<std::size_t>(s - 1)].zeta);
    return env.loss(pi, x, instances[static_cast<std::size_t>(t - 1)].z);
  }
  if (spec.n_w <= 0) throw ValidationError("counterfactual_loss: n_w must be positive");
  double sum = 0.0;
  for (int rep = 0; rep < spec.n_w; ++rep)
    sum += noisy_cf_rollout(env, pi, instances, t, spec, static_cast<std::uint64_t>(rep));
  return sum / spec.n_w;
}

double cumulative_counterfactual(const Environment& env, const Vec& pi,
                                 const std::vector<Instance>& instances, int upto,
                                 const RunSpec& spec) {
  if (upto < 0 || upto > static_cast<int>(instances.size()))
    throw ValidationError("cumulative_counterfactual: round out of range");
  if (!env.has_noise()) {
    // Single replay; losses accumulate in round order.
    Vec x = env.initial_state();
    double cum = 0.0;
    for (int s = 1; s <= upto; ++s) {
      const Instance& inst = instances[static_cast<std::size_t>(s - 1)];
      cum += env.loss(pi, x, inst.z);
      x = env.step(x, pi, inst.zeta);
    }
    return cum;
  }
  double cum = 0.0;
  for (int s = 1; s <= upto; ++s) cum += counterfactual_loss(env, pi, instances, s, spec);
  return cum;
}

namespace {

SearchResult search_finite(const Environment& env,
                           const std::function<double(const Vec&)>& objective,
                           const std::vector<Vec>& candidates, const SearchConfig& cfg) {
  SearchResult best;
  bool found = false;
  for (const Vec& c : candidates) {
    if (!env.policy_valid(c)) continue;
    if (best.evals >= cfg.max_evals)
      throw BudgetError("policy search exceeded its evaluation budget of " +
                            fmt_int(cfg.max_evals),
                        static_cast<double>(candidates.size()));
    const double v = objective(c);
    ++best.evals;
    if (!found || v < best.value) {
      best.value = v;
      best.arg = c;
      found = true;
    }
  }
  if (!found) throw NumericError("policy search: no valid candidate in the finite list");
  return best;
}

SearchResult search_grid(const Environment& env,
                         const std::function<double(const Vec&)>& objective,
                         const BoxSpace& box, const SearchConfig& cfg) {
  const int dim = box.dim();
  if (dim <= 0) throw ValidationError("policy search: empty box");
  if (cfg.grid_points < 2) throw ValidationError("policy search: grid_points must be >= 2");
  double per_pass = 1.0;
  for (int i = 0; i < dim; ++i) per_pass *= cfg.grid_points;
  const double budget = per_pass * (1 + cfg.refine_rounds);
  if (budget > static_cast<double>(cfg.max_evals))
    throw BudgetError("policy grid search needs " + fmt_double(budget) +
                          " evaluations, over the budget of " + fmt_int(cfg.max_evals),
                      budget);

  SearchResult best;
  bool found = false;
  Vec lo = box.lo, hi = box.hi;
  for (int round = 0; round <= cfg.refine_rounds; ++round) {
    // Lexicographic sweep: coordinate 0 most significant, ascending values,
    // so the first strict minimum is the lexicographically smallest argmin.
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    Vec point(static_cast<std::size_t>(dim));
    bool done = false;
    while (!done) {
      for (int i = 0; i < dim; ++i) {
        const double f = static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                         (cfg.grid_points - 1);
        point[static_cast<std::size_t>(i)] = lo[static_cast<std::size_t>(i)] +
            f * (hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]);
      }
      if (env.policy_valid(point)) {
        const double v = objective(point);
        ++best.evals;
        if (!found || v < best.value) {
          best.value = v;
          best.arg = point;
          found = true;
        }
      }
      // Advance the last coordinate fastest.
      int k = dim - 1;
      while (k >= 0) {
        if (++idx[static_cast<std::size_t>(k)] < cfg.grid_points) break;
        idx[static_cast<std::size_t>(k)] = 0;
        --k;
      }
      if (k < 0) done = true;
    }
    if (!found)
      throw NumericError("policy grid search: no valid candidate on the grid");
    if (round == cfg.refine_rounds) break;
    // Shrink to one previous cell's width on each side of the incumbent,
    // clipped to the original box.
    Vec nlo(static_cast<std::size_t>(dim)), nhi(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);
      const double cell = (hi[ui] - lo[ui]) / (cfg.grid_points - 1);
      nlo[ui] = std::max(box.lo[ui], best.arg[ui] - cell);
      nhi[ui] = std::min(box.hi[ui], best.arg[ui] + cell);
    }
    lo = nlo;
    hi = nhi;
  }
  return best;
}

}  // namespace

SearchResult minimize_over_policies(const Environment& env,
                                    const std::function<double(const Vec&)>& objective,
                                    const SearchConfig& cfg) {
  const SpaceDesc& ps = env.policy_space();
  if (ps.has_finite()) return search_finite(env, objective, ps.finite, cfg);
  if (ps.box) return search_grid(env, objective, *ps.box, cfg);
  throw CapabilityError("environment '" + env.id() +
                        "' exposes no searchable policy space");
}

RegretReport policy_regret(const Environment& env, const GameRecord& rec,
                           const SearchConfig& scfg, const RunSpec& spec) {
  RegretReport rep;
  for (double l : rec.losses) rep.learner_cum += l;

  const int horizon = rec.horizon;
  SearchResult sr;
  if (!env.has_noise()) {
    std::unique_ptr<CfCumulative> cf = env.make_cf_cumulative();
    for (const Instance& inst : rec.instances) cf->append(inst);
    sr = minimize_over_policies(env, [&](const Vec& pi) { return cf->eval(pi); }, scfg);
  } else {
    sr = minimize_over_policies(
        env,
        [&](const Vec& pi) {
          return cumulative_counterfactual(env, pi, rec.instances, horizon, spec);
        },
        scfg);
  }
  rep.comparator = sr.arg;
  rep.comparator_cum = sr.value;
  rep.comparator_evals = sr.evals;
  rep.regret = rep.learner_cum - rep.comparator_cum;

  // Per-round prefix sums of the final comparator's counterfactuals.
  rep.comparator_cum_prefix.resize(static_cast<std::size_t>(horizon), 0.0);
  if (!env.has_noise()) {
    Vec x = env.initial_state();
    double cum = 0.0;
    for (int t = 1; t <= horizon; ++t) {
      const Instance& inst = rec.instances[static_cast<std::size_t>(t - 1)];
      cum += env.loss(rep.comparator, x, inst.z);
      rep.comparator_cum_prefix[static_cast<std::size_t>(t - 1)] = cum;
      x = env.step(x, rep.comparator, inst.zeta);
    }
  } else {
    double cum = 0.0;
    for (int t = 1; t <= horizon; ++t) {
      cum += counterfactual_loss(env, rep.comparator, rec.instances, t, spec);
      rep.comparator_cum_prefix[static_cast<std::size_t>(t - 1)] = cum;
    }
  }
  return rep;
}

Vec dynamic_stability_profile(const Environment& env, const GameRecord& rec,
                              const RunSpec& spec) {
  Vec beta(static_cast<std::size_t>(rec.horizon), 0.0);
  const bool noisy = env.has_noise();
  for (int t = 1; t <= rec.horizon; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t - 1);
    const Vec& pi = rec.policies[ti];
    double played;
    if (!noisy) {
      played = rec.losses[ti];
    } else {
      // E_w of the played-prefix trajectory, common random numbers with the
      // counterfactual below.
      double sum = 0.0;
      for (int repn = 0; repn < spec.n_w; ++repn) {
        Vec x = env.initial_state();
        for (int s = 1; s < t; ++s) {
          x = env.step(x, rec.policies[static_cast<std::size_t>(s - 1)],
                       rec.instances[static_cast<std::size_t>(s - 1)].zeta);
          RngStream noise = stream_for(spec.master_seed, spec.run_index,
                                       static_cast<std::uint64_t>(s),
                                       Purpose::counterfactual,
                                       static_cast<std::uint64_t>(repn));
          const Vec w = env.sample_noise(noise);
          for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[i];
        }
        sum += env.loss(pi, x, rec.instances[ti].z);
      }
      played = sum / spec.n_w;
    }
    const double cf = counterfactual_loss(env, pi, rec.instances, t, spec);
    beta[ti] = std::fabs(played - cf);
  }
  return beta;
}

Vec ergodic_stability_profile(const Environment& env, const GameRecord& rec,
                              const RunSpec& spec) {
  if (!env.has_stationary_loss())
    throw CapabilityError("ergodic stability requires a stationary loss");
  Vec beta(static_cast<std::size_t>(rec.horizon), 0.0);
  for (int t = 1; t <= rec.horizon; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t - 1);
    const Vec& pi = rec.policies[ti];
    double played;
    if (!env.has_noise()) {
      played = rec.losses[ti];
    } else {
      double sum = 0.0;
      for (int repn = 0; repn < spec.n_w; ++repn) {
        Vec x = env.initial_state();
        for (int s = 1; s < t; ++s) {
          x = env.step(x, rec.policies[static_cast<std::size_t>(s - 1)],
                       rec.instances[static_cast<std::size_t>(s - 1)].zeta);
          RngStream noise = stream_for(spec.master_seed, spec.run_index,
                                       static_cast<std::uint64_t>(s),
                                       Purpose::counterfactual,
                                       static_cast<std::uint64_t>(repn));
          const Vec w = env.sample_noise(noise);
          for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[i];
        }
        sum += env.loss(pi, x, rec.instances[ti].z);
      }
      played = sum / spec.n_w;
    }
    beta[ti] = std::fabs(played - env.stationary_loss(pi, rec.instances[ti].z));
  }
  return beta;
}

Vec mixing_gap_profile(const Environment& env, const Vec& pi, const Vec& z,
                       const Vec& zeta, int horizon) {
  if (!env.has_stationary_loss())
    throw CapabilityError("mixing gap requires a stationary loss");
  if (env.has_noise())
    throw CapabilityError(
        "mixing gap profile requires deterministic (distribution-state) dynamics");
  const double stat = env.stationary_loss(pi, z);
  Vec gap(static_cast<std::size_t>(horizon), 0.0);
  Vec x = env.initial_state();
  for (int t = 1; t <= horizon; ++t) {
    gap[static_cast<std::size_t>(t - 1)] = std::fabs(env.loss(pi, x, z) - stat);
    x = env.step(x, pi, zeta);
  }
  return gap;
}

}  // namespace dynregret
