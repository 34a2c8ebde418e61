#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "dynregret/discrete_envs.hpp"
#include "dynregret/engine.hpp"

using namespace dynregret;

namespace {

// Plays a scripted policy sequence; used to probe stability accounting.
class ScriptLearner final : public Learner {
 public:
  explicit ScriptLearner(std::vector<Vec> script) : script_(std::move(script)) {}
  std::string id() const override { return "script"; }
  void reset(const Environment&, int, std::uint64_t, std::uint64_t) override {}
  Declared declared(int t) override { return {script_[static_cast<std::size_t>(t - 1)], true}; }
  Vec act(int t) override { return script_[static_cast<std::size_t>(t - 1)]; }
  void observe(int, const Instance&) override {}

 private:
  std::vector<Vec> script_;
};

class SeqAdversary final : public Adversary {
 public:
  explicit SeqAdversary(std::vector<Instance> seq) : seq_(std::move(seq)) {}
  std::string id() const override { return "seq"; }
  void reset(const Environment&, int, std::uint64_t, std::uint64_t) override {}
  Instance move(int t, const Declared&) override { return seq_[static_cast<std::size_t>(t - 1)]; }
  void observe_play(int, const Vec&) override {}

 private:
  std::vector<Instance> seq_;
};

}  // namespace

TEST_CASE("table game: lookups, bounds, validation") {
  TableGameEnv env({{0.1, 0.9}, {0.7, 0.2}});
  CHECK(env.n_policies() == 2);
  CHECK(env.n_instances() == 2);
  CHECK(env.loss({1.0}, {0.0}, {0.0}) == 0.7);
  CHECK(env.loss_bound() == 0.9);
  CHECK(env.policy_space().finite.size() == 2);
  CHECK_THROWS_AS(TableGameEnv({{0.1}, {0.2, 0.3}}), ValidationError);
  CHECK_THROWS_AS(TableGameEnv({}), ValidationError);
}

TEST_CASE("memory wrapper: sign channel and switch charge") {
  auto inner = std::make_shared<TableGameEnv>(std::vector<Vec>{{0.3, 0.6}, {0.8, 0.1}});
  MemoryWrapperEnv env(inner);
  // Instances enumerate +1 block then -1 block over the inner list.
  REQUIRE(env.loss_instance_space().finite.size() == 4);
  CHECK(env.loss_instance_space().finite[0] == Vec{1.0, 0.0});
  CHECK(env.loss_instance_space().finite[3] == Vec{-1.0, 1.0});

  // Same policy as the state: pure signed inner loss.
  CHECK(env.loss({1.0}, {1.0}, {1.0, 0.0}) == 0.8);
  CHECK(env.loss({1.0}, {1.0}, {-1.0, 0.0}) == -0.8);
  // A switch adds exactly one.
  CHECK(env.loss({1.0}, {0.0}, {1.0, 0.0}) == 1.8);
  CHECK(env.loss_bound() == 1.8);
  // Stationary play never pays the switch charge.
  CHECK(env.stationary_loss({0.0}, {-1.0, 1.0}) == -0.6);
}

TEST_CASE("memory wrapper: summed dynamic stability counts the switches") {
  auto inner = std::make_shared<TableGameEnv>(std::vector<Vec>{{0.3, 0.6}, {0.8, 0.1}});
  MemoryWrapperEnv env(inner);
  // Scripted play 0,0,1,1,0,0,1 has switches at rounds 3, 5, 7.
  std::vector<Vec> script = {{0.0}, {0.0}, {1.0}, {1.0}, {0.0}, {0.0}, {1.0}};
  ScriptLearner learner(script);
  std::vector<Instance> seq(7, Instance{{1.0, 1.0}, {}});
  SeqAdversary adv(seq);
  RunSpec spec;
  spec.horizon = 7;
  GameRecord rec = run_game(env, learner, adv, spec);
  Vec beta = dynamic_stability_profile(env, rec, spec);
  REQUIRE(beta.size() == 7);
  CHECK(beta[0] == 0.0);  // the game starts as if policy 0 had been played
  double total = 0.0;
  for (double b : beta) {
    CHECK((b == 0.0 || b == 1.0));
    total += b;
  }
  CHECK(total == 3.0);
}

TEST_CASE("stationary distribution: closed form, unichain guard") {
  Mat chain = Mat::from_rows(2, 2, {0.9, 0.1, 0.2, 0.8});
  Vec d = stationary_distribution(chain);
  CHECK(std::abs(d[0] - 2.0 / 3.0) <= 1e-9);
  CHECK(std::abs(d[1] - 1.0 / 3.0) <= 1e-9);

  // Two absorbing states: no unique stationary distribution.
  CHECK_THROWS_AS(stationary_distribution(Mat::identity(2)), ValidationError);

  // A transient state feeding one closed class is fine.
  Mat funnel = Mat::from_rows(2, 2, {0.5, 0.5, 0.0, 1.0});
  Vec df = stationary_distribution(funnel);
  CHECK(std::abs(df[0]) <= 1e-9);
  CHECK(std::abs(df[1] - 1.0) <= 1e-9);
}

TEST_CASE("deterministic policy enumeration uses state 0 as the low digit") {
  std::vector<Vec> pis = mdp_deterministic_policies(2, 2);
  REQUIRE(pis.size() == 4);
  // p = 1: state 0 takes action 1, state 1 takes action 0.
  CHECK(pis[1] == Vec{0.0, 1.0, 1.0, 0.0});
  CHECK(pis[2] == Vec{1.0, 0.0, 0.0, 1.0});
}

TEST_CASE("induced chain blends action kernels by the policy rows") {
  MdpSystem sys;
  sys.S = 2;
  sys.A = 2;
  sys.transition = {Mat::from_rows(2, 2, {1.0, 0.0, 1.0, 0.0}),
                    Mat::from_rows(2, 2, {0.0, 1.0, 0.0, 1.0})};
  Vec pi = {0.5, 0.5, 0.25, 0.75};  // state 0 mixes evenly, state 1 favors action 1
  Mat chain = mdp_induced_transition(sys, pi);
  CHECK(chain(0, 0) == 0.5);
  CHECK(chain(0, 1) == 0.5);
  CHECK(chain(1, 0) == 0.25);
  CHECK(chain(1, 1) == 0.75);
}

TEST_CASE("mdp environment: exact distribution dynamics and stationary loss") {
  MdpSystem sys;
  sys.S = 2;
  sys.A = 1;
  sys.transition = {Mat::from_rows(2, 2, {0.9, 0.1, 0.2, 0.8})};
  MdpEnv env(sys);
  Vec pi = {1.0, 1.0};  // the single action in both states
  // Per-state losses 0.3 and 0.9 against the (2/3, 1/3) stationary law.
  Vec z = {0.3, 0.9};
  CHECK(std::abs(env.stationary_loss(pi, z) - 0.5) <= 1e-9);

  // Distribution states evolve by the chain.
  Vec x = env.initial_state();
  CHECK(x == Vec{0.5, 0.5});
  Vec x2 = env.step(x, pi, {});
  CHECK(x2[0] == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(x2[1] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(env.loss(pi, x, z) == doctest::Approx(0.6).epsilon(1e-15));

  // Policy validity: row-stochastic matrices only.
  CHECK(env.policy_valid({0.3, 0.7, 1.0, 0.0}) == false);  // wrong size for A=1
  CHECK(env.policy_valid({1.0, 1.0}));
  CHECK_FALSE(env.policy_valid({0.7, 1.0}));
}

TEST_CASE("mdp environment: enumeration cap raises a budget error") {
  MdpSystem sys;
  sys.S = 13;
  sys.A = 2;
  Mat uniform(13, 13, 1.0 / 13.0);
  sys.transition = {uniform, uniform};
  bool threw = false;
  try {
    MdpEnv env(sys);
  } catch (const BudgetError& e) {
    threw = true;
    CHECK(e.computed_budget == 8192.0);
  }
  CHECK(threw);
}

TEST_CASE("smoothed mdp mixing gaps obey the declared envelope") {
  RngStream rng(71);
  for (int instance = 0; instance < 5; ++instance) {
    int S = 2 + rng.next_index(3);
    int A = 2;
    MdpSystem raw;
    raw.S = S;
    raw.A = A;
    for (int u = 0; u < A; ++u) {
      Mat p(S, S);
      for (int x = 0; x < S; ++x) {
        double row = 0.0;
        for (int y = 0; y < S; ++y) {
          p(x, y) = -std::log(1.0 - rng.next_unit());  // positive entries
          row += p(x, y);
        }
        for (int y = 0; y < S; ++y) p(x, y) /= row;
      }
      raw.transition.push_back(p);
    }
    double alpha = 0.1 + 0.3 * rng.next_unit();
    MdpSystem sys = mdp_uniform_smoothing(raw, alpha);
    CHECK(sys.tau == doctest::Approx(-1.0 / std::log(1.0 - alpha)).epsilon(1e-12));
    MdpEnv env(sys);

    // Random mixed policy and random bounded losses.
    Vec pi(static_cast<std::size_t>(S * A));
    for (int x = 0; x < S; ++x) {
      double a = 0.2 + 0.6 * rng.next_unit();
      pi[static_cast<std::size_t>(x * A)] = a;
      pi[static_cast<std::size_t>(x * A + 1)] = 1.0 - a;
    }
    Vec z(static_cast<std::size_t>(S * A));
    for (double& v : z) v = rng.next_unit();

    Vec gaps = mixing_gap_profile(env, pi, z, {}, 30);
    for (int t = 1; t <= 30; ++t) {
      double envelope = 2.0 * std::exp(-static_cast<double>(t - 1) / sys.tau);
      CHECK(gaps[static_cast<std::size_t>(t - 1)] <= envelope + 1e-9);
    }
  }
}

TEST_CASE("isotron: link evaluation and the worked loss value") {
  IsotronSystem sys;
  sys.d = 1;
  IsotronEnv env(sys);
  // Identity link: v0 = -1 with all slopes 1.
  Vec slopes(16, 1.0);
  Vec pi = env.assemble_policy(0.5, {1.0}, -1.0, slopes);
  REQUIRE(env.policy_valid(pi));
  CHECK(env.link(pi, -1.0) == -1.0);
  CHECK(env.link(pi, 0.25) == 0.25);
  CHECK(env.link(pi, 1.0) == 1.0);

  // z = [z1=0, x=1, y=0] from state 0: (0-1)^2 + (0-0.5)^2 + (0-0.5)^2.
  CHECK(env.loss(pi, {0.0}, {0.0, 1.0, 0.0}) == 1.5);
  // Stationary play drops the memory term.
  CHECK(env.stationary_loss(pi, {0.0, 1.0, 0.0}) == 1.25);
  // The state remembers the played memory coordinate.
  CHECK(env.step({0.0}, pi, {}) == Vec{0.5});
}

TEST_CASE("isotron: policy feasibility guards the link range and slopes") {
  IsotronSystem sys;
  sys.d = 1;
  IsotronEnv env(sys);
  Vec ok_slopes(16, 1.0);
  CHECK(env.policy_valid(env.assemble_policy(0.0, {1.0}, -1.0, ok_slopes)));
  // A slope beyond 1 breaks the Lipschitz constraint.
  Vec steep = ok_slopes;
  steep[3] = 1.5;
  CHECK_FALSE(env.policy_valid(env.assemble_policy(0.0, {1.0}, -1.0, steep)));
  // Feasible slopes whose running sum escapes [-1, 1] break the range bound.
  CHECK_FALSE(env.policy_valid(env.assemble_policy(0.0, {1.0}, 0.5, ok_slopes)));
  // Weight vector outside the unit ball.
  IsotronSystem sys2;
  sys2.d = 2;
  IsotronEnv env2(sys2);
  CHECK_FALSE(env2.policy_valid(env2.assemble_policy(0.0, {0.9, 0.9}, -1.0, ok_slopes)));
}

TEST_CASE("isotron: running-mean memory minimizer moves at most 2/t") {
  RngStream rng(83);
  IsotronSystem sys;
  sys.d = 2;
  IsotronEnv env(sys);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Instance> instances;
    double prev = 0.0;
    for (int t = 1; t <= 50; ++t) {
      instances.push_back(env.sample_instance(rng));
      double w1 = isotron_erm_w1(instances);
      CHECK(std::abs(w1) <= 1.0);
      if (t > 1) CHECK(std::abs(w1 - prev) <= 2.0 / t + 1e-12);
      prev = w1;
    }
  }
}

TEST_CASE("isotron: alternating fit recovers a realizable model") {
  RngStream rng(97);
  IsotronSystem sys;
  sys.d = 2;
  IsotronEnv env(sys);
  // Ground truth: w* = (0.6, 0.8), link sigma*(u) = u/2, memory irrelevant.
  Vec w_star = {0.6, 0.8};
  std::vector<Instance> instances;
  for (int s = 0; s < 60; ++s) {
    Instance inst = env.sample_instance(rng);
    Vec feat(inst.z.begin() + 1, inst.z.begin() + 3);
    inst.z[3] = 0.5 * dot(feat, w_star);
    instances.push_back(inst);
  }
  Vec fit = isotron_erm_fit(env, instances);
  REQUIRE(env.policy_valid(fit));
  CHECK(fit[0] == isotron_erm_w1(instances));
  double sq = 0.0;
  for (const Instance& inst : instances) {
    Vec feat(inst.z.begin() + 1, inst.z.begin() + 3);
    double pred = env.link(fit, dot(feat, env.weights(fit)));
    sq += (inst.z[3] - pred) * (inst.z[3] - pred);
  }
  CHECK(sq / 60.0 <= 5e-3);  // mean squared fit error on realizable data
}

TEST_CASE("lower-bound environment: worked losses and the linear counterfactual") {
  LinLowerBoundEnv env(3, 2.0);
  Vec zero(3, 0.0);
  // <f, z> = 0.1 and a movement of 0.25 under scale 2: 0.1 + 0.5.
  CHECK(env.loss({0.25, 0.0, 0.0}, zero, {0.4, 0.0, 0.0}) == 0.6);
  // Once the state matches the action the charge vanishes exactly.
  CHECK(env.loss({0.25, 0.0, 0.0}, {0.25, 0.0, 0.0}, {0.4, 0.0, 0.0}) == 0.1);
  // Distant states saturate the charge at one.
  CHECK(env.loss({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}, zero) == 1.0);

  // For t >= 2 the constant-policy counterfactual is the bare linear term.
  std::vector<Instance> instances = {{{0.3, 0.1, 0.0}, {}}, {{0.0, -0.5, 0.2}, {}},
                                     {{0.7, 0.0, 0.1}, {}}};
  RunSpec spec;
  spec.horizon = 3;
  Vec f = {0.2, -0.4, 0.1};
  CHECK(counterfactual_loss(env, f, instances, 2, spec) == dot(f, instances[1].z));
  CHECK(counterfactual_loss(env, f, instances, 3, spec) == dot(f, instances[2].z));

  // The closed-form accumulator matches the generic replay.
  auto cum = env.make_cf_cumulative();
  for (const Instance& inst : instances) cum->append(inst);
  CHECK(cum->rounds() == 3);
  RngStream rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    Vec probe = {rng.next_uniform(-0.5, 0.5), rng.next_uniform(-0.5, 0.5),
                 rng.next_uniform(-0.5, 0.5)};
    double fast = cum->eval(probe);
    double slow = cumulative_counterfactual(env, probe, instances, 3, spec);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  }
}
