// Acceptance gate: twelve end-to-end checks covering the solver stack, the
// measurement engine, the shipped environments and strategies, the complexity
// estimators, and the CLI's reproducibility contract.  Each check prints one
// PASS/FAIL line with its wall time; the process exits 0 only when all pass.
//
// Wall-time caps are part of the acceptance conditions for the checks that
// state them, so a slow pass is reported as a failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dynregret/common.hpp"
#include "dynregret/complexity.hpp"
#include "dynregret/control_envs.hpp"
#include "dynregret/discrete_envs.hpp"
#include "dynregret/engine.hpp"
#include "dynregret/linalg.hpp"
#include "dynregret/protocol.hpp"
#include "dynregret/rng.hpp"
#include "dynregret/strategies.hpp"

namespace dynregret {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, const char* fmt = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

// Plays a pre-committed sequence of policies; used to exercise the engine
// with trajectories chosen by the test rather than by a strategy.
class ScriptLearner final : public Learner {
 public:
  explicit ScriptLearner(std::vector<Vec> seq) : seq_(std::move(seq)) {}
  std::string id() const override { return "script"; }
  void reset(const Environment&, int horizon, std::uint64_t, std::uint64_t) override {
    if (horizon > static_cast<int>(seq_.size()))
      throw ValidationError("script learner: sequence shorter than the horizon");
  }
  Declared declared(int t) override { return {seq_[static_cast<std::size_t>(t - 1)], true}; }
  Vec act(int t) override { return seq_[static_cast<std::size_t>(t - 1)]; }
  void observe(int, const Instance&) override {}

 private:
  std::vector<Vec> seq_;
};

std::vector<Vec> random_table(int n_pi, int n_z, RngStream& rng) {
  std::vector<Vec> table(static_cast<std::size_t>(n_pi));
  for (Vec& row : table) {
    row.resize(static_cast<std::size_t>(n_z));
    for (double& v : row) v = rng.next_uniform(-1.0, 1.0);
  }
  return table;
}

LqrSystem random_lqr(int d, int k, RngStream& rng) {
  LqrSystem sys;
  sys.A = Mat(d, d);
  for (double& v : sys.A.a) v = 0.3 * rng.next_gaussian() / std::sqrt(double(d));
  sys.B = Mat(d, k);
  for (double& v : sys.B.a) v = rng.next_gaussian() / std::sqrt(double(k));
  sys.W = random_psd_with_trace(d, 0.5, rng) + Mat::identity(d);
  EighResult eig = jacobi_eigh(sys.W);
  sys.sigma_w = eig.values.front();
  sys.psi_w = trace(sys.W);
  sys.tau_w = eig.values.back();
  sys.C = 1.0;
  sys.kappa = 4.0;
  sys.gamma = 0.2;
  sys.validate();
  return sys;
}

TrackingSystem random_tracking(int d, int k, RngStream& rng) {
  TrackingSystem sys;
  sys.A = Mat(d, d);
  for (double& v : sys.A.a) v = 0.2 * rng.next_gaussian() / std::sqrt(double(d));
  sys.B = Mat(d, k);
  for (double& v : sys.B.a) v = rng.next_gaussian();
  sys.Q = random_psd_with_trace(d, 2.0, rng) + 0.2 * Mat::identity(d);
  sys.rho = 0.85;
  sys.c_K = 0.5;
  sys.c_eta = 5.0;
  sys.c_z = 1.0;
  sys.validate();
  return sys;
}

MdpSystem random_mdp(int S, int A, double alpha, RngStream& rng) {
  MdpSystem raw;
  raw.S = S;
  raw.A = A;
  raw.transition.reserve(static_cast<std::size_t>(A));
  for (int u = 0; u < A; ++u) {
    Mat p(S, S);
    for (int x = 0; x < S; ++x) {
      double row = 0.0;
      for (int y = 0; y < S; ++y) {
        double v = -std::log(1.0 - rng.next_unit());
        p(x, y) = v;
        row += v;
      }
      for (int y = 0; y < S; ++y) p(x, y) /= row;
    }
    raw.transition.push_back(std::move(p));
  }
  return mdp_uniform_smoothing(raw, alpha);
}

Vec random_stochastic_policy(int S, int A, RngStream& rng) {
  Vec pi(static_cast<std::size_t>(S * A));
  for (int x = 0; x < S; ++x) {
    double row = 0.0;
    for (int u = 0; u < A; ++u) {
      double v = -std::log(1.0 - rng.next_unit());
      pi[static_cast<std::size_t>(x * A + u)] = v;
      row += v;
    }
    for (int u = 0; u < A; ++u) pi[static_cast<std::size_t>(x * A + u)] /= row;
  }
  return pi;
}

// Sum of |eigenvalues| of a symmetric matrix (the trace norm for symmetric
// arguments); used by the geometric stability-decay check.
double trace_abs(const Mat& m) {
  EighResult eig = jacobi_eigh(m);
  double s = 0.0;
  for (double v : eig.values) s += std::abs(v);
  return s;
}

int ceil_cuberoot(int t) {
  int m = 1;
  while (m * m * m < t) ++m;
  return m;
}

// ---------------------------------------------------------------------------
// 1. Discrete Lyapunov solves: residuals and a closed-form scalar case
// ---------------------------------------------------------------------------

Outcome c1_lyapunov() {
  RngStream rng(101);
  double worst_residual = 0.0;
  for (int i = 0; i < 1000; ++i) {
    int d = 1 + rng.next_index(8);
    Mat a(d, d);
    for (double& v : a.a) v = rng.next_gaussian();
    double target = rng.next_uniform(0.05, 0.95);
    double s = spectral_norm(a);
    if (s > 0.0) a = (target / s) * a;
    Mat w = random_psd_with_trace(d, 1.0, rng) + 0.1 * Mat::identity(d);
    Mat x = solve_discrete_lyapunov(a, w);
    Mat residual = matmul(matmul(a, x), transpose(a)) + w - x;
    worst_residual = std::max(worst_residual, max_abs(residual));
  }
  Mat a1(1, 1);
  a1(0, 0) = 0.5;
  Mat w1 = Mat::identity(1);
  double scalar = solve_discrete_lyapunov(a1, w1)(0, 0);
  double scalar_err = std::abs(scalar - 4.0 / 3.0);
  bool pass = worst_residual <= 1e-8 && scalar_err <= 1e-10;
  return {pass, "1000 solves, worst residual " + num(worst_residual, "%.3g") +
                    " (<=1e-8), scalar error " + num(scalar_err, "%.3g") + " (<=1e-10)"};
}

// ---------------------------------------------------------------------------
// 2. Stateless games: policy regret coincides with external regret exactly
// ---------------------------------------------------------------------------

Outcome c2_stateless() {
  RngStream rng(202);
  const int T = 30;
  int exact = 0;
  double worst = 0.0;
  for (int g = 0; g < 50; ++g) {
    int n_pi = 2 + rng.next_index(4);
    int n_z = 2 + rng.next_index(4);
    std::vector<Vec> table = random_table(n_pi, n_z, rng);
    TableGameEnv env(table);

    std::vector<Vec> plays;
    std::vector<Instance> seq;
    for (int t = 0; t < T; ++t) {
      plays.push_back(env.policy_space().finite[static_cast<std::size_t>(rng.next_index(n_pi))]);
      seq.push_back({env.loss_instance_space().finite[static_cast<std::size_t>(rng.next_index(n_z))], {}});
    }
    ScriptLearner learner(plays);
    ObliviousSequenceAdversary adversary(seq);
    RunSpec spec;
    spec.horizon = T;
    GameRecord rec = run_game(env, learner, adversary, spec);
    RegretReport rep = policy_regret(env, rec, SearchConfig{}, spec);

    // External regret computed straight from the table: played losses minus
    // the best single row on the realized column sequence.
    double played = 0.0;
    for (int t = 0; t < T; ++t) {
      int p = static_cast<int>(plays[static_cast<std::size_t>(t)][0]);
      int z = static_cast<int>(seq[static_cast<std::size_t>(t)].z[0]);
      played += table[static_cast<std::size_t>(p)][static_cast<std::size_t>(z)];
    }
    double best = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n_pi; ++p) {
      double cum = 0.0;
      for (int t = 0; t < T; ++t) {
        int z = static_cast<int>(seq[static_cast<std::size_t>(t)].z[0]);
        cum += table[static_cast<std::size_t>(p)][static_cast<std::size_t>(z)];
      }
      best = std::min(best, cum);
    }
    double external = played - best;
    if (rep.regret == external) ++exact;
    worst = std::max(worst, std::abs(rep.regret - external));
  }
  bool pass = exact == 50;
  return {pass, std::to_string(exact) + "/50 games bit-exact, worst gap " + num(worst, "%.3g")};
}

// ---------------------------------------------------------------------------
// 3. Dynamic stability is exactly zero for replay-identical rounds
// ---------------------------------------------------------------------------

Outcome c3_zero_stability() {
  const int T = 64;
  LinLowerBoundEnv env(3, 2.0);
  RunSpec spec;
  spec.horizon = T;
  spec.master_seed = 303;

  FixedLearner fixed(Vec{0.3, 0.1, -0.2});
  IidAdversary iid;
  GameRecord rec_fixed = run_game(env, fixed, iid, spec);
  Vec beta_fixed = dynamic_stability_profile(env, rec_fixed, spec);
  int fixed_zero = 0;
  for (double b : beta_fixed)
    if (b == 0.0) ++fixed_zero;

  const int tau = 4;
  MinibatchErmLearner minibatch(tau);
  SwitchingAdversary switching(2.0);
  GameRecord rec_mb = run_game(env, minibatch, switching, spec);
  Vec beta_mb = dynamic_stability_profile(env, rec_mb, spec);
  int off_rounds = 0, off_zero = 0;
  for (int t = 1; t <= T; ++t) {
    if (t % tau == 0) continue;  // refit rounds may move the policy
    ++off_rounds;
    if (beta_mb[static_cast<std::size_t>(t - 1)] == 0.0) ++off_zero;
  }

  bool pass = fixed_zero == T && off_zero == off_rounds;
  return {pass, "fixed " + std::to_string(fixed_zero) + "/" + std::to_string(T) +
                    " zero, off-refit minibatch " + std::to_string(off_zero) + "/" +
                    std::to_string(off_rounds) + " zero (both exact)"};
}

// ---------------------------------------------------------------------------
// 4. Mixing-gap envelopes hold pointwise on random instances
// ---------------------------------------------------------------------------

Outcome c4_mixing_envelopes() {
  RngStream rng(404);
  int mdp_ok = 0;
  for (int rep = 0; rep < 20; ++rep) {
    int S = 2 + rng.next_index(3);
    int A = 2 + rng.next_index(2);
    double alpha = rng.next_uniform(0.2, 0.8);
    MdpSystem sys = random_mdp(S, A, alpha, rng);
    MdpEnv env(sys);
    Vec pi = random_stochastic_policy(S, A, rng);
    Vec z(static_cast<std::size_t>(S * A));
    for (double& v : z) v = rng.next_unit();
    Vec gaps = mixing_gap_profile(env, pi, z, {}, 40);
    bool ok = true;
    for (int t = 1; t <= 40; ++t)
      if (gaps[static_cast<std::size_t>(t - 1)] >
          2.0 * std::exp(-double(t - 1) / sys.tau) + 1e-9)
        ok = false;
    if (ok) ++mdp_ok;
  }

  int lqr_ok = 0;
  for (int rep = 0; rep < 20; ++rep) {
    int d = 1 + rng.next_index(3);
    int k = 1 + rng.next_index(2);
    LqrSystem sys = random_lqr(d, k, rng);
    std::vector<Vec> cands = lqr_certified_candidates(sys, 1, 404000 + static_cast<std::uint64_t>(rep));
    LqrEnv env(sys, cands);
    Instance inst = env.sample_instance(rng);
    Mat q(d, d), r(k, k);
    env.split_instance(inst.z, q, r);
    double scale = (spectral_norm(q) + sys.kappa * sys.kappa * spectral_norm(r)) *
                   sys.psi_w * sys.kappa * sys.kappa / sys.gamma;
    double decay = (1.0 - sys.gamma) * (1.0 - sys.gamma);
    Vec gaps = mixing_gap_profile(env, cands[0], inst.z, {}, 30);
    bool ok = true;
    for (int t = 1; t <= 30; ++t)
      if (gaps[static_cast<std::size_t>(t - 1)] > scale * std::pow(decay, t) + 1e-9)
        ok = false;
    if (ok) ++lqr_ok;
  }

  bool pass = mdp_ok == 20 && lqr_ok == 20;
  return {pass, "chains " + std::to_string(mdp_ok) + "/20, linear-quadratic " +
                    std::to_string(lqr_ok) + "/20 instances inside their envelopes"};
}

// ---------------------------------------------------------------------------
// 5. Tracking bias refits drift no faster than psi_eta / (t+1)
// ---------------------------------------------------------------------------

Outcome c5_tracking_drift() {
  RngStream rng(505);
  const int T = 50;
  int ok_draws = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 20; ++rep) {
    int d = 2 + rng.next_index(2);
    int k = 1 + rng.next_index(2);
    TrackingSystem sys = random_tracking(d, k, rng);
    Mat gain(k, d);
    do {
      for (double& v : gain.a) v = 0.05 * rng.next_gaussian();
    } while (spectral_norm(sys.A + matmul(sys.B, gain)) > sys.rho ||
             spectral_norm(gain) > sys.c_K);
    double psi = tracking_psi_eta(sys);

    TrackingEnv env(sys);
    TrackingErmLearner learner(gain);
    IidAdversary adversary;
    RunSpec spec;
    spec.horizon = T;
    spec.master_seed = 500 + static_cast<std::uint64_t>(rep);
    GameRecord rec = run_game(env, learner, adversary, spec);

    // The policy played at round s is the minimizer fitted on s-1 samples,
    // so consecutive plays are successive minimizers with drift bound psi/s.
    bool ok = true;
    for (int s = 1; s + 1 <= T; ++s) {
      Vec eta_s = env.policy_eta(rec.policies[static_cast<std::size_t>(s - 1)]);
      Vec eta_next = env.policy_eta(rec.policies[static_cast<std::size_t>(s)]);
      double drift = norm2(vec_sub(eta_next, eta_s));
      double excess = drift - psi / double(s);
      worst_excess = std::max(worst_excess, excess);
      if (excess > 1e-12) ok = false;
    }
    if (ok) ++ok_draws;
  }
  bool pass = ok_draws == 20;
  return {pass, std::to_string(ok_draws) + "/20 draws, worst drift minus bound " +
                    num(worst_excess, "%.3g")};
}

// ---------------------------------------------------------------------------
// 6. Tree complexity: exact enumeration anchor + Monte Carlo coverage
// ---------------------------------------------------------------------------

Outcome c6_rademacher() {
  TableGameEnv sign_game(std::vector<Vec>{{1.0, -1.0}, {-1.0, 1.0}});
  double anchor = seq_rademacher_exhaustive(sign_game, 2);
  bool anchor_ok = anchor == 1.0;

  RngStream rng(606);
  int covered = 0, lower_ok = 0;
  for (int rep = 0; rep < 25; ++rep) {
    int n_pi = 2 + rng.next_index(2);
    int n_z = 2 + rng.next_index(2);
    int T = 1 + rng.next_index(3);
    TableGameEnv env(random_table(n_pi, n_z, rng));
    double exact = seq_rademacher_exhaustive(env, T);
    SeqRadConfig cfg;
    cfg.n_trees = 64;
    cfg.improve_passes = 16;
    SeqRadEstimate est = seq_rademacher_mc(env, T, cfg, 600 + static_cast<std::uint64_t>(rep));
    if (est.ci_low - 1e-9 <= exact && exact <= est.ci_high + 1e-9) ++covered;
    if (est.value <= exact + 1e-9) ++lower_ok;
  }
  bool pass = anchor_ok && covered >= 23 && lower_ok == 25;
  return {pass, "sign-game depth-2 value " + num(anchor, "%.17g") +
                    " (want 1), interval coverage " + std::to_string(covered) +
                    "/25 (need >=23), lower-estimate property " + std::to_string(lower_ok) + "/25"};
}

// ---------------------------------------------------------------------------
// 7. Minibatch on the linear movement game: growth rate and certified bound
// ---------------------------------------------------------------------------

Outcome c7_minibatch_rate() {
  const int d = 3;
  std::vector<std::pair<double, double>> points;
  bool bounded = true;
  std::string runs;
  for (int T : {512, 1024, 2048, 4096, 8192}) {
    int tau = ceil_cuberoot(T);
    LinLowerBoundEnv env(d, double(tau));
    MinibatchErmLearner learner(tau);
    SwitchingAdversary adversary{double(tau)};
    RunSpec spec;
    spec.horizon = T;
    spec.master_seed = 707;
    GameRecord rec = run_game(env, learner, adversary, spec);
    RegretReport rep = policy_regret(env, rec, SearchConfig{}, spec);

    Vec beta = dynamic_stability_profile(env, rec, spec);
    double beta_sum = 0.0;
    for (double b : beta) beta_sum += b;

    int sub_depth = (T + tau - 1) / tau;
    SeqRadConfig cfg;
    cfg.n_trees = 8;
    cfg.n_eps = 256;
    cfg.improve_passes = 4;
    SeqRadEstimate rad = seq_rademacher_mc(env, sub_depth, cfg, 7000 + static_cast<std::uint64_t>(T),
                                           [](const Vec& s) { return norm2(s); });
    MinibatchBound bound = bound_minibatch({{tau, beta_sum, rad.value}});
    if (rep.regret > bound.value) bounded = false;
    points.push_back({double(T), rep.regret});
    runs += " T=" + std::to_string(T) + ":" + num(rep.regret, "%.0f") + "<=" +
            num(bound.value, "%.0f");
  }
  SlopeFit fit = slope_fit(points);
  bool pass = bounded && fit.slope >= 0.55 && fit.slope <= 0.80;
  return {pass, "slope " + num(fit.slope) + " (want 0.55..0.80), bound holds on all runs:" + runs};
}

// ---------------------------------------------------------------------------
// 8. Exponential weights on mixing chains: square-root-like regret growth
// ---------------------------------------------------------------------------

Outcome c8_mdp_rate() {
  const int S = 3, A = 2;
  const double alpha = 0.5;
  RngStream sys_rng(808);
  MdpSystem sys = random_mdp(S, A, alpha, sys_rng);
  MdpEnv env(sys);

  std::vector<std::pair<double, double>> points;
  std::string runs;
  for (int T : {512, 1024, 2048, 4096, 8192}) {
    double lambda = sys.tau * std::sqrt(double(T) / (double(S) * std::log(double(A))));
    double mean_regret = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ExpWeightsMdpLearner learner(lambda);
      IidAdversary adversary;
      RunSpec spec;
      spec.horizon = T;
      spec.master_seed = seed;
      GameRecord rec = run_game(env, learner, adversary, spec);
      RegretReport rep = policy_regret(env, rec, SearchConfig{}, spec);
      mean_regret += rep.regret;
    }
    mean_regret /= 10.0;
    points.push_back({double(T), mean_regret});
    runs += " T=" + std::to_string(T) + ":" + num(mean_regret, "%.1f");
  }
  SlopeFit fit = slope_fit(points);
  bool pass = fit.slope >= 0.40 && fit.slope <= 0.62;
  return {pass, "slope " + num(fit.slope) + " (want 0.40..0.62), mean regret:" + runs};
}

// ---------------------------------------------------------------------------
// 9. Perturbed leader on certified linear-quadratic control: rate + decay
// ---------------------------------------------------------------------------

Outcome c9_lqr_ftpl() {
  RngStream rng(909);
  LqrSystem sys = random_lqr(2, 2, rng);
  std::vector<Vec> cands = lqr_certified_candidates(sys, 12, 9090);
  LqrEnv env(sys, cands);

  std::vector<std::pair<double, double>> points;
  GameRecord longest;
  std::string runs;
  for (int T : {128, 256, 512, 1024, 2048}) {
    double lambda = 1.0 / std::sqrt(double(T));
    double mean_regret = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      FtplRermLearner learner(lambda, FtplObjective::stationary, 0);
      IidAdversary adversary;
      RunSpec spec;
      spec.horizon = T;
      spec.master_seed = seed;
      GameRecord rec = run_game(env, learner, adversary, spec);
      RegretReport rep = policy_regret(env, rec, SearchConfig{}, spec);
      mean_regret += rep.regret;
      if (T == 2048 && seed == 1) longest = rec;
    }
    mean_regret /= 5.0;
    points.push_back({double(T), mean_regret});
    runs += " T=" + std::to_string(T) + ":" + num(mean_regret, "%.1f");
  }
  SlopeFit fit = slope_fit(points);

  // Ergodic stability must decay geometrically from each policy switch: with
  // m rounds since the switch, beta*_t is bounded by the instantaneous cost
  // scale times kappa^2 (1-gamma)^{2m} times the trace norm of the gap
  // between the covariance at the switch and the policy's stationary one.
  RunSpec spec;
  spec.horizon = longest.horizon;
  spec.master_seed = longest.master_seed;
  Vec beta_star = ergodic_stability_profile(env, longest, spec);
  int decay_ok = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  int seg_start = 1;
  double seg_gap = 0.0;  // trace norm of (cov at segment start - stationary)
  for (int t = 1; t <= longest.horizon; ++t) {
    const Vec& pi = longest.policies[static_cast<std::size_t>(t - 1)];
    if (t == 1 || pi != longest.policies[static_cast<std::size_t>(t - 2)]) {
      seg_start = t;
      Mat cov = env.state_covariance(longest.states[static_cast<std::size_t>(t - 1)]);
      Mat stat = lqr_stationary_covariance(env.policy_matrix(pi), sys);
      seg_gap = trace_abs(cov - stat);
    }
    Mat q(sys.d(), sys.d()), r(sys.k(), sys.k());
    env.split_instance(longest.instances[static_cast<std::size_t>(t - 1)].z, q, r);
    double cost_scale = spectral_norm(q) + sys.kappa * sys.kappa * spectral_norm(r);
    int m = t - seg_start;
    double envelope = cost_scale * sys.kappa * sys.kappa *
                      std::pow((1.0 - sys.gamma) * (1.0 - sys.gamma), m) * seg_gap;
    double excess = beta_star[static_cast<std::size_t>(t - 1)] - envelope;
    worst_excess = std::max(worst_excess, excess);
    if (excess <= 1e-9) ++decay_ok;
  }

  bool pass = fit.slope >= 0.40 && fit.slope <= 0.65 && decay_ok == longest.horizon;
  return {pass, "slope " + num(fit.slope) + " (want 0.40..0.65), decay rounds " +
                    std::to_string(decay_ok) + "/" + std::to_string(longest.horizon) +
                    ", worst excess " + num(worst_excess, "%.3g") + ", regret:" + runs};
}

// ---------------------------------------------------------------------------
// 10. Switching adversary forces the proven lower-bound scaling
// ---------------------------------------------------------------------------

Outcome c10_switching_lower() {
  const int T = 4096;
  std::string detail;
  bool pass = true;
  for (double L : {1.0, 4.0, 16.0}) {
    double floor_value = 0.25 * std::sqrt(L * double(T));
    for (int which = 0; which < 2; ++which) {
      LinLowerBoundEnv env(3, L);
      std::unique_ptr<Learner> learner;
      if (which == 0)
        learner = std::make_unique<FixedLearner>(Vec{0.0, 0.0, 0.0});
      else
        learner = std::make_unique<MinibatchErmLearner>(16);
      SwitchingAdversary adversary(L);
      RunSpec spec;
      spec.horizon = T;
      spec.master_seed = 1010;
      GameRecord rec = run_game(env, *learner, adversary, spec);
      RegretReport rep = policy_regret(env, rec, SearchConfig{}, spec);
      if (rep.regret < floor_value) pass = false;
      detail += " L=" + num(L, "%.0f") + "/" + (which == 0 ? "fixed" : "minibatch") + ":" +
                num(rep.regret, "%.0f") + ">=" + num(floor_value, "%.0f");
    }
  }
  return {pass, "regret floors:" + detail};
}

// ---------------------------------------------------------------------------
// 11. Minimax oracle: independent recursion + every learner's worst case
// ---------------------------------------------------------------------------

// Re-derives the game value with its own recursion over played-policy
// prefixes, paying losses only at the leaves via direct environment replay.
double independent_minimax(const Environment& env, int T) {
  const std::vector<Vec>& menu = env.policy_space().finite;
  const std::vector<Vec>& zs = env.loss_instance_space().finite;

  std::function<double(std::vector<Vec>&, std::vector<Instance>&)> rec =
      [&](std::vector<Vec>& played, std::vector<Instance>& hist) -> double {
    if (static_cast<int>(played.size()) == T) {
      double paid = 0.0;
      Vec x = env.initial_state();
      for (int s = 0; s < T; ++s) {
        paid += env.loss(played[static_cast<std::size_t>(s)], x, hist[static_cast<std::size_t>(s)].z);
        x = env.step(x, played[static_cast<std::size_t>(s)], hist[static_cast<std::size_t>(s)].zeta);
      }
      double best = std::numeric_limits<double>::infinity();
      for (const Vec& pi : menu) {
        double cum = 0.0;
        Vec cx = env.initial_state();
        for (int s = 0; s < T; ++s) {
          cum += env.loss(pi, cx, hist[static_cast<std::size_t>(s)].z);
          cx = env.step(cx, pi, hist[static_cast<std::size_t>(s)].zeta);
        }
        best = std::min(best, cum);
      }
      return paid - best;
    }
    double best_pi = std::numeric_limits<double>::infinity();
    for (const Vec& pi : menu) {
      played.push_back(pi);
      double worst_z = -std::numeric_limits<double>::infinity();
      for (const Vec& z : zs) {
        hist.push_back({z, {}});
        worst_z = std::max(worst_z, rec(played, hist));
        hist.pop_back();
      }
      played.pop_back();
      best_pi = std::min(best_pi, worst_z);
    }
    return best_pi;
  };
  std::vector<Vec> played;
  std::vector<Instance> hist;
  return rec(played, hist);
}

Outcome c11_minimax_floor() {
  RngStream rng(1111);
  int oracle_exact = 0, learner_ok = 0, learner_total = 0;
  for (int rep = 0; rep < 10; ++rep) {
    int n_pi = 2 + rng.next_index(2);
    int n_z = 2 + rng.next_index(2);
    int T = 1 + rng.next_index(2);
    std::shared_ptr<Environment> env;
    if (rep % 3 == 2) {
      auto inner = std::make_shared<TableGameEnv>(random_table(n_pi, n_z, rng));
      env = std::make_shared<MemoryWrapperEnv>(inner);
    } else {
      env = std::make_shared<TableGameEnv>(random_table(n_pi, n_z, rng));
    }

    MinimaxResult oracle = pure_minimax_oracle(*env, T);
    if (oracle.value == independent_minimax(*env, T)) ++oracle_exact;

    const std::vector<Vec>& menu = env->policy_space().finite;
    const std::vector<Vec>& zs = env->loss_instance_space().finite;
    std::vector<std::function<std::unique_ptr<Learner>()>> make = {
        [&] { return std::unique_ptr<Learner>(std::make_unique<FixedLearner>(menu[0])); },
        [] { return std::unique_ptr<Learner>(std::make_unique<MinibatchErmLearner>(1)); },
        [] { return std::unique_ptr<Learner>(std::make_unique<MinibatchErmLearner>(2)); },
        [] {
          return std::unique_ptr<Learner>(
              std::make_unique<FtplRermLearner>(1.0, FtplObjective::counterfactual));
        },
        [] {
          return std::unique_ptr<Learner>(
              std::make_unique<FtplRermLearner>(0.3, FtplObjective::stationary));
        },
    };

    // Enumerate every oblivious instance sequence; for deterministic and
    // fixed-seed learners this sweep realizes the adaptive worst case, whose
    // regret can never undercut the game value.
    long n_seq = 1;
    for (int t = 0; t < T; ++t) n_seq *= static_cast<long>(zs.size());
    for (auto& factory : make) {
      double worst = -std::numeric_limits<double>::infinity();
      for (long code = 0; code < n_seq; ++code) {
        std::vector<Instance> seq;
        long c = code;
        for (int t = 0; t < T; ++t) {
          seq.push_back({zs[static_cast<std::size_t>(c % static_cast<long>(zs.size()))], {}});
          c /= static_cast<long>(zs.size());
        }
        std::unique_ptr<Learner> learner = factory();
        ObliviousSequenceAdversary adversary(std::move(seq));
        RunSpec spec;
        spec.horizon = T;
        spec.master_seed = 11;
        GameRecord rec = run_game(*env, *learner, adversary, spec);
        RegretReport rep = policy_regret(*env, rec, SearchConfig{}, spec);
        worst = std::max(worst, rep.regret);
      }
      ++learner_total;
      if (worst >= oracle.value - 1e-9) ++learner_ok;
    }
  }
  bool pass = oracle_exact == 10 && learner_ok == learner_total;
  return {pass, "oracle matches independent recursion " + std::to_string(oracle_exact) +
                    "/10 exactly, learner worst cases above value " +
                    std::to_string(learner_ok) + "/" + std::to_string(learner_total)};
}

// ---------------------------------------------------------------------------
// 12. CLI reruns are byte-identical
// ---------------------------------------------------------------------------

struct CliResult {
  int status = -1;
  std::string output;
};

CliResult run_cli(const std::string& cmdline) {
  CliResult res;
  FILE* pipe = popen((cmdline + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return res;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.output.append(buf, n);
  int rc = pclose(pipe);
  res.status = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
  return res;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c12_cli_reruns() {
  const char* cli = std::getenv("DYNREGRET_CLI");
  if (cli == nullptr) return {false, "DYNREGRET_CLI is not set; cannot locate the binary"};

  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "dynregret_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);
  fs::path cfg_path = base / "run.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "env.kind = linlb\n"
        << "env.dim = 3\n"
        << "env.movement_scale = 2\n"
        << "learner.kind = minibatch_erm\n"
        << "learner.tau = 4\n"
        << "adversary.kind = switching\n"
        << "adversary.lipschitz = 2\n"
        << "horizon = 64\n"
        << "reps = 2\n"
        << "seed = 7\n";
  }

  fs::path out1 = base / "out1";
  fs::path out2 = base / "out2";
  std::string invoke = std::string(cli) + " run --config " + cfg_path.string();
  CliResult a = run_cli(invoke + " --out " + out1.string());
  std::string csv_a = read_file(out1 / "run.csv");
  std::string manifest_a = read_file(out1 / "manifest.json");
  CliResult b = run_cli(invoke + " --out " + out1.string());
  std::string csv_b = read_file(out1 / "run.csv");
  std::string manifest_b = read_file(out1 / "manifest.json");
  CliResult c = run_cli(invoke + " --out " + out2.string());
  std::string csv_c = read_file(out2 / "run.csv");

  bool pass = a.status == 0 && b.status == 0 && c.status == 0 && !csv_a.empty() &&
              a.output == b.output && csv_a == csv_b && manifest_a == manifest_b &&
              csv_a == csv_c;
  return {pass, "exit codes " + std::to_string(a.status) + "/" + std::to_string(b.status) +
                    "/" + std::to_string(c.status) + ", stdout " +
                    (a.output == b.output ? "identical" : "DIFFERS") + ", table " +
                    (csv_a == csv_b ? "identical" : "DIFFERS") + ", manifest " +
                    (manifest_a == manifest_b ? "identical" : "DIFFERS") +
                    ", cross-directory table " + (csv_a == csv_c ? "identical" : "DIFFERS")};
}

}  // namespace
}  // namespace dynregret

int main() {
  using namespace dynregret;
  struct Check {
    const char* name;
    Outcome (*fn)();
    double time_cap;  // seconds; 0 = none
  };
  const Check checks[] = {
      {"lyapunov-residuals", c1_lyapunov, 10.0},
      {"stateless-regret-identity", c2_stateless, 0.0},
      {"exact-zero-stability", c3_zero_stability, 0.0},
      {"mixing-envelopes", c4_mixing_envelopes, 0.0},
      {"tracking-bias-drift", c5_tracking_drift, 0.0},
      {"tree-complexity-estimates", c6_rademacher, 0.0},
      {"minibatch-rate-and-bound", c7_minibatch_rate, 300.0},
      {"mixing-chain-rate", c8_mdp_rate, 300.0},
      {"control-rate-and-decay", c9_lqr_ftpl, 600.0},
      {"switching-lower-bound", c10_switching_lower, 0.0},
      {"minimax-value-floor", c11_minimax_floor, 0.0},
      {"cli-byte-identical-reruns", c12_cli_reruns, 0.0},
  };

  int failed = 0;
  for (std::size_t i = 0; i < sizeof(checks) / sizeof(checks[0]); ++i) {
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = checks[i].fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (checks[i].time_cap > 0.0 && secs > checks[i].time_cap) {
      out.pass = false;
      out.detail += " [exceeded " + num(checks[i].time_cap, "%.0f") + "s cap]";
    }
    if (!out.pass) ++failed;
    std::printf("%s %2zu %-28s (%.2fs): %s\n", out.pass ? "PASS" : "FAIL", i + 1,
                checks[i].name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  if (failed == 0)
    std::printf("acceptance: all 12 checks passed\n");
  else
    std::printf("acceptance: %d of 12 checks FAILED\n", failed);
  return failed == 0 ? 0 : 1;
}
