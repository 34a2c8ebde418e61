#include "dynregret/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

#include "dynregret/complexity.hpp"
#include "dynregret/discrete_envs.hpp"
#include "dynregret/engine.hpp"
#include "dynregret/strategies.hpp"

namespace dynregret {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& key, const std::string& raw) {
  const char* begin = raw.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ValidationError("config key '" + key + "' is not a number: '" + raw + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& raw) {
  const char* begin = raw.c_str();
  char* end = nullptr;
  long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw ValidationError("config key '" + key + "' is not an integer: '" + raw + "'");
  return v;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + fmt_int(lineno) + " is not 'key = value': '" +
                            line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos)
      throw ValidationError("config line " + fmt_int(lineno) + " has a malformed key: '" +
                            line + "'");
    if (cfg.count(key)) throw ValidationError("duplicate config key: '" + key + "'");
    cfg[key] = value;
  }
  return cfg;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string cfg_str(const ConfigMap& cfg, const std::string& key, const std::string& def) {
  auto it = cfg.find(key);
  return it == cfg.end() ? def : it->second;
}

std::string cfg_require(const ConfigMap& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) throw ValidationError("missing required config key: '" + key + "'");
  return it->second;
}

long long cfg_int(const ConfigMap& cfg, const std::string& key, long long def) {
  auto it = cfg.find(key);
  return it == cfg.end() ? def : parse_int(key, it->second);
}

std::uint64_t cfg_u64(const ConfigMap& cfg, const std::string& key, std::uint64_t def) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return def;
  long long v = parse_int(key, it->second);
  if (v < 0) throw ValidationError("config key '" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

double cfg_double(const ConfigMap& cfg, const std::string& key, double def) {
  auto it = cfg.find(key);
  return it == cfg.end() ? def : parse_double(key, it->second);
}

bool cfg_bool(const ConfigMap& cfg, const std::string& key, bool def) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return def;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ValidationError("config key '" + key + "' is not a boolean: '" + it->second + "'");
}

Vec cfg_vec(const ConfigMap& cfg, const std::string& key) {
  Vec out;
  for (const std::string& part : split(cfg_require(cfg, key), ','))
    out.push_back(parse_double(key, trim(part)));
  return out;
}

std::string canonical_echo(const ConfigMap& cfg) {
  std::string echo;
  for (const auto& [k, v] : cfg) echo += k + "=" + v + "\n";
  return echo;
}

std::string config_hash(const ConfigMap& cfg) {
  std::string echo = canonical_echo(cfg);
  return hex16(fnv1a(echo.data(), echo.size()));
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

namespace {

// Random row-stochastic transitions (exponential weights, normalized) blended
// with the uniform distribution so the declared mixing time is certified.
MdpSystem random_mdp_system(int S, int A, double alpha, std::uint64_t seed) {
  RngStream rng = stream_for(seed, 0, 0, Purpose::instance_gen);
  MdpSystem raw;
  raw.S = S;
  raw.A = A;
  for (int u = 0; u < A; ++u) {
    Mat p(S, S);
    for (int x = 0; x < S; ++x) {
      double row = 0.0;
      for (int y = 0; y < S; ++y) {
        p(x, y) = -std::log(1.0 - rng.next_unit());
        row += p(x, y);
      }
      for (int y = 0; y < S; ++y) p(x, y) /= row;
    }
    raw.transition.push_back(p);
  }
  return mdp_uniform_smoothing(raw, alpha);
}

std::set<std::string> env_allowed(const ConfigMap& cfg) {
  std::string kind = cfg_require(cfg, "env.kind");
  if (kind == "table" || kind == "memory_table")
    return {"env.kind", "env.policies", "env.instances", "env.seed"};
  if (kind == "linlb") return {"env.kind", "env.dim", "env.movement_scale"};
  if (kind == "mdp")
    return {"env.kind", "env.states", "env.actions", "env.alpha", "env.seed"};
  throw ValidationError("unknown env.kind: '" + kind + "'");
}

std::set<std::string> learner_allowed(const ConfigMap& cfg) {
  std::string kind = cfg_require(cfg, "learner.kind");
  if (kind == "fixed") return {"learner.kind", "learner.policy", "learner.policy_index"};
  if (kind == "minibatch_erm") return {"learner.kind", "learner.tau"};
  if (kind == "ftpl")
    return {"learner.kind", "learner.lambda", "learner.objective", "learner.declared_samples"};
  if (kind == "expweights") return {"learner.kind", "learner.lambda"};
  throw ValidationError("unknown learner.kind: '" + kind + "'");
}

std::set<std::string> adversary_allowed(const ConfigMap& cfg) {
  std::string kind = cfg_str(cfg, "adversary.kind", "iid");
  if (kind == "iid") return {"adversary.kind"};
  if (kind == "switching")
    return {"adversary.kind", "adversary.lipschitz", "adversary.block_len"};
  throw ValidationError("unknown adversary.kind: '" + kind + "'");
}

const std::set<std::string> kRademacherKeys = {
    "rademacher.exhaustive", "rademacher.budget",    "rademacher.trees",
    "rademacher.eps",        "rademacher.passes",    "rademacher.probes",
    "rademacher.exact_cap",  "rademacher.sequence_threshold",
    "rademacher.linear_sup"};

void ensure_allowed(const ConfigMap& cfg, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : cfg)
    if (!allowed.count(k)) throw ValidationError("unknown config key: '" + k + "'");
}

}  // namespace

std::shared_ptr<Environment> make_environment(const ConfigMap& cfg) {
  std::string kind = cfg_require(cfg, "env.kind");
  if (kind == "table" || kind == "memory_table") {
    long long np = cfg_int(cfg, "env.policies", 2);
    long long nz = cfg_int(cfg, "env.instances", 2);
    if (np < 1 || nz < 1)
      throw ValidationError("env.policies and env.instances must be positive");
    RngStream rng = stream_for(cfg_u64(cfg, "env.seed", 1), 0, 0, Purpose::instance_gen);
    std::vector<Vec> table(static_cast<std::size_t>(np));
    for (Vec& row : table)
      for (long long j = 0; j < nz; ++j) row.push_back(rng.next_unit());
    auto base = std::make_shared<TableGameEnv>(std::move(table));
    if (kind == "table") return base;
    return std::make_shared<MemoryWrapperEnv>(base);
  }
  if (kind == "linlb") {
    long long dim = cfg_int(cfg, "env.dim", 3);
    double scale = cfg_double(cfg, "env.movement_scale", 2.0);
    if (dim < 1) throw ValidationError("env.dim must be positive");
    return std::make_shared<LinLowerBoundEnv>(static_cast<int>(dim), scale);
  }
  if (kind == "mdp") {
    long long S = cfg_int(cfg, "env.states", 3);
    long long A = cfg_int(cfg, "env.actions", 2);
    double alpha = cfg_double(cfg, "env.alpha", 0.3);
    if (S < 1 || A < 1) throw ValidationError("env.states and env.actions must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw ValidationError("env.alpha must lie in (0, 1]");
    MdpSystem sys = random_mdp_system(static_cast<int>(S), static_cast<int>(A), alpha,
                                      cfg_u64(cfg, "env.seed", 1));
    return std::make_shared<MdpEnv>(std::move(sys));
  }
  throw ValidationError("unknown env.kind: '" + kind + "'");
}

std::unique_ptr<Learner> make_learner(const ConfigMap& cfg, const Environment& env) {
  std::string kind = cfg_require(cfg, "learner.kind");
  if (kind == "fixed") {
    if (cfg.count("learner.policy")) return std::make_unique<FixedLearner>(cfg_vec(cfg, "learner.policy"));
    long long idx = cfg_int(cfg, "learner.policy_index", 0);
    const SpaceDesc& space = env.policy_space();
    if (!space.has_finite())
      throw ValidationError(
          "learner.policy_index needs a finite policy menu; give learner.policy instead");
    if (idx < 0 || idx >= static_cast<long long>(space.finite.size()))
      throw ValidationError("learner.policy_index is out of range");
    return std::make_unique<FixedLearner>(space.finite[static_cast<std::size_t>(idx)]);
  }
  if (kind == "minibatch_erm") {
    long long tau = cfg_int(cfg, "learner.tau", 0);
    if (tau < 1) throw ValidationError("learner.tau must be a positive integer");
    return std::make_unique<MinibatchErmLearner>(static_cast<int>(tau));
  }
  if (kind == "ftpl") {
    double lambda = cfg_double(cfg, "learner.lambda", 0.0);
    if (!(lambda > 0.0)) throw ValidationError("learner.lambda must be positive");
    std::string obj = cfg_str(cfg, "learner.objective", "counterfactual");
    FtplObjective objective;
    if (obj == "counterfactual")
      objective = FtplObjective::counterfactual;
    else if (obj == "stationary")
      objective = FtplObjective::stationary;
    else
      throw ValidationError("unknown learner.objective: '" + obj + "'");
    long long ds = cfg_int(cfg, "learner.declared_samples", 64);
    if (ds < 0) throw ValidationError("learner.declared_samples must be non-negative");
    return std::make_unique<FtplRermLearner>(lambda, objective, static_cast<int>(ds));
  }
  if (kind == "expweights") {
    double lambda = cfg_double(cfg, "learner.lambda", 0.0);
    if (!(lambda > 0.0)) throw ValidationError("learner.lambda must be positive");
    return std::make_unique<ExpWeightsMdpLearner>(lambda);
  }
  throw ValidationError("unknown learner.kind: '" + kind + "'");
}

std::unique_ptr<Adversary> make_adversary(const ConfigMap& cfg) {
  std::string kind = cfg_str(cfg, "adversary.kind", "iid");
  if (kind == "iid") return std::make_unique<IidAdversary>();
  if (kind == "switching") {
    double L = cfg_double(cfg, "adversary.lipschitz", 0.0);
    if (!(L > 0.0)) throw ValidationError("adversary.lipschitz must be positive");
    long long block = cfg_int(cfg, "adversary.block_len", 0);
    if (block < 0) throw ValidationError("adversary.block_len must be non-negative");
    return std::make_unique<SwitchingAdversary>(L, static_cast<int>(block));
  }
  throw ValidationError("unknown adversary.kind: '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

struct Resolved {
  std::uint64_t seed = 1;
  int horizon = 0;
  int reps = 1;
  int n_w = 64;
  std::string out_dir;
};

std::string resolve_out(const ConfigMap& cfg) {
  if (cfg.count("out")) return cfg.at("out");
  const char* envv = std::getenv("DYNREGRET_OUT");
  return envv && *envv ? std::string(envv) : std::string("out");
}

// Materializes the base defaults back into the map so the manifest echoes
// exactly what the commands acted on.
Resolved resolve_base(ConfigMap& cfg, bool needs_horizon, bool has_reps) {
  Resolved r;
  r.seed = cfg_u64(cfg, "seed", 1);
  cfg["seed"] = std::to_string(r.seed);
  r.out_dir = resolve_out(cfg);
  cfg["out"] = r.out_dir;
  if (needs_horizon) {
    long long h = parse_int("horizon", cfg_require(cfg, "horizon"));
    if (h < 1) throw ValidationError("horizon must be a positive integer");
    r.horizon = static_cast<int>(h);
  }
  if (has_reps) {
    long long reps = cfg_int(cfg, "reps", 1);
    if (reps < 1) throw ValidationError("reps must be a positive integer");
    r.reps = static_cast<int>(reps);
    cfg["reps"] = std::to_string(r.reps);
    long long nw = cfg_int(cfg, "n_w", 64);
    if (nw < 1) throw ValidationError("n_w must be a positive integer");
    r.n_w = static_cast<int>(nw);
    cfg["n_w"] = std::to_string(r.n_w);
  }
  return r;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write output file: '" + path.string() + "'");
  out << content;
}

void write_manifest(const std::string& command, const ConfigMap& eff,
                    const std::vector<std::string>& outputs, std::ostream& log) {
  nlohmann::json m;
  m["command"] = command;
  m["config_hash"] = config_hash(eff);
  m["effective"] = nlohmann::json::object();
  for (const auto& [k, v] : eff) m["effective"][k] = v;
  m["outputs"] = outputs;
  std::filesystem::path dir(eff.at("out"));
  std::filesystem::create_directories(dir);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  log << "manifest=" << (dir / "manifest.json").string() << "\n";
}

std::string policy_label(const Environment& env, const Vec& pi) {
  const SpaceDesc& space = env.policy_space();
  if (space.has_finite())
    for (std::size_t i = 0; i < space.finite.size(); ++i)
      if (space.finite[i] == pi) return fmt_int(static_cast<long long>(i));
  return hex16(hash_vec(pi));
}

SeqRadConfig rademacher_config(const ConfigMap& cfg) {
  SeqRadConfig rc;
  rc.n_trees = static_cast<int>(cfg_int(cfg, "rademacher.trees", rc.n_trees));
  rc.n_eps = static_cast<int>(cfg_int(cfg, "rademacher.eps", rc.n_eps));
  rc.improve_passes = static_cast<int>(cfg_int(cfg, "rademacher.passes", rc.improve_passes));
  rc.improve_probes = static_cast<int>(cfg_int(cfg, "rademacher.probes", rc.improve_probes));
  rc.exact_eps_cap = cfg_int(cfg, "rademacher.exact_cap", rc.exact_eps_cap);
  rc.full_tree_depth_cap =
      static_cast<int>(cfg_int(cfg, "rademacher.sequence_threshold", rc.full_tree_depth_cap));
  return rc;
}

std::function<double(const Vec&)> rademacher_sup(const ConfigMap& cfg) {
  std::string name = cfg_str(cfg, "rademacher.linear_sup", "none");
  if (name == "none") return {};
  if (name == "norm2") return [](const Vec& s) { return norm2(s); };
  throw ValidationError("unknown rademacher.linear_sup: '" + name + "'");
}

SeqRadEstimate estimate_rademacher(const Environment& env, int depth, const ConfigMap& cfg,
                                   std::uint64_t seed) {
  if (cfg_bool(cfg, "rademacher.exhaustive", false)) {
    SeqRadEstimate est;
    est.value = seq_rademacher_exhaustive(env, depth, cfg_double(cfg, "rademacher.budget", 1e7));
    est.ci_low = est.ci_high = est.value;
    est.exact_eps = true;
    return est;
  }
  return seq_rademacher_mc(env, depth, rademacher_config(cfg), seed, rademacher_sup(cfg));
}

std::set<std::string> base_keys(bool needs_horizon, bool has_reps) {
  std::set<std::string> keys = {"seed", "out"};
  if (needs_horizon) keys.insert("horizon");
  if (has_reps) {
    keys.insert("reps");
    keys.insert("n_w");
  }
  return keys;
}

void merge(std::set<std::string>& into, const std::set<std::string>& more) {
  into.insert(more.begin(), more.end());
}

// run and stability share the game loop; they differ only in emitted columns.
void cmd_run(const std::string& command, ConfigMap eff, std::ostream& log) {
  Resolved r = resolve_base(eff, true, true);
  eff.try_emplace("adversary.kind", "iid");
  std::set<std::string> allowed = base_keys(true, true);
  merge(allowed, env_allowed(eff));
  merge(allowed, learner_allowed(eff));
  merge(allowed, adversary_allowed(eff));
  ensure_allowed(eff, allowed);

  std::shared_ptr<Environment> env = make_environment(eff);
  std::unique_ptr<Learner> learner = make_learner(eff, *env);
  std::unique_ptr<Adversary> adversary = make_adversary(eff);
  const bool stability_only = command == "stability";
  const bool ergodic = stability_only && env->has_stationary_loss();

  std::string csv = stability_only
                        ? (ergodic ? "run_id,t,beta_t,beta_star_t\n" : "run_id,t,beta_t\n")
                        : "run_id,t,policy_id,loss,cum_loss,comparator_cum,regret,beta_t\n";
  SearchConfig scfg;
  for (int rep = 0; rep < r.reps; ++rep) {
    RunSpec spec;
    spec.master_seed = r.seed;
    spec.run_index = static_cast<std::uint64_t>(rep);
    spec.horizon = r.horizon;
    spec.n_w = r.n_w;
    GameRecord rec = run_game(*env, *learner, *adversary, spec);
    Vec beta = dynamic_stability_profile(*env, rec, spec);
    double beta_sum = 0.0;
    for (double b : beta) beta_sum += b;

    if (stability_only) {
      Vec beta_star = ergodic ? ergodic_stability_profile(*env, rec, spec) : Vec{};
      double star_sum = 0.0;
      for (double b : beta_star) star_sum += b;
      for (int t = 1; t <= r.horizon; ++t) {
        csv += fmt_int(rep) + "," + fmt_int(t) + "," + fmt_double(beta[static_cast<std::size_t>(t - 1)]);
        if (ergodic) csv += "," + fmt_double(beta_star[static_cast<std::size_t>(t - 1)]);
        csv += "\n";
      }
      log << "stability_sum[" << rep << "]=" << fmt_double(beta_sum) << "\n";
      if (ergodic) log << "ergodic_sum[" << rep << "]=" << fmt_double(star_sum) << "\n";
      continue;
    }

    auto cf = env->make_cf_cumulative();
    double cum = 0.0;
    double regret = 0.0;
    for (int t = 1; t <= r.horizon; ++t) {
      const std::size_t i = static_cast<std::size_t>(t - 1);
      cum += rec.losses[i];
      cf->append(rec.instances[i]);
      double comparator =
          minimize_over_policies(*env, [&](const Vec& pi) { return cf->eval(pi); }, scfg).value;
      regret = cum - comparator;
      csv += fmt_int(rep) + "," + fmt_int(t) + "," + policy_label(*env, rec.policies[i]) + "," +
             fmt_double(rec.losses[i]) + "," + fmt_double(cum) + "," + fmt_double(comparator) +
             "," + fmt_double(regret) + "," + fmt_double(beta[i]) + "\n";
    }
    log << "regret[" << rep << "]=" << fmt_double(regret) << "\n";
    log << "stability_sum[" << rep << "]=" << fmt_double(beta_sum) << "\n";
  }

  std::filesystem::path dir(r.out_dir);
  std::filesystem::create_directories(dir);
  std::string name = stability_only ? "stability.csv" : "run.csv";
  write_file(dir / name, csv);
  log << "csv=" << (dir / name).string() << "\n";
  write_manifest(command, eff, {name}, log);
}

void cmd_bound(ConfigMap eff, std::ostream& log) {
  Resolved r = resolve_base(eff, true, false);
  eff.try_emplace("adversary.kind", "iid");
  std::set<std::string> allowed = base_keys(true, false);
  allowed.insert("n_w");
  merge(allowed, env_allowed(eff));
  merge(allowed, learner_allowed(eff));
  merge(allowed, adversary_allowed(eff));
  merge(allowed, kRademacherKeys);
  allowed.insert("bound.lambda");
  allowed.insert("bound.sup_omega");
  ensure_allowed(eff, allowed);

  std::shared_ptr<Environment> env = make_environment(eff);
  std::unique_ptr<Learner> learner = make_learner(eff, *env);
  std::unique_ptr<Adversary> adversary = make_adversary(eff);

  RunSpec spec;
  spec.master_seed = r.seed;
  spec.horizon = r.horizon;
  spec.n_w = static_cast<int>(cfg_int(eff, "n_w", 64));
  GameRecord rec = run_game(*env, *learner, *adversary, spec);
  Vec beta = dynamic_stability_profile(*env, rec, spec);
  double stability_sum = 0.0;
  for (double b : beta) stability_sum += b;

  SeqRadEstimate rad = estimate_rademacher(*env, r.horizon, eff, r.seed);
  double lambda = cfg_double(eff, "bound.lambda", 0.0);
  double sup_omega = cfg_double(eff, "bound.sup_omega", 0.0);
  double value = bound_main(stability_sum, rad.value, lambda, sup_omega);

  log << "stability_sum=" << fmt_double(stability_sum) << "\n";
  log << "rad=" << fmt_double(rad.value) << "\n";
  log << "rad_ci_low=" << fmt_double(rad.ci_low) << "\n";
  log << "rad_ci_high=" << fmt_double(rad.ci_high) << "\n";
  log << "lambda=" << fmt_double(lambda) << "\n";
  log << "sup_omega=" << fmt_double(sup_omega) << "\n";
  log << "bound=" << fmt_double(value) << "\n";
  write_manifest("bound", eff, {}, log);
}

void cmd_oracle(ConfigMap eff, std::ostream& log) {
  Resolved r = resolve_base(eff, true, false);
  std::set<std::string> allowed = base_keys(true, false);
  merge(allowed, env_allowed(eff));
  allowed.insert("oracle.kind");
  allowed.insert("oracle.budget");
  allowed.insert("oracle.tol");
  ensure_allowed(eff, allowed);

  std::shared_ptr<Environment> env = make_environment(eff);
  std::string kind = cfg_str(eff, "oracle.kind", "pure");
  if (kind == "pure") {
    MinimaxResult res = pure_minimax_oracle(*env, r.horizon, cfg_double(eff, "oracle.budget", 1e7));
    log << "value=" << fmt_double(res.value) << "\n";
    log << "nodes=" << fmt_int(res.nodes) << "\n";
  } else if (kind == "fictitious") {
    double v = fictitious_play_value(t1_regret_matrix(*env), cfg_double(eff, "oracle.tol", 1e-6));
    log << "value=" << fmt_double(v) << "\n";
  } else {
    throw ValidationError("unknown oracle.kind: '" + kind + "'");
  }
  write_manifest("oracle", eff, {}, log);
}

void cmd_rademacher(ConfigMap eff, std::ostream& log) {
  Resolved r = resolve_base(eff, true, false);
  std::set<std::string> allowed = base_keys(true, false);
  merge(allowed, env_allowed(eff));
  merge(allowed, kRademacherKeys);
  ensure_allowed(eff, allowed);

  std::shared_ptr<Environment> env = make_environment(eff);
  SeqRadEstimate est = estimate_rademacher(*env, r.horizon, eff, r.seed);
  log << "value=" << fmt_double(est.value) << "\n";
  log << "std_error=" << fmt_double(est.std_error) << "\n";
  log << "ci_low=" << fmt_double(est.ci_low) << "\n";
  log << "ci_high=" << fmt_double(est.ci_high) << "\n";
  log << "exact_eps=" << fmt_int(est.exact_eps ? 1 : 0) << "\n";
  log << "oblivious=" << fmt_int(est.oblivious ? 1 : 0) << "\n";
  write_manifest("rademacher", eff, {}, log);
}

void cmd_slope(ConfigMap eff, std::ostream& log) {
  resolve_base(eff, false, false);
  ensure_allowed(eff, {"seed", "out", "slope.points", "slope.input"});
  if (eff.count("slope.points") && eff.count("slope.input"))
    throw ValidationError("give slope.points or slope.input, not both");

  std::vector<std::pair<double, double>> pts;
  if (eff.count("slope.points")) {
    for (const std::string& part : split(eff.at("slope.points"), ',')) {
      std::vector<std::string> pair = split(trim(part), ':');
      if (pair.size() != 2)
        throw ValidationError("slope.points entries must look like 'horizon:regret'");
      pts.emplace_back(parse_double("slope.points", trim(pair[0])),
                       parse_double("slope.points", trim(pair[1])));
    }
  } else if (eff.count("slope.input")) {
    std::ifstream in(eff.at("slope.input"));
    if (!in) throw ValidationError("cannot open slope.input: '" + eff.at("slope.input") + "'");
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '.'))
        continue;  // header or comment
      std::vector<std::string> cols = split(line, ',');
      if (cols.size() < 2)
        throw ValidationError("slope.input lines need 'horizon,regret' columns");
      pts.emplace_back(parse_double("slope.input", trim(cols[0])),
                       parse_double("slope.input", trim(cols[1])));
    }
  } else {
    throw ValidationError("missing required config key: 'slope.points'");
  }

  SlopeFit fit = slope_fit(pts);
  log << "slope=" << fmt_double(fit.slope) << "\n";
  log << "intercept=" << fmt_double(fit.intercept) << "\n";
  log << "points=" << fmt_int(fit.points) << "\n";
  write_manifest("slope", eff, {}, log);
}

}  // namespace

void dispatch_command(const std::string& command, const ConfigMap& cfg, std::ostream& log) {
  if (command == "run" || command == "stability")
    cmd_run(command, cfg, log);
  else if (command == "bound")
    cmd_bound(cfg, log);
  else if (command == "oracle")
    cmd_oracle(cfg, log);
  else if (command == "rademacher")
    cmd_rademacher(cfg, log);
  else if (command == "slope")
    cmd_slope(cfg, log);
  else
    throw ValidationError("unknown command: '" + command + "'");
}

}  // namespace dynregret
