#include "dynregret/discrete_envs.hpp"

#include <algorithm>
#include <cmath>

namespace dynregret {
namespace {

BoxSpace unit_box(int dim, double half_width) {
  BoxSpace b;
  b.lo.assign(static_cast<std::size_t>(dim), -half_width);
  b.hi.assign(static_cast<std::size_t>(dim), half_width);
  return b;
}

int index_of(double v) { return static_cast<int>(std::llround(v)); }

}  // namespace

// ---------------------------------------------------------------------------
// TableGameEnv
// ---------------------------------------------------------------------------

TableGameEnv::TableGameEnv(std::vector<Vec> table) : table_(std::move(table)) {
  if (table_.empty() || table_.front().empty())
    throw ValidationError("table game: the loss table must be non-empty");
  for (const Vec& row : table_) {
    if (row.size() != table_.front().size())
      throw ValidationError("table game: ragged loss table");
    for (double v : row) bound_ = std::max(bound_, std::abs(v));
  }
  for (std::size_t i = 0; i < table_.size(); ++i)
    policies_.finite.push_back({static_cast<double>(i)});
  for (std::size_t j = 0; j < table_.front().size(); ++j)
    instances_.finite.push_back({static_cast<double>(j)});
}

double TableGameEnv::loss(const Vec& pi, const Vec&, const Vec& z) const {
  return table_[static_cast<std::size_t>(index_of(pi[0]))][static_cast<std::size_t>(index_of(z[0]))];
}

// ---------------------------------------------------------------------------
// MemoryWrapperEnv
// ---------------------------------------------------------------------------

MemoryWrapperEnv::MemoryWrapperEnv(std::shared_ptr<const TableGameEnv> inner)
    : inner_(std::move(inner)) {
  for (double sign : {1.0, -1.0})
    for (const Vec& z : inner_->loss_instance_space().finite)
      instances_.finite.push_back({sign, z[0]});
}

double MemoryWrapperEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  double inner_loss = inner_->loss(pi, x, {z[1]});
  double switch_cost = (pi == x) ? 0.0 : 1.0;
  return z[0] * inner_loss + switch_cost;
}

double MemoryWrapperEnv::stationary_loss(const Vec& pi, const Vec& z) const {
  return z[0] * inner_->loss(pi, pi, {z[1]});
}

// ---------------------------------------------------------------------------
// MdpSystem / MdpEnv
// ---------------------------------------------------------------------------

void MdpSystem::validate() const {
  if (S < 1 || A < 1) throw ValidationError("mdp: S and A must be at least 1");
  if (static_cast<int>(transition.size()) != A)
    throw ValidationError("mdp: need one transition matrix per action");
  for (const Mat& p : transition) {
    if (p.rows != S || p.cols != S)
      throw ValidationError("mdp: transition matrix has wrong shape");
    for (int x = 0; x < S; ++x) {
      double row = 0.0;
      for (int y = 0; y < S; ++y) {
        if (p(x, y) < -1e-12) throw ValidationError("mdp: negative transition probability");
        row += p(x, y);
      }
      if (std::abs(row - 1.0) > 1e-9)
        throw ValidationError("mdp: transition row does not sum to one");
    }
  }
  if (tau < 0.0) throw ValidationError("mdp: tau must be nonnegative");
}

MdpSystem mdp_uniform_smoothing(const MdpSystem& raw, double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw ValidationError("mdp smoothing: alpha must lie in (0, 1)");
  raw.validate();
  MdpSystem out = raw;
  double u = alpha / raw.S;
  for (Mat& p : out.transition)
    for (double& v : p.a) v = (1.0 - alpha) * v + u;
  out.tau = -1.0 / std::log(1.0 - alpha);
  return out;
}

Mat mdp_induced_transition(const MdpSystem& sys, const Vec& pi) {
  Mat chain(sys.S, sys.S);
  for (int x = 0; x < sys.S; ++x)
    for (int u = 0; u < sys.A; ++u) {
      double w = pi[static_cast<std::size_t>(x) * sys.A + u];
      if (w == 0.0) continue;
      for (int y = 0; y < sys.S; ++y) chain(x, y) += w * sys.transition[static_cast<std::size_t>(u)](x, y);
    }
  return chain;
}

Vec stationary_distribution(const Mat& chain) {
  int n = chain.rows;
  // Reachability closure over edges with positive probability.
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n),
                                       std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = true;
    for (int j = 0; j < n; ++j)
      if (chain(i, j) > 1e-15) reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)])
        for (int j = 0; j < n; ++j)
          if (reach[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)])
            reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;

  // A state is terminal-recurrent if everything it reaches reaches it back.
  // Count the distinct terminal classes; a unichain has exactly one.
  std::vector<int> klass(static_cast<std::size_t>(n), -1);
  int n_terminal = 0;
  for (int i = 0; i < n; ++i) {
    if (klass[static_cast<std::size_t>(i)] >= 0) continue;
    bool terminal = true;
    for (int j = 0; j < n && terminal; ++j)
      if (reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
          !reach[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
        terminal = false;
    if (!terminal) continue;
    ++n_terminal;
    for (int j = 0; j < n; ++j)
      if (reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
          reach[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
        klass[static_cast<std::size_t>(j)] = n_terminal;
  }
  if (n_terminal != 1)
    throw ValidationError("stationary distribution: chain has " + fmt_int(n_terminal) +
                          " closed communicating classes, need exactly one");

  Vec d(static_cast<std::size_t>(n), 1.0 / n);
  for (long iter = 0; iter < 1000000; ++iter) {
    Vec next(static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) next[static_cast<std::size_t>(y)] += d[static_cast<std::size_t>(x)] * chain(x, y);
    double step = 0.0;
    for (int x = 0; x < n; ++x) step += std::abs(next[static_cast<std::size_t>(x)] - d[static_cast<std::size_t>(x)]);
    d = std::move(next);
    if (step < 1e-12) {
      Vec probe(static_cast<std::size_t>(n), 0.0);
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) probe[static_cast<std::size_t>(y)] += d[static_cast<std::size_t>(x)] * chain(x, y);
      double resid = 0.0;
      for (int x = 0; x < n; ++x) resid += std::abs(probe[static_cast<std::size_t>(x)] - d[static_cast<std::size_t>(x)]);
      if (resid > 1e-10)
        throw NumericError("stationary distribution: converged point fails the residual check");
      return d;
    }
  }
  throw NumericError(
      "stationary distribution: undamped power iteration did not converge "
      "(the chain may be periodic)");
}

std::vector<Vec> mdp_deterministic_policies(int S, int A) {
  double count = std::pow(static_cast<double>(A), S);
  std::vector<Vec> out;
  long n = static_cast<long>(count);
  for (long p = 0; p < n; ++p) {
    Vec pi(static_cast<std::size_t>(S) * A, 0.0);
    long rest = p;
    for (int x = 0; x < S; ++x) {
      int u = static_cast<int>(rest % A);
      rest /= A;
      pi[static_cast<std::size_t>(x) * A + u] = 1.0;
    }
    out.push_back(std::move(pi));
  }
  return out;
}

MdpEnv::MdpEnv(MdpSystem sys, Vec start) : sys_(std::move(sys)) {
  sys_.validate();
  double count = std::pow(static_cast<double>(sys_.A), sys_.S);
  if (count > 4096.0)
    throw BudgetError("mdp: deterministic policy enumeration of size " + fmt_double(count) +
                          " exceeds the 4096 cap",
                      count);
  policy_space_.finite = mdp_deterministic_policies(sys_.S, sys_.A);
  BoxSpace lb;
  lb.lo.assign(static_cast<std::size_t>(sys_.S) * sys_.A, 0.0);
  lb.hi.assign(static_cast<std::size_t>(sys_.S) * sys_.A, 1.0);
  loss_space_.box = lb;
  if (start.empty()) {
    start_.assign(static_cast<std::size_t>(sys_.S), 1.0 / sys_.S);
  } else {
    if (static_cast<int>(start.size()) != sys_.S)
      throw ValidationError("mdp: start distribution has wrong dimension");
    double sum = 0.0;
    for (double v : start) {
      if (v < -1e-12) throw ValidationError("mdp: start distribution has negative mass");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("mdp: start distribution does not sum to one");
    start_ = std::move(start);
  }
}

bool MdpEnv::policy_valid(const Vec& pi) const {
  if (static_cast<int>(pi.size()) != sys_.S * sys_.A) return false;
  for (int x = 0; x < sys_.S; ++x) {
    double row = 0.0;
    for (int u = 0; u < sys_.A; ++u) {
      double v = pi[static_cast<std::size_t>(x) * sys_.A + u];
      if (v < -1e-12) return false;
      row += v;
    }
    if (std::abs(row - 1.0) > 1e-9) return false;
  }
  return true;
}

Vec MdpEnv::step(const Vec& x, const Vec& pi, const Vec&) const {
  Mat chain = mdp_induced_transition(sys_, pi);
  Vec next(static_cast<std::size_t>(sys_.S), 0.0);
  for (int s = 0; s < sys_.S; ++s)
    for (int y = 0; y < sys_.S; ++y) next[static_cast<std::size_t>(y)] += x[static_cast<std::size_t>(s)] * chain(s, y);
  return next;
}

Vec MdpEnv::per_state_loss(const Vec& pi, const Vec& z) const {
  Vec v(static_cast<std::size_t>(sys_.S), 0.0);
  for (int x = 0; x < sys_.S; ++x)
    for (int u = 0; u < sys_.A; ++u)
      v[static_cast<std::size_t>(x)] +=
          pi[static_cast<std::size_t>(x) * sys_.A + u] * z[static_cast<std::size_t>(x) * sys_.A + u];
  return v;
}

double MdpEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  Vec v = per_state_loss(pi, z);
  return dot(x, v);
}

const Vec& MdpEnv::cached_stationary_distribution(const Vec& pi) const {
  std::uint64_t h = hash_vec(pi);
  auto it = dpi_cache_.find(h);
  if (it != dpi_cache_.end()) return it->second;
  Vec d = stationary_distribution(mdp_induced_transition(sys_, pi));
  return dpi_cache_.emplace(h, std::move(d)).first->second;
}

double MdpEnv::stationary_loss(const Vec& pi, const Vec& z) const {
  return dot(cached_stationary_distribution(pi), per_state_loss(pi, z));
}

// ---------------------------------------------------------------------------
// IsotronEnv
// ---------------------------------------------------------------------------

IsotronEnv::IsotronEnv(IsotronSystem sys) : sys_(sys) {
  if (sys_.d < 1 || sys_.segments < 1)
    throw ValidationError("isotron: dimension and segment count must be positive");
  policy_space_.box = unit_box(sys_.policy_dim(), 1.0);
  loss_space_.box = unit_box(sys_.d + 2, 1.0);
}

Vec IsotronEnv::weights(const Vec& pi) const {
  return Vec(pi.begin() + 1, pi.begin() + 1 + sys_.d);
}

Vec IsotronEnv::assemble_policy(double w1, const Vec& w, double v0, const Vec& slopes) const {
  Vec pi;
  pi.reserve(static_cast<std::size_t>(sys_.policy_dim()));
  pi.push_back(w1);
  pi.insert(pi.end(), w.begin(), w.end());
  pi.push_back(v0);
  pi.insert(pi.end(), slopes.begin(), slopes.end());
  return pi;
}

double IsotronEnv::link(const Vec& pi, double u) const {
  int m = sys_.segments;
  double seg = 2.0 / m;
  double v0 = pi[static_cast<std::size_t>(1 + sys_.d)];
  const double* slopes = pi.data() + 2 + sys_.d;
  double uc = std::clamp(u, -1.0, 1.0);
  int idx = std::clamp(static_cast<int>(std::floor((uc + 1.0) / seg)), 0, m - 1);
  double value = v0;
  for (int j = 0; j < idx; ++j) value += slopes[j] * seg;
  value += slopes[idx] * (uc - (-1.0 + idx * seg));
  return value;
}

bool IsotronEnv::policy_valid(const Vec& pi) const {
  if (static_cast<int>(pi.size()) != sys_.policy_dim()) return false;
  if (std::abs(pi[0]) > 1.0 + 1e-9) return false;
  if (norm2(weights(pi)) > 1.0 + 1e-9) return false;
  double seg = 2.0 / sys_.segments;
  double knot = pi[static_cast<std::size_t>(1 + sys_.d)];
  if (std::abs(knot) > 1.0 + 1e-9) return false;
  for (int j = 0; j < sys_.segments; ++j) {
    double s = pi[static_cast<std::size_t>(2 + sys_.d + j)];
    if (std::abs(s) > 1.0 + 1e-9) return false;  // keep the link 1-Lipschitz
    knot += s * seg;
    if (std::abs(knot) > 1.0 + 1e-9) return false;  // keep |sigma| <= 1
  }
  return true;
}

bool IsotronEnv::instance_valid(const Instance& inst) const {
  if (!inst.zeta.empty()) return false;
  if (static_cast<int>(inst.z.size()) != sys_.d + 2) return false;
  for (double v : inst.z)
    if (std::abs(v) > 1.0 + 1e-9) return false;
  Vec feat(inst.z.begin() + 1, inst.z.begin() + 1 + sys_.d);
  return norm2(feat) <= 1.0 + 1e-9;
}

double IsotronEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  Vec feat(z.begin() + 1, z.begin() + 1 + sys_.d);
  double pred = link(pi, dot(feat, weights(pi)));
  double y = z[static_cast<std::size_t>(sys_.d + 1)];
  double e_fit = y - pred;
  double e_bias = z[0] - pi[0];
  double e_mem = x[0] - pi[0];
  return e_fit * e_fit + e_bias * e_bias + e_mem * e_mem;
}

double IsotronEnv::stationary_loss(const Vec& pi, const Vec& z) const {
  return loss(pi, {pi[0]}, z);
}

Instance IsotronEnv::sample_instance(RngStream& rng) const {
  Instance inst;
  inst.z.resize(static_cast<std::size_t>(sys_.d + 2));
  for (double& v : inst.z) v = rng.next_uniform(-1.0, 1.0);
  Vec feat(inst.z.begin() + 1, inst.z.begin() + 1 + sys_.d);
  double n = norm2(feat);
  if (n > 1.0)
    for (int i = 0; i < sys_.d; ++i) inst.z[static_cast<std::size_t>(1 + i)] /= n;
  return inst;
}

double isotron_erm_w1(const std::vector<Instance>& instances) {
  if (instances.empty()) return 0.0;
  double sum = 0.0;
  for (const Instance& inst : instances) sum += inst.z[0];
  return std::clamp(sum / static_cast<double>(instances.size()), -1.0, 1.0);
}

Vec isotron_erm_fit(const IsotronEnv& env, const std::vector<Instance>& instances,
                    int outer_rounds) {
  const IsotronSystem& sys = env.system();
  int m = sys.segments;
  double seg = 2.0 / m;
  // Knot-value parameterization of the link: k[j] = sigma(-1 + j * seg).
  // Feasibility (|sigma| <= 1, slopes in [-1, 1]) is a box constraint per
  // knot given its neighbors, so every coordinate step below stays feasible.
  Vec knots(static_cast<std::size_t>(m + 1));
  for (int j = 0; j <= m; ++j) knots[static_cast<std::size_t>(j)] = -1.0 + j * seg;
  Vec w(static_cast<std::size_t>(sys.d), 0.0);
  w[0] = 1.0;

  std::size_t n = instances.size();
  std::vector<Vec> feats(n);
  Vec ys(n);
  for (std::size_t s = 0; s < n; ++s) {
    feats[s] = Vec(instances[s].z.begin() + 1, instances[s].z.begin() + 1 + sys.d);
    ys[s] = instances[s].z[static_cast<std::size_t>(sys.d + 1)];
  }

  // Hat-function weights of sample s at the current projections u_s.
  Vec us(n), frac(n);
  std::vector<int> segidx(n);
  auto refresh_projections = [&]() {
    for (std::size_t s = 0; s < n; ++s) {
      double u = std::clamp(dot(feats[s], w), -1.0, 1.0);
      int idx = std::clamp(static_cast<int>(std::floor((u + 1.0) / seg)), 0, m - 1);
      us[s] = u;
      segidx[s] = idx;
      frac[s] = (u - (-1.0 + idx * seg)) / seg;  // in [0, 1]
    }
  };
  auto predict = [&](std::size_t s) {
    int idx = segidx[s];
    return knots[static_cast<std::size_t>(idx)] * (1.0 - frac[s]) +
           knots[static_cast<std::size_t>(idx + 1)] * frac[s];
  };

  if (n > 0) {
    for (int round = 0; round < outer_rounds; ++round) {
      refresh_projections();
      // Link fit: cyclic exact coordinate minimization over knot values.
      for (int sweep = 0; sweep < 3; ++sweep) {
        for (int j = 0; j <= m; ++j) {
          double num = 0.0, den = 0.0;
          for (std::size_t s = 0; s < n; ++s) {
            double phi = 0.0;
            if (segidx[s] == j) phi = 1.0 - frac[s];
            else if (segidx[s] == j - 1) phi = frac[s];
            if (phi == 0.0) continue;
            double others = predict(s) - phi * knots[static_cast<std::size_t>(j)];
            num += phi * (ys[s] - others);
            den += phi * phi;
          }
          double lo = -1.0, hi = 1.0;
          if (j > 0) {
            lo = std::max(lo, knots[static_cast<std::size_t>(j - 1)] - seg);
            hi = std::min(hi, knots[static_cast<std::size_t>(j - 1)] + seg);
          }
          if (j < m) {
            lo = std::max(lo, knots[static_cast<std::size_t>(j + 1)] - seg);
            hi = std::min(hi, knots[static_cast<std::size_t>(j + 1)] + seg);
          }
          double target = den > 0.0 ? num / den : knots[static_cast<std::size_t>(j)];
          knots[static_cast<std::size_t>(j)] = std::clamp(target, lo, hi);
        }
      }
      // Weight fit: projected gradient descent on the unit ball; the link's
      // slope is bounded by 1 and features by 1, so a 0.25 step on the mean
      // gradient is stable.
      for (int it = 0; it < 20; ++it) {
        refresh_projections();
        Vec grad(static_cast<std::size_t>(sys.d), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
          double slope = (knots[static_cast<std::size_t>(segidx[s] + 1)] -
                          knots[static_cast<std::size_t>(segidx[s])]) /
                         seg;
          double coeff = -2.0 * (ys[s] - predict(s)) * slope / static_cast<double>(n);
          for (int i = 0; i < sys.d; ++i) grad[static_cast<std::size_t>(i)] += coeff * feats[s][static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < sys.d; ++i) w[static_cast<std::size_t>(i)] -= 0.25 * grad[static_cast<std::size_t>(i)];
        double nw = norm2(w);
        if (nw > 1.0)
          for (double& v : w) v /= nw;
      }
    }
  }

  Vec slopes(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    slopes[static_cast<std::size_t>(j)] = std::clamp(
        (knots[static_cast<std::size_t>(j + 1)] - knots[static_cast<std::size_t>(j)]) / seg, -1.0,
        1.0);
  return env.assemble_policy(isotron_erm_w1(instances), w,
                             std::clamp(knots[0], -1.0, 1.0), slopes);
}

// ---------------------------------------------------------------------------
// LinLowerBoundEnv
// ---------------------------------------------------------------------------

namespace {
class LinLbCum final : public CfCumulative {
 public:
  LinLbCum(int d, double scale) : z_sum_(static_cast<std::size_t>(d), 0.0), scale_(scale) {}
  void append(const Instance& inst) override {
    z_sum_ = vec_add(z_sum_, inst.z);
    ++rounds_;
  }
  double eval(const Vec& pi) const override {
    return dot(pi, z_sum_) + std::min(scale_ * norm2(pi), 1.0);
  }
  int rounds() const override { return rounds_; }

 private:
  Vec z_sum_;
  double scale_;
  int rounds_ = 0;
};
}  // namespace

LinLowerBoundEnv::LinLowerBoundEnv(int d, double movement_scale)
    : d_(d), scale_(movement_scale) {
  if (d < 1) throw ValidationError("lower-bound environment: dimension must be positive");
  if (movement_scale <= 0.0)
    throw ValidationError("lower-bound environment: movement scale must be positive");
  space_.box = unit_box(d, 1.0);
}

bool LinLowerBoundEnv::policy_valid(const Vec& pi) const {
  return static_cast<int>(pi.size()) == d_ && norm2(pi) <= 1.0 + 1e-9;
}

bool LinLowerBoundEnv::instance_valid(const Instance& inst) const {
  return inst.zeta.empty() && static_cast<int>(inst.z.size()) == d_ &&
         norm2(inst.z) <= 1.0 + 1e-9;
}

double LinLowerBoundEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  return dot(pi, z) + std::min(scale_ * norm2(vec_sub(pi, x)), 1.0);
}

std::unique_ptr<CfCumulative> LinLowerBoundEnv::make_cf_cumulative() const {
  return std::make_unique<LinLbCum>(d_, scale_);
}

Instance LinLowerBoundEnv::sample_instance(RngStream& rng) const {
  Instance inst;
  inst.z.resize(static_cast<std::size_t>(d_));
  for (double& v : inst.z) v = rng.next_uniform(-1.0, 1.0);
  double n = norm2(inst.z);
  if (n > 1.0)
    for (double& v : inst.z) v /= n;
  return inst;
}

}  // namespace dynregret
