#include "dynregret/protocol.hpp"

#include <cmath>

namespace dynregret {

bool BoxSpace::contains(const Vec& v, double tol) const {
  if (v.size() != lo.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] < lo[i] - tol || v[i] > hi[i] + tol) return false;
  return true;
}

int SpaceDesc::dim() const {
  if (box) return box->dim();
  if (!finite.empty()) return static_cast<int>(finite.front().size());
  return 0;
}

bool SpaceDesc::contains(const Vec& v, double tol) const {
  if (box) return box->contains(v, tol);
  for (const Vec& f : finite) {
    if (f.size() != v.size()) continue;
    bool close = true;
    for (std::size_t i = 0; i < v.size() && close; ++i)
      if (std::fabs(f[i] - v[i]) > tol) close = false;
    if (close) return true;
  }
  return false;
}

bool Environment::policy_valid(const Vec& pi) const { return policy_space().contains(pi); }

bool Environment::instance_valid(const Instance& inst) const {
  if (!loss_instance_space().contains(inst.z)) return false;
  const SpaceDesc& dyn = dynamics_instance_space();
  if (dyn.dim() == 0 && !dyn.has_finite()) return inst.zeta.empty();
  return dyn.contains(inst.zeta);
}

Vec Environment::sample_noise(RngStream&) const { return Vec(state_dim(), 0.0); }

double Environment::stationary_loss(const Vec&, const Vec&) const {
  throw CapabilityError("environment '" + id() + "' has no stationary loss");
}

namespace {

// O(t)-per-eval replay; exact for deterministic (incl. distribution-state)
// environments.
class ReplayCfCumulative final : public CfCumulative {
 public:
  explicit ReplayCfCumulative(const Environment& env) : env_(&env) {
    if (env.has_noise())
      throw CapabilityError(
          "generic cumulative counterfactual requires deterministic dynamics; "
          "use counterfactual_loss with Monte Carlo for noisy environments");
  }

  void append(const Instance& inst) override { instances_.push_back(inst); }

  double eval(const Vec& pi) const override {
    Vec x = env_->initial_state();
    double cum = 0.0;
    for (const Instance& inst : instances_) {
      cum += env_->loss(pi, x, inst.z);
      x = env_->step(x, pi, inst.zeta);
    }
    return cum;
  }

  int rounds() const override { return static_cast<int>(instances_.size()); }

 private:
  const Environment* env_;
  std::vector<Instance> instances_;
};

class GenericStationaryCum final : public StationaryCum {
 public:
  explicit GenericStationaryCum(const Environment& env)
      : env_(&env), linear_(env.stationary_loss_linear_in_z()) {
    if (!env.has_stationary_loss())
      throw CapabilityError("environment '" + env.id() + "' has no stationary loss");
  }

  void append(const Vec& z) override {
    if (linear_) {
      if (z_sum_.empty()) z_sum_ = z;
      else z_sum_ = vec_add_(z_sum_, z);
      ++count_;
    } else {
      zs_.push_back(z);
    }
  }

  double eval(const Vec& pi) const override {
    if (linear_) {
      if (count_ == 0) return 0.0;
      return env_->stationary_loss(pi, z_sum_);
    }
    double s = 0.0;
    for (const Vec& z : zs_) s += env_->stationary_loss(pi, z);
    return s;
  }

 private:
  static Vec vec_add_(const Vec& a, const Vec& b) {
    Vec r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
  }
  const Environment* env_;
  bool linear_;
  Vec z_sum_;
  int count_ = 0;
  std::vector<Vec> zs_;
};

}  // namespace

std::unique_ptr<CfCumulative> Environment::make_cf_cumulative() const {
  return std::make_unique<ReplayCfCumulative>(*this);
}

std::unique_ptr<StationaryCum> Environment::make_stationary_cum() const {
  return std::make_unique<GenericStationaryCum>(*this);
}

Instance Environment::sample_instance(RngStream& rng) const {
  const SpaceDesc& zs = loss_instance_space();
  Instance inst;
  if (zs.has_finite()) {
    inst.z = zs.finite[static_cast<std::size_t>(rng.next_index(
        static_cast<int>(zs.finite.size())))];
  } else if (zs.box) {
    inst.z.resize(zs.box->lo.size());
    for (std::size_t i = 0; i < inst.z.size(); ++i)
      inst.z[i] = rng.next_uniform(zs.box->lo[i], zs.box->hi[i]);
  } else {
    throw CapabilityError("environment '" + id() +
                          "' has no default instance sampler");
  }
  const SpaceDesc& dyn = dynamics_instance_space();
  if (dyn.has_finite()) {
    inst.zeta = dyn.finite[static_cast<std::size_t>(rng.next_index(
        static_cast<int>(dyn.finite.size())))];
  } else if (dyn.box) {
    inst.zeta.resize(dyn.box->lo.size());
    for (std::size_t i = 0; i < inst.zeta.size(); ++i)
      inst.zeta[i] = rng.next_uniform(dyn.box->lo[i], dyn.box->hi[i]);
  }
  return inst;
}

}  // namespace dynregret
