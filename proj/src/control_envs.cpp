#include "dynregret/control_envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace dynregret {
namespace {

constexpr double kCertSlack = 1e-8;

Mat reshape(const Vec& v, std::size_t offset, int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = v[offset + static_cast<std::size_t>(i) * cols + j];
  return m;
}

void append_flat(Vec& out, const Mat& m) {
  out.insert(out.end(), m.a.begin(), m.a.end());
}

Mat outer(const Vec& u, const Vec& v) {
  Mat m(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = u[i] * v[j];
  return m;
}

// PSD check with trace cap, shared by the quadratic-cost instance spaces.
bool psd_with_trace(const Mat& m, double trace_cap) {
  for (int i = 0; i < m.rows; ++i)
    for (int j = i + 1; j < m.cols; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-9) return false;
  if (trace(m) > trace_cap + kCertSlack) return false;
  EighResult eig = jacobi_eigh(m);
  double scale = std::max(1.0, std::abs(eig.values.front()));
  return eig.values.back() >= -1e-8 * scale;
}

BoxSpace symmetric_box(int dim, double half_width) {
  BoxSpace b;
  b.lo.assign(static_cast<std::size_t>(dim), -half_width);
  b.hi.assign(static_cast<std::size_t>(dim), half_width);
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// LQR system and certificates
// ---------------------------------------------------------------------------

void LqrSystem::validate() const {
  if (A.rows != A.cols || B.rows != A.rows || W.rows != A.rows || W.cols != A.cols)
    throw ValidationError("lqr system: dimension mismatch between A, B, W");
  if (kappa < 1.0) throw ValidationError("lqr system: kappa must be >= 1");
  if (gamma <= 0.0 || gamma >= 1.0)
    throw ValidationError("lqr system: gamma must lie in (0, 1)");
  if (C <= 0.0) throw ValidationError("lqr system: C must be positive");
  EighResult eig = jacobi_eigh(W);
  if (eig.values.back() < tau_w - kCertSlack)
    throw ValidationError("lqr system: W violates declared lower bound tau_w");
  if (eig.values.front() > sigma_w + kCertSlack)
    throw ValidationError("lqr system: W violates declared spectral bound sigma_w");
  if (trace(W) > psi_w + kCertSlack)
    throw ValidationError("lqr system: W violates declared trace bound psi_w");
}

StabilityCertificate strong_stability_certificate(const Mat& K, const Mat& A,
                                                  const Mat& B, const Mat& W,
                                                  double kappa, double gamma) {
  StabilityCertificate cert;
  cert.K = K;
  cert.kappa = kappa;
  cert.gamma = gamma;
  Mat acl = A + matmul(B, K);

  cert.norm_ok = spectral_norm(K) <= kappa + kCertSlack;
  if (!cert.norm_ok) cert.reason = "policy norm exceeds kappa";

  Mat x;
  try {
    x = solve_discrete_lyapunov(acl, W);
  } catch (const NumericError& e) {
    cert.valid = false;
    if (cert.reason.empty()) cert.reason = std::string("closed loop not certifiable: ") + e.what();
    return cert;
  }

  EighResult eig = jacobi_eigh(x);
  double top = std::max(std::abs(eig.values.front()), 1.0);
  if (eig.values.back() <= 1e-12 * top)
    throw NumericError("degenerate noise covariance: Lyapunov solution is singular, "
                       "cannot exhibit an invertible similarity transform");
  int n = x.rows;
  Mat h(n, n), hinv(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0, si = 0.0;
      for (int r = 0; r < n; ++r) {
        double root = std::sqrt(eig.values[static_cast<std::size_t>(r)]);
        double prod = eig.vectors(i, r) * eig.vectors(j, r);
        s += root * prod;
        si += prod / root;
      }
      h(i, j) = s;
      hinv(i, j) = si;
    }
  cert.H = h;
  cert.L = matmul(hinv, matmul(acl, h));

  cert.contraction_ok = spectral_norm(cert.L) <= (1.0 - gamma) + kCertSlack;
  cert.conditioning_ok = spectral_norm(h) * spectral_norm(hinv) <= kappa + kCertSlack;
  // The similarity H L H^{-1} = A+BK must reconstruct within tolerance.
  Mat recon = matmul(h, matmul(cert.L, hinv)) - acl;
  bool recon_ok = frobenius_norm(recon) <= 1e-6 * std::max(1.0, frobenius_norm(acl));

  cert.valid = cert.norm_ok && cert.contraction_ok && cert.conditioning_ok && recon_ok;
  if (!cert.valid && cert.reason.empty()) {
    if (!cert.contraction_ok) cert.reason = "similarity-transformed closed loop is not a (1-gamma) contraction";
    else if (!cert.conditioning_ok) cert.reason = "transform conditioning exceeds kappa";
    else cert.reason = "similarity reconstruction failed";
  }
  return cert;
}

StabilityCertificate strong_stability_certificate(const Mat& K, const LqrSystem& sys) {
  return strong_stability_certificate(K, sys.A, sys.B, sys.W, sys.kappa, sys.gamma);
}

Mat lqr_closed_loop(const LqrSystem& sys, const Mat& K) {
  return sys.A + matmul(sys.B, K);
}

Mat lqr_stationary_covariance(const Mat& K, const LqrSystem& sys) {
  return solve_discrete_lyapunov(lqr_closed_loop(sys, K), sys.W);
}

Mat lqr_truncated_covariance(const Mat& K, int t, const LqrSystem& sys) {
  if (t < 1) throw ValidationError("truncated covariance requires t >= 1");
  Mat acl = lqr_closed_loop(sys, K);
  Mat power = Mat::identity(sys.d());
  Mat acc(sys.d(), sys.d());
  for (int s = 0; s < t; ++s) {
    acc = acc + matmul(power, matmul(sys.W, transpose(power)));
    power = matmul(acl, power);
  }
  return acc;
}

double lqr_stationary_loss(const Mat& K, const Mat& Q, const Mat& R, const LqrSystem& sys) {
  StabilityCertificate cert = strong_stability_certificate(K, sys);
  if (!cert.valid)
    throw ValidationError("stationary loss undefined: policy is not certified stable (" +
                          cert.reason + ")");
  Mat m = Q + matmul(transpose(K), matmul(R, K));
  return frobenius_inner(m, lqr_stationary_covariance(K, sys));
}

double lqr_counterfactual_loss(const Mat& K, const Mat& Q, const Mat& R, int t,
                               const LqrSystem& sys) {
  Mat m = Q + matmul(transpose(K), matmul(R, K));
  return frobenius_inner(m, lqr_truncated_covariance(K, t, sys));
}

double lqr_loss_bound(const LqrSystem& sys) {
  return sys.C * (1.0 + sys.kappa * sys.kappa) * sys.sigma_w * sys.kappa * sys.kappa / sys.gamma;
}

double lqr_lipschitz_bound(const LqrSystem& sys) {
  double sigma_b = spectral_norm(sys.B);
  double k2 = sys.kappa * sys.kappa;
  return 4.0 * sys.C * (1.0 + k2) * sigma_b * k2 * k2 * sys.kappa * sys.sigma_w /
         (sys.gamma * sys.gamma);
}

// ---------------------------------------------------------------------------
// LqrEnv
// ---------------------------------------------------------------------------

LqrEnv::LqrEnv(LqrSystem sys, std::vector<Vec> candidate_policies) : sys_(std::move(sys)) {
  sys_.validate();
  int d = sys_.d(), k = sys_.k();
  if (!candidate_policies.empty()) {
    for (const Vec& pi : candidate_policies) {
      if (static_cast<int>(pi.size()) != k * d)
        throw ValidationError("lqr candidate policy has wrong dimension");
      StabilityCertificate cert = strong_stability_certificate(policy_matrix(pi), sys_);
      if (!cert.valid)
        throw ValidationError("lqr candidate policy is not certified stable: " + cert.reason);
    }
    policy_space_.finite = std::move(candidate_policies);
  } else {
    policy_space_.box = symmetric_box(k * d, sys_.kappa);
  }
  loss_space_.box = symmetric_box(d * d + k * k, sys_.C);
}

int LqrEnv::state_dim() const { return sys_.d() + sys_.d() * sys_.d(); }

Vec LqrEnv::initial_state() const {
  return pack_state(Vec(static_cast<std::size_t>(sys_.d()), 0.0), sys_.W);
}

Vec LqrEnv::pack_state(const Vec& mean, const Mat& cov) const {
  Vec x = mean;
  append_flat(x, cov);
  return x;
}

Mat LqrEnv::state_covariance(const Vec& x) const {
  return reshape(x, static_cast<std::size_t>(sys_.d()), sys_.d(), sys_.d());
}

Mat LqrEnv::policy_matrix(const Vec& pi) const { return reshape(pi, 0, sys_.k(), sys_.d()); }

Vec LqrEnv::flatten_policy(const Mat& k) const { return k.a; }

void LqrEnv::split_instance(const Vec& z, Mat& q, Mat& r) const {
  q = reshape(z, 0, sys_.d(), sys_.d());
  r = reshape(z, static_cast<std::size_t>(sys_.d() * sys_.d()), sys_.k(), sys_.k());
}

Vec LqrEnv::make_instance(const Mat& q, const Mat& r) const {
  Vec z;
  append_flat(z, q);
  append_flat(z, r);
  return z;
}

bool LqrEnv::policy_valid(const Vec& pi) const {
  if (static_cast<int>(pi.size()) != sys_.k() * sys_.d()) return false;
  std::uint64_t h = hash_vec(pi);
  auto it = cert_cache_.find(h);
  if (it != cert_cache_.end()) return it->second;
  bool ok = strong_stability_certificate(policy_matrix(pi), sys_).valid;
  cert_cache_.emplace(h, ok);
  return ok;
}

bool LqrEnv::instance_valid(const Instance& inst) const {
  if (!inst.zeta.empty()) return false;
  if (static_cast<int>(inst.z.size()) != sys_.d() * sys_.d() + sys_.k() * sys_.k()) return false;
  Mat q, r;
  split_instance(inst.z, q, r);
  return psd_with_trace(q, sys_.C) && psd_with_trace(r, sys_.C);
}

Vec LqrEnv::step(const Vec& x, const Vec& pi, const Vec& zeta) const {
  (void)zeta;
  Mat acl = lqr_closed_loop(sys_, policy_matrix(pi));
  Vec mean(x.begin(), x.begin() + sys_.d());
  Vec mean_next = matvec(acl, mean);
  Mat cov_next = matmul(acl, matmul(state_covariance(x), transpose(acl))) + sys_.W;
  return pack_state(mean_next, cov_next);
}

double LqrEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  Mat k = policy_matrix(pi);
  Mat q, r;
  split_instance(z, q, r);
  Mat m = q + matmul(transpose(k), matmul(r, k));
  Vec mean(x.begin(), x.begin() + sys_.d());
  double quad = dot(mean, matvec(m, mean));
  return frobenius_inner(m, state_covariance(x)) + quad;
}

const Mat& LqrEnv::cached_stationary_covariance(const Vec& pi) const {
  std::uint64_t h = hash_vec(pi);
  auto it = xk_cache_.find(h);
  if (it != xk_cache_.end()) return it->second;
  Mat x = lqr_stationary_covariance(policy_matrix(pi), sys_);
  return xk_cache_.emplace(h, std::move(x)).first->second;
}

double LqrEnv::stationary_loss(const Vec& pi, const Vec& z) const {
  if (!policy_valid(pi))
    throw ValidationError("stationary loss undefined: policy is not certified stable");
  Mat k = policy_matrix(pi);
  Mat q, r;
  split_instance(z, q, r);
  Mat m = q + matmul(transpose(k), matmul(r, k));
  return frobenius_inner(m, cached_stationary_covariance(pi));
}

Instance LqrEnv::sample_instance(RngStream& rng) const {
  Instance inst;
  inst.z = make_instance(random_psd_with_trace(sys_.d(), sys_.C, rng),
                         random_psd_with_trace(sys_.k(), sys_.C, rng));
  return inst;
}

std::vector<Vec> lqr_certified_candidates(const LqrSystem& sys, int n, std::uint64_t seed,
                                          int max_attempts) {
  RngStream rng(mix_seed({seed, 0x6c71722dull}));
  std::vector<Vec> out;
  int kd = sys.k() * sys.d();
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n; ++attempt) {
    // Shrink the sampling scale over time so that hard (kappa, gamma) pairs
    // still collect enough nearly-optimal small-gain candidates.
    double scale = 0.8 * std::pow(0.995, attempt);
    Vec pi(static_cast<std::size_t>(kd));
    for (double& v : pi) v = scale * rng.next_gaussian() / std::sqrt(static_cast<double>(kd));
    Mat k(sys.k(), sys.d());
    k.a = pi;
    if (strong_stability_certificate(k, sys).valid) out.push_back(std::move(pi));
  }
  if (static_cast<int>(out.size()) < n)
    throw CapabilityError("could not sample enough certified policies for the requested system");
  return out;
}

Mat random_psd_with_trace(int n, double c, RngStream& rng) {
  Mat g(n, n);
  for (double& v : g.a) v = rng.next_gaussian();
  Mat m = matmul(g, transpose(g));
  double tr = trace(m);
  if (tr <= 0.0) return (c / n) * Mat::identity(n);
  double target = c * (0.2 + 0.8 * rng.next_unit());
  return (target / tr) * m;
}

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

void TrackingSystem::validate() const {
  if (A.rows != A.cols || B.rows != A.rows || Q.rows != A.rows || Q.cols != A.cols)
    throw ValidationError("tracking system: dimension mismatch");
  if (rho <= 0.0 || rho >= 1.0) throw ValidationError("tracking system: rho must lie in (0, 1)");
  if (c_K <= 0.0 || c_eta <= 0.0 || c_z <= 0.0)
    throw ValidationError("tracking system: norm bounds must be positive");
  EighResult eig = jacobi_eigh(Q);
  if (eig.values.back() <= 0.0)
    throw ValidationError("tracking system: Q must be positive definite");
}

TrackingSteadyState tracking_stationary_state(const Mat& K, const Vec& eta,
                                              const TrackingSystem& sys) {
  Mat acl = sys.A + matmul(sys.B, K);
  Mat lhs = Mat::identity(sys.d()) - acl;
  TrackingSteadyState out;
  out.M_K = solve_linear_multi(lhs, sys.B);
  out.x_star = matvec(out.M_K, eta);
  Vec resid = vec_sub(out.x_star, vec_add(matvec(acl, out.x_star), matvec(sys.B, eta)));
  if (norm2(resid) > 1e-10 * std::max(1.0, norm2(out.x_star)))
    throw NumericError("tracking steady state: fixed-point residual too large");
  return out;
}

Vec tracking_erm_bias(const Mat& K, const Vec& mean_z, const TrackingSystem& sys) {
  Mat m = tracking_stationary_state(K, Vec(static_cast<std::size_t>(sys.k()), 0.0), sys).M_K;
  Mat km = matmul(K, m);
  Mat g = matmul(transpose(m), matmul(sys.Q + matmul(transpose(K), K), m)) +
          Mat::identity(sys.k()) + km + transpose(km);
  return solve_linear(g, matvec(transpose(m), matvec(sys.Q, mean_z)));
}

double tracking_psi_eta(const TrackingSystem& sys) {
  double sigma_q = min_nonzero_singular_value(sys.Q);
  double sigma_b = min_nonzero_singular_value(sys.B);
  return 2.0 * sys.c_z * sys.c_eta * spectral_norm(sys.Q) * spectral_norm(sys.B) /
         (sigma_q * sigma_b * sigma_b * (1.0 - sys.rho));
}

TrackingEnv::TrackingEnv(TrackingSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  int kd = sys_.k() * sys_.d();
  policy_space_.box = symmetric_box(kd + sys_.k(), std::max(sys_.c_K, sys_.c_eta));
  loss_space_.box = symmetric_box(sys_.d(), sys_.c_z);
}

Mat TrackingEnv::policy_K(const Vec& pi) const { return reshape(pi, 0, sys_.k(), sys_.d()); }

Vec TrackingEnv::policy_eta(const Vec& pi) const {
  return Vec(pi.begin() + sys_.k() * sys_.d(), pi.end());
}

Vec TrackingEnv::flatten_policy(const Mat& K, const Vec& eta) const {
  Vec pi = K.a;
  pi.insert(pi.end(), eta.begin(), eta.end());
  return pi;
}

double TrackingEnv::state_bound() const {
  return spectral_norm(sys_.B) * sys_.c_eta / (1.0 - sys_.rho);
}

bool TrackingEnv::policy_valid(const Vec& pi) const {
  if (static_cast<int>(pi.size()) != sys_.k() * sys_.d() + sys_.k()) return false;
  Mat k = policy_K(pi);
  if (spectral_norm(k) > sys_.c_K + kCertSlack) return false;
  if (norm2(policy_eta(pi)) > sys_.c_eta + kCertSlack) return false;
  return spectral_norm(sys_.A + matmul(sys_.B, k)) <= sys_.rho + kCertSlack;
}

bool TrackingEnv::instance_valid(const Instance& inst) const {
  if (!inst.zeta.empty()) return false;
  if (static_cast<int>(inst.z.size()) != sys_.d()) return false;
  return norm2(inst.z) <= sys_.c_z + 1e-9;
}

Vec TrackingEnv::step(const Vec& x, const Vec& pi, const Vec& zeta) const {
  (void)zeta;
  Vec u = vec_add(matvec(policy_K(pi), x), policy_eta(pi));
  return vec_add(matvec(sys_.A, x), matvec(sys_.B, u));
}

double TrackingEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  Vec u = vec_add(matvec(policy_K(pi), x), policy_eta(pi));
  Vec e = vec_sub(x, z);
  return dot(e, matvec(sys_.Q, e)) + dot(u, u);
}

Instance TrackingEnv::sample_instance(RngStream& rng) const {
  // Validity is the norm ball, so cube draws are scaled back inside it.
  Instance inst;
  inst.z.resize(static_cast<std::size_t>(sys_.d()));
  for (double& v : inst.z) v = rng.next_uniform(-sys_.c_z, sys_.c_z);
  double n = norm2(inst.z);
  if (n > sys_.c_z)
    for (double& v : inst.z) v *= sys_.c_z / n;
  return inst;
}

double TrackingEnv::loss_bound() const {
  double cx = state_bound();
  double err = cx + sys_.c_z;
  double cu = sys_.c_K * cx + sys_.c_eta;
  return err * err * spectral_norm(sys_.Q) + cu * cu;
}

double TrackingEnv::stationary_loss(const Vec& pi, const Vec& z) const {
  Vec x = tracking_stationary_state(policy_K(pi), policy_eta(pi), sys_).x_star;
  return loss(pi, x, z);
}

// ---------------------------------------------------------------------------
// Saturated nonlinear control
// ---------------------------------------------------------------------------

void NonlinearSystem::validate() const {
  if (A.rows != A.cols || B.rows != A.rows)
    throw ValidationError("nonlinear system: dimension mismatch");
  if (c_sat <= 0.0) throw ValidationError("nonlinear system: c_sat must be positive");
  if (gamma <= 0.0 || gamma >= 1.0)
    throw ValidationError("nonlinear system: gamma must lie in (0, 1)");
  if (s_norm <= 0.0) throw ValidationError("nonlinear system: s_norm must be positive");
  if (q_u < 0.0) throw ValidationError("nonlinear system: q_u must be nonnegative");
}

namespace {
Vec saturate(const Vec& v, double c_sat) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = c_sat * std::tanh(v[i] / c_sat);
  return out;
}
}  // namespace

Vec picard_fixed_point(const std::function<Vec(const Vec&)>& map, int dim, double gamma) {
  Vec x(static_cast<std::size_t>(dim), 0.0);
  double prev_step = -1.0;
  for (long iter = 0; iter < 100000; ++iter) {
    Vec next = map(x);
    double step = norm2(vec_sub(next, x));
    x = std::move(next);
    if (step < 1e-12) return x;
    if (prev_step > 1e-300 && step > ((1.0 - gamma) + 1e-9) * prev_step)
      throw NumericError("fixed point: iteration is not contracting at the declared rate");
    prev_step = step;
  }
  throw NumericError("fixed point: iteration cap reached without convergence");
}

Vec nonlinear_fixed_point(const NonlinearSystem& sys, const Mat& theta_mat, const Vec& bias) {
  auto map = [&](const Vec& x) {
    Vec u = vec_add(matvec(theta_mat, x), bias);
    return saturate(vec_add(matvec(sys.A, x), matvec(sys.B, u)), sys.c_sat);
  };
  return picard_fixed_point(map, sys.d(), sys.gamma);
}

NonlinearEnv::NonlinearEnv(NonlinearSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  int dim = sys_.k() * sys_.d() + sys_.k();
  policy_space_.box = symmetric_box(dim, sys_.c_theta);
  loss_space_.box = symmetric_box(sys_.d(), 1.0);
}

Mat NonlinearEnv::policy_theta(const Vec& pi) const { return reshape(pi, 0, sys_.k(), sys_.d()); }

Vec NonlinearEnv::policy_bias(const Vec& pi) const {
  return Vec(pi.begin() + sys_.k() * sys_.d(), pi.end());
}

Vec NonlinearEnv::flatten_policy(const Mat& theta, const Vec& bias) const {
  Vec pi = theta.a;
  pi.insert(pi.end(), bias.begin(), bias.end());
  return pi;
}

Vec NonlinearEnv::control(const Vec& pi, const Vec& x) const {
  return vec_add(matvec(policy_theta(pi), x), policy_bias(pi));
}

double NonlinearEnv::state_norm_bound() const {
  return sys_.c_sat * std::sqrt(static_cast<double>(sys_.d()));
}

double NonlinearEnv::loss_state_lipschitz() const {
  double cx = state_norm_bound();
  double cz = std::sqrt(static_cast<double>(sys_.d()));
  double cu = sys_.c_theta * (cx + 1.0);
  return (2.0 * (cx + cz) + 2.0 * sys_.q_u * cu * sys_.c_theta) / sys_.s_norm;
}

bool NonlinearEnv::policy_valid(const Vec& pi) const {
  if (static_cast<int>(pi.size()) != sys_.k() * sys_.d() + sys_.k()) return false;
  if (norm2(pi) > sys_.c_theta + kCertSlack) return false;
  Mat closed = sys_.A + matmul(sys_.B, policy_theta(pi));
  return spectral_norm(closed) <= (1.0 - sys_.gamma) + kCertSlack;
}

Vec NonlinearEnv::step(const Vec& x, const Vec& pi, const Vec& zeta) const {
  (void)zeta;
  return saturate(vec_add(matvec(sys_.A, x), matvec(sys_.B, control(pi, x))), sys_.c_sat);
}

double NonlinearEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  Vec e = vec_sub(x, z);
  Vec u = control(pi, x);
  return std::min(1.0, (dot(e, e) + sys_.q_u * dot(u, u)) / sys_.s_norm);
}

double NonlinearEnv::stationary_loss(const Vec& pi, const Vec& z) const {
  Vec x = nonlinear_fixed_point(sys_, policy_theta(pi), policy_bias(pi));
  return loss(pi, x, z);
}

// ---------------------------------------------------------------------------
// Adversarial-disturbance LQR
// ---------------------------------------------------------------------------

void AdvLqrSystem::validate() const {
  if (A.rows != A.cols || B.rows != A.rows)
    throw ValidationError("disturbance lqr system: dimension mismatch");
  if (W_adv <= 0.0) throw ValidationError("disturbance lqr system: W_adv must be positive");
  if (kappa < 1.0) throw ValidationError("disturbance lqr system: kappa must be >= 1");
  if (gamma <= 0.0 || gamma >= 1.0)
    throw ValidationError("disturbance lqr system: gamma must lie in (0, 1)");
  if (C <= 0.0) throw ValidationError("disturbance lqr system: C must be positive");
}

Mat advlqr_counterfactual_covariance(const Mat& K, const std::vector<Vec>& zetas,
                                     const AdvLqrSystem& sys) {
  Mat acl = sys.A + matmul(sys.B, K);
  Vec x(static_cast<std::size_t>(sys.d()), 0.0);
  for (const Vec& zeta : zetas) x = vec_add(matvec(acl, x), zeta);
  return outer(x, x);
}

double advlqr_loss_bound(const AdvLqrSystem& sys) {
  double cx = sys.state_bound();
  return sys.C * (1.0 + sys.kappa * sys.kappa) * cx * cx;
}

double advlqr_lipschitz_bound(const AdvLqrSystem& sys) {
  double cx = sys.state_bound();
  double sigma_b = spectral_norm(sys.B);
  double k = sys.kappa, g = sys.gamma;
  double state_shift = 2.0 * k * k * k * k * cx * sigma_b * sys.W_adv / (g * g) +
                       k * k * k * cx * cx * sigma_b / g;
  return sys.C * (2.0 * cx * cx * k + (k * k + 1.0) * state_shift);
}

AdvLqrEnv::AdvLqrEnv(AdvLqrSystem sys, std::vector<Vec> candidate_policies)
    : sys_(std::move(sys)) {
  sys_.validate();
  int d = sys_.d(), k = sys_.k();
  if (!candidate_policies.empty()) {
    for (const Vec& pi : candidate_policies) {
      if (static_cast<int>(pi.size()) != k * d)
        throw ValidationError("disturbance lqr candidate policy has wrong dimension");
      if (!policy_valid(pi))
        throw ValidationError("disturbance lqr candidate policy is not certified stable");
    }
    policy_space_.finite = std::move(candidate_policies);
  } else {
    policy_space_.box = symmetric_box(k * d, sys_.kappa);
  }
  loss_space_.box = symmetric_box(d * d + k * k, sys_.C);
  dyn_space_.box = symmetric_box(d, sys_.W_adv);
}

Mat AdvLqrEnv::policy_matrix(const Vec& pi) const { return reshape(pi, 0, sys_.k(), sys_.d()); }

void AdvLqrEnv::split_instance(const Vec& z, Mat& q, Mat& r) const {
  q = reshape(z, 0, sys_.d(), sys_.d());
  r = reshape(z, static_cast<std::size_t>(sys_.d() * sys_.d()), sys_.k(), sys_.k());
}

Vec AdvLqrEnv::make_instance(const Mat& q, const Mat& r) const {
  Vec z;
  append_flat(z, q);
  append_flat(z, r);
  return z;
}

bool AdvLqrEnv::policy_valid(const Vec& pi) const {
  if (static_cast<int>(pi.size()) != sys_.k() * sys_.d()) return false;
  std::uint64_t h = hash_vec(pi);
  auto it = cert_cache_.find(h);
  if (it != cert_cache_.end()) return it->second;
  // There is no noise covariance here; the certificate only needs some
  // positive-definite Lyapunov weight to exhibit (H, L), so use the identity.
  bool ok = strong_stability_certificate(policy_matrix(pi), sys_.A, sys_.B,
                                         Mat::identity(sys_.d()), sys_.kappa, sys_.gamma)
                .valid;
  cert_cache_.emplace(h, ok);
  return ok;
}

bool AdvLqrEnv::instance_valid(const Instance& inst) const {
  if (static_cast<int>(inst.z.size()) != sys_.d() * sys_.d() + sys_.k() * sys_.k()) return false;
  if (static_cast<int>(inst.zeta.size()) != sys_.d()) return false;
  if (norm2(inst.zeta) > sys_.W_adv + 1e-9) return false;
  Mat q, r;
  split_instance(inst.z, q, r);
  return psd_with_trace(q, sys_.C) && psd_with_trace(r, sys_.C);
}

Vec AdvLqrEnv::step(const Vec& x, const Vec& pi, const Vec& zeta) const {
  Mat acl = sys_.A + matmul(sys_.B, policy_matrix(pi));
  return vec_add(matvec(acl, x), zeta);
}

double AdvLqrEnv::loss(const Vec& pi, const Vec& x, const Vec& z) const {
  Mat k = policy_matrix(pi);
  Mat q, r;
  split_instance(z, q, r);
  Mat m = q + matmul(transpose(k), matmul(r, k));
  return dot(x, matvec(m, x));
}

Instance AdvLqrEnv::sample_instance(RngStream& rng) const {
  Instance inst;
  inst.z = make_instance(random_psd_with_trace(sys_.d(), sys_.C, rng),
                         random_psd_with_trace(sys_.k(), sys_.C, rng));
  inst.zeta.resize(static_cast<std::size_t>(sys_.d()));
  for (double& v : inst.zeta) v = rng.next_uniform(-sys_.W_adv, sys_.W_adv);
  double n = norm2(inst.zeta);
  if (n > sys_.W_adv)
    for (double& v : inst.zeta) v *= sys_.W_adv / n;
  return inst;
}

}  // namespace dynregret
