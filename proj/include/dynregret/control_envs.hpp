#pragma once

// Control-style environments: linear-quadratic regulation with stochastic
// noise (exact covariance propagation), target tracking, saturated nonlinear
// dynamics, and linear-quadratic dynamics with adversarial disturbances.

#include <functional>
#include <map>

#include "dynregret/engine.hpp"
#include "dynregret/linalg.hpp"
#include "dynregret/protocol.hpp"

namespace dynregret {

// ---------------------------------------------------------------------------
// Linear-quadratic regulation.
//   x_{t+1} = A x_t + B u_t + w_t,  w_t ~ N(0, W),  u_t = K x_t,
//   per-round cost x^T Q_t x + u^T R_t u with Q_t, R_t PSD, tr <= C.
// The engine-visible state is the exact state distribution [mean; vec(cov)],
// so replays and losses are exact expectations (no Monte Carlo).  The game
// starts at x_1 ~ N(0, W): round-1 covariance is W, and the time-t covariance
// under a constant policy is sum_{s=0}^{t-1} Acl^s W (Acl^s)^T.
// ---------------------------------------------------------------------------

struct LqrSystem {
  Mat A;  // d x d
  Mat B;  // d x k
  Mat W;  // d x d PSD noise covariance
  double sigma_w = 0.0;  // declared bound on ||W||_2
  double psi_w = 0.0;    // declared bound on tr(W)
  double tau_w = 0.0;    // declared lower bound: W >= tau_w I
  double C = 1.0;        // trace bound on each of Q, R
  double kappa = 1.0;    // strong-stability norm/conditioning bound
  double gamma = 0.1;    // strong-stability contraction margin

  int d() const { return A.rows; }
  int k() const { return B.cols; }
  // Verifies declared PSD/trace/eigenvalue bounds; throws ValidationError.
  void validate() const;
};

// Strong stability of K: ||K||_2 <= kappa, and A+BK = H L H^{-1} with
// ||L||_2 <= 1-gamma and ||H||_2 ||H^{-1}||_2 <= kappa.  H is exhibited as
// the symmetric PSD square root of the Lyapunov solution X_K.
struct StabilityCertificate {
  Mat K, H, L;
  double kappa = 0.0, gamma = 0.0;
  bool norm_ok = false;          // ||K||_2 <= kappa
  bool contraction_ok = false;   // ||L||_2 <= 1 - gamma
  bool conditioning_ok = false;  // ||H||_2 ||H^{-1}||_2 <= kappa
  bool valid = false;
  std::string reason;  // empty when valid
};

// All certificate comparisons use absolute slack 1e-8.
StabilityCertificate strong_stability_certificate(const Mat& K, const LqrSystem& sys);
// Variant taking the closed-loop builder's W explicitly (used by the
// disturbance environment, which has no noise covariance of its own).
StabilityCertificate strong_stability_certificate(const Mat& K, const Mat& A,
                                                  const Mat& B, const Mat& W,
                                                  double kappa, double gamma);

Mat lqr_closed_loop(const LqrSystem& sys, const Mat& K);

// Stationary covariance X_K (Lyapunov solution) and its t-step truncation
// X_{K,t} = sum_{s=0}^{t-1} Acl^s W (Acl^s)^T (round-t covariance from the
// N(0, W) start).
Mat lqr_stationary_covariance(const Mat& K, const LqrSystem& sys);
Mat lqr_truncated_covariance(const Mat& K, int t, const LqrSystem& sys);

// tr((Q + K^T R K) X_K); requires K to certify strongly stable.
double lqr_stationary_loss(const Mat& K, const Mat& Q, const Mat& R, const LqrSystem& sys);
// Exact expected counterfactual loss tr((Q + K^T R K) X_{K,t}).
double lqr_counterfactual_loss(const Mat& K, const Mat& Q, const Mat& R, int t,
                               const LqrSystem& sys);

// Bounds from the stationary-loss regularity analysis.
double lqr_loss_bound(const LqrSystem& sys);       // C (1+kappa^2) sigma_w kappa^2 / gamma
double lqr_lipschitz_bound(const LqrSystem& sys);  // 4 C (1+kappa^2) sigma_b kappa^5 sigma_w / gamma^2

class LqrEnv final : public Environment {
 public:
  // candidate_policies: optional finite list of flattened K matrices; each is
  // certified at construction (uncertified entries raise CapabilityError).
  LqrEnv(LqrSystem sys, std::vector<Vec> candidate_policies = {});

  std::string id() const override { return "lqr"; }
  int state_dim() const override;
  Vec initial_state() const override;
  const SpaceDesc& policy_space() const override { return policy_space_; }
  const SpaceDesc& loss_instance_space() const override { return loss_space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_space_; }
  bool policy_valid(const Vec& pi) const override;
  bool instance_valid(const Instance& inst) const override;
  Vec step(const Vec& x, const Vec& pi, const Vec& zeta) const override;
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return lqr_loss_bound(sys_); }
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override;
  bool stationary_loss_linear_in_z() const override { return true; }
  Instance sample_instance(RngStream& rng) const override;

  const LqrSystem& system() const { return sys_; }
  Mat policy_matrix(const Vec& pi) const;   // k x d
  void split_instance(const Vec& z, Mat& q, Mat& r) const;
  Vec make_instance(const Mat& q, const Mat& r) const;
  Vec flatten_policy(const Mat& k) const;
  // Engine-visible state accessors: [mean(d); vec(cov)].
  Vec pack_state(const Vec& mean, const Mat& cov) const;
  Mat state_covariance(const Vec& x) const;

 private:
  LqrSystem sys_;
  SpaceDesc policy_space_, loss_space_, dyn_space_;
  mutable std::map<std::uint64_t, bool> cert_cache_;
  mutable std::map<std::uint64_t, Mat> xk_cache_;
  const Mat& cached_stationary_covariance(const Vec& pi) const;
};

// Samples random policies with Gaussian entries (scale shrinking over
// attempts) and keeps the first n that certify for sys's (kappa, gamma).
std::vector<Vec> lqr_certified_candidates(const LqrSystem& sys, int n,
                                          std::uint64_t seed, int max_attempts = 20000);

// ---------------------------------------------------------------------------
// Adversarial target tracking.
//   x_{t+1} = A x_t + B u_t,  u_t = K x_t + eta,  loss = (x-z)^T Q (x-z) + |u|^2,
//   policies (K, eta) with ||A+BK||_2 <= rho, ||K||_2 <= c_K, ||eta||_2 <= c_eta,
//   targets ||z||_2 <= c_z.  Deterministic state, x_1 = 0.
// ---------------------------------------------------------------------------

struct TrackingSystem {
  Mat A;  // d x d
  Mat B;  // d x k
  Mat Q;  // d x d positive definite
  double rho = 0.9;
  double c_K = 1.0;
  double c_eta = 1.0;
  double c_z = 1.0;
  int d() const { return A.rows; }
  int k() const { return B.cols; }
  void validate() const;
};

// Steady state x* = (I - (A+BK))^{-1} B eta of the closed loop.
struct TrackingSteadyState {
  Vec x_star;
  Mat M_K;  // (I - (A+BK))^{-1} B
};
TrackingSteadyState tracking_stationary_state(const Mat& K, const Vec& eta,
                                              const TrackingSystem& sys);

// Closed-form minimizer of the stationary cost in eta for fixed K and mean
// target: eta = G^{-1} M_K^T Q mean_z with
// G = M_K^T (Q + K^T K) M_K + I + K M_K + (K M_K)^T.
Vec tracking_erm_bias(const Mat& K, const Vec& mean_z, const TrackingSystem& sys);

// Successive-minimizer stability scale: psi_eta = 2 c_z c_eta |Q| |B| /
// (sigma_Q sigma_B^2 (1-rho)), sigma_* = smallest nonzero singular value.
double tracking_psi_eta(const TrackingSystem& sys);

class TrackingEnv final : public Environment {
 public:
  explicit TrackingEnv(TrackingSystem sys);

  std::string id() const override { return "tracking"; }
  int state_dim() const override { return sys_.d(); }
  Vec initial_state() const override { return Vec(static_cast<std::size_t>(sys_.d()), 0.0); }
  const SpaceDesc& policy_space() const override { return policy_space_; }
  const SpaceDesc& loss_instance_space() const override { return loss_space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_space_; }
  bool policy_valid(const Vec& pi) const override;
  bool instance_valid(const Instance& inst) const override;
  Vec step(const Vec& x, const Vec& pi, const Vec& zeta) const override;
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override;
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override;
  Instance sample_instance(RngStream& rng) const override;

  const TrackingSystem& system() const { return sys_; }
  // Policy layout: [vec(K) row-major (k*d); eta (k)].
  Mat policy_K(const Vec& pi) const;
  Vec policy_eta(const Vec& pi) const;
  Vec flatten_policy(const Mat& K, const Vec& eta) const;
  double state_bound() const;  // c_x = |B| c_eta / (1-rho)

 private:
  TrackingSystem sys_;
  SpaceDesc policy_space_, loss_space_, dyn_space_;
};

// ---------------------------------------------------------------------------
// Saturated nonlinear control.
//   x_{t+1} = sat(A x_t + B u_t), sat(v) = c_sat tanh(v/c_sat) elementwise
//   (1-Lipschitz, |sat| <= c_sat), u = Theta x + b with theta = [vec(Theta); b],
//   ||theta||_2 <= c_theta and ||A + B Theta||_2 <= 1-gamma (contraction).
//   loss = min(1, (|x - z|^2 + q_u |u|^2) / s_norm) in [0, 1].  x_1 = 0.
// ---------------------------------------------------------------------------

struct NonlinearSystem {
  Mat A;  // d x d
  Mat B;  // d x k
  double c_sat = 1.0;    // elementwise saturation level
  double c_theta = 1.0;  // policy parameter norm bound
  double gamma = 0.1;    // contraction margin of x -> Ax + B pi(x)
  double q_u = 0.1;      // action weight inside the loss
  double s_norm = 1.0;   // loss normalizer
  int d() const { return A.rows; }
  int k() const { return B.cols; }
  void validate() const;
};

// Picard iteration x <- map(x) from the origin for a map that contracts
// distances by (1 - gamma); stops when a step falls below 1e-12.  The
// geometric decay of step norms is certified along the way (ratio at most
// (1-gamma) + 1e-9), so a non-contracting map raises NumericError instead of
// silently returning a bogus point.
Vec picard_fixed_point(const std::function<Vec(const Vec&)>& map, int dim, double gamma);

// Fixed point of the saturated closed loop x* = sat(A x* + B pi_theta(x*)).
Vec nonlinear_fixed_point(const NonlinearSystem& sys, const Mat& theta_mat, const Vec& bias);

class NonlinearEnv final : public Environment {
 public:
  explicit NonlinearEnv(NonlinearSystem sys);

  std::string id() const override { return "nonlinear"; }
  int state_dim() const override { return sys_.d(); }
  Vec initial_state() const override { return Vec(static_cast<std::size_t>(sys_.d()), 0.0); }
  const SpaceDesc& policy_space() const override { return policy_space_; }
  const SpaceDesc& loss_instance_space() const override { return loss_space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_space_; }
  bool policy_valid(const Vec& pi) const override;
  Vec step(const Vec& x, const Vec& pi, const Vec& zeta) const override;
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return 1.0; }
  bool has_stationary_loss() const override { return true; }
  double stationary_loss(const Vec& pi, const Vec& z) const override;

  const NonlinearSystem& system() const { return sys_; }
  Mat policy_theta(const Vec& pi) const;  // k x d
  Vec policy_bias(const Vec& pi) const;   // k
  Vec flatten_policy(const Mat& theta, const Vec& bias) const;
  Vec control(const Vec& pi, const Vec& x) const;
  double state_norm_bound() const;     // c_sat * sqrt(d)
  double loss_state_lipschitz() const; // declared L_{l,x} over valid arguments

 private:
  NonlinearSystem sys_;
  SpaceDesc policy_space_, loss_space_, dyn_space_;
};

// ---------------------------------------------------------------------------
// Linear-quadratic dynamics with adversarial disturbances.
//   x_{t+1} = A x_t + B u_t + zeta_t,  ||zeta_t||_2 <= W_adv,  u = K x,
//   loss = x^T (Q + K^T R K) x.  Deterministic state, x_1 = 0; no stationary
//   loss exists (the disturbances prevent convergence).
// ---------------------------------------------------------------------------

struct AdvLqrSystem {
  Mat A;  // d x d
  Mat B;  // d x k
  double W_adv = 1.0;  // disturbance norm bound
  double C = 1.0;      // trace bound on Q, R
  double kappa = 1.0;
  double gamma = 0.1;
  int d() const { return A.rows; }
  int k() const { return B.cols; }
  double state_bound() const { return kappa * W_adv / gamma; }  // C_x
  void validate() const;
};

// X~_t = x~_t x~_t^T with x~_{s+1} = (A+BK) x~_s + zeta_s from x~_1 = 0.
Mat advlqr_counterfactual_covariance(const Mat& K, const std::vector<Vec>& zetas,
                                     const AdvLqrSystem& sys);

double advlqr_loss_bound(const AdvLqrSystem& sys);       // C (1+kappa^2) C_x^2
double advlqr_lipschitz_bound(const AdvLqrSystem& sys);  // Lipschitz of ell^Phi in K

class AdvLqrEnv final : public Environment {
 public:
  AdvLqrEnv(AdvLqrSystem sys, std::vector<Vec> candidate_policies = {});

  std::string id() const override { return "advlqr"; }
  int state_dim() const override { return sys_.d(); }
  Vec initial_state() const override { return Vec(static_cast<std::size_t>(sys_.d()), 0.0); }
  const SpaceDesc& policy_space() const override { return policy_space_; }
  const SpaceDesc& loss_instance_space() const override { return loss_space_; }
  const SpaceDesc& dynamics_instance_space() const override { return dyn_space_; }
  bool policy_valid(const Vec& pi) const override;
  bool instance_valid(const Instance& inst) const override;
  Vec step(const Vec& x, const Vec& pi, const Vec& zeta) const override;
  double loss(const Vec& pi, const Vec& x, const Vec& z) const override;
  double loss_bound() const override { return advlqr_loss_bound(sys_); }
  Instance sample_instance(RngStream& rng) const override;

  const AdvLqrSystem& system() const { return sys_; }
  Mat policy_matrix(const Vec& pi) const;
  void split_instance(const Vec& z, Mat& q, Mat& r) const;
  Vec make_instance(const Mat& q, const Mat& r) const;

 private:
  AdvLqrSystem sys_;
  SpaceDesc policy_space_, loss_space_, dyn_space_;
  mutable std::map<std::uint64_t, bool> cert_cache_;
};

// Random PSD matrix with trace in [0.2 c, c]: G G^T scaled, G Gaussian.
Mat random_psd_with_trace(int n, double c, RngStream& rng);

}  // namespace dynregret
