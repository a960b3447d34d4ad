#ifndef ORTHOQ_MODELS_HPP
#define ORTHOQ_MODELS_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "orthoq/model.hpp"

namespace orthoq {

// ---------------------------------------------------------------------------
// Neyman-Scott: Y_ij = eta_i + sigma * eps_ij, theta = (sigma^2)

/// One unit's T outcomes; eta scalar, all coordinates share the same scale.
class NeymanScottModel final : public ConditionalModel {
 public:
  explicit NeymanScottModel(int t);

  int eta_dim() const override { return 1; }
  int outcome_dim() const override { return t_; }
  int theta_dim() const override { return 1; }

  Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const override;
  MeanDerivatives mean_derivatives(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   int order) const override;
  std::vector<GaussianScale> scales(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd mean_theta_jacobian(const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& eta) const override;
  Eigen::MatrixXd scale_theta_jacobian(const Eigen::VectorXd& theta) const override;

 private:
  int t_;
};

/// u = eta^2 - mu, the unit contribution to mu = (1/N) sum eta_i^2.
class SquaredEffectMoment final : public Moment {
 public:
  int dim() const override { return 1; }
  Kind kind() const override { return Kind::EtaFunction; }
  Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& mu) const override;
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& mu) const override;
  std::optional<Eigen::MatrixXd> analytic_b(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                            const IndexFamily& fam) const override;
};

/// Degrees-of-freedom corrected variance and the bias-corrected mean of
/// squared effects for an N x T panel.
struct NeymanScottEstimates {
  double sigma2_hat;
  double mu_hat;
};
NeymanScottEstimates neyman_scott_closed_forms(const Eigen::MatrixXd& panel);

// ---------------------------------------------------------------------------
// Linear regression with a general design: Y = X eta + sigma * eps

class LinearDesignModel final : public ConditionalModel {
 public:
  explicit LinearDesignModel(Eigen::MatrixXd x);

  int eta_dim() const override { return static_cast<int>(x_.cols()); }
  int outcome_dim() const override { return static_cast<int>(x_.rows()); }
  int theta_dim() const override { return 1; }  // theta = (sigma^2)

  Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const override;
  MeanDerivatives mean_derivatives(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   int order) const override;
  std::vector<GaussianScale> scales(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd mean_theta_jacobian(const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& eta) const override;
  Eigen::MatrixXd scale_theta_jacobian(const Eigen::VectorXd& theta) const override;

  const Eigen::MatrixXd& design() const { return x_; }

 private:
  Eigen::MatrixXd x_;
};

/// u = mu - eta' Q eta for a symmetric Q.
class QuadraticFormMoment final : public Moment {
 public:
  explicit QuadraticFormMoment(Eigen::MatrixXd q);
  int dim() const override { return 1; }
  Kind kind() const override { return Kind::EtaFunction; }
  Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& mu) const override;
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& mu) const override;
  std::optional<Eigen::MatrixXd> analytic_b(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                            const IndexFamily& fam) const override;

 private:
  Eigen::MatrixXd q_;
};

/// Trace-corrected quadratic form and the degrees-of-freedom variance for the
/// general-design regression. sigma2 absent: the estimated variance is used
/// in the quadratic-form correction.
struct LinearTraceEstimates {
  double mu_hat;
  double sigma2_hat;
};
LinearTraceEstimates linear_trace_estimators(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& q,
                                             std::optional<double> sigma2 = std::nullopt);

// ---------------------------------------------------------------------------
// Linear AR(1) panel: Y_ij = eta_i + rho Y_{i,j-1} + eps_ij, first column of
// the panel is the conditioning observation.

/// c(rho) = (1/(1-rho)) (1 - (1-rho^T)/(T(1-rho))); the adjusted-score
/// intercept. Throws for rho = 1.
double ar1_c(double rho, int t);

/// Value of the bias-adjusted score equation for rho at (rho, sigma2), with
/// unit effects concentrated out at etahat_i(rho) = Ybar_i - rho * Ybar_{i,-1}.
/// Panel layout: N x (T+1), column 0 conditioning.
double ar1_adjusted_score(const Eigen::MatrixXd& panel, double rho, double sigma2);

/// Root of the adjusted score equation in rho, by bisection + secant polish.
double ar1_solve(const Eigen::MatrixXd& panel, double sigma2, double lo = -0.99,
                 double hi = 0.99, double tol = 1e-9);

// ---------------------------------------------------------------------------
// CES team production

/// Common parameters: team premium, substitution, log-error variances by
/// team size. gamma = 0 (the Cobb-Douglas limit) is excluded.
struct CesTheta {
  double beta = 1.0;
  double gamma = 1.0;
  double sigma2_solo = 1.0;  // error variance in size-1 teams
  double sigma2_duo = 1.0;   // error variance in size-2 teams

  Eigen::VectorXd to_vector() const;
  static CesTheta from_vector(const Eigen::VectorXd& v);
  void validate() const;
};

/// log output mean of a size-2 team: log beta + (1/gamma) log((e^{g z1}+e^{g z2})/2),
/// as a function of log effects z = (z1, z2).
double ces_log_mean(const CesTheta& theta, double z1, double z2);

/// Expected output level of a size-2 team: exp(log mean + sigma2_duo / 2).
double ces_expected_output(const CesTheta& theta, double z1, double z2);

/// All partial derivatives of the CES log mean with respect to the log
/// effects, stacked over IndexFamily(2, order).
Eigen::VectorXd ces_log_mean_derivatives(const CesTheta& theta, double z1, double z2, int order);

/// The three-outcome subset model: one size-2 team plus one size-1 team per
/// member, in logs. eta = the two log worker effects. Construction with
/// include_solo_rows = false yields the duo-only model whose basis covariance
/// is singular (only the effect aggregate enters the likelihood).
class CesSubsetModel final : public ConditionalModel {
 public:
  explicit CesSubsetModel(bool include_solo_rows = true);

  int eta_dim() const override { return 2; }
  int outcome_dim() const override { return include_solo_rows_ ? 3 : 1; }
  int theta_dim() const override { return 4; }

  Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const override;
  MeanDerivatives mean_derivatives(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   int order) const override;
  std::vector<GaussianScale> scales(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd mean_theta_jacobian(const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& eta) const override;
  Eigen::MatrixXd scale_theta_jacobian(const Eigen::VectorXd& theta) const override;

 private:
  bool include_solo_rows_;
};

/// Factory matching the subset construction used in estimation.
CesSubsetModel ces_subset_model(const CesTheta& theta);

/// u = expected duo output at (theta, eta) minus mu; the average-output
/// moment for one subset.
class CesOutputMoment final : public Moment {
 public:
  int dim() const override { return 1; }
  Kind kind() const override { return Kind::EtaFunction; }
  Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& mu) const override;
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& mu) const override;
  std::optional<Eigen::MatrixXd> analytic_b(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                            const IndexFamily& fam) const override;
};

/// Right-hand side of the fixed-effect-free restriction on the team premium:
/// (E[Y^g | size 2] / E[Y^g | size 1])^{1/g} * exp(g (s2_solo - s2_duo)/2).
double beta_restriction(const CesTheta& theta, double moment_duo, double moment_solo);

}  // namespace orthoq

#endif
