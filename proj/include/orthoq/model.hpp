#ifndef ORTHOQ_MODEL_HPP
#define ORTHOQ_MODEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "orthoq/chainrule.hpp"
#include "orthoq/gauss.hpp"
#include "orthoq/multiindex.hpp"

namespace orthoq {

/// A Gaussian conditional outcome model with covariates bound at
/// construction: Y = m(theta, eta) + diag(sigma(theta)) * N(0, I). Mean
/// derivatives in eta are analytic, supplied by each concrete model.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;

  virtual int eta_dim() const = 0;
  virtual int outcome_dim() const = 0;
  virtual int theta_dim() const = 0;

  virtual Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const = 0;
  virtual MeanDerivatives mean_derivatives(const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& eta, int order) const = 0;
  virtual std::vector<GaussianScale> scales(const Eigen::VectorXd& theta) const = 0;

  /// d m_i / d theta_k and d sigma_i / d theta_k, used by the score moment.
  virtual Eigen::MatrixXd mean_theta_jacobian(const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& eta) const = 0;
  virtual Eigen::MatrixXd scale_theta_jacobian(const Eigen::VectorXd& theta) const = 0;

  double log_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                     const Eigen::VectorXd& y) const {
    return gaussian_log_density(y, mean(theta, eta), scales(theta));
  }
};

/// A moment function u(z; theta, eta, mu). The kind drives which closed-form
/// path the engine uses for the basis/moment covariance and for b_q.
class Moment {
 public:
  enum class Kind {
    ThetaScore,   // u = d log density / d theta: E[w u'] from Hermite moments, b_q = 0
    EtaFunction,  // u does not depend on y: E[w u'] = 0, b_q = eta-derivatives of u
    General,      // engine falls back to quadrature
  };

  virtual ~Moment() = default;

  virtual int dim() const = 0;
  virtual Kind kind() const = 0;

  virtual Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& eta, const Eigen::VectorXd& mu) const = 0;

  /// E[u | x] under the model at (theta, eta), as a closed-form map of eta.
  /// ThetaScore moments return zero; EtaFunction moments return eval().
  virtual Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& eta,
                                           const Eigen::VectorXd& mu) const = 0;

  /// Analytic b_q = grad^q_eta E[u'|x] stacked over fam, k x dim(u).
  /// nullopt defers to the engine's finite-difference fallback.
  virtual std::optional<Eigen::MatrixXd> analytic_b(const Eigen::VectorXd& theta,
                                                    const Eigen::VectorXd& eta,
                                                    const Eigen::VectorXd& mu,
                                                    const IndexFamily& fam) const {
    (void)theta;
    (void)eta;
    (void)mu;
    (void)fam;
    return std::nullopt;
  }
};

/// The likelihood score with respect to theta of a Gaussian conditional
/// model: sum_i [dm_i/dtheta * s_i + dsigma_i/dtheta * t_i] with s_i, t_i the
/// per-coordinate mean and scale scores.
class ScoreMoment final : public Moment {
 public:
  explicit ScoreMoment(const ConditionalModel& model) : model_(model) {}

  int dim() const override { return model_.theta_dim(); }
  Kind kind() const override { return Kind::ThetaScore; }

  Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& mu) const override;

  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& mu) const override {
    (void)theta;
    (void)eta;
    (void)mu;
    return Eigen::VectorXd::Zero(dim());
  }

  std::optional<Eigen::MatrixXd> analytic_b(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                            const IndexFamily& fam) const override {
    (void)theta;
    (void)eta;
    (void)mu;
    return Eigen::MatrixXd::Zero(fam.size(), dim());
  }

  const ConditionalModel& model() const { return model_; }

 private:
  const ConditionalModel& model_;
};

inline Eigen::VectorXd ScoreMoment::eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                                         const Eigen::VectorXd& eta,
                                         const Eigen::VectorXd& mu) const {
  (void)mu;
  const Eigen::VectorXd m = model_.mean(theta, eta);
  const std::vector<GaussianScale> s = model_.scales(theta);
  const Eigen::MatrixXd mj = model_.mean_theta_jacobian(theta, eta);
  const Eigen::MatrixXd sj = model_.scale_theta_jacobian(theta);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < y.size(); ++i) {
    const double sig = s[static_cast<std::size_t>(i)].sigma();
    const double z = (y[i] - m[i]) / sig;
    const double mean_score = z / sig;              // d log l_i / d m_i
    const double scale_score = (z * z - 1.0) / sig;  // d log l_i / d sigma_i
    u += mean_score * mj.row(i).transpose() + scale_score * sj.row(i).transpose();
  }
  return u;
}

}  // namespace orthoq

#endif
