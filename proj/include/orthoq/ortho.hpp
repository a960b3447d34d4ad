#ifndef ORTHOQ_ORTHO_HPP
#define ORTHOQ_ORTHO_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "orthoq/model.hpp"

namespace orthoq {

/// Thrown when the basis covariance is numerically rank-deficient: the
/// orthogonalization is structurally unidentified for this model/order.
class SingularBasisCovariance : public std::runtime_error {
 public:
  SingularBasisCovariance(double rcond, int order);
  double rcond() const { return rcond_; }
  int order() const { return order_; }

 private:
  double rcond_;
  int order_;
};

struct OrthoOptions {
  double singular_tol = 1e-10;   // reciprocal-condition threshold for the basis covariance
  int quadrature_nodes = 20;     // fallback and verification rule size
  int richardson_levels = 1;     // extra halving steps in the b_q difference fallback
};

/// Projection pieces of the order-q orthogonal moment: basis covariance
/// sigma_ww, basis/moment covariance sigma_wu, conditional-mean gradient b,
/// and the solved coefficients A with sigma_ww A = sigma_wu - b.
struct ProjectionComponents {
  int q = 0;
  Eigen::MatrixXd sigma_ww;  // k x k
  Eigen::MatrixXd sigma_wu;  // k x dim(u)
  Eigen::MatrixXd b;         // k x dim(u)
  Eigen::MatrixXd coeffs;    // A, k x dim(u)
  double rcond = 0.0;
};

/// Stacked density-derivative ratios D^m_eta l / l over IndexFamily(d_eta, q),
/// evaluated through the chain-rule matrix and per-coordinate Hermite ratios.
Eigen::VectorXd generalized_score(const ConditionalModel& model, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& eta, int q, const Eigen::VectorXd& y);

/// Diagonal of E[(grad_m l / l)(grad_m l / l)'] over IndexFamily(d_out, q):
/// products of per-coordinate Hermite moments.
Eigen::VectorXd mean_ratio_moment_diagonal(const IndexFamily& fam_out,
                                           const std::vector<GaussianScale>& scales);

ProjectionComponents projection_components(const ConditionalModel& model, const Moment& moment,
                                           const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                           int q, const OrthoOptions& opts = {});

/// u(z) - A' w_q(z) at the same evaluation point as the components.
Eigen::VectorXd orthogonalized_moment(const ConditionalModel& model, const Moment& moment,
                                      const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                      const ProjectionComponents& components);

struct OrthogonalityEntry {
  MultiIndex index;
  double violation = 0.0;        // max over moment components
  bool reduced_confidence = false;  // difference step near underflow at high order
};

struct OrthogonalityReport {
  std::vector<OrthogonalityEntry> entries;
  double max_violation = 0.0;
};

/// Numerical check of order-q orthogonality: for every index m up to order q,
/// nested central differences in eta of the quadrature expectation of the
/// orthogonalized moment, with the sampling density held fixed at (theta, eta).
/// When with_projection is false the raw moment u is checked instead.
OrthogonalityReport orthogonality_check(const ConditionalModel& model, const Moment& moment,
                                        const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                        const Eigen::VectorXd& mu, int q,
                                        const QuadratureRule& rule, bool with_projection = true,
                                        const OrthoOptions& opts = {});

/// Estimate of E[(grad^q_eta)' sigma_ww^{-1} w_q | x] by the same quadrature
/// plus nested differences; equals the alternating sign diagonal when the
/// basis machinery is consistent. Exposed for verification suites.
Eigen::MatrixXd basis_identity_estimate(const ConditionalModel& model,
                                        const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                        int q, const QuadratureRule& rule,
                                        const OrthoOptions& opts = {});

/// Nested central difference of a vector map over a multi-index direction.
/// Step per level: eps^(1/(order+2)) * (1 + |eta|), per the engine convention.
Eigen::VectorXd nested_central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& eta,
    const MultiIndex& m, double step);

double difference_step(int order, const Eigen::VectorXd& eta);

}  // namespace orthoq

#endif
