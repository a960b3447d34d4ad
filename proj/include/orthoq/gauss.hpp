#ifndef ORTHOQ_GAUSS_HPP
#define ORTHOQ_GAUSS_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace orthoq {

/// Highest density-derivative order the Hermite machinery will serve
/// (supports q = 6 including the products arising in the basis covariance).
inline constexpr int kDerivativeOrderCap = 14;

/// Standard deviation of one Gaussian outcome coordinate. Internally the
/// estimation layer carries log-variances; this type holds the positive scale.
class GaussianScale {
 public:
  explicit GaussianScale(double sigma);
  static GaussianScale from_log_variance(double log_variance);
  static GaussianScale from_variance(double variance);

  double sigma() const { return sigma_; }
  double variance() const { return sigma_ * sigma_; }
  double log_variance() const;

 private:
  double sigma_;
};

/// Probabilists' Hermite values h_0..h_jmax at u, by the stable recurrence
/// h_{j+1}(u) = u h_j(u) - j h_{j-1}(u).
void hermite_values(int jmax, double u, double* out);

/// [d^j l(y|m,sigma) / dm^j] / l(y|m,sigma) = h_j((y-m)/sigma) / sigma^j.
/// Throws std::domain_error beyond the order cap or for j < 0.
double density_derivative_ratio(int j, double y, double mean, const GaussianScale& scale);

struct HermiteMoments {
  double kappa;  // E[ratio_j * ratio_k] = 1{j=k} j! / sigma^(2j)
  double rho;    // E[ratio_j * d log l / d sigma] = 1{j=2} 2 / sigma^3
};

HermiteMoments hermite_moments(int j, int k, const GaussianScale& scale);

/// log of the diagonal Gaussian density prod_i phi((y_i-m_i)/s_i)/s_i.
double gaussian_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                            const std::vector<GaussianScale>& scales);

/// Tensor-product Gauss-Hermite rule for the standard normal weight,
/// capped at dimension 4. Nodes/weights come from the Golub-Welsch
/// eigen-decomposition of the Jacobi matrix; weights are normalized to sum 1.
class QuadratureRule {
 public:
  static QuadratureRule gauss_hermite(int nodes_per_dim, int dimension);

  int dimension() const { return dimension_; }
  int nodes_per_dim() const { return nodes_per_dim_; }
  std::size_t size() const { return weights_.size(); }
  const Eigen::VectorXd& node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  QuadratureRule() = default;
  int nodes_per_dim_ = 0;
  int dimension_ = 0;
  std::vector<Eigen::VectorXd> nodes_;
  std::vector<double> weights_;
};

/// sum_i w_i f(mean + scales o node_i). Throws on dimension mismatch; a
/// non-finite integrand value is reported with the offending node index.
Eigen::VectorXd quadrature_expectation(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& mean,
    const std::vector<GaussianScale>& scales, const QuadratureRule& rule);

}  // namespace orthoq

#endif
