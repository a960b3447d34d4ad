#include "orthoq/gauss.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace orthoq {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

GaussianScale::GaussianScale(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::domain_error("GaussianScale: sigma must be positive and finite");
}

GaussianScale GaussianScale::from_log_variance(double log_variance) {
  return GaussianScale(std::exp(0.5 * log_variance));
}

GaussianScale GaussianScale::from_variance(double variance) {
  if (!(variance > 0.0)) throw std::domain_error("GaussianScale: variance must be positive");
  return GaussianScale(std::sqrt(variance));
}

double GaussianScale::log_variance() const { return 2.0 * std::log(sigma_); }

void hermite_values(int jmax, double u, double* out) {
  out[0] = 1.0;
  if (jmax == 0) return;
  out[1] = u;
  for (int j = 1; j < jmax; ++j) out[j + 1] = u * out[j] - static_cast<double>(j) * out[j - 1];
}

double density_derivative_ratio(int j, double y, double mean, const GaussianScale& scale) {
  if (j < 0) throw std::domain_error("density_derivative_ratio: order must be non-negative");
  if (j > kDerivativeOrderCap)
    throw std::domain_error("density_derivative_ratio: order exceeds cap");
  const double u = (y - mean) / scale.sigma();
  double h[kDerivativeOrderCap + 1];
  hermite_values(j, u, h);
  return h[j] / std::pow(scale.sigma(), j);
}

HermiteMoments hermite_moments(int j, int k, const GaussianScale& scale) {
  if (j < 0 || k < 0) throw std::domain_error("hermite_moments: orders must be non-negative");
  if (j > kDerivativeOrderCap || k > kDerivativeOrderCap)
    throw std::domain_error("hermite_moments: order exceeds cap");
  HermiteMoments out{0.0, 0.0};
  if (j == k) {
    double fact = 1.0;
    for (int i = 2; i <= j; ++i) fact *= static_cast<double>(i);
    out.kappa = fact / std::pow(scale.variance(), j);
  }
  if (j == 2) out.rho = 2.0 / std::pow(scale.sigma(), 3);
  return out;
}

double gaussian_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                            const std::vector<GaussianScale>& scales) {
  if (y.size() != mean.size() || static_cast<std::size_t>(y.size()) != scales.size())
    throw std::invalid_argument("gaussian_log_density: dimension mismatch");
  double ll = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double s = scales[static_cast<std::size_t>(i)].sigma();
    const double u = (y[i] - mean[i]) / s;
    ll += -0.5 * kLogTwoPi - std::log(s) - 0.5 * u * u;
  }
  return ll;
}

QuadratureRule QuadratureRule::gauss_hermite(int nodes_per_dim, int dimension) {
  if (nodes_per_dim < 2) throw std::invalid_argument("QuadratureRule: need >= 2 nodes per dim");
  if (dimension < 1 || dimension > 4)
    throw std::invalid_argument("QuadratureRule: dimension must be in 1..4");

  // Jacobi matrix of the monic probabilists' Hermite recurrence: zero
  // diagonal, off-diagonal sqrt(k). Eigenvalues are the nodes; squared first
  // eigenvector components are the weights (total mass 1).
  const int n = nodes_per_dim;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("QuadratureRule: eigen decomposition failed");
  Eigen::VectorXd x = es.eigenvalues();

  // Newton-polish each node on h_n and take the weight from the Christoffel
  // identity 1 / sum_k h_k(x)^2 / k!, which is accurate to roundoff once the
  // node is; the eigenvector route loses a few digits at high orders.
  Eigen::VectorXd w(n);
  std::vector<double> h(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) {
    for (int iter = 0; iter < 8; ++iter) {
      hermite_values(n, x[i], h.data());
      const double slope = n * h[static_cast<std::size_t>(n - 1)];
      if (slope == 0.0) break;
      const double delta = h[static_cast<std::size_t>(n)] / slope;
      x[i] -= delta;
      if (std::abs(delta) < 1e-15 * (1.0 + std::abs(x[i]))) break;
    }
    hermite_values(n, x[i], h.data());
    double chris = 0.0;
    double kfact = 1.0;
    for (int k = 0; k < n; ++k) {
      if (k > 0) kfact *= k;
      chris += h[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(k)] / kfact;
    }
    w[i] = 1.0 / chris;
  }
  w /= w.sum();

  QuadratureRule rule;
  rule.nodes_per_dim_ = n;
  rule.dimension_ = dimension;
  const std::size_t total = static_cast<std::size_t>(std::pow(n, dimension));
  rule.nodes_.reserve(total);
  rule.weights_.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(dimension), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Eigen::VectorXd node(dimension);
    double weight = 1.0;
    for (int d = 0; d < dimension; ++d) {
      node[d] = x[idx[static_cast<std::size_t>(d)]];
      weight *= w[idx[static_cast<std::size_t>(d)]];
    }
    rule.nodes_.push_back(std::move(node));
    rule.weights_.push_back(weight);
    for (int d = dimension - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < n) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  return rule;
}

Eigen::VectorXd quadrature_expectation(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& mean,
    const std::vector<GaussianScale>& scales, const QuadratureRule& rule) {
  if (rule.dimension() != mean.size() || static_cast<std::size_t>(mean.size()) != scales.size())
    throw std::invalid_argument("quadrature_expectation: dimension mismatch");
  Eigen::VectorXd acc;
  Eigen::VectorXd y(mean.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Eigen::VectorXd& node = rule.node(i);
    for (int d = 0; d < mean.size(); ++d)
      y[d] = mean[d] + scales[static_cast<std::size_t>(d)].sigma() * node[d];
    Eigen::VectorXd v = f(y);
    if (!v.allFinite()) {
      std::ostringstream os;
      os << "quadrature_expectation: non-finite integrand at node " << i;
      throw std::runtime_error(os.str());
    }
    if (acc.size() == 0)
      acc = rule.weight(i) * v;
    else
      acc += rule.weight(i) * v;
  }
  return acc;
}

}  // namespace orthoq
