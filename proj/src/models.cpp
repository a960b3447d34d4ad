#include "orthoq/models.hpp"

#include <cmath>
#include <stdexcept>

namespace orthoq {

// ---------------------------------------------------------------------------
// Neyman-Scott

NeymanScottModel::NeymanScottModel(int t) : t_(t) {
  if (t < 1) throw std::invalid_argument("NeymanScottModel: need T >= 1");
}

Eigen::VectorXd NeymanScottModel::mean(const Eigen::VectorXd& theta,
                                       const Eigen::VectorXd& eta) const {
  (void)theta;
  return Eigen::VectorXd::Constant(t_, eta[0]);
}

MeanDerivatives NeymanScottModel::mean_derivatives(const Eigen::VectorXd& theta,
                                                   const Eigen::VectorXd& eta, int order) const {
  MeanDerivatives md;
  md.d_eta = 1;
  md.d_out = t_;
  md.value = mean(theta, eta);
  md.derivs = Eigen::MatrixXd::Zero(t_, enumerate_indices(1, order).size());
  md.derivs.col(0).setOnes();
  return md;
}

std::vector<GaussianScale> NeymanScottModel::scales(const Eigen::VectorXd& theta) const {
  return std::vector<GaussianScale>(static_cast<std::size_t>(t_),
                                    GaussianScale::from_variance(theta[0]));
}

Eigen::MatrixXd NeymanScottModel::mean_theta_jacobian(const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& eta) const {
  (void)theta;
  (void)eta;
  return Eigen::MatrixXd::Zero(t_, 1);
}

Eigen::MatrixXd NeymanScottModel::scale_theta_jacobian(const Eigen::VectorXd& theta) const {
  const double sigma = std::sqrt(theta[0]);
  return Eigen::MatrixXd::Constant(t_, 1, 0.5 / sigma);
}

Eigen::VectorXd SquaredEffectMoment::eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                                          const Eigen::VectorXd& eta,
                                          const Eigen::VectorXd& mu) const {
  (void)y;
  return conditional_mean(theta, eta, mu);
}

Eigen::VectorXd SquaredEffectMoment::conditional_mean(const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& eta,
                                                      const Eigen::VectorXd& mu) const {
  (void)theta;
  Eigen::VectorXd u(1);
  u[0] = eta[0] * eta[0] - mu[0];
  return u;
}

std::optional<Eigen::MatrixXd> SquaredEffectMoment::analytic_b(const Eigen::VectorXd& theta,
                                                               const Eigen::VectorXd& eta,
                                                               const Eigen::VectorXd& mu,
                                                               const IndexFamily& fam) const {
  (void)theta;
  (void)mu;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(fam.size(), 1);
  for (int k = 0; k < fam.size(); ++k) {
    const int p = fam.at(k).order();
    if (p == 1) b(k, 0) = 2.0 * eta[0];
    if (p == 2) b(k, 0) = 2.0;
  }
  return b;
}

NeymanScottEstimates neyman_scott_closed_forms(const Eigen::MatrixXd& panel) {
  const int n = static_cast<int>(panel.rows());
  const int t = static_cast<int>(panel.cols());
  if (t < 2) throw std::invalid_argument("neyman_scott_closed_forms: degenerate panel, T < 2");
  double rss = 0.0;
  double msq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ybar = panel.row(i).mean();
    rss += (panel.row(i).array() - ybar).square().sum();
    msq += ybar * ybar;
  }
  NeymanScottEstimates est;
  est.sigma2_hat = rss / (static_cast<double>(n) * (t - 1));
  est.mu_hat = msq / n - est.sigma2_hat / t;
  return est;
}

// ---------------------------------------------------------------------------
// Linear design

LinearDesignModel::LinearDesignModel(Eigen::MatrixXd x) : x_(std::move(x)) {
  if (x_.rows() < 1 || x_.cols() < 1)
    throw std::invalid_argument("LinearDesignModel: empty design");
}

Eigen::VectorXd LinearDesignModel::mean(const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& eta) const {
  (void)theta;
  return x_ * eta;
}

MeanDerivatives LinearDesignModel::mean_derivatives(const Eigen::VectorXd& theta,
                                                    const Eigen::VectorXd& eta, int order) const {
  MeanDerivatives md;
  md.d_eta = eta_dim();
  md.d_out = outcome_dim();
  md.value = mean(theta, eta);
  md.derivs = Eigen::MatrixXd::Zero(outcome_dim(), enumerate_indices(eta_dim(), order).size());
  md.derivs.leftCols(eta_dim()) = x_;  // order-1 block; all higher derivatives vanish
  return md;
}

std::vector<GaussianScale> LinearDesignModel::scales(const Eigen::VectorXd& theta) const {
  return std::vector<GaussianScale>(static_cast<std::size_t>(outcome_dim()),
                                    GaussianScale::from_variance(theta[0]));
}

Eigen::MatrixXd LinearDesignModel::mean_theta_jacobian(const Eigen::VectorXd& theta,
                                                       const Eigen::VectorXd& eta) const {
  (void)theta;
  (void)eta;
  return Eigen::MatrixXd::Zero(outcome_dim(), 1);
}

Eigen::MatrixXd LinearDesignModel::scale_theta_jacobian(const Eigen::VectorXd& theta) const {
  return Eigen::MatrixXd::Constant(outcome_dim(), 1, 0.5 / std::sqrt(theta[0]));
}

QuadraticFormMoment::QuadraticFormMoment(Eigen::MatrixXd q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols() || !q_.isApprox(q_.transpose(), 1e-12))
    throw std::invalid_argument("QuadraticFormMoment: Q must be symmetric");
}

Eigen::VectorXd QuadraticFormMoment::eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                                          const Eigen::VectorXd& eta,
                                          const Eigen::VectorXd& mu) const {
  (void)y;
  return conditional_mean(theta, eta, mu);
}

Eigen::VectorXd QuadraticFormMoment::conditional_mean(const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& eta,
                                                      const Eigen::VectorXd& mu) const {
  (void)theta;
  Eigen::VectorXd u(1);
  u[0] = mu[0] - eta.dot(q_ * eta);
  return u;
}

std::optional<Eigen::MatrixXd> QuadraticFormMoment::analytic_b(const Eigen::VectorXd& theta,
                                                               const Eigen::VectorXd& eta,
                                                               const Eigen::VectorXd& mu,
                                                               const IndexFamily& fam) const {
  (void)theta;
  (void)mu;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(fam.size(), 1);
  const Eigen::VectorXd grad = -2.0 * (q_ * eta);
  for (int k = 0; k < fam.size(); ++k) {
    const MultiIndex& m = fam.at(k);
    if (m.order() == 1) b(k, 0) = grad[m[0] - 1];
    if (m.order() == 2) b(k, 0) = -2.0 * q_(m[0] - 1, m[1] - 1);
  }
  return b;
}

LinearTraceEstimates linear_trace_estimators(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& q,
                                             std::optional<double> sigma2) {
  const int n = static_cast<int>(x.rows());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  const int rank = static_cast<int>(cod.rank());
  if (rank == n)
    throw std::invalid_argument("linear_trace_estimators: zero residual degrees of freedom");
  const Eigen::VectorXd resid = y - x * cod.solve(y);
  LinearTraceEstimates est;
  est.sigma2_hat = resid.squaredNorm() / static_cast<double>(n - rank);

  const Eigen::MatrixXd xtx = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xtx);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff()))
    throw std::invalid_argument("linear_trace_estimators: singular X'X");
  const Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  const Eigen::VectorXd proj = xtx_inv * (x.transpose() * y);
  const double s2 = sigma2.value_or(est.sigma2_hat);
  est.mu_hat = proj.dot(q * proj) - s2 * (q * xtx_inv).trace();
  return est;
}

// ---------------------------------------------------------------------------
// AR(1)

double ar1_c(double rho, int t) {
  if (std::abs(1.0 - rho) < 1e-12) throw std::domain_error("ar1_c: pole at rho = 1");
  const double td = static_cast<double>(t);
  return (1.0 - (1.0 - std::pow(rho, t)) / (td * (1.0 - rho))) / (1.0 - rho);
}

double ar1_adjusted_score(const Eigen::MatrixXd& panel, double rho, double sigma2) {
  const int n = static_cast<int>(panel.rows());
  const int t = static_cast<int>(panel.cols()) - 1;
  if (t < 2) throw std::invalid_argument("ar1_adjusted_score: need T >= 2 beyond conditioning");
  if (!(std::abs(rho) < 1.0)) throw std::domain_error("ar1_adjusted_score: |rho| must be < 1");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ybar = panel.row(i).tail(t).mean();
    const double ybar_lag = panel.row(i).head(t).mean();
    const double eta_hat = ybar - rho * ybar_lag;
    double s = 0.0;
    for (int j = 1; j <= t; ++j) {
      const double lag = panel(i, j - 1);
      s += lag * (panel(i, j) - eta_hat - rho * lag);
    }
    total += s / sigma2;
  }
  return total + static_cast<double>(n) * ar1_c(rho, t);
}

double ar1_solve(const Eigen::MatrixXd& panel, double sigma2, double lo, double hi, double tol) {
  auto f = [&](double r) { return ar1_adjusted_score(panel, r, sigma2); };
  double flo = f(lo), fhi = f(hi);
  if (flo * fhi > 0.0) throw std::runtime_error("ar1_solve: no sign change on the bracket");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) < tol || hi - lo < 1e-14) return mid;
    if (flo * fm <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// CES

Eigen::VectorXd CesTheta::to_vector() const {
  Eigen::VectorXd v(4);
  v << beta, gamma, sigma2_solo, sigma2_duo;
  return v;
}

CesTheta CesTheta::from_vector(const Eigen::VectorXd& v) {
  CesTheta t;
  t.beta = v[0];
  t.gamma = v[1];
  t.sigma2_solo = v[2];
  t.sigma2_duo = v[3];
  return t;
}

void CesTheta::validate() const {
  if (!(beta > 0.0)) throw std::domain_error("CesTheta: beta must be positive");
  if (!(sigma2_solo > 0.0) || !(sigma2_duo > 0.0))
    throw std::domain_error("CesTheta: variances must be positive");
  if (std::abs(gamma) < 1e-6) throw std::domain_error("CesTheta: gamma too close to 0");
}

namespace {

constexpr double kLog2 = 0.69314718055994530941723212145818;

double log_sum_exp2(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// L[g] = gamma * t (1 - t) * g'(t) on polynomial coefficient vectors; every
// CES log-mean derivative of order >= 2 is (+-1) L^{k-1}[t] evaluated at the
// duo weight t = p1.
std::vector<double> apply_weight_derivation(const std::vector<double>& g, double gamma) {
  std::vector<double> dg(g.size() >= 1 ? g.size() - 1 : 0, 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) dg[i - 1] = static_cast<double>(i) * g[i];
  std::vector<double> out(dg.size() + 2, 0.0);
  for (std::size_t i = 0; i < dg.size(); ++i) {
    out[i + 1] += gamma * dg[i];
    out[i + 2] -= gamma * dg[i];
  }
  return out;
}

double eval_poly(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
  return v;
}

}  // namespace

double ces_log_mean(const CesTheta& theta, double z1, double z2) {
  return std::log(theta.beta) +
         (log_sum_exp2(theta.gamma * z1, theta.gamma * z2) - kLog2) / theta.gamma;
}

double ces_expected_output(const CesTheta& theta, double z1, double z2) {
  return std::exp(ces_log_mean(theta, z1, z2) + 0.5 * theta.sigma2_duo);
}

Eigen::VectorXd ces_log_mean_derivatives(const CesTheta& theta, double z1, double z2, int order) {
  const IndexFamily fam = enumerate_indices(2, order);
  const double p1 = logistic(theta.gamma * (z1 - z2));
  std::vector<std::vector<double>> polys;  // polys[k] = L^k [t], k >= 1
  std::vector<double> cur = {0.0, 1.0};    // t
  for (int k = 2; k <= order; ++k) {
    cur = apply_weight_derivation(cur, theta.gamma);
    polys.push_back(cur);
  }
  Eigen::VectorXd out(fam.size());
  for (int k = 0; k < fam.size(); ++k) {
    const MultiIndex& m = fam.at(k);
    const int p = m.order();
    if (p == 1) {
      out[k] = (m[0] == 1) ? p1 : 1.0 - p1;
      continue;
    }
    int c2 = 0;
    for (int label : m.entries()) c2 += label == 2 ? 1 : 0;
    const double sign = (c2 % 2 == 0) ? 1.0 : -1.0;
    out[k] = sign * eval_poly(polys[static_cast<std::size_t>(p - 2)], p1);
  }
  return out;
}

CesSubsetModel::CesSubsetModel(bool include_solo_rows) : include_solo_rows_(include_solo_rows) {}

CesSubsetModel ces_subset_model(const CesTheta& theta) {
  theta.validate();
  return CesSubsetModel(true);
}

Eigen::VectorXd CesSubsetModel::mean(const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& eta) const {
  const CesTheta t = CesTheta::from_vector(theta);
  Eigen::VectorXd m(outcome_dim());
  m[0] = ces_log_mean(t, eta[0], eta[1]);
  if (include_solo_rows_) {
    m[1] = eta[0];
    m[2] = eta[1];
  }
  return m;
}

MeanDerivatives CesSubsetModel::mean_derivatives(const Eigen::VectorXd& theta,
                                                 const Eigen::VectorXd& eta, int order) const {
  const CesTheta t = CesTheta::from_vector(theta);
  const IndexFamily fam = enumerate_indices(2, order);
  MeanDerivatives md;
  md.d_eta = 2;
  md.d_out = outcome_dim();
  md.value = mean(theta, eta);
  md.derivs = Eigen::MatrixXd::Zero(outcome_dim(), fam.size());
  md.derivs.row(0) = ces_log_mean_derivatives(t, eta[0], eta[1], order).transpose();
  if (include_solo_rows_) {
    md.derivs(1, fam.position(MultiIndex({1}))) = 1.0;
    md.derivs(2, fam.position(MultiIndex({2}))) = 1.0;
  }
  return md;
}

std::vector<GaussianScale> CesSubsetModel::scales(const Eigen::VectorXd& theta) const {
  const CesTheta t = CesTheta::from_vector(theta);
  std::vector<GaussianScale> s;
  s.push_back(GaussianScale::from_variance(t.sigma2_duo));
  if (include_solo_rows_) {
    s.push_back(GaussianScale::from_variance(t.sigma2_solo));
    s.push_back(GaussianScale::from_variance(t.sigma2_solo));
  }
  return s;
}

Eigen::MatrixXd CesSubsetModel::mean_theta_jacobian(const Eigen::VectorXd& theta,
                                                    const Eigen::VectorXd& eta) const {
  const CesTheta t = CesTheta::from_vector(theta);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(outcome_dim(), 4);
  const double g = t.gamma;
  const double s = log_sum_exp2(g * eta[0], g * eta[1]);
  const double p1 = logistic(g * (eta[0] - eta[1]));
  j(0, 0) = 1.0 / t.beta;
  j(0, 1) = -(s - kLog2) / (g * g) + (eta[0] * p1 + eta[1] * (1.0 - p1)) / g;
  return j;
}

Eigen::MatrixXd CesSubsetModel::scale_theta_jacobian(const Eigen::VectorXd& theta) const {
  const CesTheta t = CesTheta::from_vector(theta);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(outcome_dim(), 4);
  j(0, 3) = 0.5 / std::sqrt(t.sigma2_duo);
  if (include_solo_rows_) {
    j(1, 2) = 0.5 / std::sqrt(t.sigma2_solo);
    j(2, 2) = 0.5 / std::sqrt(t.sigma2_solo);
  }
  return j;
}

Eigen::VectorXd CesOutputMoment::eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& eta,
                                      const Eigen::VectorXd& mu) const {
  (void)y;
  return conditional_mean(theta, eta, mu);
}

Eigen::VectorXd CesOutputMoment::conditional_mean(const Eigen::VectorXd& theta,
                                                  const Eigen::VectorXd& eta,
                                                  const Eigen::VectorXd& mu) const {
  const CesTheta t = CesTheta::from_vector(theta);
  Eigen::VectorXd u(1);
  u[0] = ces_expected_output(t, eta[0], eta[1]) - mu[0];
  return u;
}

std::optional<Eigen::MatrixXd> CesOutputMoment::analytic_b(const Eigen::VectorXd& theta,
                                                           const Eigen::VectorXd& eta,
                                                           const Eigen::VectorXd& mu,
                                                           const IndexFamily& fam) const {
  (void)mu;
  const CesTheta t = CesTheta::from_vector(theta);
  const int q = fam.max_order();
  // derivatives of exp(log mean): chain rule with the exponential outer map,
  // whose derivatives of every order equal the value itself
  MeanDerivatives md;
  md.d_eta = 2;
  md.d_out = 1;
  md.value = Eigen::VectorXd::Constant(1, ces_log_mean(t, eta[0], eta[1]));
  md.derivs = ces_log_mean_derivatives(t, eta[0], eta[1], q).transpose();
  const Eigen::MatrixXd m = faa_di_bruno_matrix(md, q);
  const double g = ces_expected_output(t, eta[0], eta[1]);
  return Eigen::MatrixXd(g * m.rowwise().sum());
}

double beta_restriction(const CesTheta& theta, double moment_duo, double moment_solo) {
  if (!(moment_duo > 0.0) || !(moment_solo > 0.0))
    throw std::domain_error("beta_restriction: moments must be positive");
  if (std::abs(theta.gamma) < 1e-12) throw std::domain_error("beta_restriction: gamma = 0");
  return std::pow(moment_duo / moment_solo, 1.0 / theta.gamma) *
         std::exp(0.5 * theta.gamma * (theta.sigma2_solo - theta.sigma2_duo));
}

}  // namespace orthoq
