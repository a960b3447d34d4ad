#ifndef ORTHOQ_ESTIMATE_HPP
#define ORTHOQ_ESTIMATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orthoq/netdata.hpp"
#include "orthoq/ortho.hpp"

namespace orthoq {

// ---------------------------------------------------------------------------
// Generic GMM solver

struct GmmOptions {
  double tol = 1e-9;  // on the weighted moment norm
  int max_iter = 200;
  std::uint64_t restart_seed = 17;  // one seeded restart after a singular Jacobian
  double step_cap = std::numeric_limits<double>::infinity();  // per-iteration sup-norm cap
};

struct GmmResult {
  Eigen::VectorXd estimate;
  double moment_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::string weight_id = "identity";
  std::string message;
};

/// Root/minimum of ||moment_sum(x)||_W by Newton steps on the first-order
/// condition with finite-difference Jacobians and a backtracking line search.
/// Just-identified systems are solved as moment equations directly.
GmmResult gmm_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& moment_sum,
                    const Eigen::MatrixXd& w, const Eigen::VectorXd& init,
                    const GmmOptions& options = {});

// ---------------------------------------------------------------------------
// Sample splitting

class IneligibleAuthorsError : public std::runtime_error {
 public:
  explicit IneligibleAuthorsError(std::vector<std::string> offenders);
  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

struct PreliminaryEffects {
  std::map<std::string, double> log_effect;  // eligible authors only
};

struct Split {
  SplitPlan plan;
  PreliminaryEffects effects;
};

/// Holds one sole-authored paper per eligible author out of estimation and
/// averages the remaining sole log outputs into the preliminary effect.
/// Deterministic in (corpus, seed). With require_all_eligible, a co-author of
/// any size-2 team lacking two sole papers raises IneligibleAuthorsError.
Split make_split(const TeamCorpus& corpus, std::uint64_t seed,
                 bool require_all_eligible = false);

// ---------------------------------------------------------------------------
// CES pipeline

/// Log outcomes and preliminary effects of one three-team subset.
struct SubsetSample {
  Eigen::VectorXd y;        // (log duo, log solo1, log solo2)
  Eigen::VectorXd eta_hat;  // (log effect 1, log effect 2)
};

std::vector<SubsetSample> assemble_samples(const TeamCorpus& corpus,
                                           const std::vector<SubsetTriple>& subsets,
                                           const PreliminaryEffects& effects);

/// Sum over subsets of the (orthogonalized, unless q = 0) likelihood score
/// for theta, at the preliminary effects.
Eigen::VectorXd ces_score_sum(const std::vector<SubsetSample>& samples, const CesTheta& theta,
                              int q, const OrthoOptions& opts = {});

/// Method-of-moments starting point: beta from the ratio of geometric means
/// and variances from residual variances, all at the given substitution
/// value (default 0.5).
CesTheta ces_initial_theta(const std::vector<SubsetSample>& samples, double gamma_init = 0.5);

struct CesFitResult {
  CesTheta theta;
  GmmResult gmm;
};

/// Just-identified GMM for (beta, gamma, sigma2_solo, sigma2_duo), solved in
/// unconstrained coordinates (log beta, gamma, log variances) with |gamma|
/// kept away from the excluded Cobb-Douglas point.
CesFitResult fit_ces_theta(const std::vector<SubsetSample>& samples, int q,
                           std::optional<CesTheta> init = std::nullopt,
                           const GmmOptions& options = {});

/// Orthogonalized average-output estimate at theta: the mean over subsets of
/// the projected duo-output moment (plug-in when q = 0).
double ces_average_output(const std::vector<SubsetSample>& samples, const CesTheta& theta, int q,
                          const OrthoOptions& opts = {});

// ---------------------------------------------------------------------------
// Cross-fitting

struct CrossFitOptions {
  int q = 2;  // 0 = plug-in
  int n_splits = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  bool estimate_mu = true;
  GmmOptions gmm;
};

struct SplitRecord {
  int split_id = 0;
  bool converged = false;
  CesTheta theta;
  double mu = std::numeric_limits<double>::quiet_NaN();
  double moment_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int n_subsets = 0;
  int skipped_subsets = 0;
  int holdout_reuse = 0;
  std::string message;
};

struct CrossFitResult {
  CesTheta theta_mean;
  double mu_mean = std::numeric_limits<double>::quiet_NaN();
  int failed_splits = 0;
  std::vector<SplitRecord> splits;
};

/// Repeats the split/estimate cycle across n_splits seeded splits and
/// averages the per-split estimates; failed splits are recorded and excluded.
/// Results are reduced in split order, so the worker count never changes the
/// output.
CrossFitResult cross_fit(const TeamCorpus& corpus, const CrossFitOptions& options);

// ---------------------------------------------------------------------------
// Sandwich variance

struct SandwichVariance {
  Eigen::MatrixXd g_mu;
  Eigen::MatrixXd g_theta;
  Eigen::MatrixXd v_xi;
  Eigen::MatrixXd covariance;
};

/// Plug-in GMM covariance from per-unit moments at the estimates:
/// xi_i = u_i + G_theta psi_i, bread (G'WG)^{-1} G'W, covariance
/// bread V_xi bread' / n over the n independent units. g_theta and psi may be
/// empty when the target parameter carries no first-stage correction.
SandwichVariance sandwich_variance(const std::vector<Eigen::VectorXd>& moments,
                                   const Eigen::MatrixXd& g_mu, const Eigen::MatrixXd& g_theta,
                                   const std::vector<Eigen::VectorXd>& psi,
                                   const Eigen::MatrixXd& w);

/// Sandwich standard errors for the four CES parameters from one split's
/// sample, with finite-difference Jacobians of the per-subset moments.
SandwichVariance ces_theta_sandwich(const std::vector<SubsetSample>& samples,
                                    const CesTheta& theta, int q);

// ---------------------------------------------------------------------------
// Parametric bootstrap

struct BootstrapOptions {
  int replications = 200;
  int inner_splits = 10;
  int q = 2;
  std::uint64_t seed = 0;
  int workers = 1;
  double min_success = 0.9;
  GmmOptions gmm;
};

struct BootstrapResult {
  std::vector<std::string> parameter_names;
  Eigen::VectorXd standard_errors;
  Eigen::MatrixXd quantiles;  // rows: parameters; cols: 2.5%, 50%, 97.5%
  int failures = 0;
  std::vector<Eigen::VectorXd> draws;  // successful replication estimates
};

/// Simulates corpora on the observed topology at the fitted parameters and
/// effects, re-runs the cross-fitted pipeline per replication, and reports
/// dispersion across replications.
BootstrapResult parametric_bootstrap(const TeamCorpus& corpus, const CesTheta& theta_hat,
                                     const std::map<std::string, double>& log_effects,
                                     const BootstrapOptions& options);

// ---------------------------------------------------------------------------
// Quasi-differencing estimator for gamma

struct QuasiDiffResult {
  double gamma_hat = 0.0;
  bool boundary_flag = false;
  double objective = 0.0;
  int n_teams = 0;
};

/// GMM on the fixed-effect-free transformed outcomes: projects Y(gamma) off
/// the team incidence columns and instruments with interacted preliminary
/// effects; golden-section search on a bracket located from the grid.
QuasiDiffResult quasi_diff_gamma(const TeamCorpus& corpus, const PreliminaryEffects& effects,
                                 const std::vector<double>& gamma_grid, std::uint64_t seed);

}  // namespace orthoq

#endif
