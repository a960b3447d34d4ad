#include <doctest.h>

#include <cmath>

#include "orthoq/models.hpp"
#include "orthoq/ortho.hpp"
#include "orthoq/rng.hpp"
#include "support.hpp"

using namespace orthoq;

namespace {

// Forces the quadrature/difference fallback paths of the engine, so the
// closed-form covariance path can be checked against an independent route.
class GeneralScoreAdapter final : public Moment {
 public:
  explicit GeneralScoreAdapter(const ScoreMoment& inner) : inner_(inner) {}
  int dim() const override { return inner_.dim(); }
  Kind kind() const override { return Kind::General; }
  Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& mu) const override {
    return inner_.eval(y, theta, eta, mu);
  }
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& mu) const override {
    return inner_.conditional_mean(theta, eta, mu);
  }

 private:
  const ScoreMoment& inner_;
};

CesTheta random_ces_theta(Rng& rng) {
  CesTheta t;
  t.beta = 1.0 + 0.5 * rng.uniform();
  t.gamma = 0.5 + 0.8 * rng.uniform();
  t.sigma2_solo = 0.7 + 0.6 * rng.uniform();
  t.sigma2_duo = 0.7 + 0.6 * rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("neyman-scott generalized score at zero residuals") {
  const int t = 2;
  const NeymanScottModel model(t);
  Eigen::VectorXd theta(1), eta(1);
  theta << 1.0;
  eta << 0.8;
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(t, eta[0]);
  const Eigen::VectorXd w = generalized_score(model, theta, eta, 2, y);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(-2.0));  // -T / sigma^2
}

TEST_CASE("first basis element is the eta score") {
  const int t = 4;
  const NeymanScottModel model(t);
  Eigen::VectorXd theta(1), eta(1);
  theta << 1.7;
  eta << -0.3;
  Rng rng = Rng::stream(11);
  Eigen::VectorXd y(t);
  for (int j = 0; j < t; ++j) y[j] = eta[0] + rng.normal();
  const Eigen::VectorXd w = generalized_score(model, theta, eta, 1, y);
  const double score = (y.array() - eta[0]).sum() / theta[0];
  CHECK(w[0] == doctest::Approx(score).epsilon(1e-12));
}

TEST_CASE("ces generalized score has conditional mean zero") {
  const CesSubsetModel model;
  Rng rng = Rng::stream(23);
  const CesTheta theta = random_ces_theta(rng);
  Eigen::VectorXd eta(2);
  eta << 0.4 * rng.normal(), 0.4 * rng.normal();
  const QuadratureRule rule = QuadratureRule::gauss_hermite(20, 3);
  const Eigen::VectorXd mean = quadrature_expectation(
      [&](const Eigen::VectorXd& y) {
        return generalized_score(model, theta.to_vector(), eta, 2, y);
      },
      model.mean(theta.to_vector(), eta), model.scales(theta.to_vector()), rule);
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("projection coefficients for the variance score") {
  for (int t : {2, 5}) {
    const NeymanScottModel model(t);
    const ScoreMoment score(model);
    Eigen::VectorXd theta(1), eta(1);
    theta << 1.3;
    eta << 0.6;
    const ProjectionComponents pc =
        projection_components(model, score, theta, eta, Eigen::VectorXd(), 2);
    CHECK(pc.b.cwiseAbs().maxCoeff() == 0.0);  // theta-score has zero conditional mean
    CHECK(pc.coeffs(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pc.coeffs(1, 0) == doctest::Approx(1.0 / (2.0 * t)).epsilon(1e-12));
    // the solve residual is tight
    const Eigen::MatrixXd resid = pc.sigma_ww * pc.coeffs - (pc.sigma_wu - pc.b);
    CHECK(resid.norm() <= 1e-9 * ((pc.sigma_wu - pc.b).norm() + 1e-30));
  }
}

TEST_CASE("eta-function moments: difference fallback matches the analytic gradient") {
  const NeymanScottModel model(3);
  Eigen::VectorXd theta(1), eta(1), mu(1);
  theta << 0.9;
  eta << 1.4;
  mu << 0.5;

  // same moment with the analytic b withheld
  class NoAnalytic final : public Moment {
   public:
    int dim() const override { return 1; }
    Kind kind() const override { return Kind::EtaFunction; }
    Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& th,
                         const Eigen::VectorXd& e, const Eigen::VectorXd& m) const override {
      return inner_.eval(y, th, e, m);
    }
    Eigen::VectorXd conditional_mean(const Eigen::VectorXd& th, const Eigen::VectorXd& e,
                                     const Eigen::VectorXd& m) const override {
      return inner_.conditional_mean(th, e, m);
    }
    SquaredEffectMoment inner_;
  };

  const SquaredEffectMoment analytic;
  const NoAnalytic fallback;
  const ProjectionComponents a = projection_components(model, analytic, theta, eta, mu, 2);
  const ProjectionComponents b = projection_components(model, fallback, theta, eta, mu, 2);
  CHECK((a.b - b.b).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(a.sigma_wu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonalized squared-effect moment recovers the panel mean form") {
  const int t = 4;
  const NeymanScottModel model(t);
  const SquaredEffectMoment moment;
  Eigen::VectorXd theta(1), mu(1);
  theta << 1.21;
  mu << 0.0;
  Rng rng = Rng::stream(31);
  Eigen::VectorXd y(t);
  for (int j = 0; j < t; ++j) y[j] = 0.5 + rng.normal();
  for (double eta_hat : {0.1, 0.9, -2.0}) {
    Eigen::VectorXd eta(1);
    eta << eta_hat;
    const ProjectionComponents pc = projection_components(model, moment, theta, eta, mu, 2);
    const Eigen::VectorXd u = orthogonalized_moment(model, moment, y, theta, eta, mu, pc);
    const double ybar = y.mean();
    CHECK(u[0] == doctest::Approx(ybar * ybar - theta[0] / t - mu[0]).epsilon(1e-10));
  }
}

TEST_CASE("zero quadratic form leaves the moment untouched") {
  const LinearDesignModel model(Eigen::MatrixXd::Identity(4, 2));
  const QuadraticFormMoment moment(Eigen::MatrixXd::Zero(2, 2));
  Eigen::VectorXd theta(1), eta(2), mu(1), y(4);
  theta << 1.0;
  eta << 0.3, -0.2;
  mu << 0.7;
  y << 0.1, 0.4, -0.2, 0.9;
  const ProjectionComponents pc = projection_components(model, moment, theta, eta, mu, 2);
  CHECK(pc.coeffs.cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::VectorXd u = orthogonalized_moment(model, moment, y, theta, eta, mu, pc);
  CHECK(u[0] == doctest::Approx(mu[0]));
}

TEST_CASE("duo-only ces basis covariance is singular at order 1") {
  const CesSubsetModel duo_only(false);
  const ScoreMoment score(duo_only);
  CesTheta theta;
  Eigen::VectorXd eta(2);
  eta << 0.2, -0.1;
  CHECK_THROWS_AS(
      projection_components(duo_only, score, theta.to_vector(), eta, Eigen::VectorXd(), 1),
      SingularBasisCovariance);
  try {
    projection_components(duo_only, score, theta.to_vector(), eta, Eigen::VectorXd(), 1);
  } catch (const SingularBasisCovariance& e) {
    CHECK(e.order() == 1);
    CHECK(e.rcond() <= 1e-10);
  }
}

TEST_CASE("linear design: engine reproduces the trace-corrected closed forms") {
  Rng rng = Rng::stream(47);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 5 + static_cast<int>(rng.below(4));  // 5..8
    const int r = 2 + static_cast<int>(rng.below(2));  // 2..3
    Eigen::MatrixXd x(n, r);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j) x(i, j) = rng.normal();
    Eigen::MatrixXd qmat(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j <= i; ++j) {
        qmat(i, j) = rng.normal();
        qmat(j, i) = qmat(i, j);
      }
    const double sigma2 = 0.8 + rng.uniform();
    Eigen::VectorXd eta_hat(r), y(n);
    for (int j = 0; j < r; ++j) eta_hat[j] = rng.normal();
    for (int i = 0; i < n; ++i) y[i] = rng.normal();

    const LinearDesignModel model(x);
    Eigen::VectorXd theta(1), mu(1);
    theta << sigma2;
    mu << 0.33;

    const Eigen::MatrixXd xtx_inv =
        (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(r, r));
    const Eigen::MatrixXd proj = x * xtx_inv * x.transpose();

    // quadratic-form moment at known sigma^2
    const QuadraticFormMoment moment(qmat);
    const ProjectionComponents pc = projection_components(model, moment, theta, eta_hat, mu, 2);
    const Eigen::VectorXd u = orthogonalized_moment(model, moment, y, theta, eta_hat, mu, pc);
    const Eigen::VectorXd fitted = xtx_inv * (x.transpose() * y);
    const double want = mu[0] - fitted.dot(qmat * fitted) + sigma2 * (qmat * xtx_inv).trace();
    CHECK(u[0] == doctest::Approx(want).epsilon(1e-8));

    // variance score at q = 2 is the degrees-of-freedom corrected form
    const ScoreMoment score(model);
    const ProjectionComponents pcs =
        projection_components(model, score, theta, eta_hat, Eigen::VectorXd(), 2);
    const Eigen::VectorXd us =
        orthogonalized_moment(model, score, y, theta, eta_hat, Eigen::VectorXd(), pcs);
    const double rss = y.dot((Eigen::MatrixXd::Identity(n, n) - proj) * y);
    const double want_s =
        -(n - proj.trace()) / (2.0 * sigma2) + rss / (2.0 * sigma2 * sigma2);
    CHECK(us[0] == doctest::Approx(want_s).epsilon(1e-8));
  }
}

TEST_CASE("closed-form moment covariance agrees with the quadrature route") {
  const CesSubsetModel model;
  const ScoreMoment score(model);
  const GeneralScoreAdapter general(score);
  Rng rng = Rng::stream(59);
  const CesTheta theta = random_ces_theta(rng);
  Eigen::VectorXd eta(2);
  eta << 0.3, -0.5;
  const ProjectionComponents closed =
      projection_components(model, score, theta.to_vector(), eta, Eigen::VectorXd(), 2);
  const ProjectionComponents quad =
      projection_components(model, general, theta.to_vector(), eta, Eigen::VectorXd(), 2);
  CHECK((closed.sigma_wu - quad.sigma_wu).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(quad.b.cwiseAbs().maxCoeff() < 1e-7);
  CHECK((closed.coeffs - quad.coeffs).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("basis covariance is symmetric positive semidefinite") {
  const CesSubsetModel model;
  const ScoreMoment score(model);
  Rng rng = Rng::stream(61);
  for (int rep = 0; rep < 5; ++rep) {
    const CesTheta theta = random_ces_theta(rng);
    Eigen::VectorXd eta(2);
    eta << 0.6 * rng.normal(), 0.6 * rng.normal();
    for (int q : {1, 2, 3}) {
      const ProjectionComponents pc =
          projection_components(model, score, theta.to_vector(), eta, Eigen::VectorXd(), q);
      CHECK((pc.sigma_ww - pc.sigma_ww.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pc.sigma_ww);
      CHECK(es.eigenvalues().minCoeff() > -1e-10);
      CHECK(pc.rcond > 1e-10);
    }
  }
}

TEST_CASE("orthogonality report: eta-free moment shows no violation") {
  const NeymanScottModel model(3);
  const ScoreMoment score(model);
  Eigen::VectorXd theta(1), eta(1);
  theta << 1.1;
  eta << 0.25;
  const OrthogonalityReport report = orthogonality_check(
      model, score, theta, eta, Eigen::VectorXd(), 2, QuadratureRule::gauss_hermite(20, 3));
  CHECK(report.max_violation < 1e-9);
}

TEST_CASE("plug-in variance score fails second-order orthogonality by T/sigma^4") {
  const int t = 3;
  const NeymanScottModel model(t);
  const ScoreMoment score(model);
  Eigen::VectorXd theta(1), eta(1);
  theta << 1.4;
  eta << -0.7;
  const OrthogonalityReport raw =
      orthogonality_check(model, score, theta, eta, Eigen::VectorXd(), 2,
                          QuadratureRule::gauss_hermite(20, t), /*with_projection=*/false);
  const double expected = t / (theta[0] * theta[0]);
  double order2 = 0.0;
  for (const OrthogonalityEntry& e : raw.entries) {
    if (e.index.order() == 2) order2 = e.violation;
  }
  CHECK(order2 == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("ces score orthogonality after projection") {
  const CesSubsetModel model;
  const ScoreMoment score(model);
  Rng rng = Rng::stream(71);
  const CesTheta theta = random_ces_theta(rng);
  Eigen::VectorXd eta(2);
  eta << 0.2, 0.5;
  for (int q : {1, 2}) {
    const OrthogonalityReport report =
        orthogonality_check(model, score, theta.to_vector(), eta, Eigen::VectorXd(), q,
                            QuadratureRule::gauss_hermite(20, 3));
    CHECK(report.max_violation < 1e-5);
  }
}

TEST_CASE("projection preserves the conditional mean of the moment") {
  const CesSubsetModel model;
  const CesOutputMoment moment;
  Rng rng = Rng::stream(73);
  const CesTheta theta = random_ces_theta(rng);
  Eigen::VectorXd eta(2), mu(1);
  eta << -0.3, 0.4;
  mu << 1.0;
  const ProjectionComponents pc =
      projection_components(model, moment, theta.to_vector(), eta, mu, 2);
  const QuadratureRule rule = QuadratureRule::gauss_hermite(20, 3);
  const Eigen::VectorXd projected_mean = quadrature_expectation(
      [&](const Eigen::VectorXd& y) {
        return orthogonalized_moment(model, moment, y, theta.to_vector(), eta, mu, pc);
      },
      model.mean(theta.to_vector(), eta), model.scales(theta.to_vector()), rule);
  const Eigen::VectorXd plain_mean = moment.conditional_mean(theta.to_vector(), eta, mu);
  CHECK((projected_mean - plain_mean).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("normalized score identity: alternating sign diagonal") {
  // Neyman-Scott, orders up to 3
  {
    const NeymanScottModel model(3);
    Eigen::VectorXd theta(1), eta(1);
    theta << 1.2;
    eta << 0.5;
    for (int q : {1, 2, 3}) {
      const Eigen::MatrixXd est = basis_identity_estimate(
          model, theta, eta, q, QuadratureRule::gauss_hermite(20, 3));
      const IndexFamily fam = enumerate_indices(1, q);
      for (int a = 0; a < fam.size(); ++a) {
        for (int b = 0; b < fam.size(); ++b) {
          const double want = a == b ? std::pow(-1.0, fam.at(a).order()) : 0.0;
          CHECK(std::abs(est(a, b) - want) < 1e-4);
        }
      }
    }
  }
  // CES subset model
  {
    const CesSubsetModel model;
    CesTheta theta;
    theta.beta = 1.3;
    theta.gamma = 0.8;
    theta.sigma2_solo = 1.1;
    theta.sigma2_duo = 0.9;
    Eigen::VectorXd eta(2);
    eta << 0.3, -0.2;
    for (int q : {1, 2, 3}) {
      const Eigen::MatrixXd est = basis_identity_estimate(
          model, theta.to_vector(), eta, q, QuadratureRule::gauss_hermite(20, 3));
      const IndexFamily fam = enumerate_indices(2, q);
      for (int a = 0; a < fam.size(); ++a) {
        for (int b = 0; b < fam.size(); ++b) {
          const double want = a == b ? std::pow(-1.0, fam.at(a).order()) : 0.0;
          CHECK(std::abs(est(a, b) - want) < 1e-4);
        }
      }
    }
  }
}
