#include "orthoq/ortho.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace orthoq {

namespace {

double label_factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

// Ratios D^lambda_m l / l over the outcome-derivative family: products of
// per-coordinate Hermite ratios (coordinates are independent Gaussians).
Eigen::VectorXd mean_ratio_vector(const IndexFamily& fam_out, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& mean,
                                  const std::vector<GaussianScale>& scales) {
  const int d = static_cast<int>(scales.size());
  const int q = fam_out.max_order();
  Eigen::MatrixXd h(d, q + 1);
  double buf[kDerivativeOrderCap + 1];
  for (int i = 0; i < d; ++i) {
    const double u = (y[i] - mean[i]) / scales[static_cast<std::size_t>(i)].sigma();
    hermite_values(q, u, buf);
    for (int j = 0; j <= q; ++j) h(i, j) = buf[j];
  }
  Eigen::VectorXd r(fam_out.size());
  for (int k = 0; k < fam_out.size(); ++k) {
    const std::vector<int> e = fam_out.at(k).exponents(d);
    double v = 1.0;
    for (int i = 0; i < d; ++i) {
      const int j = e[static_cast<std::size_t>(i)];
      if (j == 0) continue;
      v *= h(i, j) / std::pow(scales[static_cast<std::size_t>(i)].sigma(), j);
    }
    r[k] = v;
  }
  return r;
}

Eigen::VectorXd ncd_impl(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& eta, const std::vector<int>& entries,
                         std::size_t pos, double h) {
  if (pos == entries.size()) return f(eta);
  const int c = entries[pos] - 1;
  Eigen::VectorXd ep = eta;
  ep[c] += h;
  Eigen::VectorXd em = eta;
  em[c] -= h;
  return (ncd_impl(f, ep, entries, pos + 1, h) - ncd_impl(f, em, entries, pos + 1, h)) /
         (2.0 * h);
}

}  // namespace

SingularBasisCovariance::SingularBasisCovariance(double rcond, int order)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "basis covariance numerically singular at order " << order << " (rcond " << rcond
           << "): the orthogonal projection is not identified for this model";
        return os.str();
      }()),
      rcond_(rcond),
      order_(order) {}

double difference_step(int order, const Eigen::VectorXd& eta) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::pow(eps, 1.0 / static_cast<double>(order + 2)) * (1.0 + eta.norm());
}

namespace {
// Verification checks difference a quadrature sum, whose cancellation noise
// gets amplified by (2h)^-order; a larger floor keeps that amplification
// below the reporting tolerances while nested truncation stays at h^2.
double check_step(int order, const Eigen::VectorXd& eta) {
  return std::max(difference_step(order, eta), 1e-3 * (1.0 + eta.norm()));
}
}  // namespace

Eigen::VectorXd nested_central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& eta,
    const MultiIndex& m, double step) {
  return ncd_impl(f, eta, m.entries(), 0, step);
}

Eigen::VectorXd generalized_score(const ConditionalModel& model, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& eta, int q, const Eigen::VectorXd& y) {
  if (q < 1 || q > kDerivativeOrderCap)
    throw std::domain_error("generalized_score: order out of range");
  if (y.size() != model.outcome_dim())
    throw std::invalid_argument("generalized_score: outcome dimension mismatch");
  const MeanDerivatives md = model.mean_derivatives(theta, eta, q);
  const Eigen::MatrixXd m = faa_di_bruno_matrix(md, q);
  const IndexFamily& fam_out = FaaDiBrunoTemplate::get(md.d_eta, md.d_out, q).col_family();
  return m * mean_ratio_vector(fam_out, y, md.value, model.scales(theta));
}

Eigen::VectorXd mean_ratio_moment_diagonal(const IndexFamily& fam_out,
                                           const std::vector<GaussianScale>& scales) {
  const int d = static_cast<int>(scales.size());
  Eigen::VectorXd diag(fam_out.size());
  for (int k = 0; k < fam_out.size(); ++k) {
    const std::vector<int> e = fam_out.at(k).exponents(d);
    double v = 1.0;
    for (int i = 0; i < d; ++i) {
      const int j = e[static_cast<std::size_t>(i)];
      if (j == 0) continue;
      v *= label_factorial(j) / std::pow(scales[static_cast<std::size_t>(i)].variance(), j);
    }
    diag[k] = v;
  }
  return diag;
}

ProjectionComponents projection_components(const ConditionalModel& model, const Moment& moment,
                                           const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                           int q, const OrthoOptions& opts) {
  if (q < 1 || q > kDerivativeOrderCap)
    throw std::domain_error("projection_components: order out of range");
  const FaaDiBrunoTemplate& tpl = FaaDiBrunoTemplate::get(model.eta_dim(), model.outcome_dim(), q);
  const IndexFamily& fam_eta = tpl.row_family();
  const IndexFamily& fam_out = tpl.col_family();
  const MeanDerivatives md = model.mean_derivatives(theta, eta, q);
  const Eigen::MatrixXd m = tpl.evaluate(md);
  const std::vector<GaussianScale> scales = model.scales(theta);

  ProjectionComponents pc;
  pc.q = q;
  const Eigen::VectorXd diag = mean_ratio_moment_diagonal(fam_out, scales);
  pc.sigma_ww = m * diag.asDiagonal() * m.transpose();
  pc.sigma_ww = 0.5 * (pc.sigma_ww + pc.sigma_ww.transpose()).eval();

  std::optional<QuadratureRule> fallback_rule;
  if (moment.kind() == Moment::Kind::General)
    fallback_rule = QuadratureRule::gauss_hermite(opts.quadrature_nodes, model.outcome_dim());

  // covariance of the mean-derivative ratios with u
  Eigen::MatrixXd cov_ru = Eigen::MatrixXd::Zero(fam_out.size(), moment.dim());
  switch (moment.kind()) {
    case Moment::Kind::ThetaScore: {
      const Eigen::MatrixXd mj = model.mean_theta_jacobian(theta, eta);
      const Eigen::MatrixXd sj = model.scale_theta_jacobian(theta);
      for (int i = 0; i < model.outcome_dim(); ++i) {
        const double sig = scales[static_cast<std::size_t>(i)].sigma();
        const int p1 = fam_out.position(MultiIndex({i + 1}));
        if (p1 >= 0) cov_ru.row(p1) += mj.row(i) / (sig * sig);
        if (q >= 2) {
          const int p2 = fam_out.position(MultiIndex({i + 1, i + 1}));
          if (p2 >= 0) cov_ru.row(p2) += sj.row(i) * (2.0 / (sig * sig * sig));
        }
      }
      break;
    }
    case Moment::Kind::EtaFunction:
      break;  // E[r_lambda] = 0 for every |lambda| >= 1
    case Moment::Kind::General: {
      const Eigen::VectorXd flat = quadrature_expectation(
          [&](const Eigen::VectorXd& y) {
            const Eigen::VectorXd r = mean_ratio_vector(fam_out, y, md.value, scales);
            const Eigen::VectorXd u = moment.eval(y, theta, eta, mu);
            Eigen::MatrixXd outer = r * u.transpose();
            return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(outer.data(), outer.size()));
          },
          md.value, scales, *fallback_rule);
      cov_ru = Eigen::Map<const Eigen::MatrixXd>(flat.data(), fam_out.size(), moment.dim());
      break;
    }
  }
  pc.sigma_wu = m * cov_ru;

  if (auto b = moment.analytic_b(theta, eta, mu, fam_eta)) {
    pc.b = *b;
  } else {
    // nested differences of the conditional mean of u as a map of eta, with
    // one Richardson halving to push the truncation error down
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> cm;
    if (moment.kind() == Moment::Kind::General) {
      cm = [&](const Eigen::VectorXd& e) {
        return quadrature_expectation(
            [&](const Eigen::VectorXd& y) { return moment.eval(y, theta, e, mu); },
            model.mean(theta, e), model.scales(theta), *fallback_rule);
      };
    } else {
      cm = [&](const Eigen::VectorXd& e) { return moment.conditional_mean(theta, e, mu); };
    }
    pc.b.resize(fam_eta.size(), moment.dim());
    for (int k = 0; k < fam_eta.size(); ++k) {
      const MultiIndex& idx = fam_eta.at(k);
      const double h = difference_step(idx.order(), eta);
      Eigen::VectorXd d = nested_central_difference(cm, eta, idx, h);
      for (int lvl = 0; lvl < opts.richardson_levels; ++lvl) {
        const Eigen::VectorXd dh = nested_central_difference(cm, eta, idx, h / std::pow(2.0, lvl + 1));
        d = (4.0 * dh - d) / 3.0;
      }
      pc.b.row(k) = d.transpose();
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pc.sigma_ww);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double emax = ev.maxCoeff();
  pc.rcond = emax > 0.0 ? ev.minCoeff() / emax : 0.0;
  if (!(pc.rcond > opts.singular_tol)) throw SingularBasisCovariance(pc.rcond, q);

  pc.coeffs = pc.sigma_ww.ldlt().solve(pc.sigma_wu - pc.b);
  return pc;
}

Eigen::VectorXd orthogonalized_moment(const ConditionalModel& model, const Moment& moment,
                                      const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                      const ProjectionComponents& components) {
  const Eigen::VectorXd w = generalized_score(model, theta, eta, components.q, y);
  return moment.eval(y, theta, eta, mu) - components.coeffs.transpose() * w;
}

OrthogonalityReport orthogonality_check(const ConditionalModel& model, const Moment& moment,
                                        const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                        const Eigen::VectorXd& mu, int q,
                                        const QuadratureRule& rule, bool with_projection,
                                        const OrthoOptions& opts) {
  if (rule.dimension() != model.outcome_dim())
    throw std::invalid_argument("orthogonality_check: rule dimension mismatch");
  const IndexFamily fam = enumerate_indices(model.eta_dim(), q);
  const Eigen::VectorXd mean0 = model.mean(theta, eta);
  const std::vector<GaussianScale> scales0 = model.scales(theta);

  // expectation of the (projected) moment at parameter point e, sampling
  // density fixed at (theta, eta) -- the map whose derivatives must vanish
  auto expected_moment = [&](const Eigen::VectorXd& e) -> Eigen::VectorXd {
    if (!with_projection) {
      return quadrature_expectation(
          [&](const Eigen::VectorXd& y) { return moment.eval(y, theta, e, mu); }, mean0, scales0,
          rule);
    }
    const ProjectionComponents pc = projection_components(model, moment, theta, e, mu, q, opts);
    return quadrature_expectation(
        [&](const Eigen::VectorXd& y) {
          return orthogonalized_moment(model, moment, y, theta, e, mu, pc);
        },
        mean0, scales0, rule);
  };

  OrthogonalityReport report;
  for (int k = 0; k < fam.size(); ++k) {
    const MultiIndex& idx = fam.at(k);
    OrthogonalityEntry entry;
    entry.index = idx;
    const double h = check_step(idx.order(), eta);
    entry.reduced_confidence = idx.order() >= 5;
    entry.violation =
        nested_central_difference(expected_moment, eta, idx, h).cwiseAbs().maxCoeff();
    if (!entry.reduced_confidence)
      report.max_violation = std::max(report.max_violation, entry.violation);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

Eigen::MatrixXd basis_identity_estimate(const ConditionalModel& model,
                                        const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                                        int q, const QuadratureRule& rule,
                                        const OrthoOptions& opts) {
  (void)opts;
  const IndexFamily fam = enumerate_indices(model.eta_dim(), q);
  const Eigen::VectorXd mean0 = model.mean(theta, eta);
  const std::vector<GaussianScale> scales0 = model.scales(theta);

  auto expected_normalized_score = [&](const Eigen::VectorXd& e) -> Eigen::VectorXd {
    const MeanDerivatives md = model.mean_derivatives(theta, e, q);
    const Eigen::MatrixXd m = faa_di_bruno_matrix(md, q);
    const IndexFamily& fam_out = FaaDiBrunoTemplate::get(md.d_eta, md.d_out, q).col_family();
    const std::vector<GaussianScale> sc = model.scales(theta);
    Eigen::MatrixXd sigma_ww = m * mean_ratio_moment_diagonal(fam_out, sc).asDiagonal() *
                               m.transpose();
    const Eigen::MatrixXd solve_map = sigma_ww.ldlt().solve(m);
    return quadrature_expectation(
        [&](const Eigen::VectorXd& y) {
          return Eigen::VectorXd(solve_map * mean_ratio_vector(fam_out, y, md.value, sc));
        },
        mean0, scales0, rule);
  };

  Eigen::MatrixXd est(fam.size(), fam.size());
  for (int k = 0; k < fam.size(); ++k) {
    const MultiIndex& idx = fam.at(k);
    const double h = check_step(idx.order(), eta);
    est.row(k) = nested_central_difference(expected_normalized_score, eta, idx, h).transpose();
  }
  return est;
}

}  // namespace orthoq
