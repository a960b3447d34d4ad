#include "orthoq/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "orthoq/mc.hpp"
#include "orthoq/parallel.hpp"
#include "orthoq/rng.hpp"

namespace orthoq {

namespace {
constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;      // stream tag: splits
constexpr std::uint64_t kBootTag = 0x626f6f74ULL;         // stream tag: bootstrap
constexpr double kGammaFloor = 1e-3;                      // excluded Cobb-Douglas neighborhood
}  // namespace

// ---------------------------------------------------------------------------
// GMM solver

GmmResult gmm_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& moment_sum,
                    const Eigen::MatrixXd& w, const Eigen::VectorXd& init,
                    const GmmOptions& options) {
  const int p = static_cast<int>(init.size());
  GmmResult result;
  result.estimate = init;

  Eigen::VectorXd g = moment_sum(init);
  const int m = static_cast<int>(g.size());
  if (m < p) throw std::invalid_argument("gmm_solve: fewer moments than parameters");
  if (w.rows() != m || w.cols() != m) throw std::invalid_argument("gmm_solve: weight shape");

  auto wnorm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(w * v)); };

  Eigen::VectorXd x = init;
  double norm = wnorm(g);
  bool restarted = false;

  for (int it = 0; it < options.max_iter; ++it) {
    result.iterations = it;
    if (norm <= options.tol) break;

    // central-difference Jacobian; evaluation failures at perturbed points are
    // treated like a singular Jacobian and trigger the seeded restart
    Eigen::MatrixXd jac(m, p);
    bool jac_ok = true;
    for (int j = 0; j < p && jac_ok; ++j) {
      const double h = std::sqrt(std::numeric_limits<double>::epsilon()) *
                       (1.0 + std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      try {
        jac.col(j) = (moment_sum(xp) - moment_sum(xm)) / (2.0 * h);
      } catch (const std::exception&) {
        jac_ok = false;
      }
    }

    Eigen::MatrixXd normal;
    Eigen::VectorXd rhs, step;
    bool bad_step = !jac_ok || !jac.allFinite();
    if (!bad_step) {
      normal = jac.transpose() * w * jac;
      rhs = -jac.transpose() * w * g;
      step = normal.ldlt().solve(rhs);
      bad_step = !step.allFinite() || (normal * step - rhs).norm() > 1e-6 * (rhs.norm() + 1.0);
    }
    if (bad_step) {
      if (restarted) {
        result.message = "singular Jacobian after restart";
        break;
      }
      restarted = true;
      Rng rng = Rng::stream(options.restart_seed, {0x676d6dULL});
      for (int j = 0; j < p; ++j) x[j] = init[j] + 0.5 * (1.0 + std::abs(init[j])) * rng.normal();
      try {
        g = moment_sum(x);
      } catch (const std::exception&) {
        result.message = "restart point not evaluable";
        break;
      }
      norm = wnorm(g);
      continue;
    }

    const double step_len = step.cwiseAbs().maxCoeff();
    if (step_len > options.step_cap) step *= options.step_cap / step_len;

    // backtracking on the weighted norm
    double alpha = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Eigen::VectorXd trial = x + alpha * step;
      Eigen::VectorXd gt;
      bool finite = true;
      try {
        gt = moment_sum(trial);
        finite = gt.allFinite();
      } catch (const std::exception&) {
        finite = false;
      }
      if (finite && wnorm(gt) < norm) {
        x = trial;
        g = gt;
        norm = wnorm(g);
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      result.message = "line search stalled";
      break;
    }
  }

  result.estimate = x;
  result.moment_norm = norm;
  result.converged = norm <= options.tol && x.allFinite();
  return result;
}

// ---------------------------------------------------------------------------
// Splitting

IneligibleAuthorsError::IneligibleAuthorsError(std::vector<std::string> offenders)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "authors without two sole-authored papers:";
        for (const std::string& a : offenders) os << ' ' << a;
        return os.str();
      }()),
      offenders_(std::move(offenders)) {}

Split make_split(const TeamCorpus& corpus, std::uint64_t seed, bool require_all_eligible) {
  if (require_all_eligible) {
    std::vector<std::string> offenders;
    for (int duo : corpus.duo_papers()) {
      for (const std::string& a : corpus.paper(duo).authors) {
        if (!corpus.author(a).eligible) offenders.push_back(a);
      }
    }
    std::sort(offenders.begin(), offenders.end());
    offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
    if (!offenders.empty()) throw IneligibleAuthorsError(std::move(offenders));
  }

  Split split;
  split.plan.seed = seed;
  Rng rng = Rng::stream(seed, {kSplitTag});
  int n_eligible = 0;
  for (const std::string& id : corpus.author_ids()) {
    const AuthorRecord& rec = corpus.author(id);
    if (!rec.eligible) continue;
    ++n_eligible;
    const std::size_t pick = static_cast<std::size_t>(rng.below(rec.solo_papers.size()));
    std::vector<int> prelim;
    std::vector<double> logs;
    for (std::size_t k = 0; k < rec.solo_papers.size(); ++k) {
      if (k == pick) continue;
      prelim.push_back(rec.solo_papers[k]);
      logs.push_back(std::log(corpus.paper(rec.solo_papers[k]).output));
    }
    // value-sorted summation: the effect is invariant to permutations of the
    // preliminary outcomes, bit for bit
    std::sort(logs.begin(), logs.end());
    const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) /
                        static_cast<double>(logs.size());
    split.plan.held_out[id] = rec.solo_papers[pick];
    split.plan.preliminary[id] = std::move(prelim);
    split.effects.log_effect[id] = mean;
  }
  if (n_eligible == 0) throw std::runtime_error("make_split: no eligible authors in corpus");
  return split;
}

// ---------------------------------------------------------------------------
// CES pipeline

std::vector<SubsetSample> assemble_samples(const TeamCorpus& corpus,
                                           const std::vector<SubsetTriple>& subsets,
                                           const PreliminaryEffects& effects) {
  std::vector<SubsetSample> samples;
  samples.reserve(subsets.size());
  for (const SubsetTriple& t : subsets) {
    SubsetSample s;
    s.y.resize(3);
    s.y << std::log(corpus.paper(t.duo).output), std::log(corpus.paper(t.solo1).output),
        std::log(corpus.paper(t.solo2).output);
    s.eta_hat.resize(2);
    s.eta_hat << effects.log_effect.at(t.author1), effects.log_effect.at(t.author2);
    samples.push_back(std::move(s));
  }
  return samples;
}

Eigen::VectorXd ces_score_sum(const std::vector<SubsetSample>& samples, const CesTheta& theta,
                              int q, const OrthoOptions& opts) {
  const CesSubsetModel model;
  const ScoreMoment score(model);
  const Eigen::VectorXd tv = theta.to_vector();
  const Eigen::VectorXd mu;  // unused by the score
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  for (const SubsetSample& s : samples) {
    if (q == 0) {
      sum += score.eval(s.y, tv, s.eta_hat, mu);
    } else {
      const ProjectionComponents pc =
          projection_components(model, score, tv, s.eta_hat, mu, q, opts);
      sum += orthogonalized_moment(model, score, s.y, tv, s.eta_hat, mu, pc);
    }
  }
  return sum;
}

CesTheta ces_initial_theta(const std::vector<SubsetSample>& samples, double gamma_init) {
  if (samples.empty()) throw std::invalid_argument("ces_initial_theta: no subsets");
  CesTheta init;
  init.gamma = gamma_init;

  double solo_rss = 0.0;
  int solo_n = 0;
  double duo_gap = 0.0;
  for (const SubsetSample& s : samples) {
    for (int r = 0; r < 2; ++r) {
      const double resid = s.y[1 + r] - s.eta_hat[r];
      solo_rss += resid * resid;
      ++solo_n;
    }
    CesTheta unit;
    unit.beta = 1.0;
    unit.gamma = init.gamma;
    duo_gap += s.y[0] - ces_log_mean(unit, s.eta_hat[0], s.eta_hat[1]);
  }
  init.beta = std::exp(duo_gap / static_cast<double>(samples.size()));
  init.sigma2_solo = std::max(solo_rss / std::max(1, solo_n), 1e-4);

  double duo_rss = 0.0;
  for (const SubsetSample& s : samples) {
    CesTheta unit = init;
    const double resid = s.y[0] - ces_log_mean(unit, s.eta_hat[0], s.eta_hat[1]);
    duo_rss += resid * resid;
  }
  init.sigma2_duo = std::max(duo_rss / static_cast<double>(samples.size()), 1e-4);
  return init;
}

namespace {

Eigen::VectorXd pack_theta(const CesTheta& t) {
  Eigen::VectorXd v(4);
  v << std::log(t.beta), t.gamma, std::log(t.sigma2_solo), std::log(t.sigma2_duo);
  return v;
}

CesTheta unpack_theta(const Eigen::VectorXd& v) {
  CesTheta t;
  t.beta = std::exp(v[0]);
  t.gamma = std::abs(v[1]) < kGammaFloor ? (v[1] < 0.0 ? -kGammaFloor : kGammaFloor) : v[1];
  t.sigma2_solo = std::exp(v[2]);
  t.sigma2_duo = std::exp(v[3]);
  return t;
}

}  // namespace

namespace {

// The substitution score also vanishes as |gamma| grows (the aggregate
// saturates at the better worker), so a run to huge |gamma| is a degenerate
// boundary root, not an estimate.
bool sane_ces_solution(const Eigen::VectorXd& v) {
  if (!v.allFinite()) return false;
  if (std::abs(v[1]) > 25.0) return false;                      // gamma
  return std::abs(v[0]) <= 15.0 && std::abs(v[2]) <= 15.0 && std::abs(v[3]) <= 15.0;
}

}  // namespace

CesFitResult fit_ces_theta(const std::vector<SubsetSample>& samples, int q,
                           std::optional<CesTheta> init, const GmmOptions& options) {
  auto moment = [&](const Eigen::VectorXd& v) {
    return ces_score_sum(samples, unpack_theta(v), q);
  };
  GmmOptions opts = options;
  if (!std::isfinite(opts.step_cap)) opts.step_cap = 2.0;
  // a just-identified smooth system converges in a handful of Newton steps;
  // longer runs are boundary escapes, so cap each start's budget
  opts.max_iter = std::min(opts.max_iter, 80);

  // deterministic multistart: method-of-moments starts at a ladder of
  // substitution values
  std::vector<CesTheta> starts;
  if (init) {
    starts.push_back(*init);
  } else {
    for (double g : {0.5, 1.0, 0.25, 2.0}) starts.push_back(ces_initial_theta(samples, g));
  }

  CesFitResult fit;
  fit.gmm.converged = false;
  for (const CesTheta& start : starts) {
    GmmResult gmm;
    try {
      gmm = gmm_solve(moment, Eigen::MatrixXd::Identity(4, 4), pack_theta(start), opts);
    } catch (const std::exception& e) {
      fit.gmm.message = e.what();
      continue;
    }
    if (gmm.converged && !sane_ces_solution(gmm.estimate)) {
      gmm.converged = false;
      gmm.message = "degenerate boundary root";
    }
    if (gmm.converged || fit.gmm.message.empty()) {
      fit.theta = unpack_theta(gmm.estimate);
      fit.gmm = gmm;
    }
    if (gmm.converged) break;
  }
  return fit;
}

double ces_average_output(const std::vector<SubsetSample>& samples, const CesTheta& theta, int q,
                          const OrthoOptions& opts) {
  const CesSubsetModel model;
  const CesOutputMoment moment;
  const Eigen::VectorXd tv = theta.to_vector();
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(1);
  double acc = 0.0;
  for (const SubsetSample& s : samples) {
    if (q == 0) {
      acc += ces_expected_output(theta, s.eta_hat[0], s.eta_hat[1]);
    } else {
      const ProjectionComponents pc =
          projection_components(model, moment, tv, s.eta_hat, mu0, q, opts);
      acc += orthogonalized_moment(model, moment, s.y, tv, s.eta_hat, mu0, pc)[0];
    }
  }
  return acc / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Cross-fitting

CrossFitResult cross_fit(const TeamCorpus& corpus, const CrossFitOptions& options) {
  if (options.n_splits < 1) throw std::invalid_argument("cross_fit: need n_splits >= 1");
  CrossFitResult result;
  result.splits.resize(static_cast<std::size_t>(options.n_splits));

  parallel_for(options.n_splits, options.workers, [&](int s) {
    SplitRecord rec;
    rec.split_id = s;
    try {
      const std::uint64_t split_seed = Rng::mix(options.seed ^ Rng::mix(kSplitTag + s));
      const Split split = make_split(corpus, split_seed);
      const SubsetBuildResult built = build_subsets(corpus, split.plan);
      rec.skipped_subsets = built.skipped_ineligible;
      rec.holdout_reuse = built.holdout_reuse;
      rec.n_subsets = static_cast<int>(built.subsets.size());
      if (built.subsets.empty()) throw std::runtime_error("no estimable subsets in split");
      const std::vector<SubsetSample> samples =
          assemble_samples(corpus, built.subsets, split.effects);
      const CesFitResult fit = fit_ces_theta(samples, options.q, std::nullopt, options.gmm);
      rec.theta = fit.theta;
      rec.converged = fit.gmm.converged;
      rec.moment_norm = fit.gmm.moment_norm;
      rec.iterations = fit.gmm.iterations;
      rec.message = fit.gmm.message;
      if (rec.converged && options.estimate_mu)
        rec.mu = ces_average_output(samples, fit.theta, options.q);
    } catch (const std::exception& e) {
      rec.converged = false;
      rec.message = e.what();
    }
    result.splits[static_cast<std::size_t>(s)] = std::move(rec);
  });

  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  double mu_acc = 0.0;
  int ok = 0, mu_ok = 0;
  for (const SplitRecord& rec : result.splits) {
    if (!rec.converged) {
      ++result.failed_splits;
      continue;
    }
    acc += rec.theta.to_vector();
    ++ok;
    if (std::isfinite(rec.mu)) {
      mu_acc += rec.mu;
      ++mu_ok;
    }
  }
  if (ok == 0) {
    result.theta_mean = CesTheta{};
    result.mu_mean = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  result.theta_mean = CesTheta::from_vector(acc / ok);
  result.mu_mean = mu_ok > 0 ? mu_acc / mu_ok : std::numeric_limits<double>::quiet_NaN();
  return result;
}

// ---------------------------------------------------------------------------
// Sandwich variance

SandwichVariance sandwich_variance(const std::vector<Eigen::VectorXd>& moments,
                                   const Eigen::MatrixXd& g_mu, const Eigen::MatrixXd& g_theta,
                                   const std::vector<Eigen::VectorXd>& psi,
                                   const Eigen::MatrixXd& w) {
  if (moments.empty()) throw std::invalid_argument("sandwich_variance: no moments");
  const int n = static_cast<int>(moments.size());
  const int dim_u = static_cast<int>(moments.front().size());
  const int dim_mu = static_cast<int>(g_mu.cols());

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(g_mu);
  if (static_cast<int>(cod.rank()) < dim_mu)
    throw std::runtime_error("sandwich_variance: moment Jacobian in mu is rank deficient");

  const bool with_theta = g_theta.size() > 0;
  if (with_theta && static_cast<int>(psi.size()) != n)
    throw std::invalid_argument("sandwich_variance: psi must match the moments");

  std::vector<Eigen::VectorXd> xi(moments.begin(), moments.end());
  if (with_theta) {
    for (int i = 0; i < n; ++i) xi[static_cast<std::size_t>(i)] += g_theta * psi[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim_u);
  for (const Eigen::VectorXd& v : xi) mean += v;
  mean /= static_cast<double>(n);

  SandwichVariance out;
  out.g_mu = g_mu;
  out.g_theta = g_theta;
  out.v_xi = Eigen::MatrixXd::Zero(dim_u, dim_u);
  for (const Eigen::VectorXd& v : xi) {
    const Eigen::VectorXd c = v - mean;
    out.v_xi += c * c.transpose();
  }
  out.v_xi /= static_cast<double>(n);

  const Eigen::MatrixXd gwg = g_mu.transpose() * w * g_mu;
  const Eigen::MatrixXd bread = gwg.ldlt().solve(g_mu.transpose() * w);
  out.covariance = bread * out.v_xi * bread.transpose() / static_cast<double>(n);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

SandwichVariance ces_theta_sandwich(const std::vector<SubsetSample>& samples,
                                    const CesTheta& theta, int q) {
  const CesSubsetModel model;
  const ScoreMoment score(model);
  const Eigen::VectorXd mu;
  const OrthoOptions opts;

  auto subset_moment = [&](const SubsetSample& s, const Eigen::VectorXd& tv) -> Eigen::VectorXd {
    if (q == 0) return score.eval(s.y, tv, s.eta_hat, mu);
    const ProjectionComponents pc = projection_components(model, score, tv, s.eta_hat, mu, q, opts);
    return orthogonalized_moment(model, score, s.y, tv, s.eta_hat, mu, pc);
  };

  const Eigen::VectorXd tv = theta.to_vector();
  std::vector<Eigen::VectorXd> moments;
  moments.reserve(samples.size());
  for (const SubsetSample& s : samples) moments.push_back(subset_moment(s, tv));

  // average finite-difference Jacobian in theta
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 4);
  for (int j = 0; j < 4; ++j) {
    const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(tv[j]));
    Eigen::VectorXd tp = tv, tm = tv;
    tp[j] += h;
    tm[j] -= h;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
    for (const SubsetSample& s : samples) acc += subset_moment(s, tp) - subset_moment(s, tm);
    g.col(j) = acc / (2.0 * h * static_cast<double>(samples.size()));
  }

  return sandwich_variance(moments, g, Eigen::MatrixXd(), {}, Eigen::MatrixXd::Identity(4, 4));
}

// ---------------------------------------------------------------------------
// Parametric bootstrap

BootstrapResult parametric_bootstrap(const TeamCorpus& corpus, const CesTheta& theta_hat,
                                     const std::map<std::string, double>& log_effects,
                                     const BootstrapOptions& options) {
  theta_hat.validate();
  if (options.replications < 1) throw std::invalid_argument("parametric_bootstrap: need B >= 1");
  const Topology topo = topology_of(corpus);

  std::vector<std::optional<Eigen::VectorXd>> rows(
      static_cast<std::size_t>(options.replications));
  parallel_for(options.replications, options.workers, [&](int b) {
    try {
      const std::uint64_t sim_seed = Rng::mix(options.seed ^ Rng::mix(kBootTag + 2 * b));
      const TeamCorpus sim = simulate_corpus(topo, theta_hat, log_effects, sim_seed);
      CrossFitOptions cf;
      cf.q = options.q;
      cf.n_splits = options.inner_splits;
      cf.seed = Rng::mix(options.seed ^ Rng::mix(kBootTag + 2 * b + 1));
      cf.workers = 1;
      cf.estimate_mu = false;
      cf.gmm = options.gmm;
      const CrossFitResult res = cross_fit(sim, cf);
      if (res.failed_splits == cf.n_splits) return;  // replication failed entirely
      rows[static_cast<std::size_t>(b)] = res.theta_mean.to_vector();
    } catch (const std::exception&) {
      // recorded as a failure below
    }
  });

  BootstrapResult out;
  out.parameter_names = {"beta", "gamma", "sigma2_solo", "sigma2_duo"};
  for (const auto& r : rows) {
    if (r)
      out.draws.push_back(*r);
    else
      ++out.failures;
  }
  const int ok = static_cast<int>(out.draws.size());
  if (ok < static_cast<int>(std::ceil(options.min_success * options.replications))) {
    std::ostringstream os;
    os << "parametric_bootstrap: only " << ok << " of " << options.replications
       << " replications succeeded";
    throw std::runtime_error(os.str());
  }

  out.standard_errors.resize(4);
  out.quantiles.resize(4, 3);
  for (int j = 0; j < 4; ++j) {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(ok));
    for (const Eigen::VectorXd& r : out.draws) col.push_back(r[j]);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / ok;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    out.standard_errors[j] = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
    std::sort(col.begin(), col.end());
    auto quantile = [&](double p) {
      const double idx = p * (ok - 1);
      const int lo = static_cast<int>(std::floor(idx));
      const int hi = std::min(lo + 1, ok - 1);
      const double frac = idx - lo;
      return (1.0 - frac) * col[static_cast<std::size_t>(lo)] +
             frac * col[static_cast<std::size_t>(hi)];
    };
    out.quantiles(j, 0) = quantile(0.025);
    out.quantiles(j, 1) = quantile(0.5);
    out.quantiles(j, 2) = quantile(0.975);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quasi-differencing

QuasiDiffResult quasi_diff_gamma(const TeamCorpus& corpus, const PreliminaryEffects& effects,
                                 const std::vector<double>& gamma_grid, std::uint64_t seed) {
  if (gamma_grid.size() < 3)
    throw std::invalid_argument("quasi_diff_gamma: need a grid of at least 3 points");
  std::vector<double> grid = gamma_grid;
  std::sort(grid.begin(), grid.end());

  // teams of size 2 whose authors both carry preliminary effects
  std::vector<int> duos;
  std::vector<std::string> authors;
  for (int duo : corpus.duo_papers()) {
    const Paper& p = corpus.paper(duo);
    if (effects.log_effect.count(p.authors[0]) && effects.log_effect.count(p.authors[1])) {
      duos.push_back(duo);
      authors.push_back(p.authors[0]);
      authors.push_back(p.authors[1]);
    }
  }
  if (duos.empty()) throw std::runtime_error("quasi_diff_gamma: no usable size-2 teams");
  std::sort(authors.begin(), authors.end());
  authors.erase(std::unique(authors.begin(), authors.end()), authors.end());
  std::map<std::string, int> author_col;
  for (std::size_t k = 0; k < authors.size(); ++k)
    author_col[authors[k]] = static_cast<int>(k);

  const int n = static_cast<int>(duos.size());
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(n, static_cast<int>(authors.size()));
  Eigen::VectorXd z(n);
  Eigen::VectorXd log_y(n);
  for (int j = 0; j < n; ++j) {
    const Paper& p = corpus.paper(duos[static_cast<std::size_t>(j)]);
    incidence(j, author_col[p.authors[0]]) = 1.0;
    incidence(j, author_col[p.authors[1]]) = 1.0;
    z[j] = std::exp(effects.log_effect.at(p.authors[0])) *
           std::exp(effects.log_effect.at(p.authors[1]));
    log_y[j] = std::log(p.output);
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(incidence);
  auto objective = [&](double gamma) {
    const Eigen::VectorXd yg = (gamma * log_y.array()).exp();
    const Eigen::VectorXd resid = yg - incidence * cod.solve(yg);
    return std::abs(z.dot(resid));
  };

  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = objective(grid[i]);
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());

  QuasiDiffResult out;
  out.n_teams = n;
  (void)seed;
  if (best == 0 || best + 1 == grid.size()) {
    out.boundary_flag = true;
    out.gamma_hat = grid[best];
    out.objective = vals[best];
    return out;
  }

  // golden-section on the bracketing triple
  const double gr = 0.6180339887498948482;
  double a = grid[best - 1], b = grid[best + 1];
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective(x2);
    }
  }
  out.gamma_hat = 0.5 * (a + b);
  out.objective = objective(out.gamma_hat);
  out.boundary_flag = out.gamma_hat <= grid.front() + 1e-8;
  return out;
}

}  // namespace orthoq
