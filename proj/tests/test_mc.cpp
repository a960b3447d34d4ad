#include <doctest.h>

#include <cmath>
#include <set>

#include "orthoq/mc.hpp"
#include "orthoq/rng.hpp"

using namespace orthoq;

namespace {

std::map<std::string, double> effects_map(const Topology& topo, const std::vector<double>& z) {
  std::map<std::string, double> m;
  for (std::size_t k = 0; k < topo.author_ids.size(); ++k) m[topo.author_ids[k]] = z[k];
  return m;
}

}  // namespace

TEST_CASE("zero noise reproduces the model means exactly") {
  SyntheticTopologySpec spec;
  spec.n_authors = 30;
  const std::vector<double> z = draw_log_effects(30, 1.0, 7);
  const Topology topo = synthetic_topology(spec, z, 7);
  CesTheta theta;
  theta.sigma2_solo = 0.0;
  theta.sigma2_duo = 0.0;
  const TeamCorpus corpus = simulate_corpus(topo, theta, effects_map(topo, z), 7);
  std::map<std::string, double> zmap = effects_map(topo, z);
  for (const Paper& p : corpus.papers()) {
    const double want = p.authors.size() == 1
                            ? std::exp(zmap.at(p.authors[0]))
                            : std::exp(ces_log_mean(theta, zmap.at(p.authors[0]),
                                                    zmap.at(p.authors[1])));
    CHECK(p.output == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("simulation is seed-deterministic") {
  SyntheticTopologySpec spec;
  spec.n_authors = 25;
  const std::vector<double> z = draw_log_effects(25, 1.0, 3);
  const Topology topo = synthetic_topology(spec, z, 3);
  CesTheta theta;
  const auto m = effects_map(topo, z);
  const TeamCorpus a = simulate_corpus(topo, theta, m, 11);
  const TeamCorpus b = simulate_corpus(topo, theta, m, 11);
  const TeamCorpus c = simulate_corpus(topo, theta, m, 12);
  bool identical = true, distinct = false;
  for (std::size_t i = 0; i < a.papers().size(); ++i) {
    identical = identical && a.papers()[i].output == b.papers()[i].output;
    distinct = distinct || a.papers()[i].output != c.papers()[i].output;
  }
  CHECK(identical);
  CHECK(distinct);
}

TEST_CASE("solo outcome dispersion matches the configured variance") {
  SyntheticTopologySpec spec;
  spec.n_authors = 200;
  const std::vector<double> z = draw_log_effects(200, 1.0, 5);
  const Topology topo = synthetic_topology(spec, z, 5);
  CesTheta theta;
  theta.sigma2_solo = 0.7;
  const auto m = effects_map(topo, z);
  const TeamCorpus corpus = simulate_corpus(topo, theta, m, 19);

  double ss = 0.0;
  int n = 0;
  for (const Paper& p : corpus.papers()) {
    if (p.authors.size() != 1) continue;
    const double resid = std::log(p.output) - m.at(p.authors[0]);
    ss += resid * resid;
    ++n;
  }
  const double var = ss / n;
  const double se = theta.sigma2_solo * std::sqrt(2.0 / n);  // chi-square spread
  CHECK(std::abs(var - theta.sigma2_solo) < 3.0 * se);
}

TEST_CASE("synthetic topology matches the target shape") {
  SyntheticTopologySpec spec;  // defaults
  const std::vector<double> z = draw_log_effects(spec.n_authors, 1.0, 23);
  const Topology topo = synthetic_topology(spec, z, 23);

  std::map<std::string, int> solo_counts;
  int duos = 0;
  for (const Paper& p : topo.papers) {
    if (p.authors.size() == 1)
      solo_counts[p.authors[0]]++;
    else
      ++duos;
  }
  REQUIRE(static_cast<int>(solo_counts.size()) == spec.n_authors);
  std::vector<int> counts;
  for (const auto& [id, c] : solo_counts) counts.push_back(c);
  std::sort(counts.begin(), counts.end());
  const auto q = [&](double p) {
    return counts[static_cast<std::size_t>(p * (counts.size() - 1))];
  };
  CHECK(q(0.10) == 2);
  CHECK(q(0.50) >= 3);
  CHECK(q(0.50) <= 5);
  CHECK(q(0.90) >= 8);
  CHECK(q(0.90) <= 20);
  CHECK(counts.front() >= 2);  // everyone stays eligible

  const double share = static_cast<double>(duos) / static_cast<double>(topo.papers.size());
  CHECK(share > 0.07);
  CHECK(share < 0.13);
}

TEST_CASE("positive sorting shows up in paired effects") {
  SyntheticTopologySpec spec;
  spec.n_authors = 300;
  spec.sorting_correlation = 0.5;
  const std::vector<double> z = draw_log_effects(300, 1.0, 29);
  const Topology topo = synthetic_topology(spec, z, 29);
  std::map<std::string, double> m = effects_map(topo, z);
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  int n = 0;
  for (const Paper& p : topo.papers) {
    if (p.authors.size() != 2) continue;
    const double a = m.at(p.authors[0]), b = m.at(p.authors[1]);
    sx += a;
    sy += b;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
    ++n;
  }
  REQUIRE(n > 50);
  const double corr = (sxy / n - sx / n * sy / n) /
                      std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
  CHECK(corr > 0.3);
}

TEST_CASE("study smoke run: shapes, ordering, degenerate quantiles") {
  McStudyConfig config;
  config.synth.n_authors = 60;
  config.n_reps = 1;
  config.q_list = {0, 1};
  config.seed = 37;
  const McReport one = run_study(config);
  CHECK(one.rows.size() == 2);
  for (const McCell& c : one.cells) {
    CHECK(c.successes + c.failures == 1);
    if (c.successes == 1) {
      // single replication: all quantiles collapse onto the estimate
      CHECK(c.median == doctest::Approx(c.mean));
      CHECK(c.q025 == doctest::Approx(c.q975));
    }
  }

  McStudyConfig more = config;
  more.n_reps = 3;
  const McReport rep = run_study(more);
  CHECK(rep.rows.size() == 6);
  for (const McCell& c : rep.cells) {
    CHECK(c.q025 <= c.median + 1e-15);
    CHECK(c.median <= c.q975 + 1e-15);
    CHECK(c.successes + c.failures == 3);
  }
  CHECK_NOTHROW(rep.cell(0, "gamma"));
  CHECK_THROWS_AS(rep.cell(5, "gamma"), std::out_of_range);
}

TEST_CASE("study runs are worker-count invariant") {
  McStudyConfig config;
  config.synth.n_authors = 50;
  config.n_reps = 4;
  config.q_list = {1};
  config.seed = 41;
  config.workers = 1;
  const McReport a = run_study(config);
  config.workers = 4;
  const McReport b = run_study(config);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].converged == b.rows[i].converged);
    CHECK(a.rows[i].theta.to_vector() == b.rows[i].theta.to_vector());
  }
}

TEST_CASE("plug-in variance bias under sample splitting equals the effect noise") {
  // panel analogue: with preliminary effects eta + nu drawn independently of
  // the panel, the plug-in variance estimator overshoots by exactly E[nu^2]
  Rng rng = Rng::stream(43);
  const int n = 400, t = 5, reps = 400;
  const double sigma2 = 1.0, nu2 = 0.25;
  double acc = 0.0, acc2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double eta = rng.normal();
      const double eta_hat = eta + std::sqrt(nu2) * rng.normal();
      for (int j = 0; j < t; ++j) {
        const double y = eta + rng.normal();
        s += (y - eta_hat) * (y - eta_hat);
      }
    }
    const double est = s / (n * t);
    acc += est;
    acc2 += est * est;
  }
  const double mean = acc / reps;
  const double sd = std::sqrt((acc2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - (sigma2 + nu2)) < 3.0 * sd);
}
