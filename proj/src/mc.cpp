#include "orthoq/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "orthoq/parallel.hpp"
#include "orthoq/rng.hpp"

namespace orthoq {

namespace {
constexpr std::uint64_t kEffectsTag = 0x656666ULL;
constexpr std::uint64_t kTopologyTag = 0x746f706fULL;
constexpr std::uint64_t kOutcomeTag = 0x6f7574ULL;
constexpr std::uint64_t kRepTag = 0x726570ULL;

std::string padded_id(const char* prefix, int i) {
  std::ostringstream os;
  os << prefix;
  std::string digits = std::to_string(i);
  for (std::size_t k = digits.size(); k < 7; ++k) os << '0';
  os << digits;
  return os.str();
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
}  // namespace

Topology topology_of(const TeamCorpus& corpus) {
  Topology t;
  t.papers = corpus.papers();
  t.author_ids = corpus.author_ids();
  return t;
}

std::vector<double> draw_log_effects(int n_authors, double log_sd, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {kEffectsTag});
  std::vector<double> z(static_cast<std::size_t>(n_authors));
  for (double& v : z) v = log_sd * rng.normal();
  return z;
}

Topology synthetic_topology(const SyntheticTopologySpec& spec,
                            const std::vector<double>& log_effects, std::uint64_t seed) {
  const int n = spec.n_authors;
  if (static_cast<int>(log_effects.size()) != n)
    throw std::invalid_argument("synthetic_topology: effects/author count mismatch");
  if (n < 2) throw std::invalid_argument("synthetic_topology: need at least 2 authors");
  Rng rng = Rng::stream(seed, {kTopologyTag});

  Topology topo;
  for (int k = 0; k < n; ++k) topo.author_ids.push_back(padded_id("a", k));

  // sole papers: 2 + floor(LogNormal), matching the right-skewed publication counts
  int paper_counter = 0;
  int total_solo = 0;
  std::vector<int> counts(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double extra = std::exp(spec.count_log_median + spec.count_log_sd * rng.normal());
    const int count = std::min(2 + static_cast<int>(std::floor(extra)), spec.max_solo_papers);
    counts[static_cast<std::size_t>(k)] = count;
    for (int c = 0; c < count; ++c) {
      Paper p;
      p.id = padded_id("p", paper_counter++);
      p.authors = {topo.author_ids[static_cast<std::size_t>(k)]};
      p.output = 1.0;  // placeholder; outcomes are drawn in simulate_corpus
      p.period = "1";
      topo.papers.push_back(std::move(p));
      ++total_solo;
    }
  }

  // ranks of the true effects drive assortative pairing through a Gaussian copula
  std::vector<int> rank_order(static_cast<std::size_t>(n));
  std::iota(rank_order.begin(), rank_order.end(), 0);
  std::sort(rank_order.begin(), rank_order.end(),
            [&](int a, int b) { return log_effects[static_cast<std::size_t>(a)] <
                                       log_effects[static_cast<std::size_t>(b)]; });

  // co-authoring propensity rises with productivity: candidate pairs from the
  // effect copula are thinned by the product of (count-1)^power weights
  std::vector<double> weight(static_cast<std::size_t>(n));
  double wmax = 0.0;
  for (int k = 0; k < n; ++k) {
    weight[static_cast<std::size_t>(k)] =
        std::pow(std::max(counts[static_cast<std::size_t>(k)] - 1, 1), spec.count_weight_power);
    wmax = std::max(wmax, weight[static_cast<std::size_t>(k)]);
  }

  const double share = std::min(std::max(spec.duo_share, 0.0), 0.9);
  const int n_duo = static_cast<int>(std::lround(share / (1.0 - share) * total_solo));
  const double rho = std::min(std::max(spec.sorting_correlation, -0.99), 0.99);
  for (int j = 0; j < n_duo; ++j) {
    int k1 = 0, k2 = 0;
    while (true) {
      const double z1 = rng.normal();
      const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
      auto pick = [&](double z) {
        const int r = std::min(n - 1, static_cast<int>(std::floor(normal_cdf(z) * n)));
        return rank_order[static_cast<std::size_t>(r)];
      };
      k1 = pick(z1);
      k2 = pick(z2);
      if (k1 == k2) continue;
      if (rng.uniform() * wmax > weight[static_cast<std::size_t>(k1)] ||
          rng.uniform() * wmax > weight[static_cast<std::size_t>(k2)])
        continue;
      break;
    }
    Paper p;
    p.id = padded_id("p", paper_counter++);
    p.authors = {topo.author_ids[static_cast<std::size_t>(k1)],
                 topo.author_ids[static_cast<std::size_t>(k2)]};
    p.output = 1.0;
    p.period = "1";
    topo.papers.push_back(std::move(p));
  }
  return topo;
}

TeamCorpus simulate_corpus(const Topology& topology, const CesTheta& theta,
                           const std::map<std::string, double>& log_effects, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {kOutcomeTag});
  const double sd_solo = std::sqrt(theta.sigma2_solo);
  const double sd_duo = std::sqrt(theta.sigma2_duo);
  std::vector<Paper> papers = topology.papers;
  for (Paper& p : papers) {
    double log_mean = 0.0;
    if (p.authors.size() == 1) {
      log_mean = log_effects.at(p.authors[0]);
      p.output = std::exp(log_mean + sd_solo * rng.normal());
    } else {
      log_mean = ces_log_mean(theta, log_effects.at(p.authors[0]), log_effects.at(p.authors[1]));
      p.output = std::exp(log_mean + sd_duo * rng.normal());
    }
  }
  return TeamCorpus::from_papers(std::move(papers));
}

const McCell& McReport::cell(int q, const std::string& parameter) const {
  for (const McCell& c : cells) {
    if (c.q == q && c.parameter == parameter) return c;
  }
  throw std::out_of_range("McReport: no cell for the requested estimator/parameter");
}

McReport run_study(const McStudyConfig& config) {
  if (config.n_reps < 1) throw std::invalid_argument("run_study: need n_reps >= 1");
  for (int q : config.q_list) {
    if (q < 0 || q > 6) throw std::invalid_argument("run_study: orders must be in 0..6");
  }

  // the network and the true effects are fixed across replications
  Topology topo;
  std::map<std::string, double> effects;
  if (config.corpus_path) {
    const LoadResult loaded = load_corpus(*config.corpus_path);
    topo = topology_of(loaded.corpus);
    const std::vector<double> z = draw_log_effects(static_cast<int>(topo.author_ids.size()),
                                                   config.effect_log_sd, config.seed);
    for (std::size_t k = 0; k < topo.author_ids.size(); ++k) effects[topo.author_ids[k]] = z[k];
  } else {
    const std::vector<double> z =
        draw_log_effects(config.synth.n_authors, config.effect_log_sd, config.seed);
    topo = synthetic_topology(config.synth, z, config.seed);
    for (std::size_t k = 0; k < topo.author_ids.size(); ++k) effects[topo.author_ids[k]] = z[k];
  }

  McReport report;
  report.n_reps = config.n_reps;
  const int n_q = static_cast<int>(config.q_list.size());
  report.rows.resize(static_cast<std::size_t>(config.n_reps * n_q));

  parallel_for(config.n_reps, config.workers, [&](int rep) {
    const std::uint64_t sim_seed = Rng::mix(config.seed ^ Rng::mix(kRepTag + 2 * rep));
    const std::uint64_t split_seed = Rng::mix(config.seed ^ Rng::mix(kRepTag + 2 * rep + 1));
    TeamCorpus corpus = simulate_corpus(topo, config.theta0, effects, sim_seed);
    const Split split = make_split(corpus, split_seed);
    const SubsetBuildResult built = build_subsets(corpus, split.plan);
    const std::vector<SubsetSample> samples =
        assemble_samples(corpus, built.subsets, split.effects);

    for (int qi = 0; qi < n_q; ++qi) {
      McRepRow row;
      row.rep = rep;
      row.q = config.q_list[static_cast<std::size_t>(qi)];
      try {
        const CesFitResult fit = fit_ces_theta(samples, row.q, std::nullopt, config.gmm);
        row.converged = fit.gmm.converged;
        row.theta = fit.theta;
      } catch (const std::exception&) {
        row.converged = false;
      }
      report.rows[static_cast<std::size_t>(rep * n_q + qi)] = row;
    }
  });

  const std::vector<std::pair<std::string, int>> params = {
      {"beta", 0}, {"gamma", 1}, {"sigma2_solo", 2}, {"sigma2_duo", 3}};
  for (int q : config.q_list) {
    for (const auto& [name, idx] : params) {
      McCell cell;
      cell.q = q;
      cell.parameter = name;
      std::vector<double> vals;
      for (const McRepRow& row : report.rows) {
        if (row.q != q) continue;
        if (!row.converged) continue;
        vals.push_back(row.theta.to_vector()[idx]);
      }
      cell.successes = static_cast<int>(vals.size());
      cell.failures = config.n_reps - cell.successes;
      if (!vals.empty()) {
        std::sort(vals.begin(), vals.end());
        auto quantile = [&](double p) {
          const double pos = p * (static_cast<double>(vals.size()) - 1.0);
          const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
          const std::size_t hi = std::min(lo + 1, vals.size() - 1);
          const double frac = pos - static_cast<double>(lo);
          return (1.0 - frac) * vals[lo] + frac * vals[hi];
        };
        cell.median = quantile(0.5);
        cell.q025 = quantile(0.025);
        cell.q975 = quantile(0.975);
        cell.mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                    static_cast<double>(vals.size());
      }
      report.cells.push_back(std::move(cell));
    }
  }

  if (!config.per_rep_csv.empty()) write_per_rep_csv(report, config.per_rep_csv);
  if (!config.aggregate_csv.empty()) write_aggregate_csv(report, config.aggregate_csv);
  return report;
}

namespace {
std::string estimator_label(int q) { return q == 0 ? "plugin" : "q" + std::to_string(q); }
}  // namespace

void write_per_rep_csv(const McReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_per_rep_csv: cannot open " + path);
  out.precision(17);
  out << "rep,estimator,converged,beta,gamma,sigma2_solo,sigma2_duo\n";
  for (const McRepRow& row : report.rows) {
    out << row.rep << ',' << estimator_label(row.q) << ',' << (row.converged ? 1 : 0) << ','
        << row.theta.beta << ',' << row.theta.gamma << ',' << row.theta.sigma2_solo << ','
        << row.theta.sigma2_duo << '\n';
  }
}

void write_aggregate_csv(const McReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_aggregate_csv: cannot open " + path);
  out.precision(17);
  out << "estimator,parameter,Median,Mean,q2.5,q97.5,successes,failures\n";
  for (const McCell& c : report.cells) {
    out << estimator_label(c.q) << ',' << c.parameter << ',' << c.median << ',' << c.mean << ','
        << c.q025 << ',' << c.q975 << ',' << c.successes << ',' << c.failures << '\n';
  }
}

}  // namespace orthoq
