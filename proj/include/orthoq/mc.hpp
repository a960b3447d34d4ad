#ifndef ORTHOQ_MC_HPP
#define ORTHOQ_MC_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orthoq/estimate.hpp"
#include "orthoq/netdata.hpp"

namespace orthoq {

/// Paper skeleton: ids, author slots, periods; outputs are drawn by
/// simulate_corpus.
struct Topology {
  std::vector<Paper> papers;
  std::vector<std::string> author_ids;
};

Topology topology_of(const TeamCorpus& corpus);

/// Synthetic network defaults mirror the empirical shape at desk scale:
/// right-skewed sole-paper counts with 10/50/90 quantiles 2/4/13, a 10%
/// co-authored share, co-authoring propensity rising with productivity, and
/// optional positive sorting of paired effects.
struct SyntheticTopologySpec {
  int n_authors = 440;
  double duo_share = 0.10;
  double count_log_median = 0.6931471805599453;  // log 2: median of the extra-paper draw
  double count_log_sd = 1.33;
  int max_solo_papers = 80;
  double sorting_correlation = 0.3;  // rank correlation of paired effects
  double count_weight_power = 0.75;  // duo-slot weight (solo count - 1)^power
};

std::vector<double> draw_log_effects(int n_authors, double log_sd, std::uint64_t seed);

/// Author pairing uses a Gaussian copula over effect ranks so that
/// sorting_correlation > 0 induces positive assortative matching.
Topology synthetic_topology(const SyntheticTopologySpec& spec,
                            const std::vector<double>& log_effects, std::uint64_t seed);

/// Draws log-normal outcomes on the given skeleton: solo rows at the worker
/// effect, duo rows at the CES aggregate, with size-specific variances.
/// Deterministic per seed.
TeamCorpus simulate_corpus(const Topology& topology, const CesTheta& theta,
                           const std::map<std::string, double>& log_effects, std::uint64_t seed);

struct McStudyConfig {
  std::optional<std::string> corpus_path;  // topology from a real corpus instead of synthetic
  SyntheticTopologySpec synth;
  CesTheta theta0;
  double effect_log_sd = 1.0;
  int n_reps = 300;
  std::vector<int> q_list = {0, 2};  // 0 = plug-in
  std::uint64_t seed = 0;
  int workers = 1;
  GmmOptions gmm;
  std::string per_rep_csv;     // written when non-empty
  std::string aggregate_csv;   // written when non-empty
};

struct McCell {
  int q = 0;  // 0 = plug-in
  std::string parameter;
  double median = 0.0;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  int successes = 0;
  int failures = 0;
};

struct McRepRow {
  int rep = 0;
  int q = 0;
  bool converged = false;
  CesTheta theta;
};

struct McReport {
  int n_reps = 0;
  std::vector<McCell> cells;
  std::vector<McRepRow> rows;

  const McCell& cell(int q, const std::string& parameter) const;
};

/// One simulated corpus per replication on a fixed network and fixed true
/// effects, a single seeded split each, plug-in and orthogonalized estimates
/// per requested order; aggregation in replication order.
McReport run_study(const McStudyConfig& config);

void write_per_rep_csv(const McReport& report, const std::string& path);
void write_aggregate_csv(const McReport& report, const std::string& path);

}  // namespace orthoq

#endif
