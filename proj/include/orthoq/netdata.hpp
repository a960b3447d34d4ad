#ifndef ORTHOQ_NETDATA_HPP
#define ORTHOQ_NETDATA_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orthoq/models.hpp"

namespace orthoq {

struct Paper {
  std::string id;
  std::vector<std::string> authors;  // 1 or 2 ids
  double output = 0.0;               // positive; logs taken downstream
  std::string period;
};

struct AuthorRecord {
  std::string id;
  std::vector<int> solo_papers;  // indices into TeamCorpus::papers, sorted by paper id
  std::vector<int> duo_papers;
  bool eligible = false;  // >= 2 sole-authored papers
};

struct IngestReport {
  std::string path;
  int rows_read = 0;
  int rows_loaded = 0;
  int rejected_team_size = 0;
  int rejected_output = 0;
  std::vector<std::string> malformed;  // "line N: reason"
  bool time_effects_removed = false;
};

/// Immutable team-production dataset: papers with one or two authors,
/// positive outputs, the author->papers adjacency, and per-author
/// eligibility. Papers are kept sorted by id so downstream draws and sums do
/// not depend on input row order.
class TeamCorpus {
 public:
  static TeamCorpus from_papers(std::vector<Paper> papers);

  const std::vector<Paper>& papers() const { return papers_; }
  const Paper& paper(int i) const { return papers_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& author_ids() const { return author_ids_; }
  const AuthorRecord& author(const std::string& id) const;
  bool has_author(const std::string& id) const { return authors_.count(id) > 0; }
  const std::vector<int>& duo_papers() const { return duo_papers_; }
  int n_eligible_authors() const;

 private:
  std::vector<Paper> papers_;
  std::vector<std::string> author_ids_;  // sorted
  std::map<std::string, AuthorRecord> authors_;
  std::vector<int> duo_papers_;
};

struct LoadOptions {
  char delimiter = ',';
  bool remove_time_effects = false;  // divide outputs by per-period geometric means
};

struct LoadResult {
  TeamCorpus corpus;
  IngestReport report;
};

/// Reads a delimited text corpus with header paper_id, authors, output,
/// period; the authors field is a semicolon-joined id list. Oversized teams
/// and non-positive outputs are rejected row by row with counts; malformed
/// rows are listed with their line numbers. An empty result is an error.
LoadResult load_corpus(const std::string& path, const LoadOptions& options = {});

void save_corpus(const TeamCorpus& corpus, const std::string& path, char delimiter = ',');

/// One holdout sole-authored paper per author plus the remaining
/// (preliminary) sole papers; produced by estimate::make_split.
struct SplitPlan {
  std::uint64_t seed = 0;
  std::map<std::string, int> held_out;                    // author -> paper index
  std::map<std::string, std::vector<int>> preliminary;    // author -> paper indices
};

struct SubsetTriple {
  int duo;    // paper indices
  int solo1;  // held-out sole paper of the first listed co-author
  int solo2;
  std::string author1;
  std::string author2;
};

struct SubsetBuildResult {
  std::vector<SubsetTriple> subsets;
  int skipped_ineligible = 0;  // duo papers whose authors lack a holdout
  int holdout_reuse = 0;       // subsets sharing a holdout with an earlier subset
};

/// One triple per co-authored paper whose both authors hold a held-out sole
/// paper under the plan; the sole papers used are exactly the plan's
/// holdouts. Deterministic in (corpus, plan).
SubsetBuildResult build_subsets(const TeamCorpus& corpus, const SplitPlan& plan);

struct ReallocationResult {
  double average_output = 0.0;
  int subsample_size = 0;
  std::uint64_t seed = 0;
};

/// Expected average size-2 output under random re-pairing of the given
/// workers: exact enumeration of all unordered pairs within a seeded
/// subsample. log_effects are per-author log worker effects.
ReallocationResult random_reallocation(const CesTheta& theta,
                                       const std::vector<double>& log_effects,
                                       int subsample_size, std::uint64_t seed);

/// Model-implied average duo output at (theta, effects) over the observed
/// size-2 teams of the corpus.
double observed_allocation_average(const TeamCorpus& corpus, const CesTheta& theta,
                                   const std::map<std::string, double>& log_effects);

}  // namespace orthoq

#endif
