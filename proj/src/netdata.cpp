#include "orthoq/netdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "orthoq/rng.hpp"

namespace orthoq {

TeamCorpus TeamCorpus::from_papers(std::vector<Paper> papers) {
  if (papers.empty()) throw std::invalid_argument("TeamCorpus: empty corpus");
  std::sort(papers.begin(), papers.end(),
            [](const Paper& a, const Paper& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < papers.size(); ++i) {
    if (papers[i].id == papers[i - 1].id)
      throw std::invalid_argument("TeamCorpus: duplicate paper id " + papers[i].id);
  }
  TeamCorpus c;
  c.papers_ = std::move(papers);
  for (std::size_t i = 0; i < c.papers_.size(); ++i) {
    const Paper& p = c.papers_[i];
    if (p.authors.empty() || p.authors.size() > 2)
      throw std::invalid_argument("TeamCorpus: team size must be 1 or 2 for paper " + p.id);
    if (!(p.output > 0.0))
      throw std::invalid_argument("TeamCorpus: non-positive output for paper " + p.id);
    if (p.authors.size() == 2 && p.authors[0] == p.authors[1])
      throw std::invalid_argument("TeamCorpus: duplicate co-author on paper " + p.id);
    for (const std::string& a : p.authors) {
      AuthorRecord& rec = c.authors_[a];
      rec.id = a;
      if (p.authors.size() == 1)
        rec.solo_papers.push_back(static_cast<int>(i));
      else
        rec.duo_papers.push_back(static_cast<int>(i));
    }
    if (p.authors.size() == 2) c.duo_papers_.push_back(static_cast<int>(i));
  }
  for (auto& [id, rec] : c.authors_) {
    rec.eligible = rec.solo_papers.size() >= 2;
    c.author_ids_.push_back(id);
  }
  return c;
}

const AuthorRecord& TeamCorpus::author(const std::string& id) const {
  auto it = authors_.find(id);
  if (it == authors_.end()) throw std::out_of_range("TeamCorpus: unknown author " + id);
  return it->second;
}

int TeamCorpus::n_eligible_authors() const {
  int n = 0;
  for (const auto& [id, rec] : authors_) n += rec.eligible ? 1 : 0;
  return n;
}

namespace {

std::vector<std::string> split_field(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, delim)) out.push_back(cur);
  if (!s.empty() && s.back() == delim) out.push_back("");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

LoadResult load_corpus(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + path);
  IngestReport report;
  report.path = path;

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_corpus: missing header in " + path);
  const std::vector<std::string> header = split_field(trim(line), options.delimiter);
  const std::vector<std::string> expected = {"paper_id", "authors", "output", "period"};
  if (header.size() < expected.size())
    throw std::runtime_error("load_corpus: header must name paper_id, authors, output, period");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (trim(header[i]) != expected[i])
      throw std::runtime_error("load_corpus: unexpected header field '" + header[i] + "'");
  }

  std::vector<Paper> papers;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    ++report.rows_read;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const std::vector<std::string> fields = split_field(row, options.delimiter);
    if (fields.size() < 4) {
      report.malformed.push_back("line " + std::to_string(lineno) + ": expected 4 fields");
      continue;
    }
    Paper p;
    p.id = trim(fields[0]);
    for (const std::string& a : split_field(trim(fields[1]), ';')) {
      const std::string author = trim(a);
      if (!author.empty()) p.authors.push_back(author);
    }
    try {
      p.output = std::stod(trim(fields[2]));
    } catch (const std::exception&) {
      report.malformed.push_back("line " + std::to_string(lineno) + ": unparseable output");
      continue;
    }
    p.period = trim(fields[3]);
    if (p.id.empty() || p.authors.empty()) {
      report.malformed.push_back("line " + std::to_string(lineno) + ": missing id or authors");
      continue;
    }
    if (p.authors.size() > 2) {
      ++report.rejected_team_size;
      continue;
    }
    if (!(p.output > 0.0)) {
      ++report.rejected_output;
      continue;
    }
    papers.push_back(std::move(p));
  }
  if (papers.empty()) throw std::runtime_error("load_corpus: no usable rows in " + path);

  if (options.remove_time_effects) {
    std::map<std::string, std::pair<double, int>> logsum;
    for (const Paper& p : papers) {
      auto& [s, n] = logsum[p.period];
      s += std::log(p.output);
      ++n;
    }
    for (Paper& p : papers) {
      const auto& [s, n] = logsum[p.period];
      p.output /= std::exp(s / n);
    }
    report.time_effects_removed = true;
  }

  report.rows_loaded = static_cast<int>(papers.size());
  return LoadResult{TeamCorpus::from_papers(std::move(papers)), std::move(report)};
}

void save_corpus(const TeamCorpus& corpus, const std::string& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_corpus: cannot open " + path);
  out << "paper_id" << delimiter << "authors" << delimiter << "output" << delimiter << "period\n";
  out.precision(17);
  for (const Paper& p : corpus.papers()) {
    out << p.id << delimiter;
    for (std::size_t i = 0; i < p.authors.size(); ++i) {
      if (i) out << ';';
      out << p.authors[i];
    }
    out << delimiter << p.output << delimiter << p.period << '\n';
  }
}

SubsetBuildResult build_subsets(const TeamCorpus& corpus, const SplitPlan& plan) {
  SubsetBuildResult result;
  std::map<int, int> holdout_seen;
  for (int duo : corpus.duo_papers()) {
    const Paper& p = corpus.paper(duo);
    const auto h1 = plan.held_out.find(p.authors[0]);
    const auto h2 = plan.held_out.find(p.authors[1]);
    if (h1 == plan.held_out.end() || h2 == plan.held_out.end()) {
      ++result.skipped_ineligible;
      continue;
    }
    SubsetTriple triple;
    triple.duo = duo;
    triple.solo1 = h1->second;
    triple.solo2 = h2->second;
    triple.author1 = p.authors[0];
    triple.author2 = p.authors[1];
    result.holdout_reuse += holdout_seen[triple.solo1]++ > 0 ? 1 : 0;
    result.holdout_reuse += holdout_seen[triple.solo2]++ > 0 ? 1 : 0;
    result.subsets.push_back(std::move(triple));
  }
  return result;
}

ReallocationResult random_reallocation(const CesTheta& theta,
                                       const std::vector<double>& log_effects,
                                       int subsample_size, std::uint64_t seed) {
  const int n = static_cast<int>(log_effects.size());
  if (n < 2) throw std::invalid_argument("random_reallocation: need at least 2 workers");
  if (subsample_size < 2 || subsample_size > n)
    throw std::invalid_argument("random_reallocation: subsample size out of range");
  theta.validate();

  std::vector<int> pick;
  if (subsample_size == n) {
    pick.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
  } else {
    Rng rng = Rng::stream(seed, {0x7265616c6c6f63ULL});
    rng.sample_without_replacement(static_cast<std::size_t>(n),
                                   static_cast<std::size_t>(subsample_size), pick);
    std::sort(pick.begin(), pick.end());
  }

  // exact average over all unordered pairs in the subsample
  double acc = 0.0;
  for (std::size_t a = 0; a < pick.size(); ++a) {
    for (std::size_t b = a + 1; b < pick.size(); ++b) {
      acc += ces_expected_output(theta, log_effects[static_cast<std::size_t>(pick[a])],
                                 log_effects[static_cast<std::size_t>(pick[b])]);
    }
  }
  const double pairs = 0.5 * static_cast<double>(subsample_size) *
                       static_cast<double>(subsample_size - 1);
  ReallocationResult out;
  out.average_output = acc / pairs;
  out.subsample_size = subsample_size;
  out.seed = seed;
  return out;
}

double observed_allocation_average(const TeamCorpus& corpus, const CesTheta& theta,
                                   const std::map<std::string, double>& log_effects) {
  theta.validate();
  double acc = 0.0;
  int n = 0;
  for (int duo : corpus.duo_papers()) {
    const Paper& p = corpus.paper(duo);
    const auto e1 = log_effects.find(p.authors[0]);
    const auto e2 = log_effects.find(p.authors[1]);
    if (e1 == log_effects.end() || e2 == log_effects.end()) continue;
    acc += ces_expected_output(theta, e1->second, e2->second);
    ++n;
  }
  if (n == 0) throw std::runtime_error("observed_allocation_average: no evaluable duo teams");
  return acc / n;
}

}  // namespace orthoq
