#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "orthoq/estimate.hpp"
#include "orthoq/mc.hpp"
#include "orthoq/models.hpp"
#include "orthoq/netdata.hpp"
#include "orthoq/ortho.hpp"
#include "orthoq/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace orthoq;

namespace {

constexpr const char* kSchemaVersion = "1";

std::string default_out_dir() {
  const char* env = std::getenv("ORTHOQ_OUTDIR");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

json base_record(const std::string& command) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["generated_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  return j;
}

void write_json(const json& j, const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json theta_json(const CesTheta& t) {
  json j;
  j["beta"] = t.beta;
  j["gamma"] = t.gamma;
  j["sigma2_solo"] = t.sigma2_solo;
  j["sigma2_duo"] = t.sigma2_duo;
  return j;
}

void print_theta_table(const std::string& label, const CesTheta& t,
                       const Eigen::VectorXd* se = nullptr) {
  // Table layout: parameter rows, estimate with the standard error beneath
  std::printf("%-12s %12s %12s %14s %14s\n", label.c_str(), "gamma", "beta", "sigma2(2)",
              "sigma2(1)");
  std::printf("%-12s %12.4f %12.4f %14.4f %14.4f\n", "estimate", t.gamma, t.beta, t.sigma2_duo,
              t.sigma2_solo);
  if (se != nullptr) {
    std::printf("%-12s %12s %12s %14s %14s\n", "",
                ("(" + std::to_string((*se)[1]) + ")").c_str(),
                ("(" + std::to_string((*se)[0]) + ")").c_str(),
                ("(" + std::to_string((*se)[3]) + ")").c_str(),
                ("(" + std::to_string((*se)[2]) + ")").c_str());
  }
}

std::map<std::string, double> complete_effects(const TeamCorpus& corpus,
                                               const PreliminaryEffects& effects) {
  std::map<std::string, double> full = effects.log_effect;
  double global = 0.0;
  if (!full.empty()) {
    for (const auto& [id, v] : full) global += v;
    global /= static_cast<double>(full.size());
  }
  for (const std::string& id : corpus.author_ids()) {
    if (full.count(id)) continue;
    const AuthorRecord& rec = corpus.author(id);
    if (!rec.solo_papers.empty()) {
      double acc = 0.0;
      for (int p : rec.solo_papers) acc += std::log(corpus.paper(p).output);
      full[id] = acc / static_cast<double>(rec.solo_papers.size());
    } else {
      full[id] = global;
    }
  }
  return full;
}

struct CommonArgs {
  std::string out_dir = default_out_dir();
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value config file; flags win");
  cmd->add_option("--out-dir", args.out_dir, "output directory (env ORTHOQ_OUTDIR)");
  cmd->add_option("--seed", args.seed, "base RNG seed");
  cmd->add_option("--workers", args.workers, "worker pool size")->check(CLI::PositiveNumber);
  cmd->add_flag("--dry-run", args.dry_run, "validate the configuration and print the plan");
}

// Applies a flat key=value file beneath the command line: values fill only
// options the user did not pass, unknown keys are rejected.
void apply_flat_config(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  std::string line;
  int lineno = 0;
  std::vector<CLI::Option*> touched;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    const std::string trimmed = strip(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--config",
                                 "line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = strip(trimmed.substr(0, eq));
    const std::string value = strip(trimmed.substr(eq + 1));
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    if (opt->count() > 0 && std::find(touched.begin(), touched.end(), opt) == touched.end())
      continue;  // given on the command line: flags win
    opt->add_result(value);
    if (std::find(touched.begin(), touched.end(), opt) == touched.end()) touched.push_back(opt);
  }
  for (CLI::Option* opt : touched) opt->run_callback();
}

int dry_run_exit(const std::string& command, const json& plan) {
  json j = base_record(command);
  j["dry_run"] = true;
  j["plan"] = plan;
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int fail_runtime(const std::string& command, const std::string& out_dir,
                 const std::exception& e) {
  json j = base_record(command);
  j["error"] = e.what();
  try {
    write_json(j, fs::path(out_dir) / "error.json");
  } catch (const std::exception&) {
    // diagnostics path unavailable; stderr still carries the record
  }
  std::cerr << j.dump(2) << std::endl;
  return 3;
}

// ---------------------------------------------------------------------------

int run_simulate(const CommonArgs& common, const SyntheticTopologySpec& spec,
                 const CesTheta& theta, double effect_sd, const std::string& out_name) {
  if (common.dry_run) {
    json plan;
    plan["authors"] = spec.n_authors;
    plan["duo_share"] = spec.duo_share;
    plan["sorting"] = spec.sorting_correlation;
    plan["theta"] = theta_json(theta);
    plan["corpus_file"] = out_name;
    return dry_run_exit("simulate", plan);
  }
  theta.validate();
  const std::vector<double> z = draw_log_effects(spec.n_authors, effect_sd, common.seed);
  const Topology topo = synthetic_topology(spec, z, common.seed);
  std::map<std::string, double> effects;
  for (std::size_t k = 0; k < topo.author_ids.size(); ++k) effects[topo.author_ids[k]] = z[k];
  const TeamCorpus corpus = simulate_corpus(topo, theta, effects, common.seed);

  fs::create_directories(common.out_dir);
  const fs::path corpus_path = fs::path(common.out_dir) / out_name;
  save_corpus(corpus, corpus_path.string());

  json j = base_record("simulate");
  j["corpus_file"] = corpus_path.string();
  j["papers"] = corpus.papers().size();
  j["duo_papers"] = corpus.duo_papers().size();
  j["authors"] = corpus.author_ids().size();
  j["truth"] = theta_json(theta);
  j["effect_log_sd"] = effect_sd;
  j["seed"] = common.seed;
  write_json(j, fs::path(common.out_dir) / "simulate.json");
  std::cout << "wrote " << corpus_path.string() << " (" << corpus.papers().size() << " papers, "
            << corpus.duo_papers().size() << " co-authored)" << std::endl;
  return 0;
}

int run_estimate(const CommonArgs& common, const std::string& corpus_path, int q, int splits,
                 bool with_sandwich) {
  if (common.dry_run) {
    json plan;
    plan["corpus"] = corpus_path;
    plan["q"] = q;
    plan["splits"] = splits;
    plan["sandwich"] = with_sandwich;
    return dry_run_exit("estimate", plan);
  }
  const LoadResult loaded = load_corpus(corpus_path);
  CrossFitOptions opts;
  opts.q = q;
  opts.n_splits = splits;
  opts.seed = common.seed;
  opts.workers = common.workers;
  const CrossFitResult res = cross_fit(loaded.corpus, opts);
  if (static_cast<int>(res.splits.size()) == res.failed_splits)
    throw std::runtime_error("estimation failed in every split");

  fs::create_directories(common.out_dir);
  std::ofstream csv(fs::path(common.out_dir) / "per_split.csv");
  csv.precision(17);
  csv << "parameter,split_id,estimate,converged,moment_norm\n";
  for (const SplitRecord& rec : res.splits) {
    const Eigen::VectorXd v = rec.theta.to_vector();
    const char* names[4] = {"beta", "gamma", "sigma2_solo", "sigma2_duo"};
    for (int k = 0; k < 4; ++k)
      csv << names[k] << ',' << rec.split_id << ',' << v[k] << ',' << (rec.converged ? 1 : 0)
          << ',' << rec.moment_norm << '\n';
    csv << "avg_output," << rec.split_id << ',' << rec.mu << ',' << (rec.converged ? 1 : 0) << ','
        << rec.moment_norm << '\n';
  }
  csv.close();

  json j = base_record("estimate");
  j["corpus"] = corpus_path;
  j["q"] = q;
  j["splits"] = splits;
  j["seed"] = common.seed;
  j["ingest"] = {{"rows_read", loaded.report.rows_read},
                 {"rows_loaded", loaded.report.rows_loaded},
                 {"rejected_team_size", loaded.report.rejected_team_size},
                 {"rejected_output", loaded.report.rejected_output},
                 {"malformed", loaded.report.malformed.size()}};
  j["theta"] = theta_json(res.theta_mean);
  j["avg_output"] = res.mu_mean;
  j["failed_splits"] = res.failed_splits;

  std::optional<Eigen::VectorXd> se;
  if (with_sandwich) {
    // plug-in variance on the first successful split's sample
    for (const SplitRecord& rec : res.splits) {
      if (!rec.converged) continue;
      const std::uint64_t split_seed = rec.split_id;  // recompute that split
      (void)split_seed;
      const Split split = make_split(loaded.corpus, Rng::mix(common.seed ^ Rng::mix(
                                                        0x73706c6974ULL + rec.split_id)));
      const SubsetBuildResult built = build_subsets(loaded.corpus, split.plan);
      const std::vector<SubsetSample> samples =
          assemble_samples(loaded.corpus, built.subsets, split.effects);
      const SandwichVariance sv = ces_theta_sandwich(samples, rec.theta, q);
      se = sv.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
      j["sandwich_se"] = {{"beta", (*se)[0]},
                          {"gamma", (*se)[1]},
                          {"sigma2_solo", (*se)[2]},
                          {"sigma2_duo", (*se)[3]}};
      break;
    }
  }
  write_json(j, fs::path(common.out_dir) / "results.json");

  print_theta_table(q == 0 ? "plug-in" : "q=" + std::to_string(q), res.theta_mean,
                    se ? &*se : nullptr);
  std::printf("%-12s %12.4f\n", "avg output", res.mu_mean);
  return 0;
}

int run_check(const CommonArgs& common, const std::string& model_name, int q, int nodes,
              bool raw) {
  if (common.dry_run) {
    json plan;
    plan["model"] = model_name;
    plan["q"] = q;
    plan["nodes"] = nodes;
    plan["raw"] = raw;
    return dry_run_exit("check-orthogonality", plan);
  }
  json j = base_record("check-orthogonality");
  j["model"] = model_name;
  j["q"] = q;
  OrthogonalityReport report;
  if (model_name == "neyman-scott") {
    const int t = 4;
    const NeymanScottModel model(t);
    const ScoreMoment score(model);
    Eigen::VectorXd theta(1), eta(1);
    theta << 1.3;
    eta << 0.4;
    report = orthogonality_check(model, score, theta, eta, Eigen::VectorXd(), q,
                                 QuadratureRule::gauss_hermite(nodes, t), !raw);
  } else if (model_name == "ces") {
    const CesSubsetModel model;
    const ScoreMoment score(model);
    Rng rng = Rng::stream(common.seed, {0x636865636bULL});
    CesTheta theta;
    theta.beta = 1.2 + 0.2 * rng.uniform();
    theta.gamma = 0.6 + 0.5 * rng.uniform();
    theta.sigma2_solo = 0.8 + 0.4 * rng.uniform();
    theta.sigma2_duo = 0.8 + 0.4 * rng.uniform();
    Eigen::VectorXd eta(2);
    eta << rng.normal() * 0.5, rng.normal() * 0.5;
    report = orthogonality_check(model, score, theta.to_vector(), eta, Eigen::VectorXd(), q,
                                 QuadratureRule::gauss_hermite(nodes, 3), !raw);
  } else {
    throw CLI::ValidationError("--model must be neyman-scott or ces");
  }
  json entries = json::array();
  for (const OrthogonalityEntry& e : report.entries) {
    json row;
    row["index"] = e.index.to_string();
    row["violation"] = e.violation;
    row["reduced_confidence"] = e.reduced_confidence;
    entries.push_back(row);
  }
  j["entries"] = entries;
  j["max_violation"] = report.max_violation;
  write_json(j, fs::path(common.out_dir) / "orthogonality.json");
  std::printf("max violation (orders 1..%d): %.3e\n", q, report.max_violation);
  return 0;
}

int run_counterfactual(const CommonArgs& common, const std::string& corpus_path, int q,
                       int splits, int subsample) {
  if (common.dry_run) {
    json plan;
    plan["corpus"] = corpus_path;
    plan["q"] = q;
    plan["splits"] = splits;
    plan["subsample"] = subsample;
    return dry_run_exit("counterfactual", plan);
  }
  const LoadResult loaded = load_corpus(corpus_path);
  json per_split = json::array();
  double cf_acc = 0.0, obs_acc = 0.0;
  int ok = 0;
  for (int s = 0; s < splits; ++s) {
    const std::uint64_t split_seed = Rng::mix(common.seed ^ Rng::mix(0x6366ULL + s));
    const Split split = make_split(loaded.corpus, split_seed);
    const SubsetBuildResult built = build_subsets(loaded.corpus, split.plan);
    const std::vector<SubsetSample> samples =
        assemble_samples(loaded.corpus, built.subsets, split.effects);
    const CesFitResult fit = fit_ces_theta(samples, q);
    if (!fit.gmm.converged) continue;
    const std::map<std::string, double> effects = complete_effects(loaded.corpus, split.effects);
    std::vector<double> values;
    values.reserve(effects.size());
    for (const auto& [id, v] : effects) values.push_back(v);
    const int sub = std::min<int>(subsample, static_cast<int>(values.size()));
    const ReallocationResult cf = random_reallocation(fit.theta, values, sub, split_seed);
    const double observed = observed_allocation_average(loaded.corpus, fit.theta, effects);
    cf_acc += cf.average_output;
    obs_acc += observed;
    ++ok;
    json row;
    row["split"] = s;
    row["counterfactual"] = cf.average_output;
    row["observed_model_avg"] = observed;
    row["subsample"] = cf.subsample_size;
    per_split.push_back(row);
  }
  if (ok == 0) throw std::runtime_error("counterfactual: no successful split");
  json j = base_record("counterfactual");
  j["corpus"] = corpus_path;
  j["q"] = q;
  j["splits"] = splits;
  j["counterfactual_avg"] = cf_acc / ok;
  j["observed_model_avg"] = obs_acc / ok;
  j["per_split"] = per_split;
  write_json(j, fs::path(common.out_dir) / "counterfactual.json");
  std::printf("observed-allocation model average: %.4f\n", obs_acc / ok);
  std::printf("random re-allocation average:      %.4f\n", cf_acc / ok);
  return 0;
}

int run_bootstrap(const CommonArgs& common, const std::string& corpus_path, int q, int B,
                  int inner_splits, int fit_splits) {
  if (common.dry_run) {
    json plan;
    plan["corpus"] = corpus_path;
    plan["q"] = q;
    plan["replications"] = B;
    plan["inner_splits"] = inner_splits;
    return dry_run_exit("bootstrap", plan);
  }
  const LoadResult loaded = load_corpus(corpus_path);
  CrossFitOptions fit_opts;
  fit_opts.q = q;
  fit_opts.n_splits = fit_splits;
  fit_opts.seed = common.seed;
  fit_opts.workers = common.workers;
  fit_opts.estimate_mu = false;
  const CrossFitResult fit = cross_fit(loaded.corpus, fit_opts);
  if (static_cast<int>(fit.splits.size()) == fit.failed_splits)
    throw std::runtime_error("bootstrap: the point fit failed in every split");

  const Split split = make_split(loaded.corpus,
                                 Rng::mix(common.seed ^ Rng::mix(0x73706c6974ULL + 0)));
  BootstrapOptions opts;
  opts.replications = B;
  opts.inner_splits = inner_splits;
  opts.q = q;
  opts.seed = common.seed;
  opts.workers = common.workers;
  const BootstrapResult res = parametric_bootstrap(
      loaded.corpus, fit.theta_mean, complete_effects(loaded.corpus, split.effects), opts);

  json j = base_record("bootstrap");
  j["corpus"] = corpus_path;
  j["q"] = q;
  j["replications"] = B;
  j["inner_splits"] = inner_splits;
  j["failures"] = res.failures;
  j["theta"] = theta_json(fit.theta_mean);
  json se;
  for (std::size_t k = 0; k < res.parameter_names.size(); ++k)
    se[res.parameter_names[k]] = res.standard_errors[static_cast<int>(k)];
  j["bootstrap_se"] = se;
  write_json(j, fs::path(common.out_dir) / "bootstrap.json");

  Eigen::VectorXd sev = res.standard_errors;
  print_theta_table("q=" + std::to_string(q), fit.theta_mean, &sev);
  return 0;
}

int run_mc_study(const CommonArgs& common, McStudyConfig config) {
  config.seed = common.seed;
  config.workers = common.workers;
  if (common.dry_run) {
    json plan;
    plan["reps"] = config.n_reps;
    plan["q_list"] = config.q_list;
    plan["authors"] = config.synth.n_authors;
    plan["theta0"] = theta_json(config.theta0);
    if (config.corpus_path) plan["topology_corpus"] = *config.corpus_path;
    return dry_run_exit("mc-study", plan);
  }
  fs::create_directories(common.out_dir);
  config.per_rep_csv = (fs::path(common.out_dir) / "mc_per_rep.csv").string();
  config.aggregate_csv = (fs::path(common.out_dir) / "mc_aggregate.csv").string();
  const McReport report = run_study(config);

  json j = base_record("mc-study");
  j["reps"] = report.n_reps;
  j["theta0"] = theta_json(config.theta0);
  json cells = json::array();
  for (const McCell& c : report.cells) {
    json row;
    row["estimator"] = c.q == 0 ? "plugin" : "q" + std::to_string(c.q);
    row["parameter"] = c.parameter;
    row["median"] = c.median;
    row["mean"] = c.mean;
    row["q2.5"] = c.q025;
    row["q97.5"] = c.q975;
    row["failures"] = c.failures;
    cells.push_back(row);
  }
  j["cells"] = cells;
  write_json(j, fs::path(common.out_dir) / "mc_summary.json");

  std::printf("%-9s %-12s %10s %10s %10s %10s\n", "estimator", "parameter", "Median", "Mean",
              "q2.5", "q97.5");
  for (const McCell& c : report.cells) {
    std::printf("%-9s %-12s %10.4f %10.4f %10.4f %10.4f\n",
                (c.q == 0 ? "plugin" : ("q" + std::to_string(c.q))).c_str(), c.parameter.c_str(),
                c.median, c.mean, c.q025, c.q975);
  }
  return 0;
}

int run_quasi_diff(const CommonArgs& common, const std::string& corpus_path, int splits,
                   double grid_lo, double grid_hi, int grid_points) {
  if (common.dry_run) {
    json plan;
    plan["corpus"] = corpus_path;
    plan["splits"] = splits;
    plan["grid"] = {grid_lo, grid_hi, grid_points};
    return dry_run_exit("quasi-diff", plan);
  }
  const LoadResult loaded = load_corpus(corpus_path);
  std::vector<double> grid;
  for (int i = 0; i < grid_points; ++i)
    grid.push_back(grid_lo + (grid_hi - grid_lo) * i / (grid_points - 1));

  json per_split = json::array();
  std::vector<double> estimates;
  int boundary = 0;
  for (int s = 0; s < splits; ++s) {
    const std::uint64_t split_seed = Rng::mix(common.seed ^ Rng::mix(0x7164ULL + s));
    const Split split = make_split(loaded.corpus, split_seed);
    const QuasiDiffResult res = quasi_diff_gamma(loaded.corpus, split.effects, grid, split_seed);
    estimates.push_back(res.gamma_hat);
    boundary += res.boundary_flag ? 1 : 0;
    json row;
    row["split"] = s;
    row["gamma_hat"] = res.gamma_hat;
    row["boundary"] = res.boundary_flag;
    per_split.push_back(row);
  }
  std::vector<double> sorted = estimates;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];

  json j = base_record("quasi-diff");
  j["corpus"] = corpus_path;
  j["splits"] = splits;
  j["gamma_median"] = median;
  j["boundary_count"] = boundary;
  j["per_split"] = per_split;
  write_json(j, fs::path(common.out_dir) / "quasi_diff.json");
  std::printf("gamma (median over %d splits): %.4f, boundary minima: %d\n", splits, median,
              boundary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"higher-order orthogonal moment estimation for team production networks"};
  app.require_subcommand(1);

  // simulate
  CommonArgs sim_common;
  SyntheticTopologySpec sim_spec;
  CesTheta sim_theta;
  double sim_effect_sd = 1.0;
  std::string sim_out_name = "corpus.csv";
  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic team corpus");
  add_common(sim, sim_common);
  sim->add_option("--authors", sim_spec.n_authors)->check(CLI::PositiveNumber);
  sim->add_option("--duo-share", sim_spec.duo_share);
  sim->add_option("--sorting", sim_spec.sorting_correlation);
  sim->add_option("--effect-sd", sim_effect_sd);
  sim->add_option("--beta", sim_theta.beta);
  sim->add_option("--gamma", sim_theta.gamma);
  sim->add_option("--sigma2-solo", sim_theta.sigma2_solo);
  sim->add_option("--sigma2-duo", sim_theta.sigma2_duo);
  sim->add_option("--out-name", sim_out_name);

  // estimate
  CommonArgs est_common;
  std::string est_corpus;
  int est_q = 2;
  int est_splits = 1;
  bool est_sandwich = false;
  CLI::App* est = app.add_subcommand("estimate", "cross-fitted GMM estimates of the parameters");
  add_common(est, est_common);
  est->add_option("corpus", est_corpus, "corpus csv path")->required();
  est->add_option("--q", est_q, "orthogonalization order (0 = plug-in)")
      ->check(CLI::Range(0, 6));
  est->add_option("--splits", est_splits)->check(CLI::PositiveNumber);
  est->add_flag("--sandwich", est_sandwich, "report plug-in sandwich standard errors");

  // check-orthogonality
  CommonArgs chk_common;
  std::string chk_model = "neyman-scott";
  int chk_q = 2;
  int chk_nodes = 20;
  bool chk_raw = false;
  CLI::App* chk = app.add_subcommand("check-orthogonality",
                                     "numerical orthogonality report for a shipped model");
  add_common(chk, chk_common);
  chk->add_option("--model", chk_model, "neyman-scott or ces");
  chk->add_option("--q", chk_q)->check(CLI::Range(1, 4));
  chk->add_option("--nodes", chk_nodes)->check(CLI::Range(4, 40));
  chk->add_flag("--raw", chk_raw, "check the unprojected moment instead");

  // counterfactual
  CommonArgs cf_common;
  std::string cf_corpus;
  int cf_q = 2;
  int cf_splits = 1;
  int cf_subsample = 1000;
  CLI::App* cf = app.add_subcommand("counterfactual", "random re-allocation average output");
  add_common(cf, cf_common);
  cf->add_option("corpus", cf_corpus)->required();
  cf->add_option("--q", cf_q)->check(CLI::Range(0, 6));
  cf->add_option("--splits", cf_splits)->check(CLI::PositiveNumber);
  cf->add_option("--subsample", cf_subsample)->check(CLI::PositiveNumber);

  // bootstrap
  CommonArgs bs_common;
  std::string bs_corpus;
  int bs_q = 2;
  int bs_b = 200;
  int bs_inner = 10;
  int bs_fit_splits = 1;
  CLI::App* bs = app.add_subcommand("bootstrap", "parametric bootstrap standard errors");
  add_common(bs, bs_common);
  bs->add_option("corpus", bs_corpus)->required();
  bs->add_option("--q", bs_q)->check(CLI::Range(0, 6));
  bs->add_option("--B", bs_b)->check(CLI::PositiveNumber);
  bs->add_option("--inner-splits", bs_inner)->check(CLI::PositiveNumber);
  bs->add_option("--fit-splits", bs_fit_splits)->check(CLI::PositiveNumber);

  // mc-study
  CommonArgs mc_common;
  McStudyConfig mc_config;
  std::string mc_corpus;
  CLI::App* mc = app.add_subcommand("mc-study", "simulation study of bias across orders");
  add_common(mc, mc_common);
  mc->add_option("config-file", mc_common.config_path, "study config file (same as --config)");
  mc->add_option("--reps", mc_config.n_reps)->check(CLI::PositiveNumber);
  mc->add_option("--q-list", mc_config.q_list, "orders to estimate, 0 = plug-in");
  mc->add_option("--authors", mc_config.synth.n_authors)->check(CLI::PositiveNumber);
  mc->add_option("--duo-share", mc_config.synth.duo_share);
  mc->add_option("--sorting", mc_config.synth.sorting_correlation);
  mc->add_option("--effect-sd", mc_config.effect_log_sd);
  mc->add_option("--beta", mc_config.theta0.beta);
  mc->add_option("--gamma", mc_config.theta0.gamma);
  mc->add_option("--sigma2-solo", mc_config.theta0.sigma2_solo);
  mc->add_option("--sigma2-duo", mc_config.theta0.sigma2_duo);
  mc->add_option("--topology-corpus", mc_corpus, "take the network from this corpus file");

  // quasi-diff
  CommonArgs qd_common;
  std::string qd_corpus;
  int qd_splits = 1;
  double qd_lo = 0.05, qd_hi = 2.0;
  int qd_points = 40;
  CLI::App* qd = app.add_subcommand("quasi-diff",
                                    "fixed-effect-free GMM estimate of the substitution parameter");
  add_common(qd, qd_common);
  qd->add_option("corpus", qd_corpus)->required();
  qd->add_option("--splits", qd_splits)->check(CLI::PositiveNumber);
  qd->add_option("--grid-lo", qd_lo)->check(CLI::PositiveNumber);
  qd->add_option("--grid-hi", qd_hi)->check(CLI::PositiveNumber);
  qd->add_option("--grid-points", qd_points)->check(CLI::Range(3, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* active = sim->parsed()   ? sim
                     : est->parsed() ? est
                     : chk->parsed() ? chk
                     : cf->parsed()  ? cf
                     : bs->parsed()  ? bs
                     : mc->parsed()  ? mc
                                     : qd;
  CommonArgs* active_common = sim->parsed()   ? &sim_common
                              : est->parsed() ? &est_common
                              : chk->parsed() ? &chk_common
                              : cf->parsed()  ? &cf_common
                              : bs->parsed()  ? &bs_common
                              : mc->parsed()  ? &mc_common
                                              : &qd_common;

  try {
    if (!active_common->config_path.empty())
      apply_flat_config(active, active_common->config_path);
    if (sim->parsed()) return run_simulate(sim_common, sim_spec, sim_theta, sim_effect_sd,
                                           sim_out_name);
    if (est->parsed()) return run_estimate(est_common, est_corpus, est_q, est_splits,
                                           est_sandwich);
    if (chk->parsed()) return run_check(chk_common, chk_model, chk_q, chk_nodes, chk_raw);
    if (cf->parsed()) return run_counterfactual(cf_common, cf_corpus, cf_q, cf_splits,
                                                cf_subsample);
    if (bs->parsed()) return run_bootstrap(bs_common, bs_corpus, bs_q, bs_b, bs_inner,
                                           bs_fit_splits);
    if (mc->parsed()) {
      if (!mc_corpus.empty()) mc_config.corpus_path = mc_corpus;
      return run_mc_study(mc_common, mc_config);
    }
    if (qd->parsed()) return run_quasi_diff(qd_common, qd_corpus, qd_splits, qd_lo, qd_hi,
                                            qd_points);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    return fail_runtime(active->get_name(), active_common->out_dir, e);
  }
  return 0;
}
