// fsc: fusion subspace clustering from the command line.
//
//   fsc synth    --out DIR            synthetic union-of-subspaces data
//   fsc fit      INPUT --out DIR      fit bases, cluster, write labels
//   fsc path     INPUT --out DIR      lambda sweep table and selected model
//   fsc complete INPUT --out DIR      fill missing entries
//   fsc eval     --labels P --truth T clustering error (and completion error)
//
// Every run writes DIR/manifest.json; `--config DIR/manifest.json` replays it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsc/fsc.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace fsc;
using cli::json;
using cli::RunConfig;
using io::format_double;

namespace {

/// Binds an option to a field of the flag struct and remembers how to copy
/// it over a config-file value when the user actually passed it.
class Binder {
 public:
  Binder(CLI::App* app, RunConfig& flags) : app_(app), flags_(flags) {}

  template <class T>
  CLI::Option* opt(const std::string& name, T RunConfig::*field, const std::string& desc) {
    CLI::Option* o = app_->add_option(name, flags_.*field, desc);
    overlays_.push_back([o, field, this](RunConfig& c) {
      if (o->count() > 0) c.*field = flags_.*field;
    });
    return o;
  }

  CLI::Option* flag(const std::string& name, bool RunConfig::*field, const std::string& desc) {
    CLI::Option* o = app_->add_flag(name, flags_.*field, desc);
    overlays_.push_back([o, field, this](RunConfig& c) {
      if (o->count() > 0) c.*field = flags_.*field;
    });
    return o;
  }

  void overlay(RunConfig& c) const {
    for (const auto& f : overlays_) f(c);
  }

 private:
  CLI::App* app_;
  RunConfig& flags_;
  std::vector<std::function<void(RunConfig&)>> overlays_;
};

void add_common(Binder& b) {
  b.opt("-o,--out", &RunConfig::out, "output directory");
  b.opt("--seed", &RunConfig::seed, "random seed");
  b.opt("--threads", &RunConfig::threads, "worker threads")->check(CLI::PositiveNumber);
}

void add_solver(Binder& b) {
  b.opt("--mask", &RunConfig::mask, "0/1 CSV mask overriding inline missing markers");
  b.opt("--lambda", &RunConfig::lambda, "fusion weight (default 1/(n d))");
  b.opt("-r,--rank", &RunConfig::rank, "subspace dimension r");
  b.opt("--k", &RunConfig::k, "number of clusters (default: from fused components)");
  b.opt("--max-iters", &RunConfig::max_iters, "gradient descent iteration cap");
  b.opt("--tol", &RunConfig::tol, "relative objective decrease tolerance");
  b.opt("--step0", &RunConfig::step0, "first trial step");
  b.opt("--reorth-period", &RunConfig::reorth_period, "re-orthonormalize bases every N iterations");
  b.opt("--ridge", &RunConfig::ridge, "fallback Gram ridge");
  b.opt("--init", &RunConfig::init, "random | seeded");
  b.opt("--fuse-tol", &RunConfig::fuse_tol, "squared projector distance treated as fused");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// FNV-1a of a file's bytes, recorded so a replay can check its inputs.
std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return hex64(h);
}

class Run {
 public:
  explicit Run(RunConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.out.empty()) throw InvalidParams("--out is required");
    fs::create_directories(cfg_.out);
  }

  const RunConfig& cfg() const { return cfg_; }
  std::string path(const std::string& name) const { return (fs::path(cfg_.out) / name).string(); }

  std::string output(const std::string& name) {
    outputs_.push_back(name);
    return path(name);
  }

  void resolved(const std::string& key, json value) { resolved_[key] = std::move(value); }

  void write_manifest() const {
    json m;
    m["tool"] = "fsc";
    m["version"] = kVersion;
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["config"] = cli::to_json(cfg_);
    m["resolved"] = resolved_.is_null() ? json::object() : resolved_;
    json inputs = json::object();
    for (const std::string* p : {&cfg_.input, &cfg_.mask, &cfg_.labels, &cfg_.truth})
      if (!p->empty()) inputs[*p] = file_digest(*p);
    m["inputs"] = inputs;
    m["outputs"] = outputs_;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  RunConfig cfg_;
  std::vector<std::string> outputs_;
  json resolved_;
};

MaskedMatrix load_input(const RunConfig& c) {
  if (c.input.empty()) throw InvalidParams("an input matrix is required");
  return io::load_masked(c.input, c.mask);
}

double resolve_lambda(const RunConfig& c, const MaskedMatrix& x) {
  return c.lambda ? *c.lambda : default_lambda_scale(x.rows(), x.cols());
}

PathOptions path_options(const RunConfig& c) {
  PathOptions po;
  po.fuse_tol = c.fuse_tol;
  po.threads = c.threads;
  return po;
}

Labels labels_for(const BasisSet& bases, const RunConfig& c) {
  if (c.k) {
    ClusterOptions co;
    co.k = *c.k;
    co.seed = c.seed;
    co.threads = c.threads;
    return cluster(bases, co);
  }
  return fused_clustering(bases, path_options(c));
}

void write_cluster_bases(Run& run, const ClusterModel& model) {
  for (int k = 0; k < model.k(); ++k)
    io::write_matrix_csv(run.output("basis_" + std::to_string(k + 1) + ".csv"),
                         model.cluster_bases[static_cast<std::size_t>(k)]);
}

int cmd_synth(Run& run) {
  const RunConfig& c = run.cfg();
  UosParams p;
  p.d = c.d;
  p.k = c.clusters;
  p.r = c.r_true;
  p.n_per_cluster = c.n_per_cluster;
  p.sigma = c.sigma;
  p.seed = c.seed;
  const auto inst = gen_uos(p);
  const auto ms = gen_mask(p.d, inst.x.cols(), c.p, c.seed);
  io::write_matrix_csv(run.output("truth.csv"), inst.x);
  io::write_matrix_csv(run.output("observed.csv"), inst.x, &ms.mask);
  io::write_mask_csv(run.output("mask.csv"), ms.mask);
  io::write_labels(run.output("labels.txt"), inst.true_labels);
  for (std::size_t k = 0; k < inst.true_bases.size(); ++k)
    io::write_matrix_csv(run.output("true_basis_" + std::to_string(k + 1) + ".csv"), inst.true_bases[k]);
  run.resolved("resampled_columns", ms.resampled_columns);
  std::cout << "wrote " << p.d << "x" << inst.x.cols() << " matrix, " << p.k << " clusters, observed fraction "
            << format_double(static_cast<double>(ms.mask.count()) / static_cast<double>(ms.mask.size())) << "\n";
  return 0;
}

int cmd_fit(Run& run) {
  const RunConfig& c = run.cfg();
  const MaskedMatrix x = load_input(c);
  const double lambda = resolve_lambda(c, x);
  run.resolved("lambda", lambda);
  const auto res = fit(x, c.solver(lambda));
  const Labels labels = labels_for(res.bases, c);
  const ClusterModel model = build_cluster_model(x, res.bases, labels, c.threads);
  io::write_labels(run.output("labels.txt"), labels);
  write_cluster_bases(run, model);
  io::Table trace{{"iteration", "objective"}, {}};
  for (std::size_t k = 0; k < res.trace.objective.size(); ++k)
    trace.add({std::to_string(k), format_double(res.trace.objective[k])});
  io::write_table(run.output("trace.tsv"), trace);
  const auto terms = objective_terms(x, res.bases, lambda);
  json summary;
  summary["lambda"] = lambda;
  summary["objective"] = terms.total();
  summary["residual"] = terms.residual;
  summary["fusion"] = terms.fusion;
  summary["iterations"] = res.trace.iterations;
  summary["stop"] = to_string(res.trace.stop);
  summary["clusters"] = model.k();
  summary["fit_score"] = fit_score(x, model);
  std::ofstream(run.output("summary.json"), std::ios::binary) << summary.dump(2) << '\n';
  std::cout << "clusters " << model.k() << "  objective " << format_double(terms.total()) << "  iterations "
            << res.trace.iterations << " (" << to_string(res.trace.stop) << ")\n";
  return 0;
}

int cmd_path(Run& run) {
  const RunConfig& c = run.cfg();
  const MaskedMatrix x = load_input(c);
  const double scale = default_lambda_scale(x.rows(), x.cols());
  const std::vector<double> grid = c.grid.empty() ? default_lambda_grid(scale) : c.grid;
  run.resolved("lambda_scale", scale);
  run.resolved("grid", grid);
  const FscConfig solver = c.solver(0.0);
  const PathOptions po = path_options(c);
  LambdaPathReport report = lambda_path(x, grid, solver, po);
  if (c.adaptive_max) {
    std::optional<BasisSet> from;
    for (auto it = report.entries.rbegin(); it != report.entries.rend(); ++it)
      if (it->ok) {
        from = it->bases;
        break;
      }
    const double start = std::max(2.0 * grid.back(), scale);
    report.entries.push_back(adaptive_lambda_max(x, solver, start, scale * 1048576.0, from, po));
  }
  io::Table table{{"lambda", "lambda_over_scale", "clusters", "objective", "fit_score", "iterations", "status"}, {}};
  for (const auto& e : report.entries)
    table.add({format_double(e.lambda), format_double(e.lambda / scale), std::to_string(e.cluster_count),
               format_double(e.objective), format_double(e.fit_score), std::to_string(e.iterations),
               e.ok ? "ok" : "failed"});
  io::write_table(run.output("path.tsv"), table);
  for (std::size_t k = 0; k < report.entries.size(); ++k)
    if (!report.entries[k].ok) std::cerr << "lambda " << format_double(report.entries[k].lambda) << ": " << report.entries[k].error << "\n";
  const Selection sel = select_model(report, x, c.threads);
  io::write_labels(run.output("labels.txt"), sel.model.labels);
  write_cluster_bases(run, sel.model);
  run.resolved("selected_lambda", sel.lambda);
  std::cout << "selected lambda " << format_double(sel.lambda) << " with " << sel.model.k() << " clusters\n";
  return 0;
}

int cmd_complete(Run& run) {
  const RunConfig& c = run.cfg();
  const MaskedMatrix x = load_input(c);
  const double lambda = resolve_lambda(c, x);
  run.resolved("lambda", lambda);
  const FscConfig solver = c.solver(lambda);
  Labels labels;
  BasisSet bases;
  if (!c.labels.empty()) {
    labels = io::read_labels(c.labels);
    if (static_cast<Index>(labels.size()) != x.cols())
      throw LengthMismatch(c.labels + " has " + std::to_string(labels.size()) + " labels for " +
                           std::to_string(x.cols()) + " columns");
    bases = fit_within_clusters(x, labels, solver);
  } else {
    bases = fit(x, solver).bases;
    labels = labels_for(bases, c);
  }
  const auto res = complete_matrix(x, bases, labels, !c.smooth, c.threads);
  io::write_matrix_csv(run.output("completed.csv"), res.completed);
  io::write_labels(run.output("labels.txt"), labels);
  write_cluster_bases(run, res.model);
  std::cout << "completed " << x.rows() * x.cols() - x.observed_count() << " missing entries using "
            << res.model.k() << " clusters\n";
  return 0;
}

int cmd_eval(Run& run) {
  const RunConfig& c = run.cfg();
  if (c.labels.empty() || c.truth.empty()) throw InvalidParams("eval needs --labels and --truth");
  const Labels pred = io::read_labels(c.labels);
  const Labels truth = io::read_labels(c.truth);
  json result;
  const double err = clustering_error(pred, truth);
  result["clustering_error"] = err;
  std::cout << "clustering_error " << format_double(err) << "\n";
  run.resolved("clustering_error", err);
  std::ofstream(run.output("eval.json"), std::ios::binary) << result.dump(2) << '\n';
  return 0;
}

int exit_code(const Error& e) { return e.kind() == ErrorKind::kNumerical ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fusion subspace clustering"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string config_path;
  std::vector<std::pair<CLI::App*, Binder>> subs;

  auto make = [&](const std::string& name, const std::string& desc) -> Binder& {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config or manifest to start from");
    subs.emplace_back(sub, Binder(sub, flags));
    Binder& b = subs.back().second;
    add_common(b);
    return b;
  };
  subs.reserve(5);

  Binder& synth = make("synth", "generate a synthetic union-of-subspaces instance");
  synth.opt("--d", &RunConfig::d, "ambient dimension");
  synth.opt("--clusters", &RunConfig::clusters, "number of subspaces");
  synth.opt("--r-true", &RunConfig::r_true, "subspace dimension");
  synth.opt("--nk", &RunConfig::n_per_cluster, "points per subspace");
  synth.opt("--sigma", &RunConfig::sigma, "noise standard deviation");
  synth.opt("--p", &RunConfig::p, "observation probability");

  for (const char* name : {"fit", "path", "complete"}) {
    Binder& b = make(name, std::string(name) == "fit"    ? "fit one basis per column and cluster them"
                           : std::string(name) == "path" ? "sweep lambda and select a model"
                                                         : "complete missing entries");
    subs.back().first->add_option("input", flags.input, "CSV matrix (rows = dimensions, columns = points)");
    add_solver(b);
    if (std::string(name) == "path") {
      b.opt("--grid", &RunConfig::grid, "lambda values (ascending)")->delimiter(',');
      b.flag("--adaptive-max", &RunConfig::adaptive_max, "append a lambda doubled until all bases fuse");
    }
    if (std::string(name) == "complete") {
      b.opt("--labels", &RunConfig::labels, "known labels; clusters are then fitted separately");
      b.flag("--smooth", &RunConfig::smooth, "replace observed entries with the model fit too");
    }
  }
  // The positional input is shared by fit/path/complete; overlay it by hand.

  Binder& eval = make("eval", "compare predicted labels with the truth");
  eval.opt("--labels", &RunConfig::labels, "predicted labels");
  eval.opt("--truth", &RunConfig::truth, "true labels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    for (auto& [sub, binder] : subs) {
      if (!sub->parsed()) continue;
      RunConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ParseError(config_path + ": cannot open");
        json j;
        try {
          j = json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw ParseError(config_path + ": " + e.what());
        }
        cli::apply_json(j, cfg);
      }
      binder.overlay(cfg);
      if (auto* in = sub->get_option_no_throw("input"); in && in->count() > 0) cfg.input = flags.input;
      cfg.command = sub->get_name();
      Run run(cfg);
      int rc = 0;
      if (cfg.command == "synth") rc = cmd_synth(run);
      if (cfg.command == "fit") rc = cmd_fit(run);
      if (cfg.command == "path") rc = cmd_path(run);
      if (cfg.command == "complete") rc = cmd_complete(run);
      if (cfg.command == "eval") rc = cmd_eval(run);
      run.write_manifest();
      return rc;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
