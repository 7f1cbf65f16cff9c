#pragma once

// Serializable settings of one command-line run.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsc/error.hpp"
#include "fsc/optimizer.hpp"

namespace fsc::cli {

using json = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  // IO
  std::string input;
  std::string mask;
  std::string labels;  // complete: known labels; eval: predicted labels
  std::string truth;   // eval: true labels
  std::string out;
  // solver
  std::optional<double> lambda;  // unset: 1 / (n d)
  Index rank = 1;
  std::optional<Index> k;
  std::uint64_t seed = 0;
  int max_iters = 2000;
  double tol = 1e-8;
  double step0 = 1e-2;
  int reorth_period = 1;
  double ridge = 0.0;
  std::string init = "random";  // random | seeded
  double fuse_tol = 1e-3;
  unsigned threads = 1;
  // complete
  bool smooth = false;
  // path
  std::vector<double> grid;  // empty: default grid around 1 / (n d)
  bool adaptive_max = false;
  // synth
  Index d = 100;
  Index clusters = 4;
  Index r_true = 5;
  Index n_per_cluster = 20;
  double sigma = 0.0;
  double p = 1.0;

  FscConfig solver(double resolved_lambda) const {
    FscConfig c;
    c.lambda = resolved_lambda;
    c.rank = rank;
    c.max_iters = max_iters;
    c.tol_rel = tol;
    c.step0 = step0;
    c.reorth_period = reorth_period;
    c.ridge = ridge;
    c.seed = seed;
    c.threads = threads;
    if (init == "random")
      c.init = InitKind::kRandomGaussian;
    else if (init == "seeded")
      c.init = InitKind::kColumnSeeded;
    else
      throw InvalidParams("init must be 'random' or 'seeded', got '" + init + "'");
    c.validate();
    return c;
  }
};

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["mask"] = c.mask;
  j["labels"] = c.labels;
  j["truth"] = c.truth;
  j["out"] = c.out;
  j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  j["rank"] = c.rank;
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  j["seed"] = c.seed;
  j["max_iters"] = c.max_iters;
  j["tol"] = c.tol;
  j["step0"] = c.step0;
  j["reorth_period"] = c.reorth_period;
  j["ridge"] = c.ridge;
  j["init"] = c.init;
  j["fuse_tol"] = c.fuse_tol;
  j["threads"] = c.threads;
  j["smooth"] = c.smooth;
  j["grid"] = c.grid;
  j["adaptive_max"] = c.adaptive_max;
  j["d"] = c.d;
  j["clusters"] = c.clusters;
  j["r_true"] = c.r_true;
  j["n_per_cluster"] = c.n_per_cluster;
  j["sigma"] = c.sigma;
  j["p"] = c.p;
  return j;
}

namespace detail {

template <class T>
void take(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <class T>
void take(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    field.reset();
    return;
  }
  T v{};
  take(j, key, v);
  field = v;
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`. Accepts either a bare config
/// object or a run manifest (whose "config" member is used).
inline void apply_json(const json& in, RunConfig& c) {
  const json& j = in.contains("config") && in.at("config").is_object() ? in.at("config") : in;
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  static const char* known[] = {"command", "input",   "mask",     "labels",  "truth",         "out",
                                "lambda",  "rank",    "k",        "seed",    "max_iters",     "tol",
                                "step0",   "reorth_period", "ridge", "init", "fuse_tol",      "threads",
                                "smooth",  "grid",    "adaptive_max", "d",   "clusters",      "r_true",
                                "n_per_cluster", "sigma", "p"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ParseError("unknown config key '" + it.key() + "'");
  }
  using detail::take;
  take(j, "command", c.command);
  take(j, "input", c.input);
  take(j, "mask", c.mask);
  take(j, "labels", c.labels);
  take(j, "truth", c.truth);
  take(j, "out", c.out);
  take(j, "lambda", c.lambda);
  take(j, "rank", c.rank);
  take(j, "k", c.k);
  take(j, "seed", c.seed);
  take(j, "max_iters", c.max_iters);
  take(j, "tol", c.tol);
  take(j, "step0", c.step0);
  take(j, "reorth_period", c.reorth_period);
  take(j, "ridge", c.ridge);
  take(j, "init", c.init);
  take(j, "fuse_tol", c.fuse_tol);
  take(j, "threads", c.threads);
  take(j, "smooth", c.smooth);
  take(j, "grid", c.grid);
  take(j, "adaptive_max", c.adaptive_max);
  take(j, "d", c.d);
  take(j, "clusters", c.clusters);
  take(j, "r_true", c.r_true);
  take(j, "n_per_cluster", c.n_per_cluster);
  take(j, "sigma", c.sigma);
  take(j, "p", c.p);
}

inline RunConfig from_json(const json& j) {
  RunConfig c;
  apply_json(j, c);
  return c;
}

}  // namespace fsc::cli
