// Copyright 2026 The graphon-mfg-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gmfg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "gmfg/engine.hpp"
#include "gmfg/json_util.hpp"
#include "gmfg/sim.hpp"
#include "gmfg/sis.hpp"
#include "json.hpp"

namespace gmfg {

using nlohmann::json;

NeResult find_ne_fixed_point(const GmfgModel& model, double lambda, double tol, int max_iter,
                             int cells, double damping) {
  if (!(lambda > 0.0)) throw std::invalid_argument("fixed point needs lambda > 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0,1]");
  NeResult res;
  PolicyProfile uniform = PolicyProfile::uniform(cells, model.horizon, model.space.num_states(),
                                                 model.space.num_actions());
  DistributionFlow bar = gamma2(uniform, model);
  double expl_tol = 10.0 * tol;
  for (int it = 1; it <= max_iter; ++it) {
    SoftOptimal best = soft_optimal_policy(bar, model, lambda);
    DistributionFlow induced = gamma2(best.policy, model);
    res.iterations = it;
    res.residual_d = distance_d(induced, bar);
    res.exploitability = exploitability(best.policy, model, lambda);
    if (res.exploitability < expl_tol) {
      res.policy = std::move(best.policy);
      res.flow = std::move(induced);
      res.converged = true;
      return res;
    }
    // damped fictitious-play style update of the environment flow
    auto& b = bar.raw();
    const auto& f = induced.raw();
    for (size_t k = 0; k < b.size(); ++k) b[k] = (1.0 - damping) * b[k] + damping * f[k];
    res.policy = std::move(best.policy);
    res.flow = std::move(induced);
  }
  res.converged = false;
  return res;
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw ConfigError("config error: field 'horizon' must be >= 1");
  if (grid_cells < 1) throw ConfigError("config error: field 'grid_m' must be >= 1");
  if (!(lambda > 0.0)) throw ConfigError("config error: field 'lambda' must be > 0");
  if (mu1.size() != 2) throw ConfigError("config error: field 'mu1' must have two entries");
  double sum = mu1[0] + mu1[1];
  if (mu1[0] < 0.0 || mu1[1] < 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("config error: field 'mu1' must be a distribution");
  }
  if (schedules.iterations < 0) throw ConfigError("config error: field 'schedules.iterations' must be >= 0");
  if (!(schedules.eta > 0.0)) throw ConfigError("config error: field 'schedules.eta' must be > 0");
  if (oracle != "exact" && oracle != "algorithm2" && oracle != "empirical" && oracle != "constant") {
    throw ConfigError("config error: field 'oracle.kind' must be one of exact|algorithm2|empirical|constant");
  }
  if (oracle == "constant" && !(constant_p >= 0.0 && constant_p <= 1.0)) {
    throw ConfigError("config error: field 'oracle.p' must lie in [0,1]");
  }
  if (oracle == "algorithm2" || oracle == "empirical") {
    if (num_agents < 2) throw ConfigError("config error: field 'oracle.n' must be >= 2");
    if (episodes < 1) throw ConfigError("config error: field 'oracle.l' must be >= 1");
    if (scheme != "known_grid" && scheme != "known_random") {
      throw ConfigError("config error: field 'oracle.scheme' must be known_grid|known_random");
    }
  }
  if (oracle == "algorithm2" && candidates.graphons.empty()) {
    throw ConfigError("config error: field 'candidates' must be nonempty for algorithm2");
  }
  if (!(candidates.ridge > 0.0)) throw ConfigError("config error: field 'ridge' must be > 0");
  if (seeds.empty()) throw ConfigError("config error: field 'seeds' must be nonempty");
  if (out.empty()) throw ConfigError("config error: field 'out' must be a path prefix");
}

namespace {

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("config error: missing field '" + where + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config error: field '" + where + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  json jm = require<json>(j, "model", "");
  try {
    cfg.graphon = graphon_from_json(require<json>(jm, "graphon", "model."));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config error: field 'model.graphon': ") + e.what());
  }
  cfg.horizon = optional_field(jm, "horizon", 50);
  cfg.mu1 = optional_field(jm, "mu1", std::vector<double>{0.5, 0.5});
  cfg.lambda = optional_field(jm, "lambda", 1.0);
  cfg.grid_cells = optional_field(j, "grid_m", 16);
  if (j.contains("schedules")) {
    const json& js = j.at("schedules");
    cfg.schedules.iterations = require<int>(js, "iterations", "schedules.");
    cfg.schedules.c_alpha = optional_field(js, "c_alpha", 1.0);
    cfg.schedules.c_beta = optional_field(js, "c_beta", 1.0);
    cfg.schedules.eta = optional_field(js, "eta", 1.0);
  }
  cfg.schedules.lambda = cfg.lambda;
  json jo = require<json>(j, "oracle", "");
  cfg.oracle = require<std::string>(jo, "kind", "oracle.");
  cfg.constant_p = optional_field(jo, "p", 0.5);
  cfg.num_agents = optional_field(jo, "n", 7);
  cfg.episodes = optional_field(jo, "l", 125);
  cfg.scheme = optional_field(jo, "scheme", std::string("known_grid"));
  cfg.reestimate = optional_field(jo, "reestimate", false);
  cfg.behavior_uniform_mix = optional_field(jo, "behavior_uniform_mix", 1.0);
  if (j.contains("candidates")) {
    for (const auto& jg : j.at("candidates")) {
      try {
        cfg.candidates.graphons.push_back(graphon_from_json(jg));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: field 'candidates': ") + e.what());
      }
    }
  }
  cfg.candidates.ridge = optional_field(j, "ridge", 1e-3);
  if (j.contains("bandwidth")) cfg.candidates.bandwidth = j.at("bandwidth").get<double>();
  cfg.seeds = optional_field(j, "seeds", std::vector<uint64_t>{1, 2, 3, 4, 5});
  cfg.out = require<std::string>(j, "out", "");
  cfg.reference = optional_field(j, "reference", true);
  cfg.ref_tol = optional_field(j, "ref_tol", 1e-7);
  cfg.ref_max_iter = optional_field(j, "ref_max_iter", 500);
  cfg.ref_damping = optional_field(j, "ref_damping", 0.5);
  cfg.validate();
  return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["model"] = {{"graphon", graphon_to_json(cfg.graphon)},
                {"horizon", cfg.horizon},
                {"mu1", cfg.mu1},
                {"lambda", cfg.lambda}};
  j["grid_m"] = cfg.grid_cells;
  j["schedules"] = {{"iterations", cfg.schedules.iterations},
                    {"c_alpha", cfg.schedules.c_alpha},
                    {"c_beta", cfg.schedules.c_beta},
                    {"eta", cfg.schedules.eta}};
  json jo = {{"kind", cfg.oracle}};
  jo["p"] = cfg.constant_p;
  jo["n"] = cfg.num_agents;
  jo["l"] = cfg.episodes;
  jo["scheme"] = cfg.scheme;
  jo["reestimate"] = cfg.reestimate;
  jo["behavior_uniform_mix"] = cfg.behavior_uniform_mix;
  j["oracle"] = std::move(jo);
  json cands = json::array();
  for (const Graphon& g : cfg.candidates.graphons) cands.push_back(graphon_to_json(g));
  j["candidates"] = std::move(cands);
  j["ridge"] = cfg.candidates.ridge;
  if (cfg.candidates.bandwidth) j["bandwidth"] = *cfg.candidates.bandwidth;
  j["seeds"] = cfg.seeds;
  j["out"] = cfg.out;
  j["reference"] = cfg.reference;
  j["ref_tol"] = cfg.ref_tol;
  j["ref_max_iter"] = cfg.ref_max_iter;
  j["ref_damping"] = cfg.ref_damping;
  return j.dump(2);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  double pos = p * (values.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

SeedResult run_one_seed(const ExperimentConfig& cfg, const GmfgModel& truth,
                        const ReferencePair* reference, uint64_t seed) {
  PpoMetrics metrics;
  metrics.true_model = &truth;
  metrics.lambda = cfg.lambda;
  metrics.reference = reference;

  SeedResult out;
  out.seed = seed;
  int ns = truth.space.num_states();
  int na = truth.space.num_actions();

  if (cfg.oracle == "exact") {
    ExactOracle oracle(truth, cfg.lambda);
    out.history = run_gmfg_ppo(oracle, cfg.schedules, cfg.grid_cells, cfg.horizon, ns, na, &metrics);
  } else if (cfg.oracle == "constant") {
    // assume a homogeneous interaction; optimize against the wrong graphon,
    // measure against the true one
    GmfgModel assumed = with_graphon(truth, Graphon::constant(cfg.constant_p));
    ExactOracle oracle(assumed, cfg.lambda);
    out.history = run_gmfg_ppo(oracle, cfg.schedules, cfg.grid_cells, cfg.horizon, ns, na, &metrics);
  } else if (cfg.oracle == "algorithm2") {
    OracleConfig ocfg;
    ocfg.num_agents = cfg.num_agents;
    ocfg.episodes = cfg.episodes;
    ocfg.scheme = scheme_kind_from_name(cfg.scheme);
    ocfg.candidates = cfg.candidates;
    ocfg.behavior_uniform_mix = cfg.behavior_uniform_mix;
    ocfg.lambda = cfg.lambda;
    ocfg.reestimate = cfg.reestimate;
    ocfg.seed = seed;
    Algorithm2Oracle oracle(ocfg, truth, cfg.mu1);
    out.history = run_gmfg_ppo(oracle, cfg.schedules, cfg.grid_cells, cfg.horizon, ns, na, &metrics);
  } else if (cfg.oracle == "empirical") {
    EmpiricalBaselineOracle oracle(cfg.num_agents, cfg.episodes, cfg.lambda, seed, truth);
    out.history = run_gmfg_ppo(oracle, cfg.schedules, cfg.grid_cells, cfg.horizon, ns, na, &metrics);
  } else {
    throw ConfigError("config error: field 'oracle.kind' unknown: " + cfg.oracle);
  }
  out.final_exploitability = out.history.exploit.empty()
                                 ? exploitability(out.history.final_policy, truth, cfg.lambda)
                                 : out.history.exploit.back();
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  GmfgModel truth = make_sis_model(cfg.graphon, cfg.horizon, cfg.mu1);

  std::optional<ReferencePair> reference;
  if (cfg.reference) {
    NeResult ne = find_ne_fixed_point(truth, cfg.lambda, cfg.ref_tol, cfg.ref_max_iter,
                                      cfg.grid_cells, cfg.ref_damping);
    if (ne.converged) {
      reference = ReferencePair{std::move(ne.policy), std::move(ne.flow)};
    }
    // a non-converged reference just drops the D/d columns
  }

  ExperimentResult result;
  result.per_seed.resize(cfg.seeds.size());
  const ReferencePair* ref = reference ? &*reference : nullptr;

  int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (size_t k = 0; k < cfg.seeds.size(); ++k) {
      result.per_seed[k] = run_one_seed(cfg, truth, ref, cfg.seeds[k]);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < nthreads; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          size_t k = next.fetch_add(1);
          if (k >= cfg.seeds.size()) return;
          result.per_seed[k] = run_one_seed(cfg, truth, ref, cfg.seeds[k]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  std::filesystem::path prefix(cfg.out);
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());

  for (size_t k = 0; k < cfg.seeds.size(); ++k) {
    const SeedResult& sr = result.per_seed[k];
    std::string path = cfg.out + "_seed" + std::to_string(sr.seed) + ".csv";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "iter,exploitability,dist_D,dist_d,seconds\n";
    if (sr.history.seconds.empty()) {
      // T = 0: a single row for the untouched uniform policy
      f << "0," << format_value(sr.final_exploitability) << ",nan,nan,0\n";
    }
    for (size_t t = 0; t < sr.history.seconds.size(); ++t) {
      f << (t + 1) << ',' << format_value(sr.history.exploit.at(t)) << ',';
      if (t < sr.history.dist_D.size()) {
        f << format_value(sr.history.dist_D[t]) << ',' << format_value(sr.history.dist_d[t]);
      } else {
        f << "nan,nan";
      }
      f << ',' << format_value(sr.history.seconds[t]) << '\n';
    }
    result.seed_csv_paths.push_back(path);
  }

  std::string agg_path = cfg.out + "_agg.csv";
  std::ofstream f(agg_path);
  if (!f) throw std::runtime_error("cannot write " + agg_path);
  f << "iter,median_expl,q25_expl,q75_expl\n";
  size_t iters = result.per_seed.empty() ? 0 : result.per_seed.front().history.exploit.size();
  if (iters == 0 && !result.per_seed.empty()) {
    std::vector<double> vals;
    for (const SeedResult& sr : result.per_seed) vals.push_back(sr.final_exploitability);
    f << "0," << format_value(quantile(vals, 0.5)) << ',' << format_value(quantile(vals, 0.25))
      << ',' << format_value(quantile(vals, 0.75)) << '\n';
  }
  for (size_t t = 0; t < iters; ++t) {
    std::vector<double> vals;
    vals.reserve(result.per_seed.size());
    for (const SeedResult& sr : result.per_seed) vals.push_back(sr.history.exploit.at(t));
    f << (t + 1) << ',' << format_value(quantile(vals, 0.5)) << ','
      << format_value(quantile(vals, 0.25)) << ',' << format_value(quantile(vals, 0.75)) << '\n';
  }
  result.aggregate_csv_path = agg_path;
  return result;
}

}  // namespace gmfg
