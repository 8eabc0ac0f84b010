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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gmfg/engine.hpp"
#include "gmfg/experiment.hpp"
#include "gmfg/sim.hpp"
#include "gmfg/sis.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw gmfg::ConfigError("config error: cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write file '" + path + "'");
  f << text;
}

gmfg::ExperimentConfig load_config(const std::string& path) {
  return gmfg::config_from_json_text(read_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphon mean-field game laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path, model_path;
  uint64_t seed = 1;
  int threads = 1;
  double tol = 1e-7;
  int max_iter = 500;
  bool seed_given = false, pooled = false, unknown = false;
  int n_agents = 0, episodes = 0;
  std::string scheme = "known_grid";

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "experiment config path")->required();
  run->add_option("--out", out_path, "override output path prefix");
  run->add_option("--seed", seed, "run a single seed instead of the config list")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--threads", threads, "parallel seeds");

  auto* ne = app.add_subcommand("ne", "fixed-point reference equilibrium");
  ne->add_option("--config", config_path, "experiment config path")->required();
  ne->add_option("--tol", tol, "flow residual tolerance");
  ne->add_option("--max-iter", max_iter, "iteration cap");

  auto* simulate = app.add_subcommand("simulate", "emit a sampled-agent dataset");
  simulate->add_option("--config", config_path, "experiment config path")->required();
  simulate->add_option("--out", out_path, "dataset output path")->required();
  simulate->add_option("--seed", seed, "simulation seed");
  simulate->add_option("--n", n_agents, "override sampled agent count");
  simulate->add_option("--l", episodes, "override episode count");
  simulate->add_option("--scheme", scheme, "known_grid|known_random");

  auto* fit_cmd = app.add_subcommand("fit", "estimate a model from a dataset file");
  fit_cmd->add_option("--config", config_path, "experiment config path")->required();
  fit_cmd->add_option("--data", data_path, "dataset JSON path")->required();
  fit_cmd->add_option("--out", out_path, "fitted model output path")->required();
  fit_cmd->add_flag("--pooled", pooled, "pool peer states over episodes");
  fit_cmd->add_flag("--unknown", unknown, "treat positions as unknown (N! search)");

  auto* risk_cmd = app.add_subcommand("risk", "evaluate risks of a saved model");
  risk_cmd->add_option("--config", config_path, "experiment config path")->required();
  risk_cmd->add_option("--model-file", model_path, "fitted model JSON path")->required();
  risk_cmd->add_option("--n", n_agents, "agent count for the position grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      gmfg::ExperimentConfig cfg = load_config(config_path);
      if (!out_path.empty()) cfg.out = out_path;
      if (seed_given) cfg.seeds = {seed};
      gmfg::ExperimentResult res = gmfg::run_experiment(cfg, threads);
      std::printf("wrote %s\n", res.aggregate_csv_path.c_str());
      for (const auto& p : res.seed_csv_paths) std::printf("wrote %s\n", p.c_str());
      return kExitOk;
    }
    if (ne->parsed()) {
      gmfg::ExperimentConfig cfg = load_config(config_path);
      gmfg::GmfgModel model = gmfg::make_sis_model(cfg.graphon, cfg.horizon, cfg.mu1);
      gmfg::NeResult res = gmfg::find_ne_fixed_point(model, cfg.lambda, tol, max_iter,
                                                     cfg.grid_cells, cfg.ref_damping);
      std::printf("iterations=%d residual_d=%.6g exploitability=%.6g converged=%s\n",
                  res.iterations, res.residual_d, res.exploitability,
                  res.converged ? "yes" : "no");
      return res.converged ? kExitOk : kExitNumeric;
    }
    if (simulate->parsed()) {
      gmfg::ExperimentConfig cfg = load_config(config_path);
      gmfg::GmfgModel model = gmfg::make_sis_model(cfg.graphon, cfg.horizon, cfg.mu1);
      gmfg::SimRequest req;
      req.kind = gmfg::SimRequest::Kind::kSelfInduced;
      req.policy = gmfg::PolicyProfile::uniform(cfg.grid_cells, cfg.horizon,
                                                model.space.num_states(),
                                                model.space.num_actions());
      int n = n_agents > 0 ? n_agents : cfg.num_agents;
      if (scheme == "known_random") {
        gmfg::Stream stream(gmfg::derive_key(seed, 0x9a6e));
        req.scheme = gmfg::PositionScheme::known_random(n, stream);
      } else if (scheme == "known_grid") {
        req.scheme = gmfg::PositionScheme::known_grid(n);
      } else {
        throw gmfg::ConfigError("config error: field 'scheme' must be known_grid|known_random");
      }
      req.episodes = episodes > 0 ? episodes : cfg.episodes;
      req.seed = seed;
      gmfg::Dataset data = gmfg::rollout(req, model);
      write_file(out_path, gmfg::dataset_to_json(data, model.space));
      std::printf("wrote %s\n", out_path.c_str());
      return kExitOk;
    }
    if (fit_cmd->parsed()) {
      gmfg::ExperimentConfig cfg = load_config(config_path);
      gmfg::GmfgModel model = gmfg::make_sis_model(cfg.graphon, cfg.horizon, cfg.mu1);
      gmfg::Dataset data = gmfg::dataset_from_json(read_file(data_path), model.space);
      gmfg::CandidateSet cands = cfg.candidates;
      if (cands.graphons.empty()) {
        throw gmfg::ConfigError("config error: field 'candidates' must be nonempty for fit");
      }
      gmfg::FitOptions opts;
      opts.pooled = pooled;
      gmfg::EstimatedModel est = unknown ? gmfg::fit_unknown(data, model.space, cands, opts)
                                         : gmfg::fit(data, model.space, cands, opts);
      write_file(out_path, gmfg::estimated_model_to_json(est));
      std::printf("selected candidate %d (%s)\n", est.selected_overall,
                  cands.graphons[est.selected_overall].describe().c_str());
      std::printf("wrote %s\n", out_path.c_str());
      return kExitOk;
    }
    if (risk_cmd->parsed()) {
      gmfg::ExperimentConfig cfg = load_config(config_path);
      gmfg::GmfgModel model = gmfg::make_sis_model(cfg.graphon, cfg.horizon, cfg.mu1);
      gmfg::EstimatedModel est = gmfg::estimated_model_from_json(read_file(model_path));
      int n = n_agents > 0 ? n_agents : cfg.num_agents;
      gmfg::PositionScheme pos = gmfg::PositionScheme::known_grid(n);
      std::vector<gmfg::PolicyProfile> behaviors = {gmfg::PolicyProfile::uniform(
          cfg.grid_cells, cfg.horizon, model.space.num_states(), model.space.num_actions())};
      double cond = gmfg::model_risk_conditional(est, model, behaviors, pos);
      double pop = 0.0;
      for (int h = 0; h < est.horizon; ++h) {
        pop += gmfg::risk_population(gmfg::predictor_from_model(est, h), est.graphons[h], model,
                                     behaviors, cfg.grid_cells, h);
      }
      pop /= est.horizon;
      std::printf("conditional_risk=%.12g population_risk=%.12g\n", cond, pop);
      return kExitOk;
    }
  } catch (const gmfg::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitConfig;
}
