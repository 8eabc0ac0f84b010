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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmfg/estimation.hpp"
#include "gmfg/ppo.hpp"
#include "gmfg/types.hpp"

namespace gmfg {

/// Thrown on malformed configs; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NeResult {
  PolicyProfile policy;
  DistributionFlow flow;
  bool converged = false;
  int iterations = 0;
  double residual_d = 0.0;     // d(Gamma_2(pi_k), previous flow iterate)
  double exploitability = 0.0;
};

/// Reference NE by damped Gamma_1 o Gamma_2 iteration. Returns the pair
/// (pi, Gamma_2(pi)); converged once the exploitability of the iterate
/// drops below 10 * tol. Non-convergence is reported, never silently
/// returned as an answer.
NeResult find_ne_fixed_point(const GmfgModel& model, double lambda, double tol, int max_iter,
                             int cells, double damping = 0.5);

struct ExperimentConfig {
  // model (SIS with a configurable graphon)
  Graphon graphon = Graphon::exp_family(3.0);
  int horizon = 50;
  std::vector<double> mu1 = {0.5, 0.5};
  double lambda = 1.0;
  int grid_cells = 16;

  Schedules schedules;

  // oracle arm: exact | algorithm2 | empirical | constant
  std::string oracle = "exact";
  double constant_p = 0.5;        // constant arm: assumed graphon value
  int num_agents = 7;
  int episodes = 125;
  std::string scheme = "known_grid";
  bool reestimate = false;
  double behavior_uniform_mix = 1.0;

  CandidateSet candidates;

  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out = "results/run";
  bool reference = true;          // compute the fixed-point reference for D, d
  double ref_tol = 1e-7;
  int ref_max_iter = 500;
  double ref_damping = 0.5;

  void validate() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

struct SeedResult {
  uint64_t seed = 0;
  RunHistory history;
  double final_exploitability = 0.0;
};

struct ExperimentResult {
  std::vector<SeedResult> per_seed;
  std::vector<std::string> seed_csv_paths;
  std::string aggregate_csv_path;
};

/// Runs every seed (optionally in parallel), writes one CSV per seed with
/// header `iter,exploitability,dist_D,dist_d,seconds` and an aggregate CSV
/// with header `iter,median_expl,q25_expl,q75_expl`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// Linear-interpolation quantile of a sample (p in [0,1]).
double quantile(std::vector<double> values, double p);

}  // namespace gmfg
