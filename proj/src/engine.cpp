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

#include "gmfg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmfg {

namespace {

void check_flow_model(const DistributionFlow& flow, const GmfgModel& model) {
  if (flow.horizon() != model.horizon || flow.num_states() != model.space.num_states()) {
    throw std::invalid_argument("flow shape does not match model");
  }
}

void check_policy_model(const PolicyProfile& policy, const GmfgModel& model) {
  if (policy.horizon() != model.horizon || policy.num_states() != model.space.num_states() ||
      policy.num_actions() != model.space.num_actions()) {
    throw std::invalid_argument("policy shape does not match model");
  }
}

// Softmax of x/lambda with the usual max-shift; returns log-normalizer
// lambda * logsumexp(x/lambda) = soft maximum.
double soft_max_into(std::span<const double> x, double lambda, std::span<double> out) {
  double xmax = x[0];
  for (double v : x) xmax = std::max(xmax, v);
  double z = 0.0;
  for (size_t a = 0; a < x.size(); ++a) {
    out[a] = std::exp((x[a] - xmax) / lambda);
    z += out[a];
  }
  for (size_t a = 0; a < x.size(); ++a) out[a] /= z;
  return xmax + lambda * std::log(z);
}

}  // namespace

Aggregate aggregate_at_position(const Graphon& w, const DistributionFlow& flow, double alpha,
                                int h) {
  if (h < 0 || h >= flow.horizon()) throw std::out_of_range("aggregate step out of range");
  AgentGrid grid{flow.cells()};
  int ns = flow.num_states();
  Aggregate z;
  z.mass.assign(ns, 0.0);
  double inv_m = 1.0 / flow.cells();
  for (int j = 0; j < flow.cells(); ++j) {
    double wij = w(alpha, grid.position(j));
    if (wij == 0.0) continue;
    auto mu = flow.slice(j, h);
    for (int s = 0; s < ns; ++s) z.mass[s] += inv_m * wij * mu[s];
  }
  return z;
}

Aggregate compute_aggregate(const Graphon& w, const DistributionFlow& flow, int cell, int h) {
  if (cell < 0 || cell >= flow.cells()) throw std::out_of_range("aggregate cell out of range");
  return aggregate_at_position(w, flow, AgentGrid{flow.cells()}.position(cell), h);
}

namespace {

// Shared forward recursion; `aggregate_source` supplies the flow the
// aggregates are read from (the evolving flow for Gamma_2, a frozen
// reference for Gamma_3).
DistributionFlow propagate(const PolicyProfile& policy, const GmfgModel& model,
                           const DistributionFlow* frozen) {
  int cells = policy.cells();
  int H = model.horizon;
  int ns = model.space.num_states();
  int na = model.space.num_actions();
  DistributionFlow flow(cells, H, ns);
  for (int i = 0; i < cells; ++i) {
    for (int s = 0; s < ns; ++s) flow.at(i, 0, s) = model.initial[s];
  }
  std::vector<double> p(ns);
  for (int h = 0; h + 1 < H; ++h) {
    const DistributionFlow& src = frozen ? *frozen : flow;
    for (int i = 0; i < cells; ++i) {
      Aggregate z = compute_aggregate(model.graphons[h], src, i, h);
      for (int s = 0; s < ns; ++s) {
        double mass = flow.at(i, h, s);
        if (mass == 0.0) continue;
        for (int a = 0; a < na; ++a) {
          double pa = policy.at(i, h, s, a);
          if (pa == 0.0) continue;
          model.transition(h, s, a, z, p);
          for (int sp = 0; sp < ns; ++sp) flow.at(i, h + 1, sp) += mass * pa * p[sp];
        }
      }
    }
  }
  return flow;
}

}  // namespace

DistributionFlow gamma2(const PolicyProfile& policy, const GmfgModel& model) {
  check_policy_model(policy, model);
  return propagate(policy, model, nullptr);
}

DistributionFlow gamma3(const PolicyProfile& policy, const DistributionFlow& ref_flow,
                        const GmfgModel& model) {
  check_policy_model(policy, model);
  check_flow_model(ref_flow, model);
  if (ref_flow.cells() != policy.cells()) throw std::invalid_argument("ref_flow cell count mismatch");
  return propagate(policy, model, &ref_flow);
}

std::pair<QTable, VTable> evaluate_policy(const PolicyProfile& policy,
                                          const DistributionFlow& ref_flow,
                                          const GmfgModel& model, double lambda, int cell) {
  check_policy_model(policy, model);
  check_flow_model(ref_flow, model);
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  int H = model.horizon;
  int ns = model.space.num_states();
  int na = model.space.num_actions();
  QTable q(H, ns, na);
  VTable v(H, ns);
  std::vector<double> p(ns);
  for (int h = H - 1; h >= 0; --h) {
    Aggregate z = compute_aggregate(model.graphons[h], ref_flow, cell, h);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        double qa = model.reward(h, s, a, z);
        if (h + 1 < H) {
          model.transition(h, s, a, z, p);
          for (int sp = 0; sp < ns; ++sp) qa += p[sp] * v.at(h + 1, sp);
        }
        q.at(h, s, a) = qa;
      }
      double val = 0.0;
      for (int a = 0; a < na; ++a) {
        double pa = policy.at(cell, h, s, a);
        if (pa == 0.0) {
          if (lambda > 0.0) {
            throw std::invalid_argument("zero-probability action under lambda > 0");
          }
          continue;
        }
        val += pa * (q.at(h, s, a) - lambda * std::log(pa));
      }
      v.at(h, s) = val;
    }
  }
  return {std::move(q), std::move(v)};
}

std::vector<QTable> evaluate_policy_all(const PolicyProfile& policy,
                                        const DistributionFlow& ref_flow,
                                        const GmfgModel& model, double lambda) {
  std::vector<QTable> out;
  out.reserve(policy.cells());
  for (int i = 0; i < policy.cells(); ++i) {
    out.push_back(evaluate_policy(policy, ref_flow, model, lambda, i).first);
  }
  return out;
}

SoftOptimal soft_optimal_policy(const DistributionFlow& ref_flow, const GmfgModel& model,
                                double lambda) {
  check_flow_model(ref_flow, model);
  if (!(lambda > 0.0)) throw std::invalid_argument("soft optimal policy requires lambda > 0");
  int cells = ref_flow.cells();
  int H = model.horizon;
  int ns = model.space.num_states();
  int na = model.space.num_actions();
  SoftOptimal out;
  out.policy = PolicyProfile(cells, H, ns, na);
  out.values.assign(cells, VTable(H, ns));
  std::vector<double> p(ns), qrow(na);
  for (int i = 0; i < cells; ++i) {
    VTable& v = out.values[i];
    for (int h = H - 1; h >= 0; --h) {
      Aggregate z = compute_aggregate(model.graphons[h], ref_flow, i, h);
      for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
          double qa = model.reward(h, s, a, z);
          if (h + 1 < H) {
            model.transition(h, s, a, z, p);
            for (int sp = 0; sp < ns; ++sp) qa += p[sp] * v.at(h + 1, sp);
          }
          qrow[a] = qa;
        }
        v.at(h, s) = soft_max_into(qrow, lambda, out.policy.slice(i, h, s));
      }
    }
  }
  return out;
}

double exploitability(const PolicyProfile& policy, const GmfgModel& model, double lambda) {
  DistributionFlow flow = gamma2(policy, model);
  SoftOptimal best = soft_optimal_policy(flow, model, lambda);
  int ns = model.space.num_states();
  double total = 0.0;
  for (int i = 0; i < policy.cells(); ++i) {
    auto [q, v] = evaluate_policy(policy, flow, model, lambda, i);
    double gap = 0.0;
    for (int s = 0; s < ns; ++s) gap += model.initial[s] * (best.values[i].at(0, s) - v.at(0, s));
    total += gap;
  }
  return total / policy.cells();
}

double distance_D(const PolicyProfile& a, const PolicyProfile& b, const DistributionFlow& ref_flow) {
  if (!a.same_shape(b)) throw std::invalid_argument("policy shape mismatch");
  if (ref_flow.cells() != a.cells() || ref_flow.horizon() != a.horizon() ||
      ref_flow.num_states() != a.num_states()) {
    throw std::invalid_argument("ref_flow shape mismatch");
  }
  double total = 0.0;
  for (int i = 0; i < a.cells(); ++i) {
    for (int h = 0; h < a.horizon(); ++h) {
      for (int s = 0; s < a.num_states(); ++s) {
        double l1 = 0.0;
        for (int act = 0; act < a.num_actions(); ++act) {
          l1 += std::abs(a.at(i, h, s, act) - b.at(i, h, s, act));
        }
        total += ref_flow.at(i, h, s) * l1;
      }
    }
  }
  return total / a.cells();
}

double distance_d(const DistributionFlow& a, const DistributionFlow& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("flow shape mismatch");
  double total = 0.0;
  for (int i = 0; i < a.cells(); ++i) {
    for (int h = 0; h < a.horizon(); ++h) {
      for (int s = 0; s < a.num_states(); ++s) total += std::abs(a.at(i, h, s) - b.at(i, h, s));
    }
  }
  return total / a.cells();
}

Graphon apply_block_bijection(const Graphon& w, const std::vector<int>& perm) {
  return w.permuted(perm);
}

PolicyProfile apply_block_bijection(const PolicyProfile& p, const std::vector<int>& perm) {
  check_block_bijection(perm);
  if (static_cast<int>(perm.size()) != p.cells()) {
    throw std::invalid_argument("permutation size must equal cell count");
  }
  PolicyProfile out(p.cells(), p.horizon(), p.num_states(), p.num_actions());
  for (int i = 0; i < p.cells(); ++i) {
    for (int h = 0; h < p.horizon(); ++h) {
      for (int s = 0; s < p.num_states(); ++s) {
        for (int a = 0; a < p.num_actions(); ++a) {
          out.at(i, h, s, a) = p.at(perm[i], h, s, a);
        }
      }
    }
  }
  return out;
}

DistributionFlow apply_block_bijection(const DistributionFlow& f, const std::vector<int>& perm) {
  check_block_bijection(perm);
  if (static_cast<int>(perm.size()) != f.cells()) {
    throw std::invalid_argument("permutation size must equal cell count");
  }
  DistributionFlow out(f.cells(), f.horizon(), f.num_states());
  for (int i = 0; i < f.cells(); ++i) {
    for (int h = 0; h < f.horizon(); ++h) {
      for (int s = 0; s < f.num_states(); ++s) out.at(i, h, s) = f.at(perm[i], h, s);
    }
  }
  return out;
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
  check_block_bijection(perm);
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

}  // namespace gmfg
