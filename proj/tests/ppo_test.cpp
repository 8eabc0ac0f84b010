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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gmfg/engine.hpp"
#include "gmfg/ppo.hpp"
#include "gmfg/sis.hpp"
#include "test_util.hpp"

using namespace gmfg;
using gmfg::test::random_policy;
using gmfg::test::random_simplex;

namespace {

// Proximal objective the closed-form update maximizes:
//   eta [ <q, p> - lambda <p, log p> ] - KL(p || pi)
double mirror_objective(std::span<const double> p, std::span<const double> pi,
                        std::span<const double> q, double eta, double lambda) {
  double value = 0.0;
  for (size_t a = 0; a < p.size(); ++a) {
    double lp = p[a] > 0.0 ? std::log(p[a]) : 0.0;  // 0 log 0 = 0
    value += eta * (q[a] * p[a] - lambda * p[a] * lp);
    if (p[a] > 0.0) value -= p[a] * std::log(p[a] / pi[a]);
  }
  return value;
}

class RecordingOracle : public Oracle {
 public:
  RecordingOracle(const GmfgModel& m, double lambda) : inner_(m, lambda) {}
  DistributionFlow estimate_flow(const PolicyProfile& p) override {
    return inner_.estimate_flow(p);
  }
  std::vector<QTable> estimate_q(const PolicyProfile& p, const DistributionFlow& f) override {
    iterates.push_back(p);
    bar_flows.push_back(f);
    return inner_.estimate_q(p, f);
  }
  std::vector<PolicyProfile> iterates;  // pi_t, one per iteration
  std::vector<DistributionFlow> bar_flows;

 private:
  ExactOracle inner_;
};

}  // namespace

TEST_CASE("mirror step keeps a uniform policy uniform under constant Q") {
  std::vector<double> pi = {0.5, 0.5}, q = {3.0, 3.0};
  auto out = mirror_descent_step(pi, q, 0.7, 1.0);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("mirror step is invariant to shifting Q by a constant") {
  std::vector<double> pi = {0.3, 0.2, 0.5}, q = {1.0, -2.0, 0.5};
  std::vector<double> q_shift = {6.0, 3.0, 5.5};
  auto a = mirror_descent_step(pi, q, 1.3, 0.8);
  auto b = mirror_descent_step(pi, q_shift, 1.3, 0.8);
  for (int k = 0; k < 3; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
}

TEST_CASE("mirror step with unit lambda-eta takes a square root") {
  std::vector<double> pi = {0.8, 0.2}, q = {0.0, 0.0};
  auto out = mirror_descent_step(pi, q, 1.0, 1.0);  // exponent 1/(1+1) = 1/2
  CHECK(out[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("mirror step rejects zero policy entries") {
  std::vector<double> pi = {1.0, 0.0}, q = {0.0, 0.0};
  std::vector<double> out(2);
  CHECK_THROWS_AS(mirror_descent_step(pi, q, 1.0, 1.0, out), std::invalid_argument);
}

TEST_CASE("mirror step attains the proximal objective against a simplex grid") {
  Stream stream(99);
  for (int rep = 0; rep < 20; ++rep) {
    auto pi = random_simplex(stream, 2);
    std::vector<double> q = {stream.uniform(-4.0, 4.0), stream.uniform(-4.0, 4.0)};
    double eta = stream.uniform(0.2, 3.0);
    double lambda = stream.uniform(0.2, 3.0);
    auto closed = mirror_descent_step(pi, q, eta, lambda);
    double value = mirror_objective(closed, pi, q, eta, lambda);
    double best_grid = -1e300;
    for (int k = 0; k <= 1000; ++k) {
      std::vector<double> p = {k / 1000.0, 1.0 - k / 1000.0};
      best_grid = std::max(best_grid, mirror_objective(p, pi, q, eta, lambda));
    }
    CHECK(value >= best_grid - 1e-10);
    CHECK(value - best_grid <= 0.01 * (1.0 + eta * lambda) + 1e-9);
  }
}

TEST_CASE("uniform mixing endpoints and floor") {
  Stream stream(7);
  PolicyProfile pi = random_policy(stream, 3, 4, 2, 2);
  PolicyProfile same = mix_uniform(pi, 0.0);
  for (size_t k = 0; k < pi.raw().size(); ++k) CHECK(same.raw()[k] == pi.raw()[k]);
  PolicyProfile uni = mix_uniform(pi, 1.0);
  for (double p : uni.raw()) CHECK(p == doctest::Approx(0.5).epsilon(1e-14));
  PolicyProfile deterministic(1, 1, 1, 2);
  deterministic.at(0, 0, 0, 0) = 1.0;
  PolicyProfile mixed = mix_uniform(deterministic, 0.1);
  CHECK(mixed.at(0, 0, 0, 0) == doctest::Approx(0.95).epsilon(1e-14));
  CHECK(mixed.at(0, 0, 0, 1) == doctest::Approx(0.05).epsilon(1e-14));
  double beta = 0.2;
  PolicyProfile floored = mix_uniform(pi, beta);
  CHECK(floored.min_prob() >= beta / 2.0);
}

TEST_CASE("flow mixing endpoints and arithmetic") {
  DistributionFlow bar = gmfg::test::constant_flow(2, 3, {1.0, 0.0});
  DistributionFlow next = gmfg::test::constant_flow(2, 3, {0.0, 1.0});
  DistributionFlow all_new = mix_flow(bar, next, 1.0);
  CHECK(distance_d(all_new, next) == 0.0);
  DistributionFlow same = mix_flow(bar, bar, 0.4);
  CHECK(distance_d(same, bar) == 0.0);
  DistributionFlow quarter = mix_flow(bar, next, 0.25);
  for (int i = 0; i < 2; ++i) {
    for (int h = 0; h < 3; ++h) {
      CHECK(quarter.at(i, h, 0) == doctest::Approx(0.75).epsilon(1e-14));
      CHECK(quarter.at(i, h, 1) == doctest::Approx(0.25).epsilon(1e-14));
    }
  }
  quarter.validate();
  CHECK_THROWS_AS(mix_flow(bar, next, 0.0), std::invalid_argument);
}

TEST_CASE("schedule defaults follow the prescribed rates and clip for small T") {
  Schedules s;
  s.iterations = 200;
  CHECK(s.alpha(1) == doctest::Approx(std::pow(200.0, -2.0 / 3.0)));
  CHECK(s.beta(1) == doctest::Approx(1.0 / 200.0));
  Schedules tiny;
  tiny.iterations = 1;
  CHECK(tiny.alpha(1) == 1.0);
  CHECK(tiny.beta(1) == 0.5);
  Schedules bad;
  bad.iterations = 10;
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("the analysis step size is positive and shrinks with the horizon") {
  double eta_h2 = Schedules::theory_eta(1.0, 2, 2);
  CHECK(eta_h2 == doctest::Approx(1.0).epsilon(1e-12));  // the gamma^{H-2} factor is 1
  double eta_h6 = Schedules::theory_eta(1.0, 6, 2);
  CHECK(eta_h6 > 0.0);
  CHECK(eta_h6 < 1e-2);
  // realistic horizons underflow; the preset clamps at a positive floor
  CHECK(Schedules::theory_eta(1.0, 50, 2) >= 1e-300);
}

TEST_CASE("a single iteration produces exactly the documented update") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 4);
  Schedules sched;
  sched.iterations = 1;
  sched.eta = 1.0;
  sched.lambda = 1.0;
  ExactOracle oracle(m, 1.0);
  RunHistory hist = run_gmfg_ppo(oracle, sched, 3, 4, 2, 2);
  CHECK(hist.seconds.size() == 1);

  PolicyProfile pi1 = PolicyProfile::uniform(3, 4, 2, 2);
  DistributionFlow bar1 = gamma2(pi1, m);
  auto q1 = evaluate_policy_all(pi1, bar1, m, 1.0);
  PolicyProfile expect = mix_uniform(mirror_descent_step(pi1, q1, 1.0, 1.0), sched.beta(2));
  for (size_t k = 0; k < expect.raw().size(); ++k) {
    CHECK(hist.final_policy.raw()[k] == doctest::Approx(expect.raw()[k]).epsilon(1e-13));
  }
  // the averaged policy over a single iterate is that iterate
  for (size_t k = 0; k < pi1.raw().size(); ++k) {
    CHECK(hist.averaged_policy.raw()[k] == pi1.raw()[k]);
  }
}

TEST_CASE("iterates respect the uniform-mixing floor and average exactly") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 5);
  Schedules sched;
  sched.iterations = 12;
  RecordingOracle oracle(m, sched.lambda);
  RunHistory hist = run_gmfg_ppo(oracle, sched, 4, 5, 2, 2);
  REQUIRE(oracle.iterates.size() == 12);
  double beta = sched.beta(1);
  for (size_t t = 1; t < oracle.iterates.size(); ++t) {
    CHECK(oracle.iterates[t].min_prob() >= beta / 2.0 - 1e-15);
  }
  PolicyProfile mean(4, 5, 2, 2);
  for (const PolicyProfile& it : oracle.iterates) {
    for (size_t k = 0; k < mean.raw().size(); ++k) mean.raw()[k] += it.raw()[k] / 12.0;
  }
  for (size_t k = 0; k < mean.raw().size(); ++k) {
    CHECK(hist.averaged_policy.raw()[k] == doctest::Approx(mean.raw()[k]).epsilon(1e-12));
  }
  DistributionFlow mean_flow(4, 5, 2);
  for (const DistributionFlow& f : oracle.bar_flows) {
    for (size_t k = 0; k < mean_flow.raw().size(); ++k) mean_flow.raw()[k] += f.raw()[k] / 12.0;
  }
  for (size_t k = 0; k < mean_flow.raw().size(); ++k) {
    CHECK(hist.averaged_flow.raw()[k] == doctest::Approx(mean_flow.raw()[k]).epsilon(1e-12));
  }
}

TEST_CASE("identical seeds and oracle give bit-identical histories") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 5);
  Schedules sched;
  sched.iterations = 8;
  PpoMetrics metrics{&m, 1.0, nullptr};
  ExactOracle o1(m, 1.0), o2(m, 1.0);
  RunHistory a = run_gmfg_ppo(o1, sched, 4, 5, 2, 2, &metrics);
  RunHistory b = run_gmfg_ppo(o2, sched, 4, 5, 2, 2, &metrics);
  REQUIRE(a.exploit.size() == b.exploit.size());
  for (size_t t = 0; t < a.exploit.size(); ++t) CHECK(a.exploit[t] == b.exploit[t]);
  for (size_t k = 0; k < a.final_policy.raw().size(); ++k) {
    CHECK(a.final_policy.raw()[k] == b.final_policy.raw()[k]);
  }
}

TEST_CASE("reward shifts propagate through the loop without changing policies") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 5);
  GmfgModel shifted = m;
  RewardFn base = m.reward;
  shifted.reward = [base](int h, int s, int a, const Aggregate& z) {
    return base(h, s, a, z) + 4.0;
  };
  Schedules sched;
  sched.iterations = 10;
  ExactOracle o1(m, 1.0), o2(shifted, 1.0);
  RunHistory a = run_gmfg_ppo(o1, sched, 3, 5, 2, 2);
  RunHistory b = run_gmfg_ppo(o2, sched, 3, 5, 2, 2);
  for (size_t k = 0; k < a.final_policy.raw().size(); ++k) {
    CHECK(a.final_policy.raw()[k] == doctest::Approx(b.final_policy.raw()[k]).epsilon(1e-10));
  }
}

TEST_CASE("exploitability falls over a short exact-oracle run") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 20);
  Schedules sched;
  sched.iterations = 50;
  ExactOracle oracle(m, 1.0);
  PpoMetrics metrics{&m, 1.0, nullptr};
  RunHistory hist = run_gmfg_ppo(oracle, sched, 8, 20, 2, 2, &metrics);
  REQUIRE(hist.exploit.size() == 50);
  CHECK(hist.exploit.back() < hist.exploit.front());
}
