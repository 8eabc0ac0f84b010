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
#include "gmfg/sis.hpp"
#include "test_util.hpp"

using namespace gmfg;
using gmfg::test::constant_flow;
using gmfg::test::random_policy;
using gmfg::test::random_permutation;

namespace {

PolicyProfile pure_action_policy(int cells, int horizon, int ns, int na, int action) {
  PolicyProfile p(cells, horizon, ns, na);
  for (int i = 0; i < cells; ++i) {
    for (int h = 0; h < horizon; ++h) {
      for (int s = 0; s < ns; ++s) p.at(i, h, s, action) = 1.0;
    }
  }
  return p;
}

}  // namespace

TEST_CASE("aggregate under the all-ones graphon is the mean flow") {
  DistributionFlow flow = constant_flow(4, 3, {0.5, 0.5});
  Aggregate z = compute_aggregate(Graphon::constant(1.0), flow, 2, 1);
  CHECK(z.mass[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(z.mass[1] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("aggregate under the zero graphon vanishes") {
  DistributionFlow flow = constant_flow(4, 2, {0.3, 0.7});
  Aggregate z = compute_aggregate(Graphon::constant(0.0), flow, 0, 0);
  CHECK(z.mass[0] == 0.0);
  CHECK(z.mass[1] == 0.0);
}

TEST_CASE("exp-graphon aggregate matches a high-resolution quadrature oracle") {
  const int cells = 64;
  DistributionFlow flow = constant_flow(cells, 1, {0.0, 1.0});  // every agent infected
  int cell = cells - 1;                                          // grid cell nearest alpha = 1
  double alpha = (cell + 0.5) / cells;
  Aggregate z = compute_aggregate(Graphon::exp_family(3.0), flow, cell, 0);
  // Simpson quadrature of int_0^1 tanh(1.5 alpha beta) dbeta
  const int k = 20000;
  double oracle = 0.0;
  for (int i = 0; i <= k; ++i) {
    double beta = static_cast<double>(i) / k;
    double wgt = (i == 0 || i == k) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    oracle += wgt * std::tanh(1.5 * alpha * beta);
  }
  oracle /= 3.0 * k;
  CHECK(z.mass[1] == doctest::Approx(oracle).epsilon(1e-4));
  CHECK(z.mass[0] == 0.0);
  CHECK(z.total() <= 1.0 + 1e-12);
}

TEST_CASE("aggregate rejects out-of-range indices") {
  DistributionFlow flow = constant_flow(4, 2, {0.5, 0.5});
  CHECK_THROWS_AS(compute_aggregate(Graphon::constant(1.0), flow, 4, 0), std::out_of_range);
  CHECK_THROWS_AS(compute_aggregate(Graphon::constant(1.0), flow, 0, 2), std::out_of_range);
}

TEST_CASE("one-step flow is the initial distribution on every cell") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 1, {0.25, 0.75});
  PolicyProfile pi = PolicyProfile::uniform(6, 1, 2, 2);
  DistributionFlow flow = gamma2(pi, m);
  for (int i = 0; i < 6; ++i) {
    CHECK(flow.at(i, 0, 0) == 0.25);
    CHECK(flow.at(i, 0, 1) == 0.75);
  }
}

TEST_CASE("constant graphon with identical per-agent policies is homogeneous") {
  GmfgModel m = make_sis_model(Graphon::constant(0.6), 8);
  Stream stream(3);
  PolicyProfile one_cell = random_policy(stream, 1, 8, 2, 2);
  PolicyProfile pi(5, 8, 2, 2);
  for (int i = 0; i < 5; ++i) {
    for (int h = 0; h < 8; ++h) {
      for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) pi.at(i, h, s, a) = one_cell.at(0, h, s, a);
      }
    }
  }
  DistributionFlow flow = gamma2(pi, m);
  for (int h = 0; h < 8; ++h) {
    for (int s = 0; s < 2; ++s) {
      for (int i = 1; i < 5; ++i) {
        CHECK(flow.at(i, h, s) == doctest::Approx(flow.at(0, h, s)).epsilon(1e-14));
      }
    }
  }
  flow.validate();
}

TEST_CASE("always-distancing SIS infection mass follows the 0.8 recurrence") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 3, {0.5, 0.5});
  PolicyProfile pi = pure_action_policy(4, 3, 2, 2, kSisDistance);
  DistributionFlow flow = gamma2(pi, m);
  for (int i = 0; i < 4; ++i) {
    CHECK(flow.at(i, 0, kSisInfected) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(flow.at(i, 1, kSisInfected) == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(flow.at(i, 2, kSisInfected) == doctest::Approx(0.32).epsilon(1e-13));
  }
}

TEST_CASE("gamma3 at the induced flow is a fixed point") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 10);
  Stream stream(17);
  for (int rep = 0; rep < 5; ++rep) {
    PolicyProfile pi = random_policy(stream, 6, 10, 2, 2);
    DistributionFlow induced = gamma2(pi, m);
    DistributionFlow replay = gamma3(pi, induced, m);
    CHECK(distance_d(replay, induced) < 1e-12);
  }
}

TEST_CASE("gamma3 with an all-susceptible reference never infects") {
  GmfgModel m = make_sis_model(Graphon::constant(1.0), 5, {1.0, 0.0});
  PolicyProfile go_out = pure_action_policy(4, 5, 2, 2, kSisGoOut);
  DistributionFlow all_s = constant_flow(4, 5, {1.0, 0.0});
  DistributionFlow flow = gamma3(go_out, all_s, m);
  for (int i = 0; i < 4; ++i) {
    for (int h = 0; h < 5; ++h) CHECK(flow.at(i, h, kSisInfected) == 0.0);
  }
}

TEST_CASE("terminal Q equals the terminal reward") {
  GmfgModel m = make_sis_model(Graphon::constant(0.5), 4);
  PolicyProfile pi = PolicyProfile::uniform(2, 4, 2, 2);
  DistributionFlow flow = gamma2(pi, m);
  auto [q, v] = evaluate_policy(pi, flow, m, 1.0, 0);
  Aggregate z = compute_aggregate(m.graphons[3], flow, 0, 3);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) CHECK(q.at(3, s, a) == m.reward(3, s, a, z));
  }
}

TEST_CASE("adding a reward constant shifts Q by the remaining step count") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 6);
  GmfgModel shifted = m;
  RewardFn base = m.reward;
  shifted.reward = [base](int h, int s, int a, const Aggregate& z) {
    return base(h, s, a, z) + 1.5;
  };
  PolicyProfile pi = PolicyProfile::uniform(3, 6, 2, 2);
  DistributionFlow flow = gamma2(pi, m);
  auto [q0, v0] = evaluate_policy(pi, flow, m, 1.0, 1);
  auto [q1, v1] = evaluate_policy(pi, flow, shifted, 1.0, 1);
  for (int h = 0; h < 6; ++h) {
    double shift = 1.5 * (6 - h);
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        CHECK(q1.at(h, s, a) == doctest::Approx(q0.at(h, s, a) + shift).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("two-step SIS evaluation matches the hand computation") {
  // W == 1, two cells; handcrafted reference flow with aggregate
  // z_0 = (0.45, 0.55), z_1 = (0.65, 0.35); uniform policy, lambda = 1.
  GmfgModel m = make_sis_model(Graphon::constant(1.0), 2);
  DistributionFlow ref(2, 2, 2);
  ref.at(0, 0, 0) = 0.7;  ref.at(0, 0, 1) = 0.3;
  ref.at(1, 0, 0) = 0.2;  ref.at(1, 0, 1) = 0.8;
  ref.at(0, 1, 0) = 0.4;  ref.at(0, 1, 1) = 0.6;
  ref.at(1, 1, 0) = 0.9;  ref.at(1, 1, 1) = 0.1;
  PolicyProfile pi = PolicyProfile::uniform(2, 2, 2, 2);
  auto [q, v] = evaluate_policy(pi, ref, m, 1.0, 0);
  const double l2 = std::log(2.0);
  CHECK(q.at(1, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.at(1, 0, 1) == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(q.at(1, 1, 0) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(q.at(1, 1, 1) == doctest::Approx(-12.5).epsilon(1e-12));
  CHECK(v.at(1, 0) == doctest::Approx(-1.25 + l2).epsilon(1e-12));
  CHECK(v.at(1, 1) == doctest::Approx(-11.25 + l2).epsilon(1e-12));
  CHECK(q.at(0, 0, 0) == doctest::Approx(-5.65 + l2).epsilon(1e-12));
  CHECK(q.at(0, 0, 1) == doctest::Approx(-3.75 + l2).epsilon(1e-12));
  CHECK(q.at(0, 1, 0) == doctest::Approx(-19.25 + l2).epsilon(1e-12));
  CHECK(q.at(0, 1, 1) == doctest::Approx(-21.75 + l2).epsilon(1e-12));
}

TEST_CASE("zero-probability actions are rejected under positive regularization") {
  GmfgModel m = make_sis_model(Graphon::constant(0.5), 3);
  PolicyProfile pi = pure_action_policy(2, 3, 2, 2, kSisGoOut);
  DistributionFlow flow = gamma2(pi, m);
  CHECK_THROWS_AS(evaluate_policy(pi, flow, m, 1.0, 0), std::invalid_argument);
  CHECK_NOTHROW(evaluate_policy(pi, flow, m, 0.0, 0));
}

TEST_CASE("value identity V = <pi, Q - lambda log pi> holds") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 7);
  Stream stream(29);
  PolicyProfile pi = random_policy(stream, 4, 7, 2, 2);
  DistributionFlow flow = gamma2(pi, m);
  double lambda = 0.7;
  for (int cell = 0; cell < 4; ++cell) {
    auto [q, v] = evaluate_policy(pi, flow, m, lambda, cell);
    for (int h = 0; h < 7; ++h) {
      for (int s = 0; s < 2; ++s) {
        double expect = 0.0;
        for (int a = 0; a < 2; ++a) {
          double p = pi.at(cell, h, s, a);
          expect += p * (q.at(h, s, a) - lambda * std::log(p));
        }
        CHECK(v.at(h, s) == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("soft policy is uniform where Q is constant across actions") {
  GmfgModel m = make_sis_model(Graphon::constant(0.0), 3);
  // zero kernel decouples agents; make rewards action-independent
  m.reward = [](int, int s, int, const Aggregate&) { return -10.0 * (s == kSisInfected); };
  DistributionFlow ref = constant_flow(2, 3, {0.5, 0.5});
  SoftOptimal opt = soft_optimal_policy(ref, m, 1.0);
  for (int i = 0; i < 2; ++i) {
    for (int h = 0; h < 3; ++h) {
      CHECK(opt.policy.at(i, h, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(opt.policy.at(i, h, 1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("terminal-only softmax arithmetic") {
  GmfgModel m = make_sis_model(Graphon::constant(0.0), 1);
  m.reward = [](int, int, int a, const Aggregate&) { return a == 0 ? 1.0 : 0.0; };
  DistributionFlow ref = constant_flow(1, 1, {1.0, 0.0});
  SoftOptimal opt = soft_optimal_policy(ref, m, 1.0);
  double e = std::exp(1.0);
  CHECK(opt.policy.at(0, 0, 0, 0) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
  CHECK(opt.policy.at(0, 0, 0, 1) == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
}

TEST_CASE("huge regularization drives the soft policy to uniform") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 4);
  DistributionFlow ref = constant_flow(3, 4, {0.5, 0.5});
  SoftOptimal opt = soft_optimal_policy(ref, m, 1e6);
  for (double p : opt.policy.raw()) CHECK(p == doctest::Approx(0.5).epsilon(1e-3));
  CHECK_THROWS_AS(soft_optimal_policy(ref, m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_optimal_policy(ref, m, -1.0), std::invalid_argument);
}

TEST_CASE("soft-DP value agrees with evaluating the soft policy") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 6);
  Stream stream(31);
  PolicyProfile any = random_policy(stream, 4, 6, 2, 2);
  DistributionFlow ref = gamma2(any, m);
  double lambda = 1.3;
  SoftOptimal opt = soft_optimal_policy(ref, m, lambda);
  for (int cell = 0; cell < 4; ++cell) {
    auto [q, v] = evaluate_policy(opt.policy, ref, m, lambda, cell);
    for (int h = 0; h < 6; ++h) {
      for (int s = 0; s < 2; ++s) {
        CHECK(v.at(h, s) == doctest::Approx(opt.values[cell].at(h, s)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("reward shifts leave the soft-optimal policy unchanged") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 5);
  GmfgModel shifted = m;
  RewardFn base = m.reward;
  shifted.reward = [base](int h, int s, int a, const Aggregate& z) {
    return base(h, s, a, z) + 7.25;
  };
  DistributionFlow ref = constant_flow(4, 5, {0.4, 0.6});
  SoftOptimal a = soft_optimal_policy(ref, m, 1.0);
  SoftOptimal b = soft_optimal_policy(ref, shifted, 1.0);
  for (size_t k = 0; k < a.policy.raw().size(); ++k) {
    CHECK(a.policy.raw()[k] == doctest::Approx(b.policy.raw()[k]).epsilon(1e-12));
  }
}

TEST_CASE("soft policy on rescaled rewards respects the closed-form floor") {
  GmfgModel m = with_rewards_rescaled(make_sis_model(Graphon::exp_family(3.0), 6), -12.5, 0.0);
  DistributionFlow ref = constant_flow(4, 6, {0.5, 0.5});
  double lambda = 1.0;
  SoftOptimal opt = soft_optimal_policy(ref, m, lambda);
  int H = 6, na = 2;
  for (int i = 0; i < 4; ++i) {
    for (int h = 0; h < H; ++h) {
      double bound =
          1.0 / (1.0 + na * std::exp((H - h) * (1.0 + lambda * std::log(na)) / lambda));
      for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < na; ++a) CHECK(opt.policy.at(i, h, s, a) >= bound - 1e-12);
      }
    }
  }
}

TEST_CASE("exploitability is nonnegative for arbitrary policies") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 6);
  Stream stream(41);
  for (int rep = 0; rep < 5; ++rep) {
    PolicyProfile pi = random_policy(stream, 4, 6, 2, 2);
    CHECK(exploitability(pi, m, 1.0) >= -1e-9);
  }
}

TEST_CASE("zero kernel decouples the game and the soft policy is unexploitable") {
  GmfgModel m = make_sis_model(Graphon::constant(0.0), 5);
  DistributionFlow any_ref = constant_flow(3, 5, {0.8, 0.2});
  SoftOptimal opt = soft_optimal_policy(any_ref, m, 1.0);
  CHECK(exploitability(opt.policy, m, 1.0) <= 1e-10);
}

TEST_CASE("strong regularization: fixed-point iteration reaches tiny exploitability") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 10);
  double lambda = 10.0;
  PolicyProfile pi = PolicyProfile::uniform(8, 10, 2, 2);
  DistributionFlow mu = gamma2(pi, m);
  for (int it = 0; it < 60; ++it) {
    SoftOptimal opt = soft_optimal_policy(mu, m, lambda);
    pi = opt.policy;
    mu = gamma2(pi, m);
  }
  CHECK(exploitability(pi, m, lambda) < 1e-6);
}

TEST_CASE("distances vanish on identical arguments and obey symmetry") {
  Stream stream(53);
  PolicyProfile a = random_policy(stream, 3, 4, 2, 2);
  PolicyProfile b = random_policy(stream, 3, 4, 2, 2);
  DistributionFlow ref = constant_flow(3, 4, {0.5, 0.5});
  CHECK(distance_D(a, a, ref) == 0.0);
  CHECK(distance_D(a, b, ref) == doctest::Approx(distance_D(b, a, ref)).epsilon(1e-14));
  CHECK(distance_D(a, b, ref) >= 0.0);
  DistributionFlow f = constant_flow(3, 4, {0.3, 0.7});
  DistributionFlow g = constant_flow(3, 4, {0.2, 0.8});
  CHECK(distance_d(f, f) == 0.0);
  CHECK(distance_d(f, g) == doctest::Approx(distance_d(g, f)).epsilon(1e-14));
}

TEST_CASE("disjoint point-mass flows are 2H apart") {
  int H = 7;
  DistributionFlow all_s = constant_flow(5, H, {1.0, 0.0});
  DistributionFlow all_i = constant_flow(5, H, {0.0, 1.0});
  CHECK(distance_d(all_s, all_i) == doctest::Approx(2.0 * H).epsilon(1e-14));
}

TEST_CASE("two-cell single-step distances match hand arithmetic") {
  PolicyProfile a(2, 1, 2, 2), b(2, 1, 2, 2);
  // cell 0, state 0 differs by L1 = 0.8; cell 1, state 1 differs by L1 = 0.6
  a.at(0, 0, 0, 0) = 0.9; a.at(0, 0, 0, 1) = 0.1;
  b.at(0, 0, 0, 0) = 0.5; b.at(0, 0, 0, 1) = 0.5;
  a.at(0, 0, 1, 0) = 0.3; a.at(0, 0, 1, 1) = 0.7;
  b.at(0, 0, 1, 0) = 0.3; b.at(0, 0, 1, 1) = 0.7;
  a.at(1, 0, 0, 0) = 1.0; b.at(1, 0, 0, 0) = 1.0;
  a.at(1, 0, 1, 0) = 0.8; a.at(1, 0, 1, 1) = 0.2;
  b.at(1, 0, 1, 0) = 0.5; b.at(1, 0, 1, 1) = 0.5;
  DistributionFlow ref(2, 1, 2);
  ref.at(0, 0, 0) = 0.6; ref.at(0, 0, 1) = 0.4;
  ref.at(1, 0, 0) = 0.1; ref.at(1, 0, 1) = 0.9;
  double expect = 0.5 * (0.6 * 0.8 + 0.9 * 0.6);
  CHECK(distance_D(a, b, ref) == doctest::Approx(expect).epsilon(1e-14));

  DistributionFlow f(2, 1, 2), g(2, 1, 2);
  f.at(0, 0, 0) = 0.7; f.at(0, 0, 1) = 0.3;
  g.at(0, 0, 0) = 0.4; g.at(0, 0, 1) = 0.6;
  f.at(1, 0, 0) = 1.0; g.at(1, 0, 0) = 1.0;
  CHECK(distance_d(f, g) == doctest::Approx(0.5 * 0.6).epsilon(1e-14));
}

TEST_CASE("distance shape mismatches are rejected") {
  PolicyProfile a(2, 1, 2, 2), b(3, 1, 2, 2);
  DistributionFlow ref(2, 1, 2);
  CHECK_THROWS_AS(distance_D(a, b, ref), std::invalid_argument);
  DistributionFlow f(2, 1, 2), g(2, 2, 2);
  CHECK_THROWS_AS(distance_d(f, g), std::invalid_argument);
}

TEST_CASE("block bijections transport policies and flows by relabeling") {
  Stream stream(61);
  PolicyProfile pi = random_policy(stream, 4, 2, 2, 2);
  std::vector<int> perm = {2, 3, 1, 0};
  PolicyProfile moved = apply_block_bijection(pi, perm);
  for (int i = 0; i < 4; ++i) {
    CHECK(moved.at(i, 0, 0, 0) == pi.at(perm[i], 0, 0, 0));
    CHECK(moved.at(i, 1, 1, 1) == pi.at(perm[i], 1, 1, 1));
  }
  PolicyProfile back = apply_block_bijection(moved, inverse_permutation(perm));
  for (size_t k = 0; k < pi.raw().size(); ++k) CHECK(back.raw()[k] == pi.raw()[k]);
  CHECK_THROWS_AS(apply_block_bijection(pi, std::vector<int>{0, 0, 1, 2}), std::invalid_argument);
}

TEST_CASE("flow propagation is equivariant to block bijections") {
  const int cells = 8, H = 6;
  Stream stream(71);
  for (int rep = 0; rep < 10; ++rep) {
    GmfgModel m = make_sis_model(Graphon::exp_family(3.0), H);
    PolicyProfile pi = random_policy(stream, cells, H, 2, 2);
    std::vector<int> perm = random_permutation(stream, cells);
    GmfgModel permuted_game = with_graphon(m, m.graphons[0].permuted(perm));
    DistributionFlow lhs = gamma2(apply_block_bijection(pi, perm), permuted_game);
    DistributionFlow rhs = apply_block_bijection(gamma2(pi, m), perm);
    CHECK(distance_d(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("every produced slice stays on the simplex and aggregates stay bounded") {
  GmfgModel m = make_sis_model(Graphon::exp_family(3.0), 8);
  Stream stream(83);
  for (int rep = 0; rep < 5; ++rep) {
    PolicyProfile pi = random_policy(stream, 5, 8, 2, 2);
    DistributionFlow flow = gamma2(pi, m);
    flow.validate();
    for (int i = 0; i < 5; ++i) {
      for (int h = 0; h < 8; ++h) {
        Aggregate z = compute_aggregate(m.graphons[h], flow, i, h);
        CHECK(z.total() >= 0.0);
        CHECK(z.total() <= 1.0 + 1e-12);
      }
    }
  }
}
