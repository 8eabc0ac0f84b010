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
#include "gmfg/graphon.hpp"
#include "gmfg/json_util.hpp"
#include "gmfg/rng.hpp"
#include "test_util.hpp"

using namespace gmfg;

TEST_CASE("exp family matches its defining formula") {
  Graphon w = Graphon::exp_family(3.0);
  for (double a : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) {
    for (double b : {0.0, 0.2, 0.68, 1.0}) {
      double x = 3.0 * a * b;
      double expect = 2.0 * std::exp(x) / (1.0 + std::exp(x)) - 1.0;
      CHECK(w(a, b) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("all families are symmetric and bounded") {
  std::vector<Graphon> family = {
      Graphon::constant(0.3), Graphon::exp_family(5.0),
      Graphon::block({0.4}, {{0.9, 0.2}, {0.2, 0.7}}),
      Graphon::step({{0.1, 0.5, 0.3}, {0.5, 0.8, 0.2}, {0.3, 0.2, 0.9}}).permuted({2, 0, 1})};
  Stream stream(7);
  for (const Graphon& w : family) {
    for (int k = 0; k < 200; ++k) {
      double a = stream.next_double();
      double b = stream.next_double();
      double v = w(a, b);
      CHECK(v == w(b, a));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("block lookup uses right-closed cells") {
  Graphon w = Graphon::block({0.5}, {{0.9, 0.3}, {0.3, 0.7}});
  CHECK(w(0.5, 0.5) == 0.9);  // both in the first block
  CHECK(w(0.5, 1.0) == 0.3);
  CHECK(w(0.51, 1.0) == 0.7);
  Graphon s = Graphon::sbm(2, 0.9, 0.3);
  CHECK(s(0.25, 0.25) == 0.9);
  CHECK(s(0.25, 0.75) == 0.3);
  CHECK(s(0.75, 0.75) == 0.9);
}

TEST_CASE("invalid constructions are rejected") {
  CHECK_THROWS_AS(Graphon::constant(1.5), std::invalid_argument);
  CHECK_THROWS_AS(Graphon::exp_family(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(Graphon::step({{0.1, 0.9}, {0.2, 0.3}}), std::invalid_argument);  // asymmetric
  CHECK_THROWS_AS(Graphon::block({0.9, 0.2}, {{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}}),
                  std::invalid_argument);  // boundaries not increasing
}

TEST_CASE("identity permutation leaves any graphon unchanged") {
  Graphon w = Graphon::exp_family(2.0).permuted({0, 1, 2, 3});
  CHECK(w.permutation().empty());
}

TEST_CASE("constant graphon is invariant under any block bijection") {
  Graphon w = Graphon::constant(0.42);
  Graphon wp = apply_block_bijection(w, {3, 1, 0, 2});
  Stream stream(11);
  for (int k = 0; k < 100; ++k) {
    double a = stream.next_double(), b = stream.next_double();
    CHECK(wp(a, b) == w(a, b));
  }
}

TEST_CASE("swapping the two blocks of an SBM swaps the value matrix") {
  Graphon w = Graphon::block({0.5}, {{0.9, 0.3}, {0.3, 0.7}});
  Graphon swapped = apply_block_bijection(w, {1, 0});
  CHECK(swapped(0.25, 0.25) == 0.7);
  CHECK(swapped(0.75, 0.75) == 0.9);
  CHECK(swapped(0.25, 0.75) == 0.3);
}

TEST_CASE("a permutation followed by its inverse is the identity") {
  Stream stream(23);
  Graphon w = Graphon::step({{0.1, 0.5, 0.3, 0.2},
                             {0.5, 0.8, 0.2, 0.4},
                             {0.3, 0.2, 0.9, 0.6},
                             {0.2, 0.4, 0.6, 0.7}});
  std::vector<int> perm = {2, 0, 3, 1};
  Graphon roundtrip = w.permuted(perm).permuted(inverse_permutation(perm));
  CHECK(roundtrip.permutation().empty());
  for (int k = 0; k < 100; ++k) {
    double a = stream.next_double(), b = stream.next_double();
    CHECK(roundtrip(a, b) == w(a, b));
  }
}

TEST_CASE("non-bijective permutations are rejected") {
  Graphon w = Graphon::constant(0.5);
  CHECK_THROWS_AS(w.permuted({0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(w.permuted({0, 3}), std::invalid_argument);
}

TEST_CASE("graphon json round-trip preserves values") {
  std::vector<Graphon> family = {
      Graphon::constant(0.3), Graphon::exp_family(3.0), Graphon::sbm(2, 0.9, 0.3),
      Graphon::block({0.4}, {{0.9, 0.2}, {0.2, 0.7}}).permuted({1, 0})};
  Stream stream(5);
  for (const Graphon& w : family) {
    Graphon back = graphon_from_json(graphon_to_json(w));
    for (int k = 0; k < 50; ++k) {
      double a = stream.next_double(), b = stream.next_double();
      CHECK(back(a, b) == w(a, b));
    }
  }
}
