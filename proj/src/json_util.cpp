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

#include "gmfg/json_util.hpp"

#include <stdexcept>

namespace gmfg {

using nlohmann::json;

json graphon_to_json(const Graphon& g) {
  json j;
  switch (g.family()) {
    case Graphon::Family::kConstant:
      j["family"] = "constant";
      j["p"] = g.constant_value();
      break;
    case Graphon::Family::kExp:
      j["family"] = "exp";
      j["theta"] = g.theta();
      break;
    case Graphon::Family::kBlock:
      j["family"] = "block";
      j["boundaries"] = g.boundaries();
      j["values"] = g.values();
      break;
    case Graphon::Family::kStep:
      j["family"] = "step";
      j["values"] = g.values();
      break;
  }
  if (!g.permutation().empty()) j["perm"] = g.permutation();
  return j;
}

Graphon graphon_from_json(const json& j) {
  std::string family = j.at("family").get<std::string>();
  Graphon g;
  if (family == "constant") {
    g = Graphon::constant(j.at("p").get<double>());
  } else if (family == "exp") {
    g = Graphon::exp_family(j.at("theta").get<double>());
  } else if (family == "block") {
    g = Graphon::block(j.at("boundaries").get<std::vector<double>>(),
                       j.at("values").get<std::vector<std::vector<double>>>());
  } else if (family == "step") {
    g = Graphon::step(j.at("values").get<std::vector<std::vector<double>>>());
  } else if (family == "sbm") {
    g = Graphon::sbm(j.at("communities").get<int>(), j.at("intra").get<double>(),
                     j.at("inter").get<double>());
  } else {
    throw std::invalid_argument("unknown graphon family: " + family);
  }
  if (j.contains("perm")) g = g.permuted(j.at("perm").get<std::vector<int>>());
  return g;
}

}  // namespace gmfg
