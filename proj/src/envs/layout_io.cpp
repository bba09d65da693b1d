// Copyright 2026 The safemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "safemb/envs/layout_io.hpp"

namespace safemb::envs {
namespace {

Vec2 read_vec2(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw LayoutError(where + ": expected [x, y]");
  }
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw LayoutError(where + ": missing field '" + key + "'");
  }
  return *it;
}

double read_number(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_number()) throw LayoutError(where + "." + key + ": not a number");
  return v.get<double>();
}

}  // namespace

Json layout_to_json(const PointHazardLayout& layout) {
  Json hazards = Json::array();
  for (const Hazard& h : layout.hazards) {
    hazards.push_back({{"center", {h.center.x(), h.center.y()}},
                       {"radius", h.radius}});
  }
  return Json{
      {"arena_half_width", layout.arena_half_width},
      {"goal",
       {{"position", {layout.goal.x(), layout.goal.y()}},
        {"radius", layout.goal_radius}}},
      {"hazards", hazards},
      {"seed", layout.seed},
  };
}

PointHazardLayout layout_from_json(const Json& j) {
  try {
    require_keys(j, {"arena_half_width", "goal", "hazards", "seed"}, "layout");
  } catch (const ConfigError& e) {
    throw LayoutError(e.what());
  }
  PointHazardLayout layout;
  layout.arena_half_width = read_number(j, "arena_half_width", "layout");
  const Json& goal = field(j, "goal", "layout");
  try {
    require_keys(goal, {"position", "radius"}, "layout.goal");
  } catch (const ConfigError& e) {
    throw LayoutError(e.what());
  }
  layout.goal = read_vec2(field(goal, "position", "layout.goal"),
                          "layout.goal.position");
  layout.goal_radius = read_number(goal, "radius", "layout.goal");
  const Json& hazards = field(j, "hazards", "layout");
  if (!hazards.is_array()) throw LayoutError("layout.hazards: not a list");
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    const std::string where = "layout.hazards[" + std::to_string(i) + "]";
    try {
      require_keys(hazards[i], {"center", "radius"}, where);
    } catch (const ConfigError& e) {
      throw LayoutError(e.what());
    }
    layout.hazards.push_back(
        {read_vec2(field(hazards[i], "center", where), where + ".center"),
         read_number(hazards[i], "radius", where)});
  }
  const Json& seed = field(j, "seed", "layout");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw LayoutError("layout.seed: not an integer");
  }
  layout.seed = seed.get<std::uint64_t>();
  return layout;
}

PointHazardLayout load_layout(const std::string& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const ConfigError& e) {
    throw LayoutError(e.what());
  }
  return layout_from_json(j);
}

void save_layout(const PointHazardLayout& layout, const std::string& path) {
  write_json_file(path, layout_to_json(layout));
}

}  // namespace safemb::envs
