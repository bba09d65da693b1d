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

#pragma once

// Layout files are JSON:
//
//   {
//     "arena_half_width": 2.0,
//     "goal": {"position": [x, y], "radius": 0.3},
//     "hazards": [{"center": [x, y], "radius": 0.4}, ...],
//     "seed": 7
//   }
//
// All fields are required; unknown fields are rejected.

#include <string>

#include "safemb/envs/point_hazard.hpp"
#include "safemb/json_util.hpp"

namespace safemb::envs {

Json layout_to_json(const PointHazardLayout& layout);
PointHazardLayout layout_from_json(const Json& j);

PointHazardLayout load_layout(const std::string& path);
void save_layout(const PointHazardLayout& layout, const std::string& path);

}  // namespace safemb::envs
