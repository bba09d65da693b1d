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

// Helpers for strict JSON decoding: unknown keys are errors.

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "safemb/errors.hpp"

namespace safemb {

using Json = nlohmann::json;

// Throws ConfigError naming `where` if `j` is not an object or has a key
// outside `allowed`.
void require_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                  const std::string& where);

// Reads `key` from `j` into `out` if present; type errors become ConfigError.
template <typename T>
void read_optional(const Json& j, const char* key, T& out,
                   const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j, int indent = 2);

// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace safemb
