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

#include "safemb/ensemble/ensemble.hpp"

namespace safemb::ensemble {

void save_checkpoint(const EnsembleModel& model, const std::string& path) {
  write_json_file(path, model.to_json(), -1);
}

EnsembleModel load_checkpoint(const std::string& path) {
  return EnsembleModel::from_json(read_json_file(path));
}

}  // namespace safemb::ensemble
