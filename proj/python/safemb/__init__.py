# Copyright 2026 The safemb Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Safe model-based policy optimization with log barriers.

Configs are plain dicts with the same fields as the JSON config files;
missing fields take their defaults and unknown fields raise ConfigError.
"""

from safemb._core import (
    BindingError,
    ConfigError,
    DomainError,
    Env,
    Error,
    InfeasibleIterate,
    LayoutError,
    ProtocolError,
    ShapeError,
    TrainingError,
    adaptive_step_size,
    barrier_gradient,
    barrier_value,
    cli,
    default_config,
    prorated_budget,
    read_metrics,
    report,
    run_bench,
    train,
    validate_config,
)

__all__ = [
    "BindingError",
    "ConfigError",
    "DomainError",
    "Env",
    "Error",
    "InfeasibleIterate",
    "LayoutError",
    "ProtocolError",
    "ShapeError",
    "TrainingError",
    "adaptive_step_size",
    "barrier_gradient",
    "barrier_value",
    "cli",
    "default_config",
    "prorated_budget",
    "read_metrics",
    "report",
    "run_bench",
    "train",
    "validate_config",
]
