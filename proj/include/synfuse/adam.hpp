// Copyright 2026 The synfuse Authors
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

#include <cstdint>
#include <span>
#include <vector>

namespace synfuse {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a flat parameter vector.
struct AdamState {
  AdamState() = default;
  AdamState(std::size_t param_count, AdamConfig cfg)
      : m(param_count, 0.0), v(param_count, 0.0), config(cfg) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  AdamConfig config;
};

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state);

}  // namespace synfuse
