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
#include <string>
#include <vector>

namespace synfuse {

struct GradCheckResult {
  std::string suite;
  int instances = 0;
  double max_rel_err = 0.0;
  bool passed = false;
};

inline constexpr double kGradCheckEps = 1e-5;
inline constexpr double kGradCheckTol = 1e-4;
inline constexpr int kGradCheckInstances = 20;

// Central-difference checks of every differentiable path: net parameters
// and inputs, the DV bound w.r.t. critic parameters, both synergy variants
// w.r.t. embeddings, and the fusion task losses w.r.t. model parameters.
std::vector<GradCheckResult> run_all_gradchecks(std::uint64_t seed);

}  // namespace synfuse
