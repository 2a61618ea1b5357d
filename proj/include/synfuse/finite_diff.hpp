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

#include <functional>
#include <span>
#include <vector>

namespace synfuse {

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(p+eps) - f(p-eps)) / (2 eps) per coordinate.
// scalar_fn must be deterministic for fixed params.
std::vector<double> finite_diff_grad(const ScalarFn& scalar_fn,
                                     std::span<const double> params,
                                     double eps);

// |a-b| / max(|a|, |b|, floor); the floor guards near-zero coordinates.
double relative_error(double a, double b, double floor = 1e-6);

// Largest per-coordinate relative error between two gradient vectors.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace synfuse
