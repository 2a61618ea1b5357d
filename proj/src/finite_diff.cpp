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

#include "synfuse/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "synfuse/errors.hpp"

namespace synfuse {

std::vector<double> finite_diff_grad(const ScalarFn& scalar_fn,
                                     std::span<const double> params,
                                     double eps) {
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + eps;
    const double fp = scalar_fn(p);
    p[i] = saved - eps;
    const double fm = scalar_fn(p);
    p[i] = saved;
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor) {
  if (a.size() != b.size()) {
    throw UsageError("max_relative_error: length mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a[i], b[i], floor));
  }
  return worst;
}

}  // namespace synfuse
