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

#include "synfuse/samples.hpp"

#include <numeric>

#include "synfuse/errors.hpp"

namespace synfuse {

PairedSamples::PairedSamples(Matrix x_in, Matrix y_in)
    : x(std::move(x_in)), y(std::move(y_in)) {
  if (x.rows() != y.rows()) {
    throw ShapeError("paired samples: x and y row counts differ");
  }
  if (x.rows() < kMinPairedSamples) {
    throw InsufficientSamplesError(
        "paired samples need at least " + std::to_string(kMinPairedSamples) +
        " rows, got " + std::to_string(x.rows()));
  }
}

std::vector<std::size_t> random_permutation(std::size_t n, SeededRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.uniform_int(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<std::size_t> random_derangement(std::size_t n, SeededRng& rng) {
  if (n < kMinPairedSamples) {
    throw InsufficientSamplesError(
        "derangement needs at least " + std::to_string(kMinPairedSamples) +
        " rows, got " + std::to_string(n));
  }
  // Acceptance probability approaches 1/e, so a few tries suffice.
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<std::size_t> perm = random_permutation(n, rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i] == i) {
        fixed_point = true;
        break;
      }
    }
    if (!fixed_point) return perm;
  }
  throw NumericError("derangement rejection sampling did not terminate");
}

PairedSamples shuffle_product_marginals(const PairedSamples& s,
                                        SeededRng& rng) {
  const std::vector<std::size_t> perm = random_derangement(s.n(), rng);
  return PairedSamples(s.x, s.y.take_rows(perm));
}

std::string measure_name(Measure m) {
  return m == Measure::Kl ? "kl" : "mmd";
}

}  // namespace synfuse
