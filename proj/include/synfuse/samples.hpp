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

#include <cstddef>
#include <string>
#include <vector>

#include "synfuse/matrix.hpp"
#include "synfuse/rng.hpp"

namespace synfuse {

// Row i of x is paired with row i of y: a draw from the joint distribution.
// Shuffling one side turns the same rows into a draw from the product of
// marginals.
struct PairedSamples {
  PairedSamples(Matrix x_in, Matrix y_in);

  Matrix x;
  Matrix y;

  std::size_t n() const { return x.rows(); }
};

constexpr std::size_t kMinPairedSamples = 4;

// Uniformly random permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, SeededRng& rng);

// Uniformly random derangement (permutation with no fixed point), by
// rejection. Requires n >= kMinPairedSamples.
std::vector<std::size_t> random_derangement(std::size_t n, SeededRng& rng);

// Empirical product of marginals: x kept, y rows deranged so no joint pair
// survives.
PairedSamples shuffle_product_marginals(const PairedSamples& s, SeededRng& rng);

enum class Measure { Kl, Mmd };

std::string measure_name(Measure m);

struct DependenceEstimate {
  double value = 0.0;
  std::size_t n_samples = 0;
  Measure measure = Measure::Kl;
};

}  // namespace synfuse
