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

#include "synfuse/dv.hpp"
#include "synfuse/mmd.hpp"
#include "synfuse/modality.hpp"

namespace synfuse {

// A split of the modality index set into a nonempty subset and its
// complement. Only |left| <= floor(n/2) is kept; at the boundary the side
// containing index 0 is the canonical representative.
struct Bipartition {
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
};

// All canonical bipartitions of n modalities, ordered by left-subset size
// then lексicographically. n=3 gives {0}|{1,2}, {1}|{0,2}, {2}|{0,1}.
std::vector<Bipartition> bipartitions(std::size_t n);

// How the MMD kernel is built per bipartition.
struct MmdDependenceConfig {
  bool deep = false;
  double sigma = 0.0;  // <= 0 selects the median heuristic
  int n_shuffles = 4;
  std::vector<std::size_t> phi_hidden{32, 32};
  std::size_t phi_out = 0;  // 0 -> same as kernel input width
  double eps_floor = 0.1;
  std::uint64_t phi_seed = 7;
};

// Builds the kernel for samples laid out as the given rows.
KernelSpec make_kernel(const Matrix& rows, const MmdDependenceConfig& cfg);

struct SynergyConfig {
  Measure measure = Measure::Mmd;
  std::optional<MiEstimateConfig> kl;
  std::optional<MmdDependenceConfig> mmd;
};

void validate_synergy_config(const SynergyConfig& cfg);

// Uniform mean over bipartitions of the pairwise dependence between the
// two sides. KL uses a freshly trained DV critic per partition; MMD uses
// the shuffle-averaged dependence statistic.
double tse_synergy(const ModalityBatch& batch, const SynergyConfig& cfg,
                   SeededRng& rng);

struct SynergyValueAndGrad {
  double value = 0.0;
  std::vector<Matrix> grads;  // one per modality, shapes mirror embeddings
};

// Differentiable synergy over embeddings with frozen estimator state: one
// kernel per partition, derangements treated as constants.
SynergyValueAndGrad synergy_value_and_grad_mmd(
    const std::vector<Matrix>& z, const std::vector<KernelSpec>& kernels,
    const std::vector<std::vector<std::size_t>>& derangements);

// KL variant: one trained critic per partition, parameters frozen;
// gradients flow through critic inputs only.
SynergyValueAndGrad synergy_value_and_grad_kl(
    const std::vector<Matrix>& z,
    const std::vector<const FeedforwardNet*>& critics,
    const std::vector<std::vector<std::size_t>>& derangements);

}  // namespace synfuse
