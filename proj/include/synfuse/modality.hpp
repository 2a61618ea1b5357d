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

#include <optional>
#include <vector>

#include "synfuse/matrix.hpp"

namespace synfuse {

// Aligned per-modality feature matrices plus optional labels; the unit of
// all estimation and training. Modality order is fixed: for 3-modality
// data the convention is audio=0, visual=1, text=2.
struct ModalityBatch {
  ModalityBatch(std::vector<Matrix> mods,
                std::optional<std::vector<double>> labels_in = std::nullopt);

  std::vector<Matrix> modalities;
  std::optional<std::vector<double>> labels;

  std::size_t rows() const { return modalities.front().rows(); }
  std::size_t n_modalities() const { return modalities.size(); }

  ModalityBatch take_rows(std::span<const std::size_t> idx) const;
};

// Column-concatenation of the subset's matrices in index order.
Matrix concat_subset(const ModalityBatch& batch,
                     const std::vector<std::size_t>& subset);
Matrix concat_all(const std::vector<Matrix>& mats,
                  const std::vector<std::size_t>& subset);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;  // remainder after train and val
};

// Disjoint covering split of 0..n-1 after a seeded shuffle.
SplitIndices split_indices(std::size_t n, double f_train, double f_val,
                           SeededRng& rng);

}  // namespace synfuse
