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

#include "synfuse/modality.hpp"

#include <cmath>

namespace synfuse {

ModalityBatch::ModalityBatch(std::vector<Matrix> mods,
                             std::optional<std::vector<double>> labels_in)
    : modalities(std::move(mods)), labels(std::move(labels_in)) {
  if (modalities.size() < 2) {
    throw ConfigError("modality batch needs at least 2 modalities");
  }
  const std::size_t n = modalities.front().rows();
  for (const Matrix& m : modalities) {
    if (m.rows() != n) {
      throw ShapeError("modality batch: row counts differ across modalities");
    }
  }
  if (labels) {
    if (labels->size() != n) {
      throw ShapeError("modality batch: label length does not match rows");
    }
    for (double v : *labels) {
      if (!std::isfinite(v) || v < -3.0 || v > 3.0) {
        throw ConfigError("modality batch: labels must be finite in [-3, 3]");
      }
    }
  }
}

ModalityBatch ModalityBatch::take_rows(std::span<const std::size_t> idx) const {
  std::vector<Matrix> mods;
  mods.reserve(modalities.size());
  for (const Matrix& m : modalities) mods.push_back(m.take_rows(idx));
  std::optional<std::vector<double>> lab;
  if (labels) {
    lab.emplace();
    lab->reserve(idx.size());
    for (std::size_t i : idx) lab->push_back((*labels)[i]);
  }
  return ModalityBatch(std::move(mods), std::move(lab));
}

Matrix concat_all(const std::vector<Matrix>& mats,
                  const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw UsageError("concat_subset: empty modality subset");
  std::vector<const Matrix*> blocks;
  blocks.reserve(subset.size());
  for (std::size_t i : subset) {
    if (i >= mats.size()) throw UsageError("concat_subset: index out of range");
    blocks.push_back(&mats[i]);
  }
  return hcat(blocks);
}

Matrix concat_subset(const ModalityBatch& batch,
                     const std::vector<std::size_t>& subset) {
  return concat_all(batch.modalities, subset);
}

SplitIndices split_indices(std::size_t n, double f_train, double f_val,
                           SeededRng& rng) {
  if (!(f_train > 0.0) || f_val < 0.0 || f_train + f_val > 1.0) {
    throw ConfigError("split fractions must satisfy 0 < train, train+val <= 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.uniform_int(i);
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t n_train = static_cast<std::size_t>(f_train * n);
  const std::size_t n_val = static_cast<std::size_t>(f_val * n);
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

}  // namespace synfuse
