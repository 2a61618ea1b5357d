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
#include <string>

#include "synfuse/modality.hpp"
#include "synfuse/net.hpp"

namespace synfuse {

enum class FusionKind : std::uint8_t { Concat = 0, TensorFusion = 1 };

std::string fusion_kind_name(FusionKind k);
FusionKind fusion_kind_from_name(const std::string& name);

// Per-modality encoders into Z_i, a fusion stage, and a scalar regression
// head. Concat fuses to sum(d_i) columns; tensor fusion to prod(d_i + 1)
// via the flattened outer product of [z_i; 1] vectors.
struct FusionModel {
  std::vector<FeedforwardNet> encoders;
  FusionKind kind = FusionKind::Concat;
  FeedforwardNet head;

  std::size_t n_modalities() const { return encoders.size(); }
  std::size_t fused_width() const;
  std::size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> params);
};

struct FusionModelConfig {
  std::vector<std::size_t> embed_dims;          // d_i per modality
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> head_hidden{32};
  FusionKind kind = FusionKind::Concat;
};

FusionModel make_fusion_model(const std::vector<std::size_t>& input_widths,
                              const FusionModelConfig& cfg, SeededRng& rng);

// Z_i = encoder_i(X_i).
std::vector<Matrix> encode(const FusionModel& model, const ModalityBatch& batch);

// Flattened outer product of augmented embeddings, modality-major; the
// all-augmentation corner equals 1 for every row.
Matrix tensor_fusion(const std::vector<Matrix>& z);
Matrix concat_fusion(const std::vector<Matrix>& z);

struct FuseCache {
  // Per-modality running outer products (tensor fusion only).
  std::vector<Matrix> stages;
};

Matrix fuse_forward(FusionKind kind, const std::vector<Matrix>& z,
                    FuseCache* cache);
std::vector<Matrix> fuse_backward(FusionKind kind, const std::vector<Matrix>& z,
                                  const FuseCache& cache,
                                  const Matrix& grad_fused);

struct ModelCache {
  std::vector<ForwardCache> encoder;
  std::vector<Matrix> z;
  FuseCache fuse;
  Matrix fused;
  ForwardCache head;

  const Matrix& predictions() const { return head.output(); }  // n x 1
};

ModelCache model_forward(const FusionModel& model, const ModalityBatch& batch);

// Backprop from d loss / d prediction. extra_z_grads, when present, is
// added to the task-path gradient at the embedding stage (this is how the
// synergy penalty reaches the encoders without touching the head).
std::vector<double> model_backward(const FusionModel& model,
                                   const ModelCache& cache,
                                   const Matrix& grad_pred,
                                   const std::vector<Matrix>* extra_z_grads);

// Predictions as a flat vector; clamped to [-3, 3] when clamp is set
// (evaluation convention; training losses see raw outputs).
std::vector<double> predict(const FusionModel& model,
                            const ModalityBatch& batch, bool clamp);

enum class TaskLoss : std::uint8_t { Huber = 0, Squared = 1 };

struct LossWithGrad {
  double value = 0.0;
  Matrix grad;  // n x 1, d loss / d prediction
};

// Mean per-row loss. Huber uses delta = 1.
LossWithGrad task_loss(TaskLoss kind, const Matrix& preds,
                       std::span<const double> labels);

struct MetricsReport {
  double mae = 0.0;
  double pearson_corr = 0.0;
  std::optional<double> acc2;  // absent when every label is zero
  double acc7 = 0.0;
  std::size_t n_eval = 0;
  std::size_t n_dropped_zero_labels = 0;
};

// MAE and Pearson over raw values; Acc2 on the nonzero-label subset by
// sign agreement; Acc7 on integer bins -3..3 after clamping, ties rounded
// away from zero.
MetricsReport compute_metrics(std::span<const double> preds,
                              std::span<const double> labels);

// Binary checkpoint, little-endian, bit-exact across save/load. Layout in
// docs/formats.md.
void save_checkpoint(const FusionModel& model, const std::string& path);
FusionModel load_checkpoint(const std::string& path);

}  // namespace synfuse
