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

#include <memory>

#include "synfuse/fusion.hpp"
#include "synfuse/synergy.hpp"

namespace synfuse {

enum class TrainMeasure : std::uint8_t { None = 0, Kl = 1, Mmd = 2 };

std::string train_measure_name(TrainMeasure m);
TrainMeasure train_measure_from_name(const std::string& name);

struct TrainConfig {
  TrainMeasure measure = TrainMeasure::None;
  double lambda = 0.1;
  int critic_steps = 5;  // estimator updates per model step
  int epochs = 10;
  std::size_t batch_size = 128;
  double lr_model = 1e-3;
  double lr_critic = 1e-3;
  std::uint64_t seed = 0;
  int patience = 0;  // 0 disables early stopping
  int warmup_epochs = 1;
  TaskLoss loss = TaskLoss::Huber;
  std::vector<std::size_t> critic_hidden{64, 64};
  double ema_rate = 0.01;
  MmdDependenceConfig mmd;
  bool train_kernel = false;  // learn phi to maximize the MMD statistic
};

void validate_train_config(const TrainConfig& cfg);

// total = task - lambda * synergy: minimizing the total maximizes synergy.
double total_loss(double task_loss_value, double synergy, double lambda);

struct EpochRecord {
  int epoch = 0;
  double task_loss = 0.0;
  double synergy = 0.0;
  double lambda_applied = 0.0;
  double total_loss = 0.0;
  std::optional<MetricsReport> val;
};

struct TrainReport {
  TrainConfig config;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // -1 = initial parameters
  MetricsReport test;
  double synergy_final = 0.0;
  bool aborted = false;
  std::string abort_reason;
  double wall_clock_sec = 0.0;
};

// The synergy penalty as the trainer sees it: bring estimators up to date
// on the current embeddings, then report value and embedding gradients.
// An empty grads vector means "no gradient contribution".
class SynergyTerm {
 public:
  virtual ~SynergyTerm() = default;
  virtual void update_estimators(const std::vector<Matrix>& /*z*/,
                                 SeededRng& /*rng*/) {}
  virtual SynergyValueAndGrad value_and_grad(const std::vector<Matrix>& z,
                                             SeededRng& rng) = 0;
  virtual double value_only(const std::vector<Matrix>& z, SeededRng& rng) {
    return value_and_grad(z, rng).value;
  }
};

std::unique_ptr<SynergyTerm> make_synergy_term(const FusionModel& model,
                                               const TrainConfig& cfg,
                                               SeededRng& init_rng);

struct DataSplits {
  ModalityBatch train;
  ModalityBatch val;
  ModalityBatch test;
};

// Epochs of seeded shuffling with the last partial batch dropped. Phase 1
// of each step updates the synergy estimators on frozen embeddings; phase
// 2 takes one Adam step on task - lambda*synergy with estimators frozen.
// The synergy term is disabled during warmup epochs. Restores the
// best-validation-MAE parameters before the final test evaluation.
// synergy_override, when set, replaces the config-built synergy term.
TrainReport train(FusionModel& model, const DataSplits& splits,
                  const TrainConfig& cfg,
                  SynergyTerm* synergy_override = nullptr);

// --------------------------------------------------------------------------
// Experiment grid

struct GridConfig {
  std::vector<FusionKind> models{FusionKind::Concat, FusionKind::TensorFusion};
  std::vector<TrainMeasure> measures{TrainMeasure::None, TrainMeasure::Kl,
                                     TrainMeasure::Mmd};
  std::vector<double> lambdas{0.01, 0.1, 0.5};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TrainConfig base;
  FusionModelConfig model_cfg;  // embed_dims sized to the data
  double split_train = 0.7;
  double split_val = 0.15;
};

struct RunRecord {
  FusionKind model = FusionKind::Concat;
  TrainMeasure measure = TrainMeasure::None;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport test;
  double synergy_final = 0.0;
};

struct AggregateRow {
  FusionKind model = FusionKind::Concat;
  TrainMeasure measure = TrainMeasure::None;
  double lambda = 0.0;
  std::size_t n_runs = 0;
  double mae_mean = 0.0, mae_std = 0.0;
  double acc7_mean = 0.0, acc7_std = 0.0;
  double acc2_mean = 0.0, acc2_std = 0.0;
  double corr_mean = 0.0, corr_std = 0.0;
  double synergy_mean = 0.0, synergy_std = 0.0;
};

struct GridResult {
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> aggregates;
};

// One run per (model x loss variant x seed); the split, model init, and
// batch order derive from the run seed so loss variants pair by seed.
// Individual run failures are recorded and the grid continues.
GridResult run_experiment_grid(const GridConfig& cfg,
                               const ModalityBatch& dataset);

std::string loss_variant_label(TrainMeasure m);

}  // namespace synfuse
