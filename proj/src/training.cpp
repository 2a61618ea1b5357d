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

#include "synfuse/training.hpp"

#include <chrono>
#include <cmath>

namespace synfuse {

std::string train_measure_name(TrainMeasure m) {
  switch (m) {
    case TrainMeasure::None: return "none";
    case TrainMeasure::Kl: return "kl";
    case TrainMeasure::Mmd: return "mmd";
  }
  return "none";
}

TrainMeasure train_measure_from_name(const std::string& name) {
  if (name == "none") return TrainMeasure::None;
  if (name == "kl") return TrainMeasure::Kl;
  if (name == "mmd") return TrainMeasure::Mmd;
  throw ConfigError("unknown synergy measure: " + name);
}

std::string loss_variant_label(TrainMeasure m) {
  switch (m) {
    case TrainMeasure::None: return "mle";
    case TrainMeasure::Kl: return "s_kl";
    case TrainMeasure::Mmd: return "s_mmd";
  }
  return "mle";
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (cfg.epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (cfg.critic_steps < 1) throw ConfigError("critic_steps must be >= 1");
  if (cfg.warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
  if (cfg.patience < 0) throw ConfigError("patience must be >= 0");
  if (cfg.measure == TrainMeasure::Kl && cfg.batch_size < 64) {
    throw ConfigError("KL synergy needs batch_size >= 64");
  }
  if (cfg.measure == TrainMeasure::Mmd && cfg.batch_size < 8) {
    throw ConfigError("MMD synergy needs batch_size >= 8");
  }
  if (cfg.batch_size < 2) throw ConfigError("batch_size must be >= 2");
}

double total_loss(double task_loss_value, double synergy, double lambda) {
  return task_loss_value - lambda * synergy;
}

namespace {

std::vector<std::size_t> embed_widths(const FusionModel& model) {
  std::vector<std::size_t> w;
  for (const FeedforwardNet& e : model.encoders) w.push_back(e.output_width());
  return w;
}

class NoneSynergy final : public SynergyTerm {
 public:
  SynergyValueAndGrad value_and_grad(const std::vector<Matrix>&,
                                     SeededRng&) override {
    return SynergyValueAndGrad{};  // value 0, no gradient contribution
  }
};

class KlSynergyTerm final : public SynergyTerm {
 public:
  KlSynergyTerm(const FusionModel& model, const TrainConfig& cfg,
                SeededRng& init_rng)
      : parts_(bipartitions(model.n_modalities())), steps_(cfg.critic_steps) {
    const std::vector<std::size_t> widths = embed_widths(model);
    DvCriticConfig ccfg;
    ccfg.hidden = cfg.critic_hidden;
    ccfg.lr = cfg.lr_critic;
    ccfg.ema_rate = cfg.ema_rate;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      std::size_t dx = 0, dy = 0;
      for (std::size_t i : parts_[k].left) dx += widths[i];
      for (std::size_t i : parts_[k].right) dy += widths[i];
      SeededRng r = init_rng.split("critic-init", k);
      critics_.emplace_back(dx, dy, ccfg, r);
    }
  }

  void update_estimators(const std::vector<Matrix>& z,
                         SeededRng& rng) override {
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      const Matrix xs = concat_all(z, parts_[k].left);
      const Matrix ys = concat_all(z, parts_[k].right);
      const PairedSamples joint(xs, ys);
      for (int s = 0; s < steps_; ++s) {
        const PairedSamples product = shuffle_product_marginals(joint, rng);
        critics_[k].train_step(joint, product);
      }
    }
  }

  SynergyValueAndGrad value_and_grad(const std::vector<Matrix>& z,
                                     SeededRng& rng) override {
    std::vector<const FeedforwardNet*> nets;
    for (const DvCritic& c : critics_) nets.push_back(&c.net());
    return synergy_value_and_grad_kl(z, nets, fresh_derangements(z, rng));
  }

  double value_only(const std::vector<Matrix>& z, SeededRng& rng) override {
    const auto ders = fresh_derangements(z, rng);
    double total = 0.0;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      const Matrix xs = concat_all(z, parts_[k].left);
      const Matrix ys = concat_all(z, parts_[k].right);
      total += dv_bound_net(critics_[k].net(), hcat(xs, ys),
                            hcat(xs, ys.take_rows(ders[k])));
    }
    return total / static_cast<double>(parts_.size());
  }

 private:
  std::vector<std::vector<std::size_t>> fresh_derangements(
      const std::vector<Matrix>& z, SeededRng& rng) const {
    std::vector<std::vector<std::size_t>> ders;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      ders.push_back(random_derangement(z.front().rows(), rng));
    }
    return ders;
  }

  std::vector<Bipartition> parts_;
  std::vector<DvCritic> critics_;
  int steps_;
};

class MmdSynergyTerm final : public SynergyTerm {
 public:
  MmdSynergyTerm(const FusionModel& model, const TrainConfig& cfg,
                 SeededRng& init_rng)
      : parts_(bipartitions(model.n_modalities())),
        cfg_(cfg.mmd),
        train_kernel_(cfg.train_kernel),
        steps_(cfg.critic_steps) {
    if (cfg_.deep || train_kernel_) {
      const std::vector<std::size_t> widths = embed_widths(model);
      std::size_t total_w = 0;
      for (std::size_t w : widths) total_w += w;
      AdamConfig ac;
      ac.lr = cfg.lr_critic;
      for (std::size_t k = 0; k < parts_.size(); ++k) {
        SeededRng r = init_rng.split("phi-init", k);
        const std::size_t out_w =
            cfg_.phi_out > 0 ? cfg_.phi_out : total_w;
        phi_.push_back(std::make_shared<FeedforwardNet>(
            make_net(total_w, cfg_.phi_hidden, out_w, Activation::Relu,
                     Activation::Identity, r)));
        phi_opt_.emplace_back(phi_.back()->param_count(), ac);
      }
      deep_ = true;
    }
  }

  void update_estimators(const std::vector<Matrix>& z,
                         SeededRng& rng) override {
    if (!train_kernel_) return;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      const Matrix xs = concat_all(z, parts_[k].left);
      const Matrix ys = concat_all(z, parts_[k].right);
      const Matrix joint = hcat(xs, ys);
      for (int s = 0; s < steps_; ++s) {
        const auto der = random_derangement(joint.rows(), rng);
        const Matrix product = hcat(xs, ys.take_rows(der));
        const DeepKernel kern = kernel_for(k, joint);
        std::vector<double> grad = mmd2_phi_param_grad(joint, product, kern);
        for (double& g : grad) g = -g;  // ascent on the statistic
        std::vector<double> params = phi_[k]->flat_params();
        adam_step(params, grad, phi_opt_[k]);
        phi_[k]->set_flat_params(params);
      }
    }
  }

  SynergyValueAndGrad value_and_grad(const std::vector<Matrix>& z,
                                     SeededRng& rng) override {
    std::vector<KernelSpec> kernels = kernels_for(z);
    std::vector<std::vector<std::size_t>> ders;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      ders.push_back(random_derangement(z.front().rows(), rng));
    }
    return synergy_value_and_grad_mmd(z, kernels, ders);
  }

 private:
  DeepKernel kernel_for(std::size_t k, const Matrix& joint) const {
    DeepKernel kern;
    kern.phi = phi_[k];
    kern.sigma_raw =
        cfg_.sigma > 0.0 ? cfg_.sigma : median_heuristic(joint);
    const Matrix feats = net_forward(*phi_[k], joint).output();
    kern.sigma_feature =
        cfg_.sigma > 0.0 ? cfg_.sigma : median_heuristic(feats);
    kern.eps_floor = cfg_.eps_floor;
    return kern;
  }

  std::vector<KernelSpec> kernels_for(const std::vector<Matrix>& z) const {
    std::vector<KernelSpec> kernels;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      const Matrix xs = concat_all(z, parts_[k].left);
      const Matrix ys = concat_all(z, parts_[k].right);
      const Matrix joint = hcat(xs, ys);
      if (deep_) {
        kernels.emplace_back(kernel_for(k, joint));
      } else {
        const double sigma =
            cfg_.sigma > 0.0 ? cfg_.sigma : median_heuristic(joint);
        kernels.emplace_back(GaussianKernel{sigma});
      }
    }
    return kernels;
  }

  std::vector<Bipartition> parts_;
  MmdDependenceConfig cfg_;
  bool deep_ = false;
  bool train_kernel_ = false;
  int steps_;
  std::vector<std::shared_ptr<FeedforwardNet>> phi_;
  std::vector<AdamState> phi_opt_;
};

MetricsReport eval_model(const FusionModel& model, const ModalityBatch& batch) {
  if (!batch.labels) throw UsageError("evaluation batch has no labels");
  const std::vector<double> preds = predict(model, batch, /*clamp=*/true);
  return compute_metrics(preds, *batch.labels);
}

}  // namespace

std::unique_ptr<SynergyTerm> make_synergy_term(const FusionModel& model,
                                               const TrainConfig& cfg,
                                               SeededRng& init_rng) {
  switch (cfg.measure) {
    case TrainMeasure::None:
      return std::make_unique<NoneSynergy>();
    case TrainMeasure::Kl:
      return std::make_unique<KlSynergyTerm>(model, cfg, init_rng);
    case TrainMeasure::Mmd:
      return std::make_unique<MmdSynergyTerm>(model, cfg, init_rng);
  }
  throw ConfigError("unknown synergy measure");
}

TrainReport train(FusionModel& model, const DataSplits& splits,
                  const TrainConfig& cfg, SynergyTerm* synergy_override) {
  validate_train_config(cfg);
  if (splits.train.rows() == 0) throw ConfigError("empty train split");
  if (!splits.train.labels || !splits.test.labels) {
    throw UsageError("training requires labeled train and test splits");
  }
  const bool has_val = splits.val.rows() > 0;
  if (cfg.patience > 0 && !has_val) {
    throw ConfigError("early stopping needs a nonempty validation split");
  }
  if (has_val && !splits.val.labels) {
    throw UsageError("validation split has no labels");
  }
  if (splits.train.rows() < cfg.batch_size) {
    throw ConfigError("train split smaller than one batch");
  }

  const auto t_start = std::chrono::steady_clock::now();

  SeededRng root(cfg.seed);
  SeededRng synergy_init = root.split("synergy-init");
  SeededRng estimator_rng = root.split("estimator-shuffles");
  SeededRng synergy_rng = root.split("synergy-derangements");

  std::unique_ptr<SynergyTerm> own_term;
  SynergyTerm* term = synergy_override;
  if (!term) {
    own_term = make_synergy_term(model, cfg, synergy_init);
    term = own_term.get();
  }

  AdamConfig ac;
  ac.lr = cfg.lr_model;
  AdamState opt(model.param_count(), ac);

  TrainReport report;
  report.config = cfg;
  report.seed = cfg.seed;

  std::vector<double> best_params = model.flat_params();
  double best_val_mae = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int epochs_since_best = 0;

  const std::size_t n_train = splits.train.rows();
  const std::size_t n_batches = n_train / cfg.batch_size;  // drop last partial
  const bool synergy_on =
      cfg.measure != TrainMeasure::None && cfg.lambda > 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SeededRng order_rng = root.split("epoch-order", epoch);
    const std::vector<std::size_t> order =
        random_permutation(n_train, order_rng);

    const bool in_warmup = epoch < cfg.warmup_epochs;
    const double lambda_applied = (synergy_on && !in_warmup) ? cfg.lambda : 0.0;

    double task_sum = 0.0, syn_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::span<const std::size_t> idx(order.data() + b * cfg.batch_size,
                                             cfg.batch_size);
      const ModalityBatch batch = splits.train.take_rows(idx);

      // Phase 1: estimator updates on embeddings treated as constants.
      if (cfg.measure != TrainMeasure::None) {
        const std::vector<Matrix> z_const = encode(model, batch);
        term->update_estimators(z_const, estimator_rng);
      }

      // Phase 2: one model step with estimators frozen.
      const ModelCache cache = model_forward(model, batch);
      const LossWithGrad task =
          task_loss(cfg.loss, cache.predictions(), *batch.labels);

      double syn_value = 0.0;
      const std::vector<Matrix>* extra = nullptr;
      std::vector<Matrix> scaled;
      if (cfg.measure != TrainMeasure::None) {
        if (lambda_applied > 0.0) {
          SynergyValueAndGrad sg = term->value_and_grad(cache.z, synergy_rng);
          syn_value = sg.value;
          if (!sg.grads.empty()) {
            scaled = std::move(sg.grads);
            for (Matrix& g : scaled) {
              for (std::size_t i = 0; i < g.size(); ++i) {
                g.data()[i] *= -lambda_applied;
              }
            }
            extra = &scaled;
          }
        } else {
          syn_value = term->value_only(cache.z, synergy_rng);
        }
      }

      const double step_total =
          total_loss(task.value, syn_value, lambda_applied);
      if (!std::isfinite(step_total)) {
        report.aborted = true;
        report.abort_reason =
            "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
            std::to_string(b) + " (task=" + std::to_string(task.value) +
            ", synergy=" + std::to_string(syn_value) + ")";
        break;
      }

      const std::vector<double> grads =
          model_backward(model, cache, task.grad, extra);
      std::vector<double> params = model.flat_params();
      adam_step(params, grads, opt);
      model.set_flat_params(params);

      task_sum += task.value;
      syn_sum += syn_value;
    }
    if (report.aborted) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.task_loss = task_sum / static_cast<double>(n_batches);
    rec.synergy = syn_sum / static_cast<double>(n_batches);
    rec.lambda_applied = lambda_applied;
    rec.total_loss = total_loss(rec.task_loss, rec.synergy, lambda_applied);
    if (has_val) {
      rec.val = eval_model(model, splits.val);
      if (rec.val->mae < best_val_mae) {
        best_val_mae = rec.val->mae;
        best_params = model.flat_params();
        best_epoch = epoch;
        epochs_since_best = 0;
      } else {
        ++epochs_since_best;
      }
    }
    report.epochs.push_back(std::move(rec));

    if (cfg.patience > 0 && epochs_since_best > cfg.patience) break;
  }

  if (has_val && best_epoch >= 0) {
    model.set_flat_params(best_params);
  }
  report.best_epoch = best_epoch;
  report.test = eval_model(model, splits.test);
  if (!report.epochs.empty()) {
    report.synergy_final = report.epochs.back().synergy;
  }

  const auto t_end = std::chrono::steady_clock::now();
  report.wall_clock_sec =
      std::chrono::duration<double>(t_end - t_start).count();
  return report;
}

GridResult run_experiment_grid(const GridConfig& cfg,
                               const ModalityBatch& dataset) {
  if (cfg.models.empty() || cfg.measures.empty() || cfg.seeds.empty()) {
    throw ConfigError("experiment grid must not be empty");
  }
  if (!dataset.labels) throw UsageError("experiment grid needs labeled data");

  std::vector<std::size_t> input_widths;
  for (const Matrix& m : dataset.modalities) input_widths.push_back(m.cols());

  GridResult result;
  for (FusionKind kind : cfg.models) {
    for (TrainMeasure measure : cfg.measures) {
      const std::vector<double> lambdas =
          measure == TrainMeasure::None ? std::vector<double>{0.0}
                                        : cfg.lambdas;
      for (double lambda : lambdas) {
        for (std::uint64_t seed : cfg.seeds) {
          RunRecord rec;
          rec.model = kind;
          rec.measure = measure;
          rec.lambda = lambda;
          rec.seed = seed;
          try {
            SeededRng cell(seed);
            SeededRng split_rng = cell.split("split");
            const SplitIndices si = split_indices(
                dataset.rows(), cfg.split_train, cfg.split_val, split_rng);
            DataSplits splits{dataset.take_rows(si.train),
                              dataset.take_rows(si.val),
                              dataset.take_rows(si.test)};

            FusionModelConfig mc = cfg.model_cfg;
            mc.kind = kind;
            SeededRng model_rng = cell.split("model-init");
            FusionModel model = make_fusion_model(input_widths, mc, model_rng);

            TrainConfig tc = cfg.base;
            tc.measure = measure;
            tc.lambda = lambda;
            tc.seed = seed;
            const TrainReport rep = train(model, splits, tc);
            if (rep.aborted) {
              rec.ok = false;
              rec.error = rep.abort_reason;
            } else {
              rec.ok = true;
              rec.test = rep.test;
              rec.synergy_final = rep.synergy_final;
            }
          } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
          }
          result.runs.push_back(std::move(rec));
        }
      }
    }
  }

  // Deterministic reduce in grid order.
  for (FusionKind kind : cfg.models) {
    for (TrainMeasure measure : cfg.measures) {
      const std::vector<double> lambdas =
          measure == TrainMeasure::None ? std::vector<double>{0.0}
                                        : cfg.lambdas;
      for (double lambda : lambdas) {
        AggregateRow row;
        row.model = kind;
        row.measure = measure;
        row.lambda = lambda;
        std::vector<const RunRecord*> cell;
        for (const RunRecord& r : result.runs) {
          if (r.ok && r.model == kind && r.measure == measure &&
              r.lambda == lambda) {
            cell.push_back(&r);
          }
        }
        row.n_runs = cell.size();
        if (!cell.empty()) {
          auto mean_std = [&cell](auto getter, double& mean, double& sd) {
            double m = 0.0;
            for (const RunRecord* r : cell) m += getter(*r);
            m /= static_cast<double>(cell.size());
            double v = 0.0;
            for (const RunRecord* r : cell) {
              const double d = getter(*r) - m;
              v += d * d;
            }
            sd = cell.size() > 1
                     ? std::sqrt(v / static_cast<double>(cell.size() - 1))
                     : 0.0;
            mean = m;
          };
          mean_std([](const RunRecord& r) { return r.test.mae; }, row.mae_mean,
                   row.mae_std);
          mean_std([](const RunRecord& r) { return r.test.acc7; },
                   row.acc7_mean, row.acc7_std);
          mean_std([](const RunRecord& r) { return r.test.acc2.value_or(0.0); },
                   row.acc2_mean, row.acc2_std);
          mean_std([](const RunRecord& r) { return r.test.pearson_corr; },
                   row.corr_mean, row.corr_std);
          mean_std([](const RunRecord& r) { return r.synergy_final; },
                   row.synergy_mean, row.synergy_std);
        }
        result.aggregates.push_back(std::move(row));
      }
    }
  }
  return result;
}

}  // namespace synfuse
