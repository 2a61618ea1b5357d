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

#include "synfuse/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace synfuse {

using nlohmann::json;

json metrics_to_json(const MetricsReport& m) {
  json j;
  j["mae"] = m.mae;
  j["pearson_corr"] = m.pearson_corr;
  if (m.acc2) {
    j["acc2"] = *m.acc2;
  } else {
    j["acc2"] = nullptr;
  }
  j["acc7"] = m.acc7;
  j["n_eval"] = m.n_eval;
  j["n_dropped_zero_labels"] = m.n_dropped_zero_labels;
  return j;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["measure"] = train_measure_name(cfg.measure);
  j["lambda"] = cfg.lambda;
  j["critic_steps"] = cfg.critic_steps;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr_model"] = cfg.lr_model;
  j["lr_critic"] = cfg.lr_critic;
  j["seed"] = cfg.seed;
  j["patience"] = cfg.patience;
  j["warmup_epochs"] = cfg.warmup_epochs;
  j["loss"] = cfg.loss == TaskLoss::Huber ? "huber" : "squared";
  j["critic_hidden"] = cfg.critic_hidden;
  j["ema_rate"] = cfg.ema_rate;
  j["mmd_deep"] = cfg.mmd.deep;
  j["mmd_sigma"] = cfg.mmd.sigma;
  j["mmd_n_shuffles"] = cfg.mmd.n_shuffles;
  j["mmd_eps_floor"] = cfg.mmd.eps_floor;
  j["train_kernel"] = cfg.train_kernel;
  return j;
}

json train_report_to_json(const TrainReport& rep, bool include_timing) {
  json j;
  j["spec_version"] = kReportSpecVersion;
  j["kind"] = "train_report";
  j["config"] = train_config_to_json(rep.config);
  j["seed"] = rep.seed;
  json epochs = json::array();
  for (const EpochRecord& e : rep.epochs) {
    json je;
    je["epoch"] = e.epoch;
    je["task_loss"] = e.task_loss;
    je["synergy"] = e.synergy;
    je["lambda_applied"] = e.lambda_applied;
    je["total_loss"] = e.total_loss;
    if (e.val) je["val"] = metrics_to_json(*e.val);
    epochs.push_back(std::move(je));
  }
  j["epochs"] = std::move(epochs);
  j["best_epoch"] = rep.best_epoch;
  j["test"] = metrics_to_json(rep.test);
  j["synergy_final"] = rep.synergy_final;
  j["aborted"] = rep.aborted;
  if (rep.aborted) j["abort_reason"] = rep.abort_reason;
  if (include_timing) j["wall_clock_sec"] = rep.wall_clock_sec;
  return j;
}

json estimate_to_json(const DependenceEstimate& est,
                      const json& config_echo) {
  json j;
  j["spec_version"] = kReportSpecVersion;
  j["kind"] = "dependence_estimate";
  j["measure"] = measure_name(est.measure);
  j["value"] = est.value;
  j["n_samples"] = est.n_samples;
  j["config"] = config_echo;
  return j;
}

json grid_to_json(const GridResult& grid) {
  json j;
  j["spec_version"] = kReportSpecVersion;
  j["kind"] = "experiment_grid";
  json runs = json::array();
  for (const RunRecord& r : grid.runs) {
    json jr;
    jr["model"] = fusion_kind_name(r.model);
    jr["loss_variant"] = loss_variant_label(r.measure);
    jr["lambda"] = r.lambda;
    jr["seed"] = r.seed;
    jr["ok"] = r.ok;
    if (r.ok) {
      jr["test"] = metrics_to_json(r.test);
      jr["synergy_final"] = r.synergy_final;
    } else {
      jr["error"] = r.error;
    }
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  json aggs = json::array();
  for (const AggregateRow& a : grid.aggregates) {
    json ja;
    ja["model"] = fusion_kind_name(a.model);
    ja["loss_variant"] = loss_variant_label(a.measure);
    ja["lambda"] = a.lambda;
    ja["n_runs"] = a.n_runs;
    ja["mae_mean"] = a.mae_mean;
    ja["mae_std"] = a.mae_std;
    ja["acc7_mean"] = a.acc7_mean;
    ja["acc7_std"] = a.acc7_std;
    ja["acc2_mean"] = a.acc2_mean;
    ja["acc2_std"] = a.acc2_std;
    ja["corr_mean"] = a.corr_mean;
    ja["corr_std"] = a.corr_std;
    ja["synergy_mean"] = a.synergy_mean;
    ja["synergy_std"] = a.synergy_std;
    aggs.push_back(std::move(ja));
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string grid_to_csv(const GridResult& grid) {
  std::string out = "model,loss_variant,lambda,seed,acc7,acc2,mae,corr,synergy_final\n";
  for (const RunRecord& r : grid.runs) {
    if (!r.ok) continue;
    out += fusion_kind_name(r.model);
    out += ',' + loss_variant_label(r.measure);
    out += ',' + fmt_double(r.lambda);
    out += ',' + std::to_string(r.seed);
    out += ',' + fmt_double(r.test.acc7);
    out += ',';
    out += r.test.acc2 ? fmt_double(*r.test.acc2) : std::string("");
    out += ',' + fmt_double(r.test.mae);
    out += ',' + fmt_double(r.test.pearson_corr);
    out += ',' + fmt_double(r.synergy_final);
    out += '\n';
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
    if (!os) throw UsageError("cannot open for writing: " + path);
    os << content;
    if (!os) throw UsageError("write failed: " + path);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace synfuse
