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

#include "synfuse/cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "synfuse/data.hpp"
#include "synfuse/gradcheck.hpp"
#include "synfuse/reports.hpp"

namespace synfuse {

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  bool no_timestamp = false;
};

void emit_report(const json& j, const GlobalOpts& g) {
  const std::string payload = j.dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << payload;
  } else {
    write_text_atomic(g.out, payload);
  }
}

void note(const GlobalOpts& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << "\n";
}

// Column-group selector: comma-joined names out of {a, v, t}.
std::vector<std::size_t> parse_groups(const std::string& sel,
                                      std::size_t n_modalities) {
  const std::vector<std::string> names = csv_group_names(n_modalities);
  std::vector<std::size_t> idx;
  std::string cur;
  std::stringstream ss(sel);
  while (std::getline(ss, cur, ',')) {
    bool found = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (cur == names[i]) {
        idx.push_back(i);
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("unknown column group '" + cur +
                        "' (file has: a..)" );
    }
  }
  if (idx.empty()) throw ConfigError("empty column group selector");
  return idx;
}

double parse_sigma(const std::string& s) {
  if (s == "median") return 0.0;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !(v > 0.0)) throw std::invalid_argument("bad");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("--sigma expects 'median' or a positive float");
  }
}

json mi_config_echo(const MiEstimateConfig& cfg) {
  json j;
  j["steps"] = cfg.steps;
  j["batch"] = cfg.batch;
  j["lr"] = cfg.lr;
  j["ema_rate"] = cfg.ema_rate;
  j["seed"] = cfg.seed;
  return j;
}

json mmd_config_echo(const MmdDependenceConfig& cfg, std::uint64_t seed) {
  json j;
  j["kernel"] = cfg.deep ? "deep" : "gaussian";
  j["sigma"] = cfg.sigma > 0.0 ? json(cfg.sigma) : json("median");
  j["n_shuffles"] = cfg.n_shuffles;
  if (cfg.deep) j["eps_floor"] = cfg.eps_floor;
  j["seed"] = seed;
  return j;
}

// ---------------------------------------------------------------------------
// Subcommand state

struct GenDataOpts {
  std::string variant;
  std::size_t n = 1000;
  double rho = 0.5;
  std::size_t dim = 1;
  double flip_prob = 0.0;
  double dither_sd = 0.01;
  std::size_t latent_dim = 4;
  std::vector<std::size_t> dims{8, 8, 8};
  double noise_sd = 0.1;
  double beta = 0.0;
};

struct EstimateOpts {
  std::string csv;
  std::string x_sel = "a";
  std::string y_sel = "v";
  int steps = 400;
  std::size_t batch = 256;
  double lr = 1e-3;
  double ema_rate = 0.01;
  std::string kernel = "gaussian";
  std::string sigma = "median";
  int n_shuffles = 4;
  double eps_floor = 0.1;
  int pvalue_perms = 0;
  std::string measure = "mmd";
};

struct TrainOpts {
  std::string csv;
  std::string train_csv, val_csv, test_csv;
  std::string config_file;
  std::string fusion = "concat";
  std::string measure = "none";
  double lambda = 0.1;
  int epochs = 10;
  std::size_t batch = 128;
  double lr_model = 1e-3;
  double lr_critic = 1e-3;
  int critic_steps = 5;
  int warmup = 1;
  int patience = 0;
  std::string loss = "huber";
  std::size_t embed_dim = 8;
  std::vector<double> split{0.7, 0.15, 0.15};
  std::string checkpoint;
  std::string kernel = "gaussian";
  std::string sigma = "median";
  int n_shuffles = 4;
  bool train_kernel = false;
};

Matrix concat_groups(const ModalityBatch& batch,
                     const std::vector<std::size_t>& groups) {
  return concat_subset(batch, groups);
}

int cmd_gen_data(const GenDataOpts& o, const GlobalOpts& g) {
  if (g.out.empty()) throw ConfigError("gen-data requires --out <csv>");
  if (o.variant == "gaussian_pair") {
    GaussianPairSpec spec{o.rho, o.dim, o.n, g.seed};
    const PairedSamples s = gen_gaussian_pair(spec);
    std::vector<Matrix> mods{s.x, s.y};
    save_csv(ModalityBatch(std::move(mods)), g.out);
  } else if (o.variant == "xor_triple") {
    XorTripleSpec spec{o.flip_prob, o.dither_sd, o.n, g.seed};
    save_csv(gen_xor_triple(spec), g.out);
  } else if (o.variant == "multimodal") {
    if (o.dims.size() != 3) {
      throw ConfigError("multimodal variant needs exactly 3 --dims");
    }
    MultimodalSpec spec;
    spec.latent_dim = o.latent_dim;
    spec.modality_dims = {o.dims[0], o.dims[1], o.dims[2]};
    spec.noise_sd = o.noise_sd;
    spec.beta = o.beta;
    spec.n = o.n;
    spec.seed = g.seed;
    save_csv(gen_multimodal(spec), g.out);
  } else {
    throw ConfigError("unknown variant '" + o.variant +
                      "' (gaussian_pair | xor_triple | multimodal)");
  }
  note(g, "wrote " + g.out);
  return 0;
}

int cmd_estimate_mi(const EstimateOpts& o, const GlobalOpts& g) {
  const ModalityBatch batch = load_csv(o.csv);
  const Matrix x = concat_groups(batch, parse_groups(o.x_sel, batch.n_modalities()));
  const Matrix y = concat_groups(batch, parse_groups(o.y_sel, batch.n_modalities()));
  MiEstimateConfig cfg;
  cfg.steps = o.steps;
  cfg.batch = o.batch;
  cfg.lr = o.lr;
  cfg.ema_rate = o.ema_rate;
  cfg.seed = g.seed;
  const DependenceEstimate est = estimate_mi_dv(x, y, cfg);
  emit_report(estimate_to_json(est, mi_config_echo(cfg)), g);
  return 0;
}

int cmd_estimate_mmd(const EstimateOpts& o, const GlobalOpts& g) {
  const ModalityBatch batch = load_csv(o.csv);
  const Matrix x = concat_groups(batch, parse_groups(o.x_sel, batch.n_modalities()));
  const Matrix y = concat_groups(batch, parse_groups(o.y_sel, batch.n_modalities()));
  MmdDependenceConfig cfg;
  cfg.deep = o.kernel == "deep";
  if (!cfg.deep && o.kernel != "gaussian") {
    throw ConfigError("--kernel expects gaussian or deep");
  }
  cfg.sigma = parse_sigma(o.sigma);
  cfg.n_shuffles = o.n_shuffles;
  cfg.eps_floor = o.eps_floor;
  const PairedSamples s(x, y);
  const KernelSpec kernel = make_kernel(hcat(x, y), cfg);
  SeededRng rng(g.seed);
  SeededRng dep_rng = rng.split("dependence");
  const DependenceEstimate est =
      mmd_dependence(s, kernel, dep_rng, cfg.n_shuffles);
  json j = estimate_to_json(est, mmd_config_echo(cfg, g.seed));
  if (o.pvalue_perms > 0) {
    SeededRng p_rng = rng.split("pvalue");
    j["p_value"] = permutation_pvalue(s, kernel, p_rng, o.pvalue_perms);
    j["n_permutations"] = o.pvalue_perms;
  }
  emit_report(j, g);
  return 0;
}

int cmd_estimate_synergy(const EstimateOpts& o, const GlobalOpts& g) {
  const ModalityBatch batch = load_csv(o.csv);
  SynergyConfig cfg;
  if (o.measure == "kl") {
    cfg.measure = Measure::Kl;
    MiEstimateConfig mi;
    mi.steps = o.steps;
    mi.batch = o.batch;
    mi.lr = o.lr;
    mi.ema_rate = o.ema_rate;
    cfg.kl = mi;
  } else if (o.measure == "mmd") {
    cfg.measure = Measure::Mmd;
    MmdDependenceConfig mc;
    mc.deep = o.kernel == "deep";
    mc.sigma = parse_sigma(o.sigma);
    mc.n_shuffles = o.n_shuffles;
    mc.eps_floor = o.eps_floor;
    cfg.mmd = mc;
  } else {
    throw ConfigError("--measure expects kl or mmd");
  }
  SeededRng rng(g.seed);
  const double value = tse_synergy(batch, cfg, rng);
  json j;
  j["spec_version"] = kReportSpecVersion;
  j["kind"] = "synergy_estimate";
  j["measure"] = o.measure;
  j["value"] = value;
  j["n_samples"] = batch.rows();
  j["n_modalities"] = batch.n_modalities();
  j["n_partitions"] = bipartitions(batch.n_modalities()).size();
  j["seed"] = g.seed;
  emit_report(j, g);
  return 0;
}

void apply_train_config_file(TrainOpts& o, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config file: ") + e.what(), 0);
  }
  if (j.contains("fusion")) o.fusion = j["fusion"].get<std::string>();
  if (j.contains("measure")) o.measure = j["measure"].get<std::string>();
  if (j.contains("lambda")) o.lambda = j["lambda"].get<double>();
  if (j.contains("epochs")) o.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) o.batch = j["batch_size"].get<std::size_t>();
  if (j.contains("lr_model")) o.lr_model = j["lr_model"].get<double>();
  if (j.contains("lr_critic")) o.lr_critic = j["lr_critic"].get<double>();
  if (j.contains("critic_steps")) o.critic_steps = j["critic_steps"].get<int>();
  if (j.contains("warmup_epochs")) o.warmup = j["warmup_epochs"].get<int>();
  if (j.contains("patience")) o.patience = j["patience"].get<int>();
  if (j.contains("loss")) o.loss = j["loss"].get<std::string>();
  if (j.contains("embed_dim")) o.embed_dim = j["embed_dim"].get<std::size_t>();
  if (j.contains("split")) o.split = j["split"].get<std::vector<double>>();
  if (j.contains("kernel")) o.kernel = j["kernel"].get<std::string>();
  if (j.contains("sigma")) {
    o.sigma = j["sigma"].is_string() ? j["sigma"].get<std::string>()
                                     : std::to_string(j["sigma"].get<double>());
  }
  if (j.contains("n_shuffles")) o.n_shuffles = j["n_shuffles"].get<int>();
  if (j.contains("train_kernel")) o.train_kernel = j["train_kernel"].get<bool>();
}

TrainConfig train_config_from(const TrainOpts& o, std::uint64_t seed) {
  TrainConfig tc;
  tc.measure = train_measure_from_name(o.measure);
  tc.lambda = o.lambda;
  tc.critic_steps = o.critic_steps;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch;
  tc.lr_model = o.lr_model;
  tc.lr_critic = o.lr_critic;
  tc.seed = seed;
  tc.patience = o.patience;
  tc.warmup_epochs = o.warmup;
  if (o.loss == "huber") {
    tc.loss = TaskLoss::Huber;
  } else if (o.loss == "squared") {
    tc.loss = TaskLoss::Squared;
  } else {
    throw ConfigError("--loss expects huber or squared");
  }
  tc.mmd.deep = o.kernel == "deep";
  tc.mmd.sigma = o.sigma == "median" ? 0.0 : parse_sigma(o.sigma);
  tc.mmd.n_shuffles = o.n_shuffles;
  tc.train_kernel = o.train_kernel;
  return tc;
}

int cmd_train(const TrainOpts& o, const GlobalOpts& g) {
  DataSplits splits = [&]() -> DataSplits {
    if (!o.train_csv.empty()) {
      if (o.val_csv.empty() || o.test_csv.empty()) {
        throw ConfigError("--train-csv needs --val-csv and --test-csv");
      }
      return DataSplits{load_csv(o.train_csv), load_csv(o.val_csv),
                        load_csv(o.test_csv)};
    }
    if (o.csv.empty()) {
      throw ConfigError("train needs a csv argument or --train-csv/...");
    }
    if (o.split.size() != 3) {
      throw ConfigError("--split expects three fractions");
    }
    const ModalityBatch all = load_csv(o.csv);
    SeededRng root(g.seed);
    SeededRng split_rng = root.split("split");
    const SplitIndices si =
        split_indices(all.rows(), o.split[0], o.split[1], split_rng);
    return DataSplits{all.take_rows(si.train), all.take_rows(si.val),
                      all.take_rows(si.test)};
  }();

  std::vector<std::size_t> input_widths;
  for (const Matrix& m : splits.train.modalities) {
    input_widths.push_back(m.cols());
  }
  FusionModelConfig mc;
  mc.embed_dims.assign(input_widths.size(), o.embed_dim);
  mc.kind = fusion_kind_from_name(o.fusion);
  SeededRng root(g.seed);
  SeededRng model_rng = root.split("model-init");
  FusionModel model = make_fusion_model(input_widths, mc, model_rng);

  const TrainConfig tc = train_config_from(o, g.seed);
  note(g, "training " + o.fusion + " model, measure=" + o.measure +
              ", lambda=" + std::to_string(tc.lambda));
  const TrainReport rep = train(model, splits, tc);

  if (!o.checkpoint.empty()) {
    save_checkpoint(model, o.checkpoint);
    note(g, "checkpoint written to " + o.checkpoint);
  }
  emit_report(train_report_to_json(rep, !g.no_timestamp), g);
  return rep.aborted ? 1 : 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& csv,
                 const GlobalOpts& g) {
  const FusionModel model = load_checkpoint(checkpoint);
  const ModalityBatch batch = load_csv(csv);
  if (!batch.labels) throw UsageError("evaluate needs labeled data");
  const std::vector<double> preds = predict(model, batch, /*clamp=*/true);
  const MetricsReport m = compute_metrics(preds, *batch.labels);
  json j;
  j["spec_version"] = kReportSpecVersion;
  j["kind"] = "evaluation";
  j["checkpoint"] = checkpoint;
  j["metrics"] = metrics_to_json(m);
  emit_report(j, g);
  return 0;
}

GridConfig grid_config_from_json(const json& j, const ModalityBatch& data) {
  GridConfig gc;
  if (j.contains("models")) {
    gc.models.clear();
    for (const auto& m : j["models"]) {
      gc.models.push_back(fusion_kind_from_name(m.get<std::string>()));
    }
  }
  if (j.contains("measures")) {
    gc.measures.clear();
    for (const auto& m : j["measures"]) {
      gc.measures.push_back(train_measure_from_name(m.get<std::string>()));
    }
  }
  if (j.contains("lambdas")) {
    gc.lambdas = j["lambdas"].get<std::vector<double>>();
  }
  if (j.contains("seeds")) {
    gc.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (j.contains("split")) {
    const auto s = j["split"].get<std::vector<double>>();
    if (s.size() < 2) throw ConfigError("grid split expects two fractions");
    gc.split_train = s[0];
    gc.split_val = s[1];
  }
  TrainOpts base;
  if (j.contains("train")) {
    // Same keys as the train subcommand's config file.
    const json& t = j["train"];
    if (t.contains("measure")) {
      throw ConfigError("grid train block must not fix the measure");
    }
    if (t.contains("lambda")) {
      throw ConfigError("grid train block must not fix lambda");
    }
    if (t.contains("epochs")) base.epochs = t["epochs"].get<int>();
    if (t.contains("batch_size")) base.batch = t["batch_size"].get<std::size_t>();
    if (t.contains("lr_model")) base.lr_model = t["lr_model"].get<double>();
    if (t.contains("lr_critic")) base.lr_critic = t["lr_critic"].get<double>();
    if (t.contains("critic_steps")) base.critic_steps = t["critic_steps"].get<int>();
    if (t.contains("warmup_epochs")) base.warmup = t["warmup_epochs"].get<int>();
    if (t.contains("patience")) base.patience = t["patience"].get<int>();
    if (t.contains("loss")) base.loss = t["loss"].get<std::string>();
    if (t.contains("embed_dim")) base.embed_dim = t["embed_dim"].get<std::size_t>();
    if (t.contains("kernel")) base.kernel = t["kernel"].get<std::string>();
    if (t.contains("n_shuffles")) base.n_shuffles = t["n_shuffles"].get<int>();
    if (t.contains("train_kernel")) base.train_kernel = t["train_kernel"].get<bool>();
  }
  gc.base = train_config_from(base, 0);
  gc.model_cfg.embed_dims.assign(data.n_modalities(), base.embed_dim);
  return gc;
}

int cmd_grid(const std::string& csv, const std::string& config_file,
             const std::string& out_csv, const GlobalOpts& g) {
  const ModalityBatch data = load_csv(csv);
  json jc = json::object();
  if (!config_file.empty()) {
    std::ifstream is(config_file);
    if (!is) throw UsageError("cannot open grid config: " + config_file);
    try {
      is >> jc;
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("grid config: ") + e.what(), 0);
    }
  }
  const GridConfig gc = grid_config_from_json(jc, data);
  note(g, "running grid: " + std::to_string(gc.models.size()) + " models x " +
              std::to_string(gc.measures.size()) + " measures x " +
              std::to_string(gc.seeds.size()) + " seeds");
  const GridResult result = run_experiment_grid(gc, data);
  if (!out_csv.empty()) {
    write_text_atomic(out_csv, grid_to_csv(result));
    note(g, "grid csv written to " + out_csv);
  }
  emit_report(grid_to_json(result), g);
  return 0;
}

int cmd_gradcheck(const GlobalOpts& g) {
  const std::vector<GradCheckResult> results = run_all_gradchecks(
      g.seed == 0 ? 12345 : g.seed);
  bool all_passed = true;
  for (const GradCheckResult& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.suite << ": "
              << r.instances << " instances, max relative error "
              << r.max_rel_err << "\n";
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  GlobalOpts g;

  CLI::App app{"dependence estimation and synergy-regularized multimodal fusion"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  app.add_option("--seed", g.seed, "global random seed");
  app.add_option("--out", g.out, "write the JSON report here (default stdout)");
  app.add_flag("--quiet", g.quiet, "suppress progress notes");
  app.add_flag("--no-timestamp", g.no_timestamp,
               "omit wall-clock fields so reports are byte-reproducible");

  GenDataOpts gen;
  CLI::App* c_gen = app.add_subcommand("gen-data", "generate a synthetic CSV");
  c_gen->add_option("--variant", gen.variant,
                    "gaussian_pair | xor_triple | multimodal")->required();
  c_gen->add_option("--n", gen.n, "rows");
  c_gen->add_option("--rho", gen.rho, "gaussian pair correlation");
  c_gen->add_option("--dim", gen.dim, "gaussian pair dimensions");
  c_gen->add_option("--flip-prob", gen.flip_prob, "xor flip probability");
  c_gen->add_option("--dither-sd", gen.dither_sd, "xor dither stddev");
  c_gen->add_option("--latent-dim", gen.latent_dim, "multimodal latent size");
  c_gen->add_option("--dims", gen.dims, "multimodal widths (3 values)");
  c_gen->add_option("--noise-sd", gen.noise_sd, "multimodal noise stddev");
  c_gen->add_option("--beta", gen.beta, "multimodal synergy strength");

  EstimateOpts est;
  CLI::App* c_mi = app.add_subcommand("estimate-mi",
                                      "neural DV mutual information estimate");
  c_mi->add_option("csv", est.csv, "dataset")->required();
  c_mi->add_option("--x", est.x_sel, "column group(s) for X, e.g. a or a,v");
  c_mi->add_option("--y", est.y_sel, "column group(s) for Y");
  c_mi->add_option("--steps", est.steps, "critic training steps");
  c_mi->add_option("--batch", est.batch, "minibatch size");
  c_mi->add_option("--lr", est.lr, "critic learning rate");
  c_mi->add_option("--ema-rate", est.ema_rate, "denominator EMA rate");

  CLI::App* c_mmd = app.add_subcommand("estimate-mmd",
                                       "MMD dependence estimate");
  c_mmd->add_option("csv", est.csv, "dataset")->required();
  c_mmd->add_option("--x", est.x_sel, "column group(s) for X");
  c_mmd->add_option("--y", est.y_sel, "column group(s) for Y");
  c_mmd->add_option("--kernel", est.kernel, "gaussian | deep");
  c_mmd->add_option("--sigma", est.sigma, "median | <float>");
  c_mmd->add_option("--n-shuffles", est.n_shuffles, "product-shuffle count");
  c_mmd->add_option("--eps-floor", est.eps_floor, "deep kernel floor");
  c_mmd->add_option("--pvalue", est.pvalue_perms,
                    "also run a permutation test with this many permutations");

  CLI::App* c_syn = app.add_subcommand("estimate-synergy",
                                       "bipartition-averaged synergy");
  c_syn->add_option("csv", est.csv, "dataset")->required();
  c_syn->add_option("--measure", est.measure, "kl | mmd")->required();
  c_syn->add_option("--steps", est.steps, "KL critic steps");
  c_syn->add_option("--batch", est.batch, "KL minibatch size");
  c_syn->add_option("--lr", est.lr, "KL critic learning rate");
  c_syn->add_option("--kernel", est.kernel, "MMD kernel: gaussian | deep");
  c_syn->add_option("--sigma", est.sigma, "MMD bandwidth: median | <float>");
  c_syn->add_option("--n-shuffles", est.n_shuffles, "MMD shuffle count");

  TrainOpts tr;
  CLI::App* c_train = app.add_subcommand("train",
                                         "train a fusion model");
  c_train->add_option("csv", tr.csv, "dataset (split internally)");
  c_train->add_option("--train-csv", tr.train_csv, "explicit train split");
  c_train->add_option("--val-csv", tr.val_csv, "explicit val split");
  c_train->add_option("--test-csv", tr.test_csv, "explicit test split");
  c_train->add_option("--config", tr.config_file, "JSON config file");
  auto* o_fusion = c_train->add_option("--fusion", tr.fusion, "concat | tensor");
  auto* o_measure = c_train->add_option("--measure", tr.measure,
                                        "none | kl | mmd");
  auto* o_lambda = c_train->add_option("--lambda", tr.lambda, "synergy weight");
  auto* o_epochs = c_train->add_option("--epochs", tr.epochs, "epochs");
  auto* o_batch = c_train->add_option("--batch", tr.batch, "batch size");
  auto* o_lrm = c_train->add_option("--lr-model", tr.lr_model, "model LR");
  auto* o_lrc = c_train->add_option("--lr-critic", tr.lr_critic, "critic LR");
  auto* o_cs = c_train->add_option("--critic-steps", tr.critic_steps,
                                   "estimator updates per model step");
  auto* o_warm = c_train->add_option("--warmup", tr.warmup, "warmup epochs");
  auto* o_pat = c_train->add_option("--patience", tr.patience,
                                    "early-stop patience (0 = off)");
  auto* o_loss = c_train->add_option("--loss", tr.loss, "huber | squared");
  auto* o_embed = c_train->add_option("--embed-dim", tr.embed_dim,
                                      "embedding width per modality");
  auto* o_split = c_train->add_option("--split", tr.split,
                                      "train/val/test fractions");
  c_train->add_option("--checkpoint", tr.checkpoint, "checkpoint output path");
  auto* o_kernel = c_train->add_option("--kernel", tr.kernel,
                                       "MMD kernel: gaussian | deep");
  auto* o_sigma = c_train->add_option("--sigma", tr.sigma,
                                      "MMD bandwidth: median | <float>");
  auto* o_nsh = c_train->add_option("--n-shuffles", tr.n_shuffles,
                                    "MMD shuffle count");
  auto* o_tk = c_train->add_flag("--train-kernel", tr.train_kernel,
                                 "learn the deep kernel feature map");

  std::string ev_checkpoint, ev_csv;
  CLI::App* c_eval = app.add_subcommand("evaluate",
                                        "evaluate a checkpoint on a CSV");
  c_eval->add_option("--checkpoint", ev_checkpoint, "model checkpoint")
      ->required();
  c_eval->add_option("csv", ev_csv, "dataset")->required();

  std::string grid_config, grid_out_csv;
  std::string grid_csv;
  CLI::App* c_grid = app.add_subcommand("grid", "run an experiment grid");
  c_grid->add_option("csv", grid_csv, "dataset")->required();
  c_grid->add_option("--config", grid_config, "grid JSON config");
  c_grid->add_option("--out-csv", grid_out_csv, "per-run CSV table path");

  CLI::App* c_gc = app.add_subcommand("gradcheck",
                                      "finite-difference gradient suites");

  std::vector<std::string> argv(args);
  try {
    // CLI11 parses right to left.
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (c_gen->parsed()) return cmd_gen_data(gen, g);
    if (c_mi->parsed()) return cmd_estimate_mi(est, g);
    if (c_mmd->parsed()) return cmd_estimate_mmd(est, g);
    if (c_syn->parsed()) return cmd_estimate_synergy(est, g);
    if (c_train->parsed()) {
      if (!tr.config_file.empty()) {
        // Config file first, explicit flags win.
        TrainOpts from_file = tr;
        apply_train_config_file(from_file, tr.config_file);
        if (o_fusion->count() == 0) tr.fusion = from_file.fusion;
        if (o_measure->count() == 0) tr.measure = from_file.measure;
        if (o_lambda->count() == 0) tr.lambda = from_file.lambda;
        if (o_epochs->count() == 0) tr.epochs = from_file.epochs;
        if (o_batch->count() == 0) tr.batch = from_file.batch;
        if (o_lrm->count() == 0) tr.lr_model = from_file.lr_model;
        if (o_lrc->count() == 0) tr.lr_critic = from_file.lr_critic;
        if (o_cs->count() == 0) tr.critic_steps = from_file.critic_steps;
        if (o_warm->count() == 0) tr.warmup = from_file.warmup;
        if (o_pat->count() == 0) tr.patience = from_file.patience;
        if (o_loss->count() == 0) tr.loss = from_file.loss;
        if (o_embed->count() == 0) tr.embed_dim = from_file.embed_dim;
        if (o_split->count() == 0) tr.split = from_file.split;
        if (o_kernel->count() == 0) tr.kernel = from_file.kernel;
        if (o_sigma->count() == 0) tr.sigma = from_file.sigma;
        if (o_nsh->count() == 0) tr.n_shuffles = from_file.n_shuffles;
        if (o_tk->count() == 0) tr.train_kernel = from_file.train_kernel;
      }
      return cmd_train(tr, g);
    }
    if (c_eval->parsed()) return cmd_evaluate(ev_checkpoint, ev_csv, g);
    if (c_grid->parsed()) return cmd_grid(grid_csv, grid_config, grid_out_csv, g);
    if (c_gc->parsed()) return cmd_gradcheck(g);
    std::cerr << app.help() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientSamplesError& e) {
    std::cerr << "insufficient samples: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace synfuse
