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

#include "synfuse/dv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace synfuse {

namespace {

Matrix joint_rows_of(const PairedSamples& s) { return hcat(s.x, s.y); }

// Critic outputs as a flat vector; throws with a diagnostic if any output
// is non-finite.
std::vector<double> critic_outputs(const ForwardCache& cache,
                                   const char* what) {
  const Matrix& out = cache.output();
  std::vector<double> t(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    t[i] = out(i, 0);
    if (!std::isfinite(t[i])) {
      throw NumericError(std::string("dv critic produced non-finite output on ") +
                         what + " batch, row " + std::to_string(i));
    }
  }
  return t;
}

}  // namespace

double log_mean_exp(std::span<const double> v) {
  if (v.empty()) throw UsageError("log_mean_exp on empty vector");
  const double mx = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double t : v) acc += std::exp(t - mx);
  return mx + std::log(acc / static_cast<double>(v.size()));
}

DvCritic::DvCritic(std::size_t d_x, std::size_t d_y, const DvCriticConfig& cfg,
                   SeededRng& rng)
    : cfg_(cfg) {
  critic_ = make_net(d_x + d_y, cfg.hidden, 1, cfg.hidden_act,
                     Activation::Identity, rng);
  AdamConfig ac;
  ac.lr = cfg.lr;
  opt_ = AdamState(critic_.param_count(), ac);
  if (!(cfg.ema_rate > 0.0 && cfg.ema_rate < 1.0)) {
    throw ConfigError("ema_rate must lie in (0, 1)");
  }
}

double DvCritic::ema_denominator() const {
  if (!ema_init_) throw UsageError("ema denominator read before first update");
  return std::exp(ema_log_);
}

double dv_bound_net(const FeedforwardNet& critic, const Matrix& joint_rows,
                    const Matrix& product_rows) {
  if (joint_rows.cols() != critic.input_width() ||
      product_rows.cols() != critic.input_width()) {
    throw ShapeError("dv_bound: sample width does not match critic input");
  }
  const ForwardCache cj = net_forward(critic, joint_rows);
  const ForwardCache cp = net_forward(critic, product_rows);
  const std::vector<double> tj = critic_outputs(cj, "joint");
  const std::vector<double> tp = critic_outputs(cp, "product");
  const double mean_joint =
      std::accumulate(tj.begin(), tj.end(), 0.0) /
      static_cast<double>(tj.size());
  return mean_joint - log_mean_exp(tp);
}

double dv_bound(const DvCritic& critic, const PairedSamples& joint,
                const PairedSamples& product) {
  return dv_bound_net(critic.net(), joint_rows_of(joint),
                      joint_rows_of(product));
}

DvValueWithParamGrad dv_value_and_param_grad(
    const FeedforwardNet& critic, const Matrix& joint_rows,
    const Matrix& product_rows, std::optional<double> log_denom_override) {
  const ForwardCache cj = net_forward(critic, joint_rows);
  const ForwardCache cp = net_forward(critic, product_rows);
  const std::vector<double> tj = critic_outputs(cj, "joint");
  const std::vector<double> tp = critic_outputs(cp, "product");

  const double mean_joint =
      std::accumulate(tj.begin(), tj.end(), 0.0) /
      static_cast<double>(tj.size());
  const double batch_log = log_mean_exp(tp);

  DvValueWithParamGrad out;
  out.value = mean_joint - batch_log;
  out.batch_log_denom = batch_log;

  // d bound / d t_joint_i = 1/n; d bound / d t_prod_i = -exp(t_i - L) / m
  // with L the (possibly overridden) log denominator.
  const double log_denom = log_denom_override.value_or(batch_log);
  Matrix gj(joint_rows.rows(), 1);
  for (std::size_t i = 0; i < gj.rows(); ++i) {
    gj(i, 0) = 1.0 / static_cast<double>(gj.rows());
  }
  Matrix gp(product_rows.rows(), 1);
  for (std::size_t i = 0; i < gp.rows(); ++i) {
    gp(i, 0) = -std::exp(tp[i] - log_denom) /
               static_cast<double>(product_rows.rows());
  }

  const NetGrads ngj = net_backward(critic, cj, gj);
  const NetGrads ngp = net_backward(critic, cp, gp);
  out.grad = ngj.flat();
  const std::vector<double> flat_p = ngp.flat();
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += flat_p[i];
  return out;
}

DvValueWithInputGrad dv_value_and_input_grad(const FeedforwardNet& critic,
                                             const Matrix& joint_rows,
                                             const Matrix& product_rows) {
  const ForwardCache cj = net_forward(critic, joint_rows);
  const ForwardCache cp = net_forward(critic, product_rows);
  const std::vector<double> tj = critic_outputs(cj, "joint");
  const std::vector<double> tp = critic_outputs(cp, "product");

  const double mean_joint =
      std::accumulate(tj.begin(), tj.end(), 0.0) /
      static_cast<double>(tj.size());
  const double batch_log = log_mean_exp(tp);

  Matrix gj(joint_rows.rows(), 1);
  for (std::size_t i = 0; i < gj.rows(); ++i) {
    gj(i, 0) = 1.0 / static_cast<double>(gj.rows());
  }
  Matrix gp(product_rows.rows(), 1);
  for (std::size_t i = 0; i < gp.rows(); ++i) {
    gp(i, 0) = -std::exp(tp[i] - batch_log) /
               static_cast<double>(product_rows.rows());
  }

  DvValueWithInputGrad out;
  out.value = mean_joint - batch_log;
  out.grad_joint = net_backward(critic, cj, gj).input;
  out.grad_product = net_backward(critic, cp, gp).input;
  return out;
}

double DvCritic::train_step(const PairedSamples& joint,
                            const PairedSamples& product) {
  const Matrix jr = joint_rows_of(joint);
  const Matrix pr = joint_rows_of(product);
  std::optional<double> override;
  if (ema_init_) override = ema_log_;
  const DvValueWithParamGrad g =
      dv_value_and_param_grad(critic_, jr, pr, override);

  // Ascent on the bound: feed the negated gradient to Adam.
  std::vector<double> params = critic_.flat_params();
  std::vector<double> neg(g.grad.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -g.grad[i];
  adam_step(params, neg, opt_);
  critic_.set_flat_params(params);

  if (!ema_init_) {
    ema_log_ = g.batch_log_denom;
    ema_init_ = true;
  } else {
    // log((1-r) e^ema + r e^batch), stable in log domain.
    const double a = std::log1p(-cfg_.ema_rate) + ema_log_;
    const double b = std::log(cfg_.ema_rate) + g.batch_log_denom;
    const double mx = std::max(a, b);
    ema_log_ = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
  }
  return g.value;
}

DependenceEstimate estimate_mi_dv(const Matrix& x, const Matrix& y,
                                  const MiEstimateConfig& cfg) {
  if (x.rows() != y.rows()) {
    throw ShapeError("estimate_mi_dv: x and y row counts differ");
  }
  if (x.rows() < 64) {
    throw InsufficientSamplesError(
        "estimate_mi_dv needs at least 64 rows, got " +
        std::to_string(x.rows()));
  }
  if (cfg.steps < 100) {
    throw ConfigError("estimate_mi_dv needs at least 100 steps");
  }
  const std::size_t n = x.rows();
  const std::size_t batch = std::min(cfg.batch, n);
  if (batch < kMinPairedSamples) {
    throw ConfigError("estimate_mi_dv batch below minimum sample count");
  }

  SeededRng root(cfg.seed);
  SeededRng init_rng = root.split("critic-init");
  SeededRng batch_rng = root.split("batching");
  SeededRng eval_rng = root.split("eval-shuffle");

  DvCriticConfig ccfg;
  ccfg.hidden = cfg.hidden;
  ccfg.lr = cfg.lr;
  ccfg.ema_rate = cfg.ema_rate;
  DvCritic critic(x.cols(), y.cols(), ccfg, init_rng);

  const Matrix joint_full = hcat(x, y);
  const int tail_steps = std::max(1, cfg.steps / 10);
  double tail_sum = 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int step = 0; step < cfg.steps; ++step) {
    // Partial Fisher-Yates: the first `batch` entries become a uniform
    // sample without replacement.
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t j = i + batch_rng.uniform_int(n - i);
      std::swap(order[i], order[j]);
    }
    const std::span<const std::size_t> pick(order.data(), batch);
    const PairedSamples joint_b(x.take_rows(pick), y.take_rows(pick));
    const PairedSamples product_b = shuffle_product_marginals(joint_b, batch_rng);
    critic.train_step(joint_b, product_b);

    if (step >= cfg.steps - tail_steps) {
      const std::vector<std::size_t> perm = random_derangement(n, eval_rng);
      const Matrix product_full = hcat(x, y.take_rows(perm));
      tail_sum += dv_bound_net(critic.net(), joint_full, product_full);
    }
  }

  const double value = tail_sum / static_cast<double>(tail_steps);
  if (!std::isfinite(value)) {
    throw NumericError("estimate_mi_dv produced a non-finite estimate");
  }
  return DependenceEstimate{value, n, Measure::Kl};
}

}  // namespace synfuse
