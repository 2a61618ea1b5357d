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

#include <cstdint>
#include <optional>

#include "synfuse/adam.hpp"
#include "synfuse/net.hpp"
#include "synfuse/samples.hpp"

namespace synfuse {

struct DvCriticConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation hidden_act = Activation::Relu;
  double lr = 1e-3;
  double ema_rate = 0.01;
};

// Donsker-Varadhan critic with the moving-average denominator used to
// de-bias the gradient of the log term. The average is kept in log domain
// so large critic outputs cannot overflow it.
class DvCritic {
 public:
  DvCritic(std::size_t d_x, std::size_t d_y, const DvCriticConfig& cfg,
           SeededRng& rng);

  const FeedforwardNet& net() const { return critic_; }
  FeedforwardNet& net() { return critic_; }
  std::size_t input_width() const { return critic_.input_width(); }

  bool ema_initialized() const { return ema_init_; }
  double ema_denominator() const;
  double ema_rate() const { return cfg_.ema_rate; }
  const DvCriticConfig& config() const { return cfg_; }

  // One gradient-ascent step on the DV bound. The log-denominator gradient
  // uses the moving average in place of the batch denominator; the average
  // itself is updated after the step (initialized from the first batch).
  // Returns the bound evaluated before the update.
  double train_step(const PairedSamples& joint, const PairedSamples& product);

 private:
  FeedforwardNet critic_;
  AdamState opt_;
  DvCriticConfig cfg_;
  double ema_log_ = 0.0;
  bool ema_init_ = false;
};

// log(mean(exp(v))) with max-subtraction.
double log_mean_exp(std::span<const double> v);

// mean_joint[T] - log mean_product[exp T].
double dv_bound(const DvCritic& critic, const PairedSamples& joint,
                const PairedSamples& product);
double dv_bound_net(const FeedforwardNet& critic, const Matrix& joint_rows,
                    const Matrix& product_rows);

struct DvValueWithParamGrad {
  double value = 0.0;
  double batch_log_denom = 0.0;
  std::vector<double> grad;  // d bound / d critic params
};

// Gradient of the bound w.r.t. critic parameters. When log_denom_override
// is set (training path) the log-term weights use it instead of the batch
// denominator; leave it empty for the exact gradient of the value.
DvValueWithParamGrad dv_value_and_param_grad(
    const FeedforwardNet& critic, const Matrix& joint_rows,
    const Matrix& product_rows,
    std::optional<double> log_denom_override = std::nullopt);

struct DvValueWithInputGrad {
  double value = 0.0;
  Matrix grad_joint;    // d bound / d joint rows (n x (d_x+d_y))
  Matrix grad_product;  // d bound / d product rows
};

// Exact gradient of the bound w.r.t. the critic inputs, critic parameters
// held fixed. Used by the synergy penalty.
DvValueWithInputGrad dv_value_and_input_grad(const FeedforwardNet& critic,
                                             const Matrix& joint_rows,
                                             const Matrix& product_rows);

struct MiEstimateConfig {
  int steps = 400;
  std::size_t batch = 256;
  double lr = 1e-3;
  double ema_rate = 0.01;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{64, 64};
};

// Trains a fresh critic by minibatch DV ascent and reports the full-data
// bound averaged over the final 10% of steps.
DependenceEstimate estimate_mi_dv(const Matrix& x, const Matrix& y,
                                  const MiEstimateConfig& cfg);

}  // namespace synfuse
