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
#include <string>
#include <vector>

#include "synfuse/matrix.hpp"
#include "synfuse/rng.hpp"

namespace synfuse {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2 };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
  Activation act = Activation::Identity;

  std::size_t in_width() const { return weight.cols(); }
  std::size_t out_width() const { return weight.rows(); }
};

// Fully-connected net evaluated as a = act(x W^T + b) per layer.
// Backprop is hand-derived per layer; parameter gradients are sums over
// the batch rows.
class FeedforwardNet {
 public:
  FeedforwardNet() = default;
  explicit FeedforwardNet(std::vector<Layer> layers);

  std::size_t input_width() const { return layers_.front().in_width(); }
  std::size_t output_width() const { return layers_.back().out_width(); }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return layers_[i]; }
  Layer& layer(std::size_t i) { return layers_[i]; }

  std::size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> params);

 private:
  std::vector<Layer> layers_;
};

// Hidden layers use hidden_act, the output layer out_act. Weights are
// Glorot-uniform (+-sqrt(6/(fan_in+fan_out))), biases zero.
FeedforwardNet make_net(std::size_t input, const std::vector<std::size_t>& hidden,
                        std::size_t output, Activation hidden_act,
                        Activation out_act, SeededRng& rng);

struct ForwardCache {
  const FeedforwardNet* net = nullptr;
  Matrix input;
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // activations per layer; post.back() is y

  const Matrix& output() const { return post.back(); }
};

struct NetGrads {
  std::vector<Matrix> weight;             // mirrors layer weight shapes
  std::vector<std::vector<double>> bias;  // mirrors layer bias shapes
  Matrix input;                           // dL/dx, n x d_in

  std::vector<double> flat() const;
  void accumulate_flat(std::vector<double>& into) const;
};

ForwardCache net_forward(const FeedforwardNet& net, const Matrix& x);

NetGrads net_backward(const FeedforwardNet& net, const ForwardCache& cache,
                      const Matrix& grad_output);

}  // namespace synfuse
