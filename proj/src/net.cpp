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

#include "synfuse/net.hpp"

#include <cmath>

#include "synfuse/kernels.hpp"

namespace synfuse {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation: " + name);
}

FeedforwardNet::FeedforwardNet(std::vector<Layer> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("net needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.bias.size() != l.out_width()) {
      throw ShapeError("layer bias length does not match output width");
    }
    if (i > 0 && layers_[i - 1].out_width() != l.in_width()) {
      throw ShapeError("adjacent layer widths do not chain");
    }
  }
}

std::size_t FeedforwardNet::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> FeedforwardNet::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const Layer& l : layers_) {
    out.insert(out.end(), l.weight.storage().begin(), l.weight.storage().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void FeedforwardNet::set_flat_params(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw ShapeError("flat parameter length does not match net");
  }
  std::size_t off = 0;
  for (Layer& l : layers_) {
    for (std::size_t i = 0; i < l.weight.size(); ++i) {
      l.weight.data()[i] = params[off++];
    }
    for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = params[off++];
  }
}

FeedforwardNet make_net(std::size_t input, const std::vector<std::size_t>& hidden,
                        std::size_t output, Activation hidden_act,
                        Activation out_act, SeededRng& rng) {
  std::vector<std::size_t> widths;
  widths.push_back(input);
  for (std::size_t h : hidden) widths.push_back(h);
  widths.push_back(output);

  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t fan_in = widths[i], fan_out = widths[i + 1];
    Layer l;
    l.weight = Matrix(fan_out, fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t k = 0; k < l.weight.size(); ++k) {
      l.weight.data()[k] = rng.uniform(-limit, limit);
    }
    l.bias.assign(fan_out, 0.0);
    l.act = (i + 2 == widths.size()) ? out_act : hidden_act;
    layers.push_back(std::move(l));
  }
  return FeedforwardNet(std::move(layers));
}

namespace {

void apply_activation(const Matrix& pre, Matrix& post, Activation act) {
  const std::size_t n = pre.size();
  switch (act) {
    case Activation::Identity:
      post = pre;
      break;
    case Activation::Relu:
      post = Matrix(pre.rows(), pre.cols());
      for (std::size_t i = 0; i < n; ++i) {
        post.data()[i] = pre.data()[i] > 0.0 ? pre.data()[i] : 0.0;
      }
      break;
    case Activation::Tanh:
      post = Matrix(pre.rows(), pre.cols());
      for (std::size_t i = 0; i < n; ++i) {
        post.data()[i] = std::tanh(pre.data()[i]);
      }
      break;
  }
}

// dz = dy (.) act'(z), using pre- or post-activation as convenient.
Matrix activation_backward(const Matrix& grad_post, const Matrix& pre,
                           const Matrix& post, Activation act) {
  Matrix dz(grad_post.rows(), grad_post.cols());
  const std::size_t n = grad_post.size();
  switch (act) {
    case Activation::Identity:
      dz = grad_post;
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) {
        dz.data()[i] = pre.data()[i] > 0.0 ? grad_post.data()[i] : 0.0;
      }
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < n; ++i) {
        const double t = post.data()[i];
        dz.data()[i] = grad_post.data()[i] * (1.0 - t * t);
      }
      break;
  }
  return dz;
}

}  // namespace

ForwardCache net_forward(const FeedforwardNet& net, const Matrix& x) {
  if (x.cols() != net.input_width()) {
    throw ShapeError("net_forward: input width " + std::to_string(x.cols()) +
                     " does not match net input " +
                     std::to_string(net.input_width()));
  }
  ForwardCache cache;
  cache.net = &net;
  cache.input = x;
  cache.pre.reserve(net.layer_count());
  cache.post.reserve(net.layer_count());

  const Matrix* cur = &x;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const Layer& l = net.layer(li);
    Matrix z = kernels::matmul_nt(*cur, l.weight);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      double* zr = z.row(r);
      for (std::size_t c = 0; c < z.cols(); ++c) zr[c] += l.bias[c];
    }
    Matrix a;
    apply_activation(z, a, l.act);
    cache.pre.push_back(std::move(z));
    cache.post.push_back(std::move(a));
    cur = &cache.post.back();
  }
  return cache;
}

NetGrads net_backward(const FeedforwardNet& net, const ForwardCache& cache,
                      const Matrix& grad_output) {
  if (cache.net != &net || cache.pre.size() != net.layer_count()) {
    throw UsageError("net_backward: cache does not belong to this net");
  }
  if (grad_output.rows() != cache.input.rows() ||
      grad_output.cols() != net.output_width()) {
    throw ShapeError("net_backward: grad_output shape mismatch");
  }

  NetGrads grads;
  grads.weight.resize(net.layer_count());
  grads.bias.resize(net.layer_count());

  Matrix grad_post = grad_output;
  for (std::size_t li = net.layer_count(); li-- > 0;) {
    const Layer& l = net.layer(li);
    const Matrix& layer_input = (li == 0) ? cache.input : cache.post[li - 1];
    Matrix dz =
        activation_backward(grad_post, cache.pre[li], cache.post[li], l.act);
    grads.weight[li] = kernels::matmul_tn(dz, layer_input);  // out x in
    grads.bias[li] = kernels::colsum(dz);
    grad_post = kernels::matmul_nn(dz, l.weight);  // n x in
  }
  grads.input = std::move(grad_post);
  return grads;
}

std::vector<double> NetGrads::flat() const {
  std::vector<double> out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    total += weight[i].size() + bias[i].size();
  }
  out.reserve(total);
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.insert(out.end(), weight[i].storage().begin(),
               weight[i].storage().end());
    out.insert(out.end(), bias[i].begin(), bias[i].end());
  }
  return out;
}

void NetGrads::accumulate_flat(std::vector<double>& into) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    for (std::size_t k = 0; k < weight[i].size(); ++k) {
      into.at(off++) += weight[i].storage()[k];
    }
    for (std::size_t k = 0; k < bias[i].size(); ++k) {
      into.at(off++) += bias[i][k];
    }
  }
  if (off != into.size()) {
    throw ShapeError("accumulate_flat: length mismatch");
  }
}

}  // namespace synfuse
