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

#include "synfuse/gradcheck.hpp"

#include <algorithm>

#include "synfuse/finite_diff.hpp"
#include "synfuse/fusion.hpp"
#include "synfuse/synergy.hpp"
#include "synfuse/training.hpp"

namespace synfuse {

namespace {

Activation random_activation(SeededRng& rng) {
  switch (rng.uniform_int(3)) {
    case 0: return Activation::Identity;
    case 1: return Activation::Relu;
    default: return Activation::Tanh;
  }
}

FeedforwardNet random_net(SeededRng& rng, std::size_t in, std::size_t out,
                          std::size_t max_layers = 3) {
  const std::size_t n_hidden = rng.uniform_int(max_layers);  // 0..max-1
  std::vector<std::size_t> hidden;
  for (std::size_t i = 0; i < n_hidden; ++i) {
    hidden.push_back(2 + rng.uniform_int(5));
  }
  return make_net(in, hidden, out, random_activation(rng),
                  random_activation(rng), rng);
}

GradCheckResult check_net_gradients(std::uint64_t seed) {
  GradCheckResult res{"net_backward", kGradCheckInstances, 0.0, false};
  SeededRng rng(seed);
  for (int inst = 0; inst < kGradCheckInstances; ++inst) {
    SeededRng r = rng.split("instance", inst);
    const std::size_t in = 1 + r.uniform_int(5);
    const std::size_t out = 1 + r.uniform_int(4);
    const std::size_t n = 2 + r.uniform_int(6);
    FeedforwardNet net = random_net(r, in, out);
    const Matrix x = Matrix::standard_normal(n, in, r);
    Matrix c = Matrix::standard_normal(n, out, r);  // random loss functional

    const ForwardCache cache = net_forward(net, x);
    const NetGrads analytic = net_backward(net, cache, c);

    const std::vector<double> p0 = net.flat_params();
    const ScalarFn f_params = [&](std::span<const double> p) {
      FeedforwardNet probe = net;
      probe.set_flat_params(p);
      const Matrix y = net_forward(probe, x).output();
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        acc += c.data()[i] * y.data()[i];
      }
      return acc;
    };
    const std::vector<double> fd = finite_diff_grad(f_params, p0, kGradCheckEps);
    res.max_rel_err = std::max(
        res.max_rel_err, max_relative_error(analytic.flat(), fd));

    // Input gradients through the same functional.
    const ScalarFn f_input = [&](std::span<const double> xin) {
      Matrix xm(n, in, std::vector<double>(xin.begin(), xin.end()));
      const Matrix y = net_forward(net, xm).output();
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        acc += c.data()[i] * y.data()[i];
      }
      return acc;
    };
    const std::vector<double> fd_in =
        finite_diff_grad(f_input, x.storage(), kGradCheckEps);
    res.max_rel_err = std::max(
        res.max_rel_err, max_relative_error(analytic.input.storage(), fd_in));
  }
  res.passed = res.max_rel_err < kGradCheckTol;
  return res;
}

GradCheckResult check_dv_gradients(std::uint64_t seed) {
  GradCheckResult res{"dv_bound_critic", kGradCheckInstances, 0.0, false};
  SeededRng rng(seed);
  for (int inst = 0; inst < kGradCheckInstances; ++inst) {
    SeededRng r = rng.split("instance", inst);
    const std::size_t dx = 1 + r.uniform_int(3);
    const std::size_t dy = 1 + r.uniform_int(3);
    const std::size_t n = 8 + r.uniform_int(8);
    FeedforwardNet critic =
        make_net(dx + dy, {6, 6}, 1, Activation::Relu, Activation::Identity, r);
    const Matrix joint = Matrix::standard_normal(n, dx + dy, r);
    const Matrix product = Matrix::standard_normal(n, dx + dy, r);

    const DvValueWithParamGrad analytic =
        dv_value_and_param_grad(critic, joint, product);
    const ScalarFn f = [&](std::span<const double> p) {
      FeedforwardNet probe = critic;
      probe.set_flat_params(p);
      return dv_bound_net(probe, joint, product);
    };
    const std::vector<double> fd =
        finite_diff_grad(f, critic.flat_params(), kGradCheckEps);
    res.max_rel_err =
        std::max(res.max_rel_err, max_relative_error(analytic.grad, fd));
  }
  res.passed = res.max_rel_err < kGradCheckTol;
  return res;
}

std::vector<Matrix> unflatten_embeddings(std::span<const double> flat,
                                         const std::vector<Matrix>& like) {
  std::vector<Matrix> z;
  std::size_t off = 0;
  for (const Matrix& m : like) {
    Matrix zi(m.rows(), m.cols());
    for (std::size_t i = 0; i < zi.size(); ++i) zi.data()[i] = flat[off++];
    z.push_back(std::move(zi));
  }
  return z;
}

std::vector<double> flatten_embeddings(const std::vector<Matrix>& z) {
  std::vector<double> flat;
  for (const Matrix& m : z) {
    flat.insert(flat.end(), m.storage().begin(), m.storage().end());
  }
  return flat;
}

GradCheckResult check_synergy_gradients(std::uint64_t seed, bool kl) {
  GradCheckResult res{kl ? "synergy_kl_embeddings" : "synergy_mmd_embeddings",
                      kGradCheckInstances, 0.0, false};
  SeededRng rng(seed);
  const std::size_t n_mod = 3, rows = 8, dim = 2;
  for (int inst = 0; inst < kGradCheckInstances; ++inst) {
    SeededRng r = rng.split("instance", inst);
    std::vector<Matrix> z;
    for (std::size_t m = 0; m < n_mod; ++m) {
      z.push_back(Matrix::standard_normal(rows, dim, r));
    }
    const std::vector<Bipartition> parts = bipartitions(n_mod);
    std::vector<std::vector<std::size_t>> ders;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      ders.push_back(random_derangement(rows, r));
    }

    std::vector<KernelSpec> kernels;
    std::vector<FeedforwardNet> critics;
    std::vector<const FeedforwardNet*> critic_ptrs;
    if (kl) {
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::size_t dl = parts[k].left.size() * dim;
        const std::size_t dr = parts[k].right.size() * dim;
        critics.push_back(make_net(dl + dr, {6}, 1, Activation::Tanh,
                                   Activation::Identity, r));
      }
      for (const FeedforwardNet& c : critics) critic_ptrs.push_back(&c);
    } else {
      for (std::size_t k = 0; k < parts.size(); ++k) {
        if (inst % 2 == 0) {
          kernels.emplace_back(GaussianKernel{1.5});
        } else {
          DeepKernel dk;
          const std::size_t w = dim * n_mod;
          dk.phi = std::make_shared<FeedforwardNet>(make_net(
              w, {5}, 3, Activation::Tanh, Activation::Identity, r));
          dk.sigma_feature = 1.2;
          dk.sigma_raw = 2.0;
          dk.eps_floor = 0.2;
          kernels.push_back(std::move(dk));
        }
      }
    }

    const auto eval = [&](const std::vector<Matrix>& zz) {
      return kl ? synergy_value_and_grad_kl(zz, critic_ptrs, ders)
                : synergy_value_and_grad_mmd(zz, kernels, ders);
    };
    const SynergyValueAndGrad analytic = eval(z);
    const ScalarFn f = [&](std::span<const double> flat) {
      return eval(unflatten_embeddings(flat, z)).value;
    };
    const std::vector<double> fd =
        finite_diff_grad(f, flatten_embeddings(z), kGradCheckEps);
    res.max_rel_err = std::max(
        res.max_rel_err,
        max_relative_error(flatten_embeddings(analytic.grads), fd));
  }
  res.passed = res.max_rel_err < kGradCheckTol;
  return res;
}

GradCheckResult check_fusion_gradients(std::uint64_t seed) {
  GradCheckResult res{"fusion_task_loss", kGradCheckInstances, 0.0, false};
  SeededRng rng(seed);
  for (int inst = 0; inst < kGradCheckInstances; ++inst) {
    SeededRng r = rng.split("instance", inst);
    const std::size_t n = 6;
    const std::vector<std::size_t> inputs{3, 2, 2};
    FusionModelConfig mc;
    mc.embed_dims = {2, 2, 2};
    mc.encoder_hidden = {4};
    mc.head_hidden = {3};
    mc.kind = inst % 2 == 0 ? FusionKind::Concat : FusionKind::TensorFusion;
    FusionModel model = make_fusion_model(inputs, mc, r);

    std::vector<Matrix> mods;
    for (std::size_t w : inputs) {
      mods.push_back(Matrix::standard_normal(n, w, r));
    }
    std::vector<double> labels(n);
    for (double& v : labels) v = r.uniform(-3.0, 3.0);
    const ModalityBatch batch(std::move(mods), labels);
    const TaskLoss loss = inst % 3 == 0 ? TaskLoss::Squared : TaskLoss::Huber;

    const ModelCache cache = model_forward(model, batch);
    const LossWithGrad lv = task_loss(loss, cache.predictions(), labels);
    const std::vector<double> analytic =
        model_backward(model, cache, lv.grad, nullptr);

    const ScalarFn f = [&](std::span<const double> p) {
      FusionModel probe = model;
      probe.set_flat_params(p);
      const ModelCache c = model_forward(probe, batch);
      return task_loss(loss, c.predictions(), labels).value;
    };
    const std::vector<double> fd =
        finite_diff_grad(f, model.flat_params(), kGradCheckEps);
    res.max_rel_err = std::max(res.max_rel_err,
                               max_relative_error(analytic, fd));
  }
  res.passed = res.max_rel_err < kGradCheckTol;
  return res;
}

}  // namespace

std::vector<GradCheckResult> run_all_gradchecks(std::uint64_t seed) {
  std::vector<GradCheckResult> out;
  out.push_back(check_net_gradients(seed + 1));
  out.push_back(check_dv_gradients(seed + 2));
  out.push_back(check_synergy_gradients(seed + 3, /*kl=*/false));
  out.push_back(check_synergy_gradients(seed + 4, /*kl=*/true));
  out.push_back(check_fusion_gradients(seed + 5));
  return out;
}

}  // namespace synfuse
