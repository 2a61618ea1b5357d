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

#include "synfuse/synergy.hpp"

#include <bit>

namespace synfuse {

std::vector<Bipartition> bipartitions(std::size_t n) {
  if (n < 2 || n > 8) {
    throw ConfigError("bipartitions: modality count must lie in [2, 8]");
  }
  std::vector<Bipartition> out;
  const std::size_t half = n / 2;
  for (std::size_t size = 1; size <= half; ++size) {
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
      // At the even boundary keep only the side holding index 0, so each
      // split appears once.
      if (2 * size == n && (mask & 1u) == 0) continue;
      Bipartition p;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          p.left.push_back(i);
        } else {
          p.right.push_back(i);
        }
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

KernelSpec make_kernel(const Matrix& rows, const MmdDependenceConfig& cfg) {
  const double sigma_raw =
      cfg.sigma > 0.0 ? cfg.sigma : median_heuristic(rows);
  if (!cfg.deep) return GaussianKernel{sigma_raw};

  SeededRng phi_rng(cfg.phi_seed);
  const std::size_t out_w = cfg.phi_out > 0 ? cfg.phi_out : rows.cols();
  auto phi = std::make_shared<FeedforwardNet>(
      make_net(rows.cols(), cfg.phi_hidden, out_w, Activation::Relu,
               Activation::Identity, phi_rng));
  const Matrix features = net_forward(*phi, rows).output();
  DeepKernel k;
  k.phi = std::move(phi);
  k.sigma_raw = sigma_raw;
  k.sigma_feature =
      cfg.sigma > 0.0 ? cfg.sigma : median_heuristic(features);
  k.eps_floor = cfg.eps_floor;
  return k;
}

void validate_synergy_config(const SynergyConfig& cfg) {
  if (cfg.measure == Measure::Kl && !cfg.kl.has_value()) {
    throw ConfigError("synergy config: KL measure without KL estimator config");
  }
  if (cfg.measure == Measure::Mmd && !cfg.mmd.has_value()) {
    throw ConfigError(
        "synergy config: MMD measure without MMD estimator config");
  }
}

double tse_synergy(const ModalityBatch& batch, const SynergyConfig& cfg,
                   SeededRng& rng) {
  validate_synergy_config(cfg);
  const std::size_t min_rows = cfg.measure == Measure::Kl ? 64 : 4;
  if (batch.rows() < min_rows) {
    throw InsufficientSamplesError(
        "tse_synergy (" + measure_name(cfg.measure) + ") needs at least " +
        std::to_string(min_rows) + " rows, got " +
        std::to_string(batch.rows()));
  }
  const std::vector<Bipartition> parts = bipartitions(batch.n_modalities());
  double total = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix xs = concat_subset(batch, parts[k].left);
    const Matrix ys = concat_subset(batch, parts[k].right);
    SeededRng child = rng.split("partition", k);
    if (cfg.measure == Measure::Kl) {
      MiEstimateConfig mi = *cfg.kl;
      mi.seed = child.derive_seed();
      total += estimate_mi_dv(xs, ys, mi).value;
    } else {
      const KernelSpec kernel = make_kernel(hcat(xs, ys), *cfg.mmd);
      const PairedSamples s(xs, ys);
      total += mmd_dependence(s, kernel, child, cfg.mmd->n_shuffles).value;
    }
  }
  return total / static_cast<double>(parts.size());
}

namespace {

std::vector<std::size_t> modality_widths(const std::vector<Matrix>& z) {
  std::vector<std::size_t> w;
  w.reserve(z.size());
  for (const Matrix& m : z) w.push_back(m.cols());
  return w;
}

// Scatters a gradient over concatenated subset columns back into the
// per-modality gradient matrices. row_map relabels rows (the derangement
// on the shuffled side); pass nullptr for identity.
void scatter_grad(const Matrix& grad_rows, const std::vector<std::size_t>& subset,
                  const std::vector<std::size_t>& widths,
                  const std::vector<std::size_t>* row_map,
                  std::size_t col_offset, std::vector<Matrix>& out) {
  std::size_t off = col_offset;
  for (std::size_t m : subset) {
    Matrix& target = out[m];
    for (std::size_t r = 0; r < grad_rows.rows(); ++r) {
      const std::size_t tr = row_map ? (*row_map)[r] : r;
      const double* src = grad_rows.row(r) + off;
      double* dst = target.row(tr);
      for (std::size_t c = 0; c < widths[m]; ++c) dst[c] += src[c];
    }
    off += widths[m];
  }
}

void check_derangements(const std::vector<std::vector<std::size_t>>& ders,
                        std::size_t n_parts, std::size_t rows) {
  if (ders.size() != n_parts) {
    throw UsageError("synergy gradient: one derangement per partition required");
  }
  for (const auto& d : ders) {
    if (d.size() != rows) {
      throw UsageError("synergy gradient: derangement length mismatch");
    }
  }
}

}  // namespace

SynergyValueAndGrad synergy_value_and_grad_mmd(
    const std::vector<Matrix>& z, const std::vector<KernelSpec>& kernels,
    const std::vector<std::vector<std::size_t>>& derangements) {
  const std::vector<Bipartition> parts = bipartitions(z.size());
  if (kernels.size() != parts.size()) {
    throw UsageError("synergy gradient: one kernel per partition required");
  }
  const std::size_t rows = z.front().rows();
  check_derangements(derangements, parts.size(), rows);
  const std::vector<std::size_t> widths = modality_widths(z);

  SynergyValueAndGrad out;
  out.grads.reserve(z.size());
  for (const Matrix& m : z) out.grads.emplace_back(m.rows(), m.cols());

  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix xs = concat_all(z, parts[k].left);
    const Matrix ys = concat_all(z, parts[k].right);
    const Matrix joint = hcat(xs, ys);
    const Matrix product = hcat(xs, ys.take_rows(derangements[k]));
    const Mmd2WithGrad r = mmd2_unbiased_with_grad(joint, product, kernels[k]);
    out.value += r.value;

    scatter_grad(r.grad_a, parts[k].left, widths, nullptr, 0, out.grads);
    scatter_grad(r.grad_a, parts[k].right, widths, nullptr, xs.cols(),
                 out.grads);
    scatter_grad(r.grad_b, parts[k].left, widths, nullptr, 0, out.grads);
    scatter_grad(r.grad_b, parts[k].right, widths, &derangements[k], xs.cols(),
                 out.grads);
  }

  const double inv = 1.0 / static_cast<double>(parts.size());
  out.value *= inv;
  for (Matrix& g : out.grads) {
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= inv;
  }
  return out;
}

SynergyValueAndGrad synergy_value_and_grad_kl(
    const std::vector<Matrix>& z,
    const std::vector<const FeedforwardNet*>& critics,
    const std::vector<std::vector<std::size_t>>& derangements) {
  const std::vector<Bipartition> parts = bipartitions(z.size());
  if (critics.size() != parts.size()) {
    throw UsageError("synergy gradient: one critic per partition required");
  }
  for (const FeedforwardNet* c : critics) {
    if (c == nullptr) {
      throw UsageError("synergy gradient: missing critic state for KL");
    }
  }
  const std::size_t rows = z.front().rows();
  check_derangements(derangements, parts.size(), rows);
  const std::vector<std::size_t> widths = modality_widths(z);

  SynergyValueAndGrad out;
  out.grads.reserve(z.size());
  for (const Matrix& m : z) out.grads.emplace_back(m.rows(), m.cols());

  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix xs = concat_all(z, parts[k].left);
    const Matrix ys = concat_all(z, parts[k].right);
    const Matrix joint = hcat(xs, ys);
    const Matrix product = hcat(xs, ys.take_rows(derangements[k]));
    const DvValueWithInputGrad r =
        dv_value_and_input_grad(*critics[k], joint, product);
    out.value += r.value;

    scatter_grad(r.grad_joint, parts[k].left, widths, nullptr, 0, out.grads);
    scatter_grad(r.grad_joint, parts[k].right, widths, nullptr, xs.cols(),
                 out.grads);
    scatter_grad(r.grad_product, parts[k].left, widths, nullptr, 0, out.grads);
    scatter_grad(r.grad_product, parts[k].right, widths, &derangements[k],
                 xs.cols(), out.grads);
  }

  const double inv = 1.0 / static_cast<double>(parts.size());
  out.value *= inv;
  for (Matrix& g : out.grads) {
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= inv;
  }
  return out;
}

}  // namespace synfuse
