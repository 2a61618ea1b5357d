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

#include <array>
#include <string>

#include "synfuse/modality.hpp"
#include "synfuse/samples.hpp"

namespace synfuse {

struct GaussianPairSpec {
  double rho = 0.0;  // per-dimension correlation, |rho| < 1
  std::size_t dim = 1;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

// Jointly Gaussian (x, y), correlation rho per dimension, dimensions
// independent. True MI = -(dim/2) ln(1 - rho^2) nats.
PairedSamples gen_gaussian_pair(const GaussianPairSpec& spec);

double gaussian_pair_true_mi(const GaussianPairSpec& spec);

struct XorTripleSpec {
  double flip_prob = 0.0;   // in [0, 0.5)
  double dither_sd = 0.01;  // > 0
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

// b1, b2 iid uniform bits; b3 = b1 xor b2 flipped with flip_prob; each bit
// emitted as a 1-D modality with gaussian dither. At flip_prob = 0 the
// discrete system has TSE = ln 2 and zero pairwise MI.
ModalityBatch gen_xor_triple(const XorTripleSpec& spec);

struct MultimodalSpec {
  std::size_t latent_dim = 4;  // >= 3
  std::array<std::size_t, 3> modality_dims{8, 8, 8};
  double noise_sd = 0.1;
  double beta = 0.0;  // synergy strength, >= 0
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

// Latent-factor regression where a sign-product interaction term is
// recoverable only across modalities: modality 0 never sees latent 1,
// modality 1 never sees latent 0, modality 2 sees latent 2 but neither
// sign factor. Labels squashed into [-3, 3] by 3*tanh(raw/sd(raw)).
ModalityBatch gen_multimodal(const MultimodalSpec& spec);

// CSV schema: header `id,a_0..a_{da-1},v_0..v_{dv-1},t_0..t_{dt-1},label`;
// groups may be empty (column absent); widths inferred from the header.
// Values are written with 17 significant digits so round trips are exact.
void save_csv(const ModalityBatch& batch, const std::string& path);
ModalityBatch load_csv(const std::string& path);

// Column-group names for CSV-loaded batches, in modality order.
std::vector<std::string> csv_group_names(std::size_t n_modalities);

}  // namespace synfuse
