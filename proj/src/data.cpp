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

#include "synfuse/data.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace synfuse {

namespace {

void check_n(std::size_t n) {
  if (n < 8) throw ConfigError("synthetic spec needs n >= 8");
}

}  // namespace

PairedSamples gen_gaussian_pair(const GaussianPairSpec& spec) {
  if (!(std::fabs(spec.rho) < 1.0)) {
    throw ConfigError("gaussian pair: |rho| must be < 1");
  }
  if (spec.dim == 0) throw ConfigError("gaussian pair: dim must be >= 1");
  check_n(spec.n);
  SeededRng rng(spec.seed);
  Matrix x(spec.n, spec.dim);
  Matrix y(spec.n, spec.dim);
  const double comp = std::sqrt(1.0 - spec.rho * spec.rho);
  for (std::size_t r = 0; r < spec.n; ++r) {
    for (std::size_t d = 0; d < spec.dim; ++d) {
      const double u = rng.normal();
      const double v = rng.normal();
      x(r, d) = u;
      y(r, d) = spec.rho * u + comp * v;
    }
  }
  return PairedSamples(std::move(x), std::move(y));
}

double gaussian_pair_true_mi(const GaussianPairSpec& spec) {
  return -0.5 * static_cast<double>(spec.dim) *
         std::log(1.0 - spec.rho * spec.rho);
}

ModalityBatch gen_xor_triple(const XorTripleSpec& spec) {
  if (spec.flip_prob < 0.0 || spec.flip_prob >= 0.5) {
    throw ConfigError("xor triple: flip_prob must lie in [0, 0.5)");
  }
  if (!(spec.dither_sd > 0.0)) {
    throw ConfigError("xor triple: dither_sd must be positive");
  }
  check_n(spec.n);
  SeededRng rng(spec.seed);
  Matrix m1(spec.n, 1), m2(spec.n, 1), m3(spec.n, 1);
  for (std::size_t r = 0; r < spec.n; ++r) {
    const int b1 = rng.uniform01() < 0.5 ? 0 : 1;
    const int b2 = rng.uniform01() < 0.5 ? 0 : 1;
    int b3 = b1 ^ b2;
    if (spec.flip_prob > 0.0 && rng.uniform01() < spec.flip_prob) b3 ^= 1;
    m1(r, 0) = b1 + spec.dither_sd * rng.normal();
    m2(r, 0) = b2 + spec.dither_sd * rng.normal();
    m3(r, 0) = b3 + spec.dither_sd * rng.normal();
  }
  std::vector<Matrix> mods;
  mods.push_back(std::move(m1));
  mods.push_back(std::move(m2));
  mods.push_back(std::move(m3));
  return ModalityBatch(std::move(mods));
}

ModalityBatch gen_multimodal(const MultimodalSpec& spec) {
  if (spec.latent_dim < 3) {
    throw ConfigError("multimodal spec: latent_dim must be >= 3");
  }
  if (spec.beta < 0.0) throw ConfigError("multimodal spec: beta must be >= 0");
  if (!(spec.noise_sd >= 0.0)) {
    throw ConfigError("multimodal spec: noise_sd must be >= 0");
  }
  check_n(spec.n);

  // Which latent coordinates each modality is allowed to see. The label's
  // interaction term sign(u0)*sign(u1)*|u2| needs one factor each modality
  // cannot observe, so no single modality can reconstruct it.
  const std::size_t L = spec.latent_dim;
  std::vector<std::vector<bool>> exposed(3, std::vector<bool>(L, true));
  exposed[0][1] = false;
  exposed[1][0] = false;
  exposed[2][0] = false;
  exposed[2][1] = false;

  for (std::size_t m = 0; m < 3; ++m) {
    std::size_t count = 0;
    for (bool e : exposed[m]) count += e ? 1 : 0;
    if (spec.modality_dims[m] < count) {
      throw ConfigError("multimodal spec: modality " + std::to_string(m) +
                        " width below its latent exposure (" +
                        std::to_string(count) + ")");
    }
  }

  SeededRng rng(spec.seed);
  SeededRng proj_rng = rng.split("projections");
  SeededRng latent_rng = rng.split("latents");
  SeededRng noise_rng = rng.split("noise");

  // Fixed random projections, zeroed on hidden coordinates, rows scaled to
  // roughly unit feature variance.
  std::vector<Matrix> proj;
  for (std::size_t m = 0; m < 3; ++m) {
    Matrix a(spec.modality_dims[m], L);
    std::size_t count = 0;
    for (bool e : exposed[m]) count += e ? 1 : 0;
    const double scale = 1.0 / std::sqrt(static_cast<double>(count));
    for (std::size_t r = 0; r < a.rows(); ++r) {
      for (std::size_t c = 0; c < L; ++c) {
        a(r, c) = exposed[m][c] ? scale * proj_rng.normal() : 0.0;
      }
    }
    proj.push_back(std::move(a));
  }
  std::vector<double> w(L);
  for (std::size_t c = 0; c < L; ++c) w[c] = proj_rng.normal();
  double wn = 0.0;
  for (double v : w) wn += v * v;
  wn = std::sqrt(wn);
  for (double& v : w) v /= wn;

  Matrix latents(spec.n, L);
  for (std::size_t i = 0; i < latents.size(); ++i) {
    latents.data()[i] = latent_rng.normal();
  }

  std::vector<Matrix> mods;
  for (std::size_t m = 0; m < 3; ++m) {
    Matrix f(spec.n, spec.modality_dims[m]);
    for (std::size_t r = 0; r < spec.n; ++r) {
      const double* u = latents.row(r);
      double* fr = f.row(r);
      for (std::size_t d = 0; d < spec.modality_dims[m]; ++d) {
        double acc = 0.0;
        const double* a = proj[m].row(d);
        for (std::size_t c = 0; c < L; ++c) acc += a[c] * u[c];
        fr[d] = acc + spec.noise_sd * noise_rng.normal();
      }
    }
    mods.push_back(std::move(f));
  }

  std::vector<double> raw(spec.n);
  for (std::size_t r = 0; r < spec.n; ++r) {
    const double* u = latents.row(r);
    double lin = 0.0;
    for (std::size_t c = 0; c < L; ++c) lin += w[c] * u[c];
    const double s0 = u[0] >= 0.0 ? 1.0 : -1.0;
    const double s1 = u[1] >= 0.0 ? 1.0 : -1.0;
    raw[r] = lin + spec.beta * s0 * s1 * std::fabs(u[2]) +
             spec.noise_sd * noise_rng.normal();
  }
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(spec.n);
  double var = 0.0;
  for (double v : raw) var += (v - mean) * (v - mean);
  var /= static_cast<double>(spec.n);
  const double sd = var > 0.0 ? std::sqrt(var) : 1.0;

  std::vector<double> labels(spec.n);
  for (std::size_t r = 0; r < spec.n; ++r) {
    labels[r] = 3.0 * std::tanh(raw[r] / sd);
  }
  return ModalityBatch(std::move(mods), std::move(labels));
}

// ---------------------------------------------------------------------------
// CSV I/O

std::vector<std::string> csv_group_names(std::size_t n_modalities) {
  static const std::vector<std::string> names{"a", "v", "t"};
  if (n_modalities < 2 || n_modalities > 3) {
    throw ConfigError("CSV schema covers 2 or 3 modalities");
  }
  return {names.begin(), names.begin() + static_cast<long>(n_modalities)};
}

void save_csv(const ModalityBatch& batch, const std::string& path) {
  const std::vector<std::string> groups = csv_group_names(batch.n_modalities());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw UsageError("cannot open for writing: " + path);
    os << "id";
    for (std::size_t m = 0; m < batch.n_modalities(); ++m) {
      for (std::size_t c = 0; c < batch.modalities[m].cols(); ++c) {
        os << ',' << groups[m] << '_' << c;
      }
    }
    os << ",label\n";
    char buf[64];
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      os << r;
      for (const Matrix& m : batch.modalities) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
          std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
          os << ',' << buf;
        }
      }
      const double label = batch.labels ? (*batch.labels)[r] : 0.0;
      std::snprintf(buf, sizeof(buf), "%.17g", label);
      os << ',' << buf << '\n';
    }
    if (!os) throw UsageError("write failed: " + path);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (std::string& f : fields) {
    const std::size_t b = f.find_first_not_of(" \t");
    const std::size_t e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw ParseError("cannot parse float '" + s + "'", line);
  }
}

}  // namespace

ModalityBatch load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open: " + path);

  std::string line;
  if (!std::getline(is, line) || line.empty()) {
    throw ParseError("empty file or missing header", 1);
  }
  const std::vector<std::string> header = split_fields(line);
  if (header.empty() || header.front() != "id") {
    throw ParseError("header must start with column 'id'", 1);
  }
  if (header.back() != "label") {
    throw ParseError("header missing column 'label'", 1);
  }

  // Groups a_*, v_*, t_* must appear contiguously, in order, with indices
  // counting up from 0.
  const std::vector<std::string> group_order{"a", "v", "t"};
  std::vector<std::size_t> widths(3, 0);
  std::size_t gi = 0;
  for (std::size_t f = 1; f + 1 < header.size(); ++f) {
    const std::string& name = header[f];
    const std::size_t us = name.find('_');
    if (us == std::string::npos) {
      throw ParseError("unexpected feature column '" + name + "'", 1);
    }
    const std::string g = name.substr(0, us);
    while (gi < 3 && g != group_order[gi]) {
      ++gi;
    }
    if (gi >= 3) {
      throw ParseError("feature column '" + name +
                           "' outside the a/v/t group order",
                       1);
    }
    const std::string idx = name.substr(us + 1);
    if (idx != std::to_string(widths[gi])) {
      throw ParseError("column '" + name + "' breaks the 0..w-1 ordering", 1);
    }
    ++widths[gi];
  }

  std::vector<std::size_t> present;
  for (std::size_t g = 0; g < 3; ++g) {
    if (widths[g] > 0) present.push_back(g);
  }
  if (present.size() < 2) {
    throw ParseError("need at least two nonempty modality groups", 1);
  }
  // Modalities must be a prefix of the a/v/t convention (no gaps).
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i] != i) {
      throw ParseError("modality groups must fill a, v, t in order", 1);
    }
  }
  const std::size_t expected_fields =
      2 + widths[0] + widths[1] + widths[2];  // id + features + label

  std::vector<std::vector<double>> columns(present.size());
  std::vector<double> labels;
  std::size_t line_no = 1;
  std::size_t n_rows = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != expected_fields) {
      throw ParseError("expected " + std::to_string(expected_fields) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    std::size_t f = 1;
    for (std::size_t m = 0; m < present.size(); ++m) {
      for (std::size_t c = 0; c < widths[m]; ++c) {
        columns[m].push_back(parse_double(fields[f++], line_no));
      }
    }
    labels.push_back(parse_double(fields[f], line_no));
    ++n_rows;
  }
  if (n_rows == 0) throw ParseError("no data rows", 1);

  std::vector<Matrix> mods;
  for (std::size_t m = 0; m < present.size(); ++m) {
    mods.emplace_back(n_rows, widths[m], std::move(columns[m]));
  }
  return ModalityBatch(std::move(mods), std::move(labels));
}

}  // namespace synfuse
