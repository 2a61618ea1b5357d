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

#include "synfuse/fusion.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace synfuse {

std::string fusion_kind_name(FusionKind k) {
  return k == FusionKind::Concat ? "concat" : "tensor";
}

FusionKind fusion_kind_from_name(const std::string& name) {
  if (name == "concat") return FusionKind::Concat;
  if (name == "tensor") return FusionKind::TensorFusion;
  throw ConfigError("unknown fusion kind: " + name);
}

std::size_t FusionModel::fused_width() const {
  std::size_t w = kind == FusionKind::Concat ? 0 : 1;
  for (const FeedforwardNet& e : encoders) {
    if (kind == FusionKind::Concat) {
      w += e.output_width();
    } else {
      w *= e.output_width() + 1;
    }
  }
  return w;
}

std::size_t FusionModel::param_count() const {
  std::size_t n = head.param_count();
  for (const FeedforwardNet& e : encoders) n += e.param_count();
  return n;
}

std::vector<double> FusionModel::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const FeedforwardNet& e : encoders) {
    const std::vector<double> p = e.flat_params();
    out.insert(out.end(), p.begin(), p.end());
  }
  const std::vector<double> p = head.flat_params();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

void FusionModel::set_flat_params(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw ShapeError("fusion model: flat parameter length mismatch");
  }
  std::size_t off = 0;
  for (FeedforwardNet& e : encoders) {
    e.set_flat_params(params.subspan(off, e.param_count()));
    off += e.param_count();
  }
  head.set_flat_params(params.subspan(off, head.param_count()));
}

FusionModel make_fusion_model(const std::vector<std::size_t>& input_widths,
                              const FusionModelConfig& cfg, SeededRng& rng) {
  if (input_widths.size() != cfg.embed_dims.size()) {
    throw ConfigError("fusion model: one embed dim per modality required");
  }
  if (input_widths.size() < 2) {
    throw ConfigError("fusion model needs at least 2 modalities");
  }
  FusionModel model;
  model.kind = cfg.kind;
  for (std::size_t i = 0; i < input_widths.size(); ++i) {
    SeededRng r = rng.split("encoder", i);
    model.encoders.push_back(make_net(input_widths[i], cfg.encoder_hidden,
                                      cfg.embed_dims[i], Activation::Relu,
                                      Activation::Identity, r));
  }
  SeededRng r = rng.split("head");
  model.head = make_net(model.fused_width(), cfg.head_hidden, 1,
                        Activation::Relu, Activation::Identity, r);
  return model;
}

std::vector<Matrix> encode(const FusionModel& model,
                           const ModalityBatch& batch) {
  if (batch.n_modalities() != model.n_modalities()) {
    throw ShapeError("encode: modality count does not match model");
  }
  std::vector<Matrix> z;
  z.reserve(model.n_modalities());
  for (std::size_t i = 0; i < model.n_modalities(); ++i) {
    z.push_back(net_forward(model.encoders[i], batch.modalities[i]).output());
  }
  return z;
}

Matrix fuse_forward(FusionKind kind, const std::vector<Matrix>& z,
                    FuseCache* cache) {
  if (z.empty()) throw UsageError("fusion: empty embedding list");
  const std::size_t n = z.front().rows();
  for (const Matrix& m : z) {
    if (m.rows() != n) throw ShapeError("fusion: embedding row counts differ");
  }
  if (kind == FusionKind::Concat) {
    std::vector<const Matrix*> blocks;
    for (const Matrix& m : z) blocks.push_back(&m);
    return hcat(blocks);
  }

  // Tensor fusion: running outer product of [z_i; 1], modality-major.
  Matrix cur(n, 1);
  for (std::size_t r = 0; r < n; ++r) cur(r, 0) = 1.0;
  for (const Matrix& zm : z) {
    const std::size_t w = zm.cols() + 1;
    Matrix next(n, cur.cols() * w);
    for (std::size_t r = 0; r < n; ++r) {
      const double* c = cur.row(r);
      const double* zr = zm.row(r);
      double* o = next.row(r);
      for (std::size_t i = 0; i < cur.cols(); ++i) {
        for (std::size_t j = 0; j + 1 < w; ++j) o[i * w + j] = c[i] * zr[j];
        o[i * w + (w - 1)] = c[i];  // augmentation slot
      }
    }
    if (cache) cache->stages.push_back(cur);
    cur = std::move(next);
  }
  return cur;
}

Matrix tensor_fusion(const std::vector<Matrix>& z) {
  return fuse_forward(FusionKind::TensorFusion, z, nullptr);
}

Matrix concat_fusion(const std::vector<Matrix>& z) {
  return fuse_forward(FusionKind::Concat, z, nullptr);
}

std::vector<Matrix> fuse_backward(FusionKind kind, const std::vector<Matrix>& z,
                                  const FuseCache& cache,
                                  const Matrix& grad_fused) {
  std::vector<Matrix> grads;
  grads.reserve(z.size());
  const std::size_t n = z.front().rows();

  if (kind == FusionKind::Concat) {
    std::size_t off = 0;
    for (const Matrix& zm : z) {
      Matrix g(n, zm.cols());
      for (std::size_t r = 0; r < n; ++r) {
        const double* src = grad_fused.row(r) + off;
        double* dst = g.row(r);
        for (std::size_t c = 0; c < zm.cols(); ++c) dst[c] = src[c];
      }
      off += zm.cols();
      grads.push_back(std::move(g));
    }
    return grads;
  }

  if (cache.stages.size() != z.size()) {
    throw UsageError("fuse_backward: cache does not match embedding list");
  }
  for (const Matrix& zm : z) grads.emplace_back(n, zm.cols());

  // Reverse of the running outer product: at stage m,
  //   next[i*w + j] = cur[i] * aug_m[j]
  // so  d/cur[i] = sum_j grad_next[i*w+j] * aug_m[j]
  //     d/aug[j] = sum_i grad_next[i*w+j] * cur[i].
  Matrix grad_cur = grad_fused;
  for (std::size_t m = z.size(); m-- > 0;) {
    const Matrix& stage = cache.stages[m];  // n x stage_w
    const Matrix& zm = z[m];
    const std::size_t w = zm.cols() + 1;
    Matrix grad_stage(n, stage.cols());
    for (std::size_t r = 0; r < n; ++r) {
      const double* st = stage.row(r);
      const double* zr = zm.row(r);
      const double* gn = grad_cur.row(r);
      double* gs = grad_stage.row(r);
      double* gz = grads[m].row(r);
      for (std::size_t i = 0; i < stage.cols(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < w; ++j) {
          acc += gn[i * w + j] * zr[j];
          gz[j] += gn[i * w + j] * st[i];
        }
        acc += gn[i * w + (w - 1)];  // augmentation slot contributes st grad
        gs[i] = acc;
      }
    }
    grad_cur = std::move(grad_stage);
  }
  return grads;
}

ModelCache model_forward(const FusionModel& model, const ModalityBatch& batch) {
  if (batch.n_modalities() != model.n_modalities()) {
    throw ShapeError("model_forward: modality count does not match model");
  }
  ModelCache cache;
  cache.encoder.reserve(model.n_modalities());
  cache.z.reserve(model.n_modalities());
  for (std::size_t i = 0; i < model.n_modalities(); ++i) {
    cache.encoder.push_back(
        net_forward(model.encoders[i], batch.modalities[i]));
    cache.z.push_back(cache.encoder.back().output());
  }
  cache.fused = fuse_forward(model.kind, cache.z, &cache.fuse);
  cache.head = net_forward(model.head, cache.fused);
  return cache;
}

std::vector<double> model_backward(const FusionModel& model,
                                   const ModelCache& cache,
                                   const Matrix& grad_pred,
                                   const std::vector<Matrix>* extra_z_grads) {
  const NetGrads head_grads = net_backward(model.head, cache.head, grad_pred);
  std::vector<Matrix> z_grads =
      fuse_backward(model.kind, cache.z, cache.fuse, head_grads.input);
  if (extra_z_grads) {
    if (extra_z_grads->size() != z_grads.size()) {
      throw UsageError("model_backward: extra gradient count mismatch");
    }
    for (std::size_t m = 0; m < z_grads.size(); ++m) {
      const Matrix& e = (*extra_z_grads)[m];
      if (!e.same_shape(z_grads[m])) {
        throw ShapeError("model_backward: extra gradient shape mismatch");
      }
      for (std::size_t i = 0; i < e.size(); ++i) {
        z_grads[m].data()[i] += e.data()[i];
      }
    }
  }

  std::vector<double> flat;
  flat.reserve(model.param_count());
  for (std::size_t i = 0; i < model.n_modalities(); ++i) {
    const NetGrads eg =
        net_backward(model.encoders[i], cache.encoder[i], z_grads[i]);
    const std::vector<double> f = eg.flat();
    flat.insert(flat.end(), f.begin(), f.end());
  }
  const std::vector<double> hf = head_grads.flat();
  flat.insert(flat.end(), hf.begin(), hf.end());
  return flat;
}

std::vector<double> predict(const FusionModel& model,
                            const ModalityBatch& batch, bool clamp) {
  const ModelCache cache = model_forward(model, batch);
  const Matrix& p = cache.predictions();
  std::vector<double> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double v = p(i, 0);
    if (clamp) v = std::min(3.0, std::max(-3.0, v));
    out[i] = v;
  }
  return out;
}

LossWithGrad task_loss(TaskLoss kind, const Matrix& preds,
                       std::span<const double> labels) {
  if (preds.cols() != 1 || preds.rows() != labels.size()) {
    throw ShapeError("task_loss: prediction/label shapes disagree");
  }
  const std::size_t n = preds.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossWithGrad out;
  out.grad = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = preds(i, 0) - labels[i];
    if (kind == TaskLoss::Squared) {
      out.value += e * e * inv_n;
      out.grad(i, 0) = 2.0 * e * inv_n;
    } else {
      // Huber, delta = 1: smooth MAE surrogate.
      const double a = std::fabs(e);
      if (a <= 1.0) {
        out.value += 0.5 * e * e * inv_n;
        out.grad(i, 0) = e * inv_n;
      } else {
        out.value += (a - 0.5) * inv_n;
        out.grad(i, 0) = (e > 0.0 ? 1.0 : -1.0) * inv_n;
      }
    }
  }
  return out;
}

namespace {

int acc7_bin(double v) {
  const double clamped = std::min(3.0, std::max(-3.0, v));
  return static_cast<int>(std::round(clamped));
}

}  // namespace

MetricsReport compute_metrics(std::span<const double> preds,
                              std::span<const double> labels) {
  if (preds.size() != labels.size()) {
    throw UsageError("compute_metrics: length mismatch");
  }
  if (preds.size() < 2) {
    throw UsageError("compute_metrics needs at least 2 rows");
  }
  const std::size_t n = preds.size();
  MetricsReport rep;
  rep.n_eval = n;

  double mae = 0.0;
  for (std::size_t i = 0; i < n; ++i) mae += std::fabs(preds[i] - labels[i]);
  rep.mae = mae / static_cast<double>(n);

  double mp = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mp += preds[i];
    ml += labels[i];
  }
  mp /= static_cast<double>(n);
  ml /= static_cast<double>(n);
  double num = 0.0, vp = 0.0, vl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (preds[i] - mp) * (labels[i] - ml);
    vp += (preds[i] - mp) * (preds[i] - mp);
    vl += (labels[i] - ml) * (labels[i] - ml);
  }
  rep.pearson_corr = (vp > 0.0 && vl > 0.0)
                         ? num / std::sqrt(vp * vl)
                         : 0.0;

  std::size_t n2 = 0, hit2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0.0) continue;
    ++n2;
    if ((preds[i] > 0.0) == (labels[i] > 0.0)) ++hit2;
  }
  rep.n_dropped_zero_labels = n - n2;
  if (n2 > 0) {
    rep.acc2 = static_cast<double>(hit2) / static_cast<double>(n2);
  }

  std::size_t hit7 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (acc7_bin(preds[i]) == acc7_bin(labels[i])) ++hit7;
  }
  rep.acc7 = static_cast<double>(hit7) / static_cast<double>(n);
  return rep;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O (format v1, see docs/formats.md)

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u8(std::ostream& os, std::uint8_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint8_t read_u8(std::istream& is) {
  std::uint8_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_net_shape(std::ostream& os, const FeedforwardNet& net) {
  write_u32(os, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& l = net.layer(i);
    write_u32(os, static_cast<std::uint32_t>(l.out_width()));
    write_u32(os, static_cast<std::uint32_t>(l.in_width()));
    write_u8(os, static_cast<std::uint8_t>(l.act));
  }
}

FeedforwardNet read_net_shape(std::istream& is) {
  const std::uint32_t n_layers = read_u32(is);
  if (n_layers == 0 || n_layers > 64) {
    throw ParseError("checkpoint: implausible layer count", 0);
  }
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    Layer l;
    const std::uint32_t out = read_u32(is);
    const std::uint32_t in = read_u32(is);
    const std::uint8_t act = read_u8(is);
    if (act > 2) throw ParseError("checkpoint: unknown activation tag", 0);
    l.weight = Matrix(out, in);
    l.bias.assign(out, 0.0);
    l.act = static_cast<Activation>(act);
    layers.push_back(std::move(l));
  }
  return FeedforwardNet(std::move(layers));
}

}  // namespace

void save_checkpoint(const FusionModel& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw UsageError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u8(os, static_cast<std::uint8_t>(model.kind));
    write_u32(os, static_cast<std::uint32_t>(model.n_modalities()));
    for (const FeedforwardNet& e : model.encoders) write_net_shape(os, e);
    write_net_shape(os, model.head);
    const std::vector<double> params = model.flat_params();
    write_u64(os, params.size());
    os.write(reinterpret_cast<const char*>(params.data()),
             static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (!os) throw UsageError("checkpoint write failed: " + path);
  }
  std::filesystem::rename(tmp, path);
}

FusionModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("checkpoint: bad magic", 0);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw ParseError("checkpoint: unsupported version " +
                         std::to_string(version),
                     0);
  }
  FusionModel model;
  const std::uint8_t kind = read_u8(is);
  if (kind > 1) throw ParseError("checkpoint: unknown fusion kind", 0);
  model.kind = static_cast<FusionKind>(kind);
  const std::uint32_t n_mod = read_u32(is);
  if (n_mod < 2 || n_mod > 8) {
    throw ParseError("checkpoint: implausible modality count", 0);
  }
  for (std::uint32_t i = 0; i < n_mod; ++i) {
    model.encoders.push_back(read_net_shape(is));
  }
  model.head = read_net_shape(is);
  const std::uint64_t count = read_u64(is);
  if (count != model.param_count()) {
    throw ParseError("checkpoint: parameter count does not match shapes", 0);
  }
  std::vector<double> params(count);
  is.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ParseError("checkpoint: truncated parameter array", 0);
  model.set_flat_params(params);
  if (model.head.input_width() != model.fused_width()) {
    throw ParseError("checkpoint: head width does not match fusion", 0);
  }
  if (model.head.output_width() != 1) {
    throw ParseError("checkpoint: head output width must be 1", 0);
  }
  return model;
}

}  // namespace synfuse
