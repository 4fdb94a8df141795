// include/subalign/model.h

// Copyright 2026  subalign authors

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

#ifndef SUBALIGN_MODEL_H_
#define SUBALIGN_MODEL_H_

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "subalign/common.h"
#include "subalign/rng.h"

namespace subalign {

// Encoder over subtitle tokens, decoder over video frames fused with a
// binary prior location vector, per-frame sigmoid output. Text attends to
// nothing but itself; video frames self-attend and cross-attend to the
// encoded text. Post-norm residual wiring, ReLU feedforward. There is no
// auto-regression: all T outputs are produced in one pass.
struct ModelConfig {
  int d_model = 512;
  int num_layers = 2;
  int num_heads = 2;
  int d_video_in = 1024;
  int d_text_in = 768;
  int ffn_dim = 2048;
  int fusion_half_dim = 256;
  double dropout_rate = 0.1;
  // Parameter-free standardization of the fused decoder input. Off: the
  // first decoder layer consumes the fusion output plus positional
  // encodings directly.
  bool normalize_fused_input = false;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  static ModelConfig paper_profile();
  static ModelConfig desk_profile();
};

template <typename S>
struct DenseT {
  MatX<S> w;  // in x out
  MatX<S> b;  // 1 x out
};

template <typename S>
struct LayerNormT {
  MatX<S> gain;  // 1 x d
  MatX<S> bias;  // 1 x d
};

template <typename S>
struct AttentionT {
  DenseT<S> q, k, v, out;
};

template <typename S>
struct EncoderLayerT {
  AttentionT<S> self_attn;
  LayerNormT<S> norm1;
  DenseT<S> ffn1, ffn2;
  LayerNormT<S> norm2;
};

template <typename S>
struct DecoderLayerT {
  AttentionT<S> self_attn;
  LayerNormT<S> norm1;
  AttentionT<S> cross_attn;
  LayerNormT<S> norm2;
  DenseT<S> ffn1, ffn2;
  LayerNormT<S> norm3;
};

template <typename S>
struct ModelParamsT {
  DenseT<S> text_proj;    // d_text -> d_model
  DenseT<S> video_proj;   // d_video -> fusion_half
  DenseT<S> prior_proj;   // 1 -> fusion_half
  DenseT<S> fusion_proj;  // 2*fusion_half -> d_model
  std::vector<EncoderLayerT<S>> encoder;
  std::vector<DecoderLayerT<S>> decoder;
  DenseT<S> head;         // d_model -> 1
};

using ModelParams = ModelParamsT<Real>;

// Visits every tensor as (name, matrix) in a fixed order shared by
// initialization, the optimizer, checkpoints, and the gradient checker.
template <typename P, typename F>
void for_each_tensor(P& p, F&& f) {
  auto dense = [&](const std::string& name, auto& d) {
    f(name + ".w", d.w);
    f(name + ".b", d.b);
  };
  auto norm = [&](const std::string& name, auto& n) {
    f(name + ".gain", n.gain);
    f(name + ".bias", n.bias);
  };
  auto attn = [&](const std::string& name, auto& a) {
    dense(name + ".q", a.q);
    dense(name + ".k", a.k);
    dense(name + ".v", a.v);
    dense(name + ".out", a.out);
  };
  dense("text_proj", p.text_proj);
  dense("video_proj", p.video_proj);
  dense("prior_proj", p.prior_proj);
  dense("fusion_proj", p.fusion_proj);
  for (size_t l = 0; l < p.encoder.size(); ++l) {
    std::string pre = "enc." + std::to_string(l);
    attn(pre + ".self", p.encoder[l].self_attn);
    norm(pre + ".norm1", p.encoder[l].norm1);
    dense(pre + ".ffn1", p.encoder[l].ffn1);
    dense(pre + ".ffn2", p.encoder[l].ffn2);
    norm(pre + ".norm2", p.encoder[l].norm2);
  }
  for (size_t l = 0; l < p.decoder.size(); ++l) {
    std::string pre = "dec." + std::to_string(l);
    attn(pre + ".self", p.decoder[l].self_attn);
    norm(pre + ".norm1", p.decoder[l].norm1);
    attn(pre + ".cross", p.decoder[l].cross_attn);
    norm(pre + ".norm2", p.decoder[l].norm2);
    dense(pre + ".ffn1", p.decoder[l].ffn1);
    dense(pre + ".ffn2", p.decoder[l].ffn2);
    norm(pre + ".norm3", p.decoder[l].norm3);
  }
  dense("head", p.head);
}

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases, unit
// layer-norm gains. Deterministic per seed.
template <typename S>
ModelParamsT<S> init_params_t(const ModelConfig& cfg, uint64_t seed);
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

template <typename S>
ModelParamsT<S> zeros_like(const ModelParamsT<S>& p);

template <typename S>
ModelParamsT<S> cast_params(const ModelParams& p);

// T x d sinusoidal table: PE[t,2i]=sin(t/10000^(2i/d)), PE[t,2i+1]=cos(..).
template <typename S>
MatX<S> positional_encoding(int T, int d_model);

// Inverted-dropout source. Masks are recorded in the forward trace so the
// backward pass replays them exactly.
template <typename S>
struct DropoutPlan {
  double rate = 0.0;
  Rng rng{0};
};

template <typename S>
struct AttnTrace {
  MatX<S> x_q, x_kv;            // sublayer inputs
  MatX<S> q, k, v;              // projected
  std::vector<MatX<S>> probs;   // per-head softmax rows
  MatX<S> concat;               // heads reassembled
};

template <typename S>
struct NormTrace {
  MatX<S> input;    // pre-norm (residual sum)
  MatX<S> x_hat;    // standardized rows
  VecX<S> inv_std;  // per row
};

template <typename S>
struct FfnTrace {
  MatX<S> input;
  MatX<S> hidden;  // post-ReLU
};

template <typename S>
struct DropTrace {
  std::vector<MatX<S>> masks;  // empty when dropout was off
  size_t next = 0;
};

template <typename S>
struct EncoderLayerTrace {
  AttnTrace<S> attn;
  NormTrace<S> norm1;
  FfnTrace<S> ffn;
  NormTrace<S> norm2;
};

template <typename S>
struct DecoderLayerTrace {
  AttnTrace<S> self_attn;
  NormTrace<S> norm1;
  AttnTrace<S> cross_attn;
  NormTrace<S> norm2;
  FfnTrace<S> ffn;
  NormTrace<S> norm3;
};

template <typename S>
struct EncodeTrace {
  MatX<S> tokens_in;
  std::vector<EncoderLayerTrace<S>> layers;
  DropTrace<S> drop;
  MatX<S> memory;
  std::vector<uint8_t> key_mask;  // 1 = masked-out token
};

template <typename S>
struct ForwardTrace {
  EncodeTrace<S> enc;
  MatX<S> video_in;
  VecX<S> prior_in;            // T x 1 of 0/1
  std::vector<uint8_t> pad_mask;
  MatX<S> video_half, prior_half, fused_raw, fused;  // pre/post standardize
  NormTrace<S> fuse_norm;      // used only when normalize_fused_input
  std::vector<DecoderLayerTrace<S>> layers;
  DropTrace<S> drop;
  MatX<S> decoded;             // T x d_model
  VecX<S> logits;
  VecX<S> probs;
};

// Gradients with respect to the three model inputs; optional in backward.
template <typename S>
struct InputGrads {
  MatX<S> d_tokens;
  MatX<S> d_video;
  VecX<S> d_prior;
};

// Encoder side: project token embeddings to d_model (no positional
// encodings) and run the self-attention stack. key_mask entries marked 1
// are excluded as attention keys.
template <typename S>
MatX<S> encode_text(const MatX<S>& token_embeddings,
                    const std::vector<uint8_t>& key_mask,
                    const ModelParamsT<S>& params, const ModelConfig& cfg,
                    EncodeTrace<S>* trace = nullptr,
                    DropoutPlan<S>* dropout = nullptr);

// Decoder side: fuse video and prior, add positional encodings, run the
// stack against the encoded text, and emit per-frame probabilities.
// Padded frames are masked as self-attention keys.
template <typename S>
VecX<S> sat_forward(const MatX<S>& video, const std::vector<uint8_t>& prior_bits,
                    const std::vector<uint8_t>& pad_mask,
                    const EncodeTrace<S>& enc, const ModelParamsT<S>& params,
                    const ModelConfig& cfg, ForwardTrace<S>* trace = nullptr,
                    DropoutPlan<S>* dropout = nullptr);

// Convenience: encode + forward without traces (inference path).
template <typename S>
VecX<S> sat_infer(const MatX<S>& token_embeddings, const MatX<S>& video,
                  const std::vector<uint8_t>& prior_bits,
                  const std::vector<uint8_t>& pad_mask,
                  const ModelParamsT<S>& params, const ModelConfig& cfg);

// Mean binary cross entropy over frames with pad_mask false, probabilities
// clamped to [1e-7, 1-1e-7]. Accumulated in double.
template <typename S>
double bce_loss(const VecX<S>& probs, const VecX<S>& target,
                const std::vector<uint8_t>& pad_mask);

// Accumulates d(bce_loss)/d(params) into grads for one recorded forward
// pass. Throws on non-finite gradients.
template <typename S>
void sat_backward(const ForwardTrace<S>& fwd, const VecX<S>& target,
                  const ModelParamsT<S>& params, const ModelConfig& cfg,
                  ModelParamsT<S>& grads, InputGrads<S>* input_grads = nullptr);

// Flat parameter access for the finite-difference oracle and the optimizer.
template <typename S>
size_t param_count(const ModelParamsT<S>& p);
template <typename S>
S get_param(const ModelParamsT<S>& p, size_t flat_index);
template <typename S>
void set_param(ModelParamsT<S>& p, size_t flat_index, S value);

// Checkpoints: manifest (config + tensor names/shapes) followed by each
// tensor in the matrix-container format. Throws on malformed files.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ModelParams& params);
void load_checkpoint(const std::string& path, ModelConfig* cfg,
                     ModelParams* params);

// ---------------------------------------------------------------------------
// Implementation (templated).

namespace detail {

template <typename S>
MatX<S> dropout_apply(const MatX<S>& x, DropoutPlan<S>* plan, DropTrace<S>* trace) {
  if (plan == nullptr || plan->rate <= 0.0) return x;
  MatX<S> mask(x.rows(), x.cols());
  const S keep_inv = static_cast<S>(1.0 / (1.0 - plan->rate));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      mask(i, j) = plan->rng.bernoulli(plan->rate) ? S(0) : keep_inv;
    }
  }
  if (trace) trace->masks.push_back(mask);
  return x.cwiseProduct(mask);
}

template <typename S>
MatX<S> dropout_backward(const MatX<S>& dy, DropTrace<S>& trace) {
  if (trace.masks.empty()) return dy;
  // Backward visits sublayers in reverse order of the forward pass.
  const MatX<S>& mask = trace.masks[--trace.next];
  return dy.cwiseProduct(mask);
}

template <typename S>
MatX<S> dense_forward(const MatX<S>& x, const DenseT<S>& d) {
  MatX<S> y = x * d.w;
  y.rowwise() += d.b.row(0);
  return y;
}

template <typename S>
MatX<S> dense_backward(const MatX<S>& x, const DenseT<S>& d, const MatX<S>& dy,
                       DenseT<S>& grad) {
  grad.w.noalias() += x.transpose() * dy;
  grad.b.row(0) += dy.colwise().sum();
  return dy * d.w.transpose();
}

constexpr double kNormEps = 1e-5;

template <typename S>
MatX<S> layer_norm_forward(const MatX<S>& x, const LayerNormT<S>& n,
                           NormTrace<S>* trace) {
  const Eigen::Index d = x.cols();
  MatX<S> x_hat(x.rows(), d);
  VecX<S> inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    S mean = x.row(i).mean();
    S var = (x.row(i).array() - mean).square().sum() / static_cast<S>(d);
    S inv = S(1) / std::sqrt(var + static_cast<S>(kNormEps));
    inv_std[i] = inv;
    x_hat.row(i) = (x.row(i).array() - mean) * inv;
  }
  if (trace) {
    trace->input = x;
    trace->x_hat = x_hat;
    trace->inv_std = inv_std;
  }
  MatX<S> y = x_hat.array().rowwise() * n.gain.row(0).array();
  y.rowwise() += n.bias.row(0);
  return y;
}

template <typename S>
MatX<S> layer_norm_backward(const NormTrace<S>& t, const LayerNormT<S>& n,
                            const MatX<S>& dy, LayerNormT<S>& grad) {
  const Eigen::Index d = t.input.cols();
  grad.gain.row(0) += (dy.array() * t.x_hat.array()).colwise().sum().matrix();
  grad.bias.row(0) += dy.colwise().sum();
  MatX<S> dx(dy.rows(), d);
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    auto dxhat = (dy.row(i).array() * n.gain.row(0).array()).eval();
    S m1 = dxhat.mean();
    S m2 = (dxhat * t.x_hat.row(i).array()).mean();
    dx.row(i) =
        ((dxhat - m1 - t.x_hat.row(i).array() * m2) * t.inv_std[i]).matrix();
  }
  return dx;
}

// Row-wise masked softmax. mask[j] != 0 removes key j; masked entries are
// exactly zero in the result. Every row must keep at least one key.
template <typename S>
MatX<S> masked_softmax_rows(MatX<S> scores, const std::vector<uint8_t>& mask) {
  const S neg_inf = -std::numeric_limits<S>::infinity();
  const bool masked = !mask.empty();
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    S max = neg_inf;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (masked && mask[static_cast<size_t>(j)]) continue;
      max = std::max(max, scores(i, j));
    }
    if (!(max > neg_inf)) throw Error("attention row with no unmasked keys");
    S sum = S(0);
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (masked && mask[static_cast<size_t>(j)]) {
        scores(i, j) = S(0);
      } else {
        scores(i, j) = std::exp(scores(i, j) - max);
        sum += scores(i, j);
      }
    }
    scores.row(i) /= sum;
  }
  return scores;
}

template <typename S>
MatX<S> attention_forward(const MatX<S>& x_q, const MatX<S>& x_kv,
                          const std::vector<uint8_t>& key_mask,
                          const AttentionT<S>& a, int num_heads,
                          AttnTrace<S>* trace) {
  const Eigen::Index d_model = a.q.w.cols();
  const Eigen::Index d_head = d_model / num_heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(d_head));

  MatX<S> q = dense_forward(x_q, a.q);
  MatX<S> k = dense_forward(x_kv, a.k);
  MatX<S> v = dense_forward(x_kv, a.v);

  MatX<S> concat(x_q.rows(), d_model);
  std::vector<MatX<S>> probs(static_cast<size_t>(num_heads));
  for (int h = 0; h < num_heads; ++h) {
    auto qh = q.middleCols(h * d_head, d_head);
    auto kh = k.middleCols(h * d_head, d_head);
    auto vh = v.middleCols(h * d_head, d_head);
    MatX<S> scores = (qh * kh.transpose()) * scale;
    MatX<S> p = masked_softmax_rows<S>(std::move(scores), key_mask);
    concat.middleCols(h * d_head, d_head).noalias() = p * vh;
    probs[static_cast<size_t>(h)] = std::move(p);
  }
  if (trace) {
    trace->x_q = x_q;
    trace->x_kv = x_kv;
    trace->q = q;
    trace->k = k;
    trace->v = v;
    trace->probs = probs;
    trace->concat = concat;
  }
  return dense_forward(concat, a.out);
}

// Returns d(x_q); accumulates d(x_kv) into dx_kv (query and key/value
// inputs are distinct tensors in cross-attention).
template <typename S>
MatX<S> attention_backward(const AttnTrace<S>& t, const AttentionT<S>& a,
                           int num_heads, const MatX<S>& dy,
                           AttentionT<S>& grad, MatX<S>& dx_kv) {
  const Eigen::Index d_model = a.q.w.cols();
  const Eigen::Index d_head = d_model / num_heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(d_head));

  MatX<S> d_concat = dense_backward(t.concat, a.out, dy, grad.out);

  MatX<S> dq = MatX<S>::Zero(t.q.rows(), d_model);
  MatX<S> dk = MatX<S>::Zero(t.k.rows(), d_model);
  MatX<S> dv = MatX<S>::Zero(t.v.rows(), d_model);
  for (int h = 0; h < num_heads; ++h) {
    auto qh = t.q.middleCols(h * d_head, d_head);
    auto kh = t.k.middleCols(h * d_head, d_head);
    auto vh = t.v.middleCols(h * d_head, d_head);
    const MatX<S>& p = t.probs[static_cast<size_t>(h)];
    auto d_oh = d_concat.middleCols(h * d_head, d_head);

    MatX<S> dp = d_oh * vh.transpose();
    dv.middleCols(h * d_head, d_head).noalias() = p.transpose() * d_oh;

    // Softmax backward per row: ds = p .* (dp - <dp, p>).
    MatX<S> ds(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      S dot = dp.row(i).dot(p.row(i));
      ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
    }
    dq.middleCols(h * d_head, d_head).noalias() = ds * kh * scale;
    dk.middleCols(h * d_head, d_head).noalias() = ds.transpose() * qh * scale;
  }

  MatX<S> dx_q = dense_backward(t.x_q, a.q, dq, grad.q);
  dx_kv += dense_backward(t.x_kv, a.k, dk, grad.k);
  dx_kv += dense_backward(t.x_kv, a.v, dv, grad.v);
  return dx_q;
}

template <typename S>
MatX<S> ffn_forward(const MatX<S>& x, const DenseT<S>& lin1, const DenseT<S>& lin2,
                    FfnTrace<S>* trace) {
  MatX<S> h = dense_forward(x, lin1).cwiseMax(S(0));
  if (trace) {
    trace->input = x;
    trace->hidden = h;
  }
  return dense_forward(h, lin2);
}

template <typename S>
MatX<S> ffn_backward(const FfnTrace<S>& t, const DenseT<S>& lin1,
                     const DenseT<S>& lin2, const MatX<S>& dy,
                     DenseT<S>& g1, DenseT<S>& g2) {
  MatX<S> dh = dense_backward(t.hidden, lin2, dy, g2);
  dh = (t.hidden.array() > S(0)).select(dh, MatX<S>::Zero(dh.rows(), dh.cols()));
  return dense_backward(t.input, lin1, dh, g1);
}

}  // namespace detail

template <typename S>
MatX<S> positional_encoding(int T, int d_model) {
  if (d_model % 2 != 0) throw Error("positional encoding needs even d_model");
  MatX<S> pe(T, d_model);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < d_model; i += 2) {
      double angle = t / std::pow(10000.0, static_cast<double>(i) / d_model);
      pe(t, i) = static_cast<S>(std::sin(angle));
      pe(t, i + 1) = static_cast<S>(std::cos(angle));
    }
  }
  return pe;
}

template <typename S>
MatX<S> encode_text(const MatX<S>& token_embeddings,
                    const std::vector<uint8_t>& key_mask,
                    const ModelParamsT<S>& params, const ModelConfig& cfg,
                    EncodeTrace<S>* trace, DropoutPlan<S>* dropout) {
  if (token_embeddings.rows() < 1) throw Error("encode_text: no tokens");
  if (token_embeddings.cols() != cfg.d_text_in) {
    throw Error("encode_text: token dim mismatch");
  }
  if (!token_embeddings.allFinite()) throw Error("encode_text: non-finite input");
  if (!key_mask.empty() &&
      key_mask.size() != static_cast<size_t>(token_embeddings.rows())) {
    throw Error("encode_text: key mask length mismatch");
  }

  if (trace) {
    trace->tokens_in = token_embeddings;
    trace->key_mask = key_mask;
    trace->layers.resize(static_cast<size_t>(cfg.num_layers));
  }
  DropTrace<S>* dt = trace ? &trace->drop : nullptr;

  MatX<S> x = detail::dense_forward(token_embeddings, params.text_proj);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const auto& layer = params.encoder[static_cast<size_t>(l)];
    auto* lt = trace ? &trace->layers[static_cast<size_t>(l)] : nullptr;
    MatX<S> a = detail::attention_forward(x, x, key_mask, layer.self_attn,
                                          cfg.num_heads, lt ? &lt->attn : nullptr);
    a = detail::dropout_apply(a, dropout, dt);
    x = detail::layer_norm_forward<S>(x + a, layer.norm1, lt ? &lt->norm1 : nullptr);
    MatX<S> f = detail::ffn_forward(x, layer.ffn1, layer.ffn2, lt ? &lt->ffn : nullptr);
    f = detail::dropout_apply(f, dropout, dt);
    x = detail::layer_norm_forward<S>(x + f, layer.norm2, lt ? &lt->norm2 : nullptr);
  }
  if (trace) trace->memory = x;
  return x;
}

template <typename S>
VecX<S> sat_forward(const MatX<S>& video, const std::vector<uint8_t>& prior_bits,
                    const std::vector<uint8_t>& pad_mask,
                    const EncodeTrace<S>& enc, const ModelParamsT<S>& params,
                    const ModelConfig& cfg, ForwardTrace<S>* trace,
                    DropoutPlan<S>* dropout) {
  const int T = static_cast<int>(video.rows());
  if (video.cols() != cfg.d_video_in) throw Error("sat_forward: video dim mismatch");
  if (prior_bits.size() != static_cast<size_t>(T)) {
    throw Error("sat_forward: prior length does not match window");
  }
  if (!pad_mask.empty() && pad_mask.size() != static_cast<size_t>(T)) {
    throw Error("sat_forward: pad mask length mismatch");
  }
  if (!video.allFinite()) throw Error("sat_forward: non-finite video input");

  VecX<S> prior(T);
  for (int t = 0; t < T; ++t) prior[t] = prior_bits[static_cast<size_t>(t)] ? S(1) : S(0);

  if (trace) {
    trace->video_in = video;
    trace->prior_in = prior;
    trace->pad_mask = pad_mask;
    trace->layers.resize(static_cast<size_t>(cfg.num_layers));
  }
  DropTrace<S>* dt = trace ? &trace->drop : nullptr;

  MatX<S> video_half = detail::dense_forward(video, params.video_proj);
  MatX<S> prior_half = detail::dense_forward(MatX<S>(prior), params.prior_proj);
  MatX<S> fused_raw(T, 2 * cfg.fusion_half_dim);
  fused_raw << video_half, prior_half;
  MatX<S> x = detail::dense_forward(fused_raw, params.fusion_proj);
  if (trace) {
    trace->video_half = video_half;
    trace->prior_half = prior_half;
    trace->fused_raw = fused_raw;
  }
  if (cfg.normalize_fused_input) {
    LayerNormT<S> unit;
    unit.gain = MatX<S>::Ones(1, cfg.d_model);
    unit.bias = MatX<S>::Zero(1, cfg.d_model);
    x = detail::layer_norm_forward<S>(x, unit, trace ? &trace->fuse_norm : nullptr);
  }
  if (trace) trace->fused = x;

  x += positional_encoding<S>(T, cfg.d_model);

  for (int l = 0; l < cfg.num_layers; ++l) {
    const auto& layer = params.decoder[static_cast<size_t>(l)];
    auto* lt = trace ? &trace->layers[static_cast<size_t>(l)] : nullptr;
    MatX<S> a = detail::attention_forward(x, x, pad_mask, layer.self_attn,
                                          cfg.num_heads, lt ? &lt->self_attn : nullptr);
    a = detail::dropout_apply(a, dropout, dt);
    x = detail::layer_norm_forward<S>(x + a, layer.norm1, lt ? &lt->norm1 : nullptr);
    MatX<S> c = detail::attention_forward(x, enc.memory, enc.key_mask,
                                          layer.cross_attn, cfg.num_heads,
                                          lt ? &lt->cross_attn : nullptr);
    c = detail::dropout_apply(c, dropout, dt);
    x = detail::layer_norm_forward<S>(x + c, layer.norm2, lt ? &lt->norm2 : nullptr);
    MatX<S> f = detail::ffn_forward(x, layer.ffn1, layer.ffn2, lt ? &lt->ffn : nullptr);
    f = detail::dropout_apply(f, dropout, dt);
    x = detail::layer_norm_forward<S>(x + f, layer.norm3, lt ? &lt->norm3 : nullptr);
  }

  VecX<S> logits = (x * params.head.w).col(0);
  logits.array() += params.head.b(0, 0);
  VecX<S> probs(T);
  for (int t = 0; t < T; ++t) probs[t] = S(1) / (S(1) + std::exp(-logits[t]));
  if (!probs.allFinite()) throw Error("sat_forward: non-finite activations");

  if (trace) {
    trace->decoded = x;
    trace->logits = logits;
    trace->probs = probs;
  }
  return probs;
}

template <typename S>
VecX<S> sat_infer(const MatX<S>& token_embeddings, const MatX<S>& video,
                  const std::vector<uint8_t>& prior_bits,
                  const std::vector<uint8_t>& pad_mask,
                  const ModelParamsT<S>& params, const ModelConfig& cfg) {
  EncodeTrace<S> enc;
  enc.memory = encode_text(token_embeddings, {}, params, cfg);
  enc.key_mask.clear();
  return sat_forward(video, prior_bits, pad_mask, enc, params, cfg);
}

template <typename S>
double bce_loss(const VecX<S>& probs, const VecX<S>& target,
                const std::vector<uint8_t>& pad_mask) {
  if (probs.size() != target.size()) throw Error("bce_loss: length mismatch");
  const double eps = 1e-7;
  double sum = 0.0;
  int valid = 0;
  for (Eigen::Index t = 0; t < probs.size(); ++t) {
    if (!pad_mask.empty() && pad_mask[static_cast<size_t>(t)]) continue;
    double p = std::min(1.0 - eps, std::max(eps, static_cast<double>(probs[t])));
    double y = static_cast<double>(target[t]);
    sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    ++valid;
  }
  if (valid == 0) throw Error("bce_loss: no valid frames");
  return -sum / valid;
}

template <typename S>
void sat_backward(const ForwardTrace<S>& fwd, const VecX<S>& target,
                  const ModelParamsT<S>& params, const ModelConfig& cfg,
                  ModelParamsT<S>& grads, InputGrads<S>* input_grads) {
  const int T = static_cast<int>(fwd.probs.size());
  if (target.size() != T) throw Error("sat_backward: target length mismatch");

  int valid = 0;
  for (int t = 0; t < T; ++t) {
    if (fwd.pad_mask.empty() || !fwd.pad_mask[static_cast<size_t>(t)]) ++valid;
  }
  if (valid == 0) throw Error("sat_backward: no valid frames");

  // d(loss)/d(logit) with the sigmoid folded in.
  MatX<S> d_logits(T, 1);
  for (int t = 0; t < T; ++t) {
    bool padded = !fwd.pad_mask.empty() && fwd.pad_mask[static_cast<size_t>(t)];
    d_logits(t, 0) = padded ? S(0) : (fwd.probs[t] - target[t]) / static_cast<S>(valid);
  }

  MatX<S> dx = detail::dense_backward(fwd.decoded, params.head, d_logits, grads.head);

  DropTrace<S> drop = fwd.drop;  // cursor copy, walked backwards
  drop.next = drop.masks.size();

  MatX<S> d_memory = MatX<S>::Zero(fwd.enc.memory.rows(), fwd.enc.memory.cols());
  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const auto& layer = params.decoder[static_cast<size_t>(l)];
    auto& glayer = grads.decoder[static_cast<size_t>(l)];
    const auto& t = fwd.layers[static_cast<size_t>(l)];

    dx = detail::layer_norm_backward(t.norm3, layer.norm3, dx, glayer.norm3);
    MatX<S> df = detail::dropout_backward(dx, drop);
    dx += detail::ffn_backward(t.ffn, layer.ffn1, layer.ffn2, df, glayer.ffn1,
                               glayer.ffn2);

    dx = detail::layer_norm_backward(t.norm2, layer.norm2, dx, glayer.norm2);
    MatX<S> dc = detail::dropout_backward(dx, drop);
    dx += detail::attention_backward(t.cross_attn, layer.cross_attn, cfg.num_heads,
                                     dc, glayer.cross_attn, d_memory);

    dx = detail::layer_norm_backward(t.norm1, layer.norm1, dx, glayer.norm1);
    MatX<S> da = detail::dropout_backward(dx, drop);
    MatX<S> d_self_kv = MatX<S>::Zero(dx.rows(), dx.cols());
    MatX<S> d_self_q = detail::attention_backward(t.self_attn, layer.self_attn,
                                                  cfg.num_heads, da, glayer.self_attn,
                                                  d_self_kv);
    dx += d_self_q + d_self_kv;
  }

  // Positional encodings are additive constants; gradient passes through.
  if (cfg.normalize_fused_input) {
    LayerNormT<S> unit;
    unit.gain = MatX<S>::Ones(1, cfg.d_model);
    unit.bias = MatX<S>::Zero(1, cfg.d_model);
    LayerNormT<S> scratch;
    scratch.gain = MatX<S>::Zero(1, cfg.d_model);
    scratch.bias = MatX<S>::Zero(1, cfg.d_model);
    dx = detail::layer_norm_backward(fwd.fuse_norm, unit, dx, scratch);
  }

  MatX<S> d_fused_raw =
      detail::dense_backward(fwd.fused_raw, params.fusion_proj, dx, grads.fusion_proj);
  MatX<S> d_video_half = d_fused_raw.leftCols(cfg.fusion_half_dim);
  MatX<S> d_prior_half = d_fused_raw.rightCols(cfg.fusion_half_dim);

  MatX<S> d_video =
      detail::dense_backward(fwd.video_in, params.video_proj, d_video_half,
                             grads.video_proj);
  MatX<S> d_prior = detail::dense_backward(MatX<S>(fwd.prior_in), params.prior_proj,
                                           d_prior_half, grads.prior_proj);

  // Encoder backward, seeded by the accumulated cross-attention gradient.
  DropTrace<S> enc_drop = fwd.enc.drop;
  enc_drop.next = enc_drop.masks.size();
  MatX<S> de = d_memory;
  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const auto& layer = params.encoder[static_cast<size_t>(l)];
    auto& glayer = grads.encoder[static_cast<size_t>(l)];
    const auto& t = fwd.enc.layers[static_cast<size_t>(l)];

    de = detail::layer_norm_backward(t.norm2, layer.norm2, de, glayer.norm2);
    MatX<S> df = detail::dropout_backward(de, enc_drop);
    de += detail::ffn_backward(t.ffn, layer.ffn1, layer.ffn2, df, glayer.ffn1,
                               glayer.ffn2);

    de = detail::layer_norm_backward(t.norm1, layer.norm1, de, glayer.norm1);
    MatX<S> da = detail::dropout_backward(de, enc_drop);
    MatX<S> d_kv = MatX<S>::Zero(de.rows(), de.cols());
    MatX<S> d_q = detail::attention_backward(t.attn, layer.self_attn, cfg.num_heads,
                                             da, glayer.self_attn, d_kv);
    de += d_q + d_kv;
  }
  MatX<S> d_tokens =
      detail::dense_backward(fwd.enc.tokens_in, params.text_proj, de, grads.text_proj);

  bool finite = true;
  for_each_tensor(grads, [&](const std::string&, const MatX<S>& m) {
    if (!m.allFinite()) finite = false;
  });
  if (!finite) throw Error("sat_backward: non-finite gradient");

  if (input_grads) {
    input_grads->d_tokens = std::move(d_tokens);
    input_grads->d_video = std::move(d_video);
    input_grads->d_prior = d_prior.col(0);
  }
}

template <typename S>
size_t param_count(const ModelParamsT<S>& p) {
  size_t n = 0;
  for_each_tensor(p, [&](const std::string&, const MatX<S>& m) {
    n += static_cast<size_t>(m.size());
  });
  return n;
}

template <typename S>
S get_param(const ModelParamsT<S>& p, size_t flat_index) {
  S out{};
  bool found = false;
  size_t base = 0;
  for_each_tensor(p, [&](const std::string&, const MatX<S>& m) {
    size_t n = static_cast<size_t>(m.size());
    if (!found && flat_index < base + n) {
      out = m.data()[flat_index - base];
      found = true;
    }
    base += n;
  });
  if (!found) throw Error("get_param: index out of range");
  return out;
}

template <typename S>
void set_param(ModelParamsT<S>& p, size_t flat_index, S value) {
  bool found = false;
  size_t base = 0;
  for_each_tensor(p, [&](const std::string&, MatX<S>& m) {
    size_t n = static_cast<size_t>(m.size());
    if (!found && flat_index < base + n) {
      m.data()[flat_index - base] = value;
      found = true;
    }
    base += n;
  });
  if (!found) throw Error("set_param: index out of range");
}

template <typename S>
ModelParamsT<S> zeros_like(const ModelParamsT<S>& p) {
  ModelParamsT<S> z = p;
  for_each_tensor(z, [](const std::string&, MatX<S>& m) { m.setZero(); });
  return z;
}

template <typename S>
ModelParamsT<S> cast_params(const ModelParams& p) {
  if constexpr (std::is_same_v<S, Real>) {
    return p;
  } else {
    ModelParamsT<S> out;
    out.encoder.resize(p.encoder.size());
    out.decoder.resize(p.decoder.size());
    std::vector<const Mat*> sources;
    for_each_tensor(p, [&](const std::string&, const Mat& m) { sources.push_back(&m); });
    size_t i = 0;
    for_each_tensor(out, [&](const std::string&, MatX<S>& m) {
      m = sources[i++]->template cast<S>();
    });
    return out;
  }
}

template <typename S>
ModelParamsT<S> init_params_t(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ModelParamsT<S> p;
  auto dense = [&](int d_in, int d_out) {
    DenseT<S> d;
    d.w.resize(d_in, d_out);
    d.b = MatX<S>::Zero(1, d_out);
    return d;
  };
  auto norm = [&](int d) {
    LayerNormT<S> n;
    n.gain = MatX<S>::Ones(1, d);
    n.bias = MatX<S>::Zero(1, d);
    return n;
  };
  auto attn = [&]() {
    AttentionT<S> a;
    a.q = dense(cfg.d_model, cfg.d_model);
    a.k = dense(cfg.d_model, cfg.d_model);
    a.v = dense(cfg.d_model, cfg.d_model);
    a.out = dense(cfg.d_model, cfg.d_model);
    return a;
  };

  p.text_proj = dense(cfg.d_text_in, cfg.d_model);
  p.video_proj = dense(cfg.d_video_in, cfg.fusion_half_dim);
  p.prior_proj = dense(1, cfg.fusion_half_dim);
  p.fusion_proj = dense(2 * cfg.fusion_half_dim, cfg.d_model);
  p.encoder.resize(static_cast<size_t>(cfg.num_layers));
  p.decoder.resize(static_cast<size_t>(cfg.num_layers));
  for (auto& l : p.encoder) {
    l.self_attn = attn();
    l.norm1 = norm(cfg.d_model);
    l.ffn1 = dense(cfg.d_model, cfg.ffn_dim);
    l.ffn2 = dense(cfg.ffn_dim, cfg.d_model);
    l.norm2 = norm(cfg.d_model);
  }
  for (auto& l : p.decoder) {
    l.self_attn = attn();
    l.norm1 = norm(cfg.d_model);
    l.cross_attn = attn();
    l.norm2 = norm(cfg.d_model);
    l.ffn1 = dense(cfg.d_model, cfg.ffn_dim);
    l.ffn2 = dense(cfg.ffn_dim, cfg.d_model);
    l.norm3 = norm(cfg.d_model);
  }
  p.head = dense(cfg.d_model, 1);

  Rng rng(seed);
  for_each_tensor(p, [&](const std::string& name, MatX<S>& m) {
    if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".w") == 0) {
      double bound = std::sqrt(1.0 / static_cast<double>(m.rows()));
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
        }
      }
    }
    // Biases and norm gains/biases keep their constructed values.
  });
  return p;
}

}  // namespace subalign

#endif  // SUBALIGN_MODEL_H_
