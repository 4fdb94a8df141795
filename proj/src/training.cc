// src/training.cc

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

#include "subalign/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "subalign/corpus.h"
#include "subalign/threading.h"

namespace subalign {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("train config: batch_size must be positive");
  if (lr_pretrain <= 0 || lr_finetune <= 0) throw Error("train config: lr must be positive");
  if (augment_prob < 0 || augment_prob > 1) throw Error("train config: augment_prob out of range");
  if (max_word_edits < 0) throw Error("train config: max_word_edits negative");
  if (pretrain_epochs < 0 || finetune_epochs < 0) throw Error("train config: negative epochs");
}

std::vector<SpottingAnnotation> load_spottings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<SpottingAnnotation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    SpottingAnnotation s;
    std::string time_field, conf_field;
    if (!std::getline(ss, s.episode_id, '\t') || !std::getline(ss, s.word, '\t') ||
        !std::getline(ss, time_field, '\t') || !std::getline(ss, conf_field)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 tab-separated fields");
    }
    try {
      s.time_ms = std::stoll(time_field);
      s.confidence = std::stod(conf_field);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad number");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_spottings(const std::string& path,
                    const std::vector<SpottingAnnotation>& spottings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : spottings) {
    out << s.episode_id << '\t' << s.word << '\t' << s.time_ms << '\t'
        << s.confidence << '\n';
  }
}

void save_loss_log(const std::string& path, const LossLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,phase,mean_loss\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.phase << ',' << e.mean_loss << '\n';
  }
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState st;
  st.m = zeros_like(params);
  st.v = zeros_like(params);
  st.step = 0;
  return st;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for_each_tensor(grads, [&](const std::string& name, const Mat& g) {
    if (!g.allFinite()) {
      throw Error("adam_step: non-finite gradient in tensor '" + name + "'");
    }
  });

  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  std::vector<const Mat*> gs;
  for_each_tensor(grads, [&](const std::string&, const Mat& g) { gs.push_back(&g); });
  std::vector<Mat*> ms, vs;
  for_each_tensor(state.m, [&](const std::string&, Mat& m) { ms.push_back(&m); });
  for_each_tensor(state.v, [&](const std::string&, Mat& v) { vs.push_back(&v); });

  size_t i = 0;
  for_each_tensor(params, [&](const std::string&, Mat& p) {
    const Mat& g = *gs[i];
    Mat& m = *ms[i];
    Mat& v = *vs[i];
    m = static_cast<Real>(beta1) * m + static_cast<Real>(1.0 - beta1) * g;
    v = static_cast<Real>(beta2) * v.array().matrix() +
        static_cast<Real>(1.0 - beta2) * g.array().square().matrix();
    // Bias-corrected update, evaluated in double per coefficient.
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        double m_hat = static_cast<double>(m(r, c)) / bc1;
        double v_hat = static_cast<double>(v(r, c)) / bc2;
        p(r, c) -= static_cast<Real>(lr * m_hat / (std::sqrt(v_hat) + eps));
      }
    }
    ++i;
  });
}

std::vector<std::string> augment_text(const std::vector<std::string>& tokens,
                                      const std::vector<std::string>& vocab,
                                      const TrainConfig& cfg, Rng& rng) {
  if (vocab.empty()) throw Error("augment_text: empty vocabulary");
  if (!rng.bernoulli(cfg.augment_prob)) return tokens;

  std::vector<std::string> out = tokens;
  rng.shuffle(out);
  int k_add = static_cast<int>(rng.uniform_int(0, cfg.max_word_edits));
  int k_del = static_cast<int>(rng.uniform_int(0, cfg.max_word_edits));
  for (int i = 0; i < k_add; ++i) {
    const std::string& word = vocab[rng.uniform_index(vocab.size())];
    size_t pos = rng.uniform_index(out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), word);
  }
  for (int i = 0; i < k_del && out.size() > 1; ++i) {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(out.size())));
  }
  return out;
}

Vec word_target(const SpottingAnnotation& spot, const Window& window) {
  if (time_to_window_frame(spot.time_ms, window) == kOutOfWindow) {
    throw Error("word_target: spotting at " + std::to_string(spot.time_ms) +
                " ms lies outside the window");
  }
  Interval span{spot.time_ms - 500, spot.time_ms + 500};
  PriorVector bits = encode_span(span, window);
  Vec target(window.T);
  for (int k = 0; k < window.T; ++k) {
    target[k] = bits.bits[static_cast<size_t>(k)] ? Real(1) : Real(0);
  }
  return target;
}

namespace {

// One assembled training example.
struct Sample {
  TokenSequence text;
  Window window;
  PriorVector prior;
  Vec target;
};

Vec bits_to_vec(const PriorVector& p) {
  Vec v(static_cast<Eigen::Index>(p.bits.size()));
  for (size_t i = 0; i < p.bits.size(); ++i) v[static_cast<Eigen::Index>(i)] = p.bits[i] ? 1.0f : 0.0f;
  return v;
}

// Gradients are reduced over a fixed number of chunks so the summation
// order (and therefore the trajectory) does not depend on the thread count.
constexpr size_t kGradChunks = 8;

// Runs fwd+bwd for samples [begin, end) of one batch and returns summed
// grads and loss.
struct ChunkResult {
  ModelParams grads;
  double loss_sum = 0.0;
};

double run_batch(const std::vector<Sample>& batch, const ModelConfig& mcfg,
                 ModelParams& params, AdamState& adam, double lr,
                 uint64_t dropout_key) {
  size_t chunks = std::min(kGradChunks, batch.size());
  size_t per_chunk = (batch.size() + chunks - 1) / chunks;
  std::vector<ChunkResult> results(chunks);

  parallel_for(chunks, [&](size_t ci) {
    ChunkResult& res = results[ci];
    res.grads = zeros_like(params);
    size_t lo = ci * per_chunk;
    size_t hi = std::min(batch.size(), lo + per_chunk);
    for (size_t s = lo; s < hi; ++s) {
      const Sample& sample = batch[s];
      DropoutPlan<Real> dropout;
      dropout.rate = mcfg.dropout_rate;
      dropout.rng = Rng(Rng::mix(dropout_key, s));
      DropoutPlan<Real>* dp = dropout.rate > 0 ? &dropout : nullptr;

      ForwardTrace<Real> trace;
      EncodeTrace<Real>& enc = trace.enc;
      encode_text<Real>(sample.text.embeddings, {}, params, mcfg, &enc, dp);
      VecX<Real> probs = sat_forward<Real>(sample.window.features, sample.prior.bits,
                                           sample.window.pad_mask, enc, params, mcfg,
                                           &trace, dp);
      res.loss_sum += bce_loss(probs, sample.target, sample.window.pad_mask);
      sat_backward(trace, sample.target, params, mcfg, res.grads);
    }
  });

  ModelParams total = std::move(results[0].grads);
  double loss_sum = results[0].loss_sum;
  for (size_t ci = 1; ci < chunks; ++ci) {
    std::vector<const Mat*> src;
    for_each_tensor(results[ci].grads,
                    [&](const std::string&, const Mat& m) { src.push_back(&m); });
    size_t i = 0;
    for_each_tensor(total, [&](const std::string&, Mat& m) { m += *src[i++]; });
    loss_sum += results[ci].loss_sum;
  }
  const Real scale = Real(1) / static_cast<Real>(batch.size());
  for_each_tensor(total, [&](const std::string&, Mat& m) { m *= scale; });

  adam_step(params, total, adam, lr);
  return loss_sum;
}

const Episode& episode_by_id(const std::vector<Episode>& episodes,
                             const std::string& id) {
  for (const auto& e : episodes) {
    if (e.id == id) return e;
  }
  throw Error("unknown episode id '" + id + "'");
}

}  // namespace

TrainResult pretrain_words(const ModelConfig& mcfg, ModelParams params,
                           const std::vector<SpottingAnnotation>& spottings,
                           const std::vector<Episode>& episodes,
                           const WindowConfig& wcfg, const TextEncoderConfig& tcfg,
                           const TrainConfig& cfg) {
  cfg.validate();
  mcfg.validate();
  wcfg.validate();

  std::vector<const SpottingAnnotation*> usable;
  for (const auto& s : spottings) {
    if (s.confidence >= cfg.spotting_confidence_floor) usable.push_back(&s);
  }
  if (usable.empty()) throw Error("pretrain_words: no spottings at or above confidence floor");

  TrainResult result;
  Rng order_rng(Rng::mix(cfg.seed, 0x70726574));  // pretraining stream
  AdamState adam = make_adam_state(params);

  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    std::vector<size_t> order(usable.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    double epoch_loss = 0.0;
    size_t pos = 0;
    size_t batch_index = 0;
    while (pos < order.size()) {
      size_t batch_n = std::min<size_t>(static_cast<size_t>(cfg.batch_size),
                                        order.size() - pos);
      std::vector<Sample> batch(batch_n);
      // Assembled in parallel; per-sample RNG keyed by (seed, epoch, slot).
      parallel_for(batch_n, [&](size_t b) {
        const SpottingAnnotation& spot = *usable[order[pos + b]];
        const Episode& ep = episode_by_id(episodes, spot.episode_id);
        Rng rng(Rng::mix(Rng::mix(cfg.seed, 1000003ULL * epoch), pos + b));
        Subtitle pseudo;
        pseudo.index = 1;
        pseudo.start = TimeCode(std::max<int64_t>(0, spot.time_ms - 500));
        pseudo.end = TimeCode(spot.time_ms + 500);
        pseudo.text = spot.word;
        Sample& s = batch[b];
        s.window = make_train_window(pseudo, ep.features, wcfg, rng, ep.id);
        s.prior = PriorVector::all_false(s.window.T);
        s.text = encode_tokens({spot.word}, tcfg);
        s.target = word_target(spot, s.window);
      });
      uint64_t dropout_key =
          Rng::mix(Rng::mix(cfg.seed, 0xd70 + static_cast<uint64_t>(epoch)),
                   batch_index);
      epoch_loss += run_batch(batch, mcfg, params, adam, cfg.lr_pretrain,
                              dropout_key);
      pos += batch_n;
      ++batch_index;
    }
    result.log.push_back({epoch + 1, "pretrain", epoch_loss / static_cast<double>(order.size())});
  }
  result.params = std::move(params);
  return result;
}

TrainResult finetune_subtitles(const ModelConfig& mcfg, ModelParams params,
                               const std::vector<Episode>& episodes,
                               const WindowConfig& wcfg,
                               const TextEncoderConfig& tcfg,
                               const TrainConfig& cfg) {
  cfg.validate();
  mcfg.validate();
  wcfg.validate();

  struct Ref {
    size_t episode;
    size_t subtitle;
  };
  std::vector<Ref> refs;
  for (size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (!ep.has_gt() || !ep.has_audio()) continue;
    if (ep.gt.size() != ep.audio.size()) {
      throw Error("episode " + ep.id + ": gt and audio track sizes differ");
    }
    for (size_t s = 0; s < ep.gt.size(); ++s) refs.push_back({e, s});
  }
  if (refs.empty()) throw Error("finetune_subtitles: no training subtitles");

  std::vector<std::string> vocab = corpus_vocab(episodes);

  TrainResult result;
  Rng order_rng(Rng::mix(cfg.seed, 0x66696e65));  // finetuning stream
  AdamState adam = make_adam_state(params);

  for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
    std::vector<size_t> order(refs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    double epoch_loss = 0.0;
    size_t pos = 0;
    size_t batch_index = 0;
    while (pos < order.size()) {
      size_t batch_n = std::min<size_t>(static_cast<size_t>(cfg.batch_size),
                                        order.size() - pos);
      std::vector<Sample> batch(batch_n);
      parallel_for(batch_n, [&](size_t b) {
        const Ref& ref = refs[order[pos + b]];
        const Episode& ep = episodes[ref.episode];
        const Subtitle& gt = ep.gt[ref.subtitle];
        const Subtitle& audio = ep.audio[ref.subtitle];
        Rng rng(Rng::mix(Rng::mix(cfg.seed, 2000003ULL * epoch), pos + b));

        Sample& s = batch[b];
        s.window = make_train_window(gt, ep.features, wcfg, rng, ep.id);

        Interval prior{audio.start.ms() + cfg.prior_shift_ms,
                       audio.end.ms() + cfg.prior_shift_ms};
        s.prior = encode_span(prior, s.window);

        std::string query_text = audio.text;
        if (cfg.random_subtitle) {
          const Ref& other = refs[rng.uniform_index(refs.size())];
          query_text = episodes[other.episode].audio[other.subtitle].text;
        }
        std::vector<std::string> tokens = tokenize(query_text);
        tokens = augment_text(tokens,
                              cfg.augment_vocab == AugmentVocab::kCorpus
                                  ? vocab
                                  : tokens,
                              cfg, rng);
        s.text = encode_tokens(tokens, tcfg);

        PriorVector target_bits = encode_span(gt.interval(), s.window);
        s.target = bits_to_vec(target_bits);
      });
      uint64_t dropout_key =
          Rng::mix(Rng::mix(cfg.seed, 0xd71 + static_cast<uint64_t>(epoch)),
                   batch_index);
      epoch_loss += run_batch(batch, mcfg, params, adam, cfg.lr_finetune,
                              dropout_key);
      pos += batch_n;
      ++batch_index;
    }
    result.log.push_back({epoch + 1, "finetune", epoch_loss / static_cast<double>(order.size())});
  }
  result.params = std::move(params);
  return result;
}

}  // namespace subalign
