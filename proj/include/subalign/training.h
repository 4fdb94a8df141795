// include/subalign/training.h

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

#ifndef SUBALIGN_TRAINING_H_
#define SUBALIGN_TRAINING_H_

#include <string>
#include <vector>

#include "subalign/features.h"
#include "subalign/model.h"
#include "subalign/rng.h"
#include "subalign/subtitles.h"
#include "subalign/windowing.h"

namespace subalign {

struct Episode;  // corpus.h

// Where augmentation draws inserted words from.
enum class AugmentVocab { kCorpus, kSubtitle };

struct TrainConfig {
  int batch_size = 64;
  double lr_pretrain = 1e-5;
  double lr_finetune = 5e-6;
  int pretrain_epochs = 5;
  int finetune_epochs = 80;
  double augment_prob = 0.5;
  int max_word_edits = 2;
  AugmentVocab augment_vocab = AugmentVocab::kCorpus;
  double spotting_confidence_floor = 0.8;
  int64_t prior_shift_ms = 3200;  // S_audio -> S_prior
  // Control experiment: feed a random other subtitle's text as the query.
  bool random_subtitle = false;
  uint64_t seed = 0;

  void validate() const;

  // Field defaults above are the full-scale recipe; the desk profile is
  // sized for the synthetic corpus.
  static TrainConfig paper_profile() { return TrainConfig{}; }
  static TrainConfig desk_profile() {
    TrainConfig c;
    c.batch_size = 16;
    c.lr_pretrain = 1e-3;
    c.lr_finetune = 1e-3;
    c.pretrain_epochs = 10;
    c.finetune_epochs = 80;
    return c;
  }
};

// One sparse sign localisation (from mouthings/dictionary spotting).
struct SpottingAnnotation {
  std::string episode_id;
  std::string word;
  int64_t time_ms = 0;
  double confidence = 1.0;
};

// Line format: episode_id TAB word TAB time_ms TAB confidence.
std::vector<SpottingAnnotation> load_spottings(const std::string& path);
void save_spottings(const std::string& path,
                    const std::vector<SpottingAnnotation>& spottings);

struct LossLogEntry {
  int epoch = 0;
  std::string phase;
  double mean_loss = 0.0;
};
using LossLog = std::vector<LossLogEntry>;

// CSV: epoch,phase,mean_loss
void save_loss_log(const std::string& path, const LossLog& log);

struct AdamState {
  ModelParams m;
  ModelParams v;
  int64_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

// Standard Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8.
// Throws on non-finite gradients without touching the parameters.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double lr);

// With probability augment_prob: shuffle, then insert k_add and delete
// k_del words, k_add/k_del drawn independently from {0..max_word_edits}.
// Deletions never empty the list.
std::vector<std::string> augment_text(const std::vector<std::string>& tokens,
                                      const std::vector<std::string>& vocab,
                                      const TrainConfig& cfg, Rng& rng);

// 0/1 target with ones on the frames intersecting the one-second span
// centered on the spotting. Throws if the spotting lies outside the window.
Vec word_target(const SpottingAnnotation& spot, const Window& window);

struct TrainResult {
  ModelParams params;
  LossLog log;
};

// Single-sign localisation pretraining: per spotting, a random window
// containing its one-second span, the word alone as the text query, an
// all-false prior, masked BCE on the word target.
TrainResult pretrain_words(const ModelConfig& mcfg, ModelParams params,
                           const std::vector<SpottingAnnotation>& spottings,
                           const std::vector<Episode>& episodes,
                           const WindowConfig& wcfg, const TextEncoderConfig& tcfg,
                           const TrainConfig& cfg);

// Subtitle finetuning: windows sampled around S_gt, prior from the shifted
// audio cue clipped to the window, augmented token queries, masked BCE on
// the ground-truth span.
TrainResult finetune_subtitles(const ModelConfig& mcfg, ModelParams params,
                               const std::vector<Episode>& episodes,
                               const WindowConfig& wcfg,
                               const TextEncoderConfig& tcfg,
                               const TrainConfig& cfg);

}  // namespace subalign

#endif  // SUBALIGN_TRAINING_H_
