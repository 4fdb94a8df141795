// include/subalign/pipeline.h

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

#ifndef SUBALIGN_PIPELINE_H_
#define SUBALIGN_PIPELINE_H_

#include <vector>

#include "subalign/corpus.h"
#include "subalign/global_align.h"
#include "subalign/metrics.h"
#include "subalign/model.h"
#include "subalign/training.h"
#include "subalign/windowing.h"

namespace subalign {

// Inference-time knobs. prior_delta_ms turns the audio track into S_prior;
// the shift knobs support the sensitivity experiments: prior_shift_ms moves
// the prior cue while the search window stays put, window_shift_ms moves
// the search window while the prior stays put.
struct AlignOptions {
  double tau = 0.5;
  double tau_dtw = 0.4;
  bool use_dtw = true;
  int64_t prior_delta_ms = 3200;
  int64_t prior_shift_ms = 0;
  int64_t window_shift_ms = 0;
};

// Per-subtitle inference over an episode's audio track (parallel across
// subtitles). Requires features and an audio track.
std::vector<SubtitleInference> infer_episode(const Episode& episode,
                                             const ModelParams& params,
                                             const ModelConfig& mcfg,
                                             const WindowConfig& wcfg,
                                             const TextEncoderConfig& tcfg,
                                             const AlignOptions& opts);

// Full alignment of one episode. With DTW the result is overlap-free
// (kind predicted); without it, threshold decodes are emitted as-is (kind
// prior, overlaps possible; empty decodes fall back to the prior cue).
SubtitleTrack align_episode(const Episode& episode, const ModelParams& params,
                            const ModelConfig& mcfg, const WindowConfig& wcfg,
                            const TextEncoderConfig& tcfg, const AlignOptions& opts);

// Canonical evaluation windows: centered on the unshifted S_prior cues.
std::vector<Window> evaluation_windows(const Episode& episode,
                                       const WindowConfig& wcfg,
                                       int64_t prior_delta_ms);

// Evaluate a predicted track against the episode's ground truth over the
// canonical windows.
void accumulate_episode_eval(EvalAccumulator& acc, const Episode& episode,
                             const SubtitleTrack& pred, const WindowConfig& wcfg,
                             int64_t prior_delta_ms);

}  // namespace subalign

#endif  // SUBALIGN_PIPELINE_H_
