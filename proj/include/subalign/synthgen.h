// include/subalign/synthgen.h

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

#ifndef SUBALIGN_SYNTHGEN_H_
#define SUBALIGN_SYNTHGEN_H_

#include <string>
#include <vector>

#include "subalign/baselines.h"
#include "subalign/features.h"
#include "subalign/subtitles.h"
#include "subalign/training.h"

namespace subalign {

// Episodes with learnable text<->feature correspondence: every vocabulary
// word owns a fixed feature direction; a subtitle's signing is a run of
// noisy word motifs (some dropped, possibly reordered) separated from its
// neighbours by noise-only gaps. Audio cues are the ground truth shifted
// back by ~shift_mean seconds with duration jitter, mirroring how
// audio-aligned subtitles lag the signing.
struct SynthConfig {
  int vocab_size = 50;
  int d_video = 32;
  double fps = 25.0;
  double motif_frames_mean = 14.0;
  double motif_frames_std = 3.0;
  int subtitle_len_min = 5;    // tokens
  int subtitle_len_max = 8;
  int gap_frames_min = 35;
  int gap_frames_max = 110;
  double reorder_prob = 0.1;
  double drop_token_prob = 0.1;
  double shift_mean_s = 3.2;
  double shift_std_s = 0.0;
  double dur_noise_std_s = 0.0;
  double dur_zero_prob = 0.3;  // chance the audio duration is exactly right
  double noise_scale = 0.25;   // motif noise magnitude relative to signal
  int64_t min_audio_dur_ms = 400;
  int episodes = 1;
  int subs_per_episode = 15;
  uint64_t seed = 0;

  void validate() const;
};

struct SynthEpisode {
  std::string id;
  FeatureSequence features;
  SubtitleTrack gt;     // kind ground_truth
  SubtitleTrack audio;  // kind audio, index-aligned with gt
  std::vector<std::string> token_vocab;

  // Realized sign occurrences, the source of synthetic spottings.
  struct Motif {
    std::string word;
    int64_t start_ms = 0;
    int64_t end_ms = 0;
  };
  std::vector<Motif> motifs;
};

SynthEpisode gen_episode(const SynthConfig& cfg, uint64_t episode_seed);

// Zero-mean position and duration jitter, the perturbation protocol for
// recovery experiments. Output may overlap (kind prior).
SubtitleTrack perturb_track(const SubtitleTrack& gt, double sigma_pos_s,
                            double sigma_dur_s, uint64_t seed);

// One spotting per realized motif, kept with probability `recall`;
// confidences uniform in [0.8, 1.0].
std::vector<SpottingAnnotation> gen_spottings(const SynthEpisode& episode,
                                              double recall, uint64_t seed);

// Active-signing segments: the realized cue extents, merged when touching.
std::vector<ActiveSegment> active_segments_from_gt(const SynthEpisode& episode);

}  // namespace subalign

#endif  // SUBALIGN_SYNTHGEN_H_
