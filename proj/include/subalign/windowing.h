// include/subalign/windowing.h

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

#ifndef SUBALIGN_WINDOWING_H_
#define SUBALIGN_WINDOWING_H_

#include <string>
#include <vector>

#include "subalign/common.h"
#include "subalign/features.h"
#include "subalign/rng.h"
#include "subalign/subtitles.h"

namespace subalign {

// How training windows are placed relative to the ground-truth cue.
enum class TrainWindowRule { kContain, kOverlap };

struct WindowConfig {
  double window_seconds = 20.0;
  double source_fps = 25.0;
  int subsample_stride = 4;
  TrainWindowRule train_rule = TrainWindowRule::kContain;

  // T = round(window_seconds * fps / stride); 125 at the defaults.
  int frames() const;
  // Window footprint in source frames (T * stride).
  int64_t source_span() const { return static_cast<int64_t>(frames()) * subsample_stride; }
  void validate() const;
};

// A T-frame slice of an episode. Window frame k samples source frame
// start_frame + k*stride and covers the stride-long span starting there.
// Rows outside the episode are zero with pad_mask set.
struct Window {
  std::string episode_id;
  int64_t start_frame = 0;  // source-fps index, may be negative at edges
  int T = 0;
  double fps = 25.0;
  int stride = 4;
  Mat features;                    // T x d_video
  std::vector<uint8_t> pad_mask;   // length T, 1 = padded

  int64_t frame_start_ms(int k) const;  // episode time of window frame k
  int64_t frame_end_ms(int k) const;
};

// Binary prior location vector; at most one contiguous run of ones.
struct PriorVector {
  std::vector<uint8_t> bits;

  static PriorVector all_false(int T) { return PriorVector{std::vector<uint8_t>(static_cast<size_t>(T), 0)}; }
  void validate() const;
};

constexpr int kOutOfWindow = -1;

// floor((t/1000*fps - start_frame)/stride); kOutOfWindow outside [0, T).
int time_to_window_frame(int64_t t_ms, const Window& window);

// Uniformly places a window containing the ground-truth cue (kContain) or
// merely overlapping it (kOverlap); cues longer than the window get a
// centered window instead.
Window make_train_window(const Subtitle& gt, const FeatureSequence& episode,
                         const WindowConfig& cfg, Rng& rng,
                         const std::string& episode_id = "");

// Deterministic window centered on the prior cue's midpoint.
Window make_test_window(const Subtitle& prior, const FeatureSequence& episode,
                        const WindowConfig& cfg, const std::string& episode_id = "");

// Window centered on an arbitrary episode time.
Window make_window_at(int64_t center_ms, const FeatureSequence& episode,
                      const WindowConfig& cfg, const std::string& episode_id = "");

// Bits set exactly on frames whose span intersects the interval.
PriorVector encode_span(const Interval& interval, const Window& window);

// Span from the first to the last frame with value strictly above tau;
// interior gaps are ignored; empty interval when nothing clears tau.
// Times are clamped at episode start.
Interval decode_span(const Vec& values, double tau, const Window& window);

}  // namespace subalign

#endif  // SUBALIGN_WINDOWING_H_
