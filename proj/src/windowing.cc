// src/windowing.cc

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

#include "subalign/windowing.h"

#include <algorithm>
#include <cmath>

namespace subalign {

int WindowConfig::frames() const {
  return static_cast<int>(std::llround(window_seconds * source_fps / subsample_stride));
}

void WindowConfig::validate() const {
  if (window_seconds <= 0 || source_fps <= 0 || subsample_stride < 1) {
    throw Error("invalid window config");
  }
  if (frames() < 8) throw Error("window too short: T < 8");
}

int64_t Window::frame_start_ms(int k) const {
  return static_cast<int64_t>(
      std::llround((start_frame + static_cast<int64_t>(k) * stride) * 1000.0 / fps));
}

int64_t Window::frame_end_ms(int k) const {
  return static_cast<int64_t>(std::llround(
      (start_frame + static_cast<int64_t>(k + 1) * stride) * 1000.0 / fps));
}

void PriorVector::validate() const {
  int runs = 0;
  bool in_run = false;
  for (uint8_t b : bits) {
    if (b && !in_run) {
      ++runs;
      in_run = true;
    } else if (!b) {
      in_run = false;
    }
  }
  if (runs > 1) throw Error("prior vector has more than one run of ones");
}

int time_to_window_frame(int64_t t_ms, const Window& window) {
  double source = t_ms / 1000.0 * window.fps;
  int64_t k = static_cast<int64_t>(
      std::floor((source - static_cast<double>(window.start_frame)) / window.stride));
  if (k < 0 || k >= window.T) return kOutOfWindow;
  return static_cast<int>(k);
}

namespace {

Window build_window(int64_t start_frame, const FeatureSequence& episode,
                    const WindowConfig& cfg, const std::string& episode_id) {
  cfg.validate();
  Window w;
  w.episode_id = episode_id;
  w.start_frame = start_frame;
  w.T = cfg.frames();
  w.fps = episode.fps;
  w.stride = cfg.subsample_stride;
  w.features = Mat::Zero(w.T, episode.frames.cols());
  w.pad_mask.assign(static_cast<size_t>(w.T), 0);
  for (int k = 0; k < w.T; ++k) {
    int64_t src = start_frame + static_cast<int64_t>(k) * cfg.subsample_stride;
    if (src < 0 || src >= episode.num_frames()) {
      w.pad_mask[static_cast<size_t>(k)] = 1;
    } else {
      w.features.row(k) = episode.frames.row(static_cast<Eigen::Index>(src));
    }
  }
  return w;
}

int64_t ms_to_frame_floor(int64_t ms, double fps) {
  return static_cast<int64_t>(std::floor(ms / 1000.0 * fps));
}

int64_t ms_to_frame_ceil(int64_t ms, double fps) {
  return static_cast<int64_t>(std::ceil(ms / 1000.0 * fps));
}

}  // namespace

Window make_train_window(const Subtitle& gt, const FeatureSequence& episode,
                         const WindowConfig& cfg, Rng& rng,
                         const std::string& episode_id) {
  cfg.validate();
  int64_t span = cfg.source_span();
  int64_t gt_first = ms_to_frame_floor(gt.start.ms(), episode.fps);
  int64_t gt_last = ms_to_frame_ceil(gt.end.ms(), episode.fps);  // exclusive

  int64_t lo, hi;  // inclusive range of window start frames
  if (cfg.train_rule == TrainWindowRule::kContain) {
    lo = gt_last - span;
    hi = gt_first;
  } else {
    lo = gt_first - span + 1;
    hi = gt_last - 1;
  }
  int64_t start;
  if (lo > hi) {
    // Cue longer than the window: center on its midpoint, labels get clipped.
    int64_t mid = (gt_first + gt_last) / 2;
    start = mid - span / 2;
  } else {
    start = rng.uniform_int(lo, hi);
  }
  return build_window(start, episode, cfg, episode_id);
}

Window make_test_window(const Subtitle& prior, const FeatureSequence& episode,
                        const WindowConfig& cfg, const std::string& episode_id) {
  return make_window_at(prior.interval().mid_ms(), episode, cfg, episode_id);
}

Window make_window_at(int64_t center_ms, const FeatureSequence& episode,
                      const WindowConfig& cfg, const std::string& episode_id) {
  cfg.validate();
  double mid_frame = center_ms / 1000.0 * episode.fps;
  int64_t start = static_cast<int64_t>(
      std::llround(mid_frame - static_cast<double>(cfg.source_span()) / 2.0));
  return build_window(start, episode, cfg, episode_id);
}

PriorVector encode_span(const Interval& interval, const Window& window) {
  PriorVector prior = PriorVector::all_false(window.T);
  if (interval.empty()) return prior;
  for (int k = 0; k < window.T; ++k) {
    if (interval.start_ms < window.frame_end_ms(k) &&
        interval.end_ms > window.frame_start_ms(k)) {
      prior.bits[static_cast<size_t>(k)] = 1;
    }
  }
  return prior;
}

Interval decode_span(const Vec& values, double tau, const Window& window) {
  if (values.size() != window.T) {
    throw Error("decode_span: vector length does not match window");
  }
  int first = -1, last = -1;
  for (int k = 0; k < window.T; ++k) {
    if (static_cast<double>(values[k]) > tau) {
      if (first < 0) first = k;
      last = k;
    }
  }
  if (first < 0) return Interval{0, 0};
  int64_t start = std::max<int64_t>(0, window.frame_start_ms(first));
  int64_t end = std::max(start, window.frame_end_ms(last));
  return Interval{start, end};
}

}  // namespace subalign
