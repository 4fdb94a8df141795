// include/subalign/metrics.h

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

#ifndef SUBALIGN_METRICS_H_
#define SUBALIGN_METRICS_H_

#include <array>
#include <string>
#include <vector>

#include "subalign/subtitles.h"
#include "subalign/windowing.h"

namespace subalign {

inline constexpr std::array<double, 3> kIouThresholds = {0.10, 0.25, 0.50};

struct PerSubtitleEval {
  int index = 0;
  double iou = 0.0;
  std::array<bool, 3> hit = {false, false, false};
  double frame_acc = 0.0;
  bool pred_non_empty = false;
};

struct EvalReport {
  double frame_acc = 0.0;
  std::array<double, 3> f1 = {0.0, 0.0, 0.0};  // F1@.10/.25/.50
  std::vector<PerSubtitleEval> per_subtitle;
};

// Frame population for frame accuracy: the per-subtitle test window
// (default) or a shared stride grid over the episode extent.
enum class FrameAccScope { kWindow, kEpisode };

// Predictions may be empty intervals (no decode); ground truth may not.
double frame_accuracy(const std::vector<Interval>& pred,
                      const std::vector<Interval>& gt,
                      const std::vector<Window>& windows);

// Hits are pairs with IoU >= threshold. Precision counts only non-empty
// predictions; empty predictions are misses. F1 is 0 when undefined.
double f1_at_iou(const std::vector<Interval>& pred,
                 const std::vector<Interval>& gt, double threshold);

EvalReport evaluate(const std::vector<Interval>& pred,
                    const std::vector<Interval>& gt,
                    const std::vector<Window>& windows);

// Pools per-subtitle results across episodes before computing the report.
class EvalAccumulator {
 public:
  explicit EvalAccumulator(FrameAccScope scope = FrameAccScope::kWindow)
      : scope_(scope) {}

  void add_episode(const std::vector<Interval>& pred,
                   const std::vector<Interval>& gt,
                   const std::vector<Window>& windows);

  EvalReport report() const;

 private:
  FrameAccScope scope_;
  std::vector<PerSubtitleEval> rows_;
  // Episode-scope accumulators.
  int64_t episode_frames_ = 0;
  int64_t episode_matches_ = 0;
};

std::vector<Interval> track_intervals(const SubtitleTrack& track);

// Rendering of the four-column report.
std::string report_table(const EvalReport& report);
std::string report_csv(const EvalReport& report);

}  // namespace subalign

#endif  // SUBALIGN_METRICS_H_
