// include/subalign/baselines.h

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

#ifndef SUBALIGN_BASELINES_H_
#define SUBALIGN_BASELINES_H_

#include <string>
#include <vector>

#include "subalign/subtitles.h"
#include "subalign/training.h"

namespace subalign {

// Episode span known to contain active signing.
struct ActiveSegment {
  Interval interval;
};

// Line format: start_ms TAB end_ms. Segments must be sorted and disjoint.
std::vector<ActiveSegment> load_active_segments(const std::string& path);
void save_active_segments(const std::string& path,
                          const std::vector<ActiveSegment>& segments);

struct HeuristicConfig {
  double pad_seconds = 4.0;
  double confidence_floor = 0.8;
  int64_t min_duration_ms = 40;  // collapsed cues keep one frame
};

struct HeuristicStats {
  int recentered = 0;     // stage-2 anchors
  int clamped = 0;        // anchors pulled back inside the episode
  int order_repairs = 0;  // cues pushed to restore monotonicity
};

// The shifted audio-aligned track.
SubtitleTrack shift_baseline(const SubtitleTrack& audio, int64_t delta_ms = 3200);

// Four-stage sparse-spotting aligner: (1) consume active segments,
// (2) recenter each subtitle with in-region spottings of its own words onto
// their mean time, (3) map runs of unspotted subtitles affinely into the
// gaps between anchors, (4) expand durations left-to-right into the active
// segments without creating overlaps. Output preserves count and order and
// is overlap-free.
SubtitleTrack spotting_heuristic(const SubtitleTrack& audio,
                                 const std::vector<SpottingAnnotation>& spottings,
                                 const std::vector<ActiveSegment>& active,
                                 int64_t episode_end_ms,
                                 const HeuristicConfig& cfg,
                                 HeuristicStats* stats = nullptr);

}  // namespace subalign

#endif  // SUBALIGN_BASELINES_H_
