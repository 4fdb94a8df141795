// include/subalign/global_align.h

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

#ifndef SUBALIGN_GLOBAL_ALIGN_H_
#define SUBALIGN_GLOBAL_ALIGN_H_

#include <cstdint>
#include <vector>

#include "subalign/common.h"
#include "subalign/subtitles.h"
#include "subalign/windowing.h"

namespace subalign {

// Per-subtitle inference output feeding the episode-level DTW stage.
struct SubtitleInference {
  Window window;      // the test search window
  Vec probs;          // sigmoid outputs, length window.T
  Interval prior;     // S_prior cue (fallback frames, ordering for empty)
  Interval decoded;   // threshold decode, may be empty
};

// Episode frames selected for DTW: probability of every subtitle at every
// selected frame, rows in increasing time order. A subtitle scores 0 at
// frames its window did not cover.
struct ScoreMatrix {
  Mat probs;                            // F x N
  std::vector<int64_t> frame_start_ms;  // length F
  std::vector<int64_t> frame_end_ms;    // length F
};

struct GlobalAlignment {
  std::vector<Interval> intervals;  // original subtitle order
  // Assigned frame ranges [first, last], indexed like the permutation the
  // DP ran under (runs[r] belongs to subtitle order[r]).
  std::vector<std::pair<int64_t, int64_t>> runs;
  double total_score = 0.0;         // sum of chosen probabilities
};

// Union over subtitles of unpadded frames scoring above tau_dtw; subtitles
// whose scores never clear tau_dtw contribute their prior frames instead.
// Frames are deduplicated by episode time. Throws when nothing is selected.
ScoreMatrix select_frames(const std::vector<SubtitleInference>& inferences,
                          double tau_dtw);

// Rank subtitles by predicted midpoint (prior midpoint when the decode is
// empty); stable, so ties keep the audio order. perm[rank] = subtitle.
std::vector<size_t> order_subtitles(const std::vector<SubtitleInference>& inferences);

// Partition the selected frames into one contiguous non-empty run per
// subtitle, in the given order, maximizing the summed probabilities.
// Scores are compared on a fixed integer scale (1e9) so ties break
// deterministically toward earlier split points. Runs snap to the selected
// frames' times; a run's end is capped at the next run's start.
GlobalAlignment dtw_align(const ScoreMatrix& scores, const std::vector<size_t>& order);

// Frame-count comparisons happen on this scale inside dtw_align; exposed
// for exact cross-checks against enumeration oracles.
constexpr int64_t kDtwScoreScale = 1000000000;

// select_frames + order_subtitles + dtw_align, mapped back onto the audio
// track's cue order. The result has zero overlapping pairs.
SubtitleTrack resolve_track(const std::vector<SubtitleInference>& inferences,
                            const SubtitleTrack& audio, double tau_dtw);

}  // namespace subalign

#endif  // SUBALIGN_GLOBAL_ALIGN_H_
