// include/subalign/subtitles.h

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

#ifndef SUBALIGN_SUBTITLES_H_
#define SUBALIGN_SUBTITLES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "subalign/common.h"

namespace subalign {

// Millisecond timestamp, displayable as HH:MM:SS,mmm with HH <= 99.
class TimeCode {
 public:
  static constexpr int64_t kMaxMs = 99LL * 3600000 + 59 * 60000 + 59 * 1000 + 999;

  TimeCode() : ms_(0) {}
  explicit TimeCode(int64_t ms);

  int64_t ms() const { return ms_; }
  std::string to_string() const;            // "HH:MM:SS,mmm"
  static TimeCode parse(const std::string& text);

  friend bool operator==(TimeCode a, TimeCode b) { return a.ms_ == b.ms_; }
  friend bool operator<(TimeCode a, TimeCode b) { return a.ms_ < b.ms_; }

 private:
  int64_t ms_;
};

// Half-open [start_ms, end_ms); empty iff start_ms == end_ms.
struct Interval {
  int64_t start_ms = 0;
  int64_t end_ms = 0;

  int64_t length_ms() const { return end_ms - start_ms; }
  bool empty() const { return start_ms == end_ms; }
  int64_t mid_ms() const { return (start_ms + end_ms) / 2; }

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.start_ms == b.start_ms && a.end_ms == b.end_ms;
  }
};

// |a n b| / |a u b|; 0 when both intervals are empty.
double interval_iou(const Interval& a, const Interval& b);

// True if the half-open intervals share at least one instant.
bool intervals_overlap(const Interval& a, const Interval& b);

struct Subtitle {
  int index = 0;      // 1-based
  TimeCode start;
  TimeCode end;
  std::string text;

  Interval interval() const { return {start.ms(), end.ms()}; }

  friend bool operator==(const Subtitle& a, const Subtitle& b) {
    return a.index == b.index && a.start == b.start && a.end == b.end &&
           a.text == b.text;
  }
};

enum class TrackKind { kAudio, kGroundTruth, kPredicted, kPrior };

const char* track_kind_name(TrackKind kind);

struct SubtitleTrack {
  std::vector<Subtitle> subtitles;
  TrackKind kind = TrackKind::kAudio;

  size_t size() const { return subtitles.size(); }
  bool empty() const { return subtitles.empty(); }
  const Subtitle& operator[](size_t i) const { return subtitles[i]; }

  // Pairs (i, j), i < j, whose intervals overlap.
  std::vector<std::pair<size_t, size_t>> overlapping_pairs() const;
};

// Per-subtitle checks for every kind; additionally sortedness and
// non-overlap for audio and ground-truth tracks. Throws Error.
void validate_track(const SubtitleTrack& track);

// SRT ingestion. Cue text lines are joined with single spaces and indices
// renumbered 1..N. Accepts CRLF input and an optional UTF-8 BOM. Throws
// ParseError naming the offending line, and Error on empty input or on a
// kind-invariant violation.
SubtitleTrack parse_srt(const std::string& bytes, TrackKind kind);

// Canonical SRT: "\n" endings, zero-padded timecodes, one blank line
// between cues, trailing newline. Audio/ground-truth tracks must pass
// their invariants; predicted tracks must be overlap-free. Prior tracks
// may overlap (they are diagnostic/inspection output).
std::string serialize_srt(const SubtitleTrack& track);

SubtitleTrack load_srt_file(const std::string& path, TrackKind kind);
void save_srt_file(const std::string& path, const SubtitleTrack& track);

// Timings offset by delta_ms and clamped at zero; underflowed cues keep a
// minimal 1 ms duration so start < end still holds.
SubtitleTrack shift_track(const SubtitleTrack& track, int64_t delta_ms);

}  // namespace subalign

#endif  // SUBALIGN_SUBTITLES_H_
