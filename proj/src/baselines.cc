// src/baselines.cc

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

#include "subalign/baselines.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "subalign/features.h"

namespace subalign {

std::vector<ActiveSegment> load_active_segments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ActiveSegment> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, '\t') || !std::getline(ss, b)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected start_ms TAB end_ms");
    }
    ActiveSegment seg;
    try {
      seg.interval.start_ms = std::stoll(a);
      seg.interval.end_ms = std::stoll(b);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad number");
    }
    if (seg.interval.end_ms <= seg.interval.start_ms) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty segment");
    }
    if (!out.empty() && seg.interval.start_ms < out.back().interval.end_ms) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": segments overlap or unsorted");
    }
    out.push_back(seg);
  }
  return out;
}

void save_active_segments(const std::string& path,
                          const std::vector<ActiveSegment>& segments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : segments) {
    out << s.interval.start_ms << '\t' << s.interval.end_ms << '\n';
  }
}

SubtitleTrack shift_baseline(const SubtitleTrack& audio, int64_t delta_ms) {
  SubtitleTrack out = shift_track(audio, delta_ms);
  out.kind = TrackKind::kPredicted;
  return out;
}

namespace {

struct Cue {
  double start, end;
  bool anchored = false;
};

double cue_mid(const Cue& c) { return 0.5 * (c.start + c.end); }

}  // namespace

SubtitleTrack spotting_heuristic(const SubtitleTrack& audio,
                                 const std::vector<SpottingAnnotation>& spottings,
                                 const std::vector<ActiveSegment>& active,
                                 int64_t episode_end_ms,
                                 const HeuristicConfig& cfg,
                                 HeuristicStats* stats) {
  if (audio.empty()) throw Error("spotting_heuristic: empty audio track");
  const double episode_end = static_cast<double>(episode_end_ms);
  const int64_t pad_ms = static_cast<int64_t>(std::llround(cfg.pad_seconds * 1000.0));
  HeuristicStats local;

  const size_t n = audio.size();
  std::vector<Cue> cues(n);

  // Stage 2: anchor subtitles whose own words were spotted nearby.
  for (size_t i = 0; i < n; ++i) {
    const Subtitle& s = audio[i];
    cues[i].start = static_cast<double>(s.start.ms());
    cues[i].end = static_cast<double>(s.end.ms());

    std::set<std::string> words;
    try {
      for (const auto& t : tokenize(s.text)) words.insert(t);
    } catch (const Error&) {
      continue;  // no usable words, never anchored
    }
    Interval region{s.start.ms() - pad_ms, s.end.ms() + pad_ms};
    double sum = 0.0;
    int count = 0;
    for (const auto& spot : spottings) {
      if (spot.confidence < cfg.confidence_floor) continue;
      if (spot.time_ms < region.start_ms || spot.time_ms >= region.end_ms) continue;
      if (!words.count(spot.word)) continue;
      sum += static_cast<double>(spot.time_ms);
      ++count;
    }
    if (count == 0) continue;

    double dur = cues[i].end - cues[i].start;
    double mid = sum / count;
    double start = mid - dur / 2.0;
    if (start < 0) {
      start = 0;
      ++local.clamped;
    }
    if (start + dur > episode_end) {
      start = std::max(0.0, episode_end - dur);
      ++local.clamped;
    }
    cues[i].start = start;
    cues[i].end = start + dur;
    cues[i].anchored = true;
    ++local.recentered;
  }

  // Stage 3: map each maximal run of unanchored cues affinely into the gap
  // between its anchored neighbours (episode bounds at the ends), keeping
  // the original relative spacing.
  size_t i = 0;
  while (i < n) {
    if (cues[i].anchored) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < n && !cues[j + 1].anchored) ++j;

    double gap_lo = (i == 0) ? 0.0 : cues[i - 1].end;
    double gap_hi = (j + 1 == n) ? episode_end : cues[j + 1].start;
    double src_lo = static_cast<double>(audio[i].start.ms());
    double src_hi = static_cast<double>(audio[j].end.ms());

    if (gap_hi - gap_lo <= 0.0 || src_hi - src_lo <= 0.0) {
      // Degenerate gap: stack minimal cues at its location.
      for (size_t k = i; k <= j; ++k) {
        cues[k].start = std::max(0.0, gap_lo);
        cues[k].end = cues[k].start + static_cast<double>(cfg.min_duration_ms);
      }
    } else {
      double scale = (gap_hi - gap_lo) / (src_hi - src_lo);
      for (size_t k = i; k <= j; ++k) {
        double s0 = static_cast<double>(audio[k].start.ms());
        double e0 = static_cast<double>(audio[k].end.ms());
        cues[k].start = gap_lo + (s0 - src_lo) * scale;
        cues[k].end = gap_lo + (e0 - src_lo) * scale;
      }
    }
    i = j + 1;
  }

  // Monotonic repair: anchoring can reorder or overlap cues; push starts
  // forward so order and disjointness hold before expansion.
  const double min_dur = static_cast<double>(cfg.min_duration_ms);
  double prev_end = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (cues[k].start < prev_end) {
      double dur = std::max(min_dur, cues[k].end - cues[k].start);
      cues[k].start = prev_end;
      cues[k].end = prev_end + dur;
      ++local.order_repairs;
    }
    if (cues[k].end - cues[k].start < min_dur) cues[k].end = cues[k].start + min_dur;
    prev_end = cues[k].end;
  }

  // Stage 4: expand each cue (one scale factor, >= 1) left-to-right to fill
  // its active segment without touching its neighbours.
  for (size_t k = 0; k < n; ++k) {
    double c = cue_mid(cues[k]);
    const ActiveSegment* seg = nullptr;
    for (const auto& a : active) {
      if (c >= static_cast<double>(a.interval.start_ms) &&
          c < static_cast<double>(a.interval.end_ms)) {
        seg = &a;
        break;
      }
    }
    if (!seg) continue;

    double left = (k == 0) ? 0.0 : cues[k - 1].end;
    double right = (k + 1 == n) ? episode_end : cues[k + 1].start;
    left = std::max(left, static_cast<double>(seg->interval.start_ms));
    right = std::min(right, static_cast<double>(seg->interval.end_ms));

    double half_l = c - cues[k].start;
    double half_r = cues[k].end - c;
    if (half_l <= 0 || half_r <= 0) continue;
    double scale = std::min((c - left) / half_l, (right - c) / half_r);
    if (scale <= 1.0) continue;
    cues[k].start = c - scale * half_l;
    cues[k].end = c + scale * half_r;
  }

  SubtitleTrack out;
  out.kind = TrackKind::kPredicted;
  out.subtitles.reserve(n);
  int64_t prev = 0;
  for (size_t k = 0; k < n; ++k) {
    Subtitle s;
    s.index = static_cast<int>(k) + 1;
    s.text = audio[k].text;
    int64_t start = std::max<int64_t>(prev, std::llround(cues[k].start));
    int64_t end = std::max(start + 1, static_cast<int64_t>(std::llround(cues[k].end)));
    s.start = TimeCode(start);
    s.end = TimeCode(end);
    prev = end;
    out.subtitles.push_back(std::move(s));
  }

  if (stats) *stats = local;
  return out;
}

}  // namespace subalign
