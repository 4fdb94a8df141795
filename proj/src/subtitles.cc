// src/subtitles.cc

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

#include "subalign/subtitles.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace subalign {

TimeCode::TimeCode(int64_t ms) : ms_(ms) {
  if (ms < 0) throw Error("TimeCode: negative milliseconds");
  if (ms > kMaxMs) throw Error("TimeCode: exceeds 99:59:59,999");
}

std::string TimeCode::to_string() const {
  int64_t h = ms_ / 3600000;
  int64_t m = (ms_ / 60000) % 60;
  int64_t s = (ms_ / 1000) % 60;
  int64_t ms = ms_ % 1000;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld,%03lld",
                static_cast<long long>(h), static_cast<long long>(m),
                static_cast<long long>(s), static_cast<long long>(ms));
  return buf;
}

TimeCode TimeCode::parse(const std::string& text) {
  // Strict canonical form: HH:MM:SS,mmm
  if (text.size() != 12 || text[2] != ':' || text[5] != ':' || text[8] != ',') {
    throw ParseError("bad timecode '" + text + "'");
  }
  auto digits = [&](int pos, int len) -> int64_t {
    int64_t v = 0;
    for (int i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') {
        throw ParseError("bad timecode '" + text + "'");
      }
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  int64_t h = digits(0, 2), m = digits(3, 2), s = digits(6, 2), ms = digits(9, 3);
  if (m >= 60 || s >= 60) throw ParseError("bad timecode '" + text + "'");
  return TimeCode(((h * 60 + m) * 60 + s) * 1000 + ms);
}

double interval_iou(const Interval& a, const Interval& b) {
  int64_t inter = std::min(a.end_ms, b.end_ms) - std::max(a.start_ms, b.start_ms);
  if (inter < 0) inter = 0;
  int64_t uni = a.length_ms() + b.length_ms() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool intervals_overlap(const Interval& a, const Interval& b) {
  return std::max(a.start_ms, b.start_ms) < std::min(a.end_ms, b.end_ms);
}

const char* track_kind_name(TrackKind kind) {
  switch (kind) {
    case TrackKind::kAudio: return "audio";
    case TrackKind::kGroundTruth: return "ground_truth";
    case TrackKind::kPredicted: return "predicted";
    case TrackKind::kPrior: return "prior";
  }
  return "?";
}

std::vector<std::pair<size_t, size_t>> SubtitleTrack::overlapping_pairs() const {
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t i = 0; i < subtitles.size(); ++i) {
    for (size_t j = i + 1; j < subtitles.size(); ++j) {
      if (intervals_overlap(subtitles[i].interval(), subtitles[j].interval())) {
        out.emplace_back(i, j);
      }
    }
  }
  return out;
}

static void validate_subtitle(const Subtitle& s) {
  if (s.index <= 0) throw Error("subtitle index must be positive");
  if (!(s.start < s.end)) {
    throw Error("subtitle " + std::to_string(s.index) + ": start >= end");
  }
  if (s.text.empty()) {
    throw Error("subtitle " + std::to_string(s.index) + ": empty text");
  }
  if (s.text.find('\r') != std::string::npos) {
    throw Error("subtitle " + std::to_string(s.index) + ": bare carriage return");
  }
}

void validate_track(const SubtitleTrack& track) {
  for (const auto& s : track.subtitles) validate_subtitle(s);
  if (track.kind == TrackKind::kAudio || track.kind == TrackKind::kGroundTruth) {
    for (size_t i = 1; i < track.subtitles.size(); ++i) {
      const auto& prev = track.subtitles[i - 1];
      const auto& cur = track.subtitles[i];
      if (cur.start < prev.start) {
        throw Error(std::string(track_kind_name(track.kind)) +
                    " track not sorted at cue " + std::to_string(i + 1));
      }
      if (prev.end.ms() > cur.start.ms()) {
        throw Error(std::string(track_kind_name(track.kind)) +
                    " track overlaps between cues " + std::to_string(i) +
                    " and " + std::to_string(i + 1));
      }
    }
  }
}

namespace {

// Splits on '\n'; strips one trailing '\r' per line so CRLF input parses.
std::vector<std::string> split_lines(const std::string& bytes) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : bytes) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  return lines;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

bool is_integer(const std::string& line) {
  if (line.empty()) return false;
  for (char c : line) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

SubtitleTrack parse_srt(const std::string& bytes, TrackKind kind) {
  std::string body = bytes;
  if (body.size() >= 3 && static_cast<unsigned char>(body[0]) == 0xEF &&
      static_cast<unsigned char>(body[1]) == 0xBB &&
      static_cast<unsigned char>(body[2]) == 0xBF) {
    body.erase(0, 3);
  }

  std::vector<std::string> lines = split_lines(body);

  SubtitleTrack track;
  track.kind = kind;

  size_t i = 0;
  while (i < lines.size() && is_blank(lines[i])) ++i;
  if (i == lines.size()) throw Error("empty subtitle file");

  while (i < lines.size()) {
    if (is_blank(lines[i])) {
      ++i;
      continue;
    }
    size_t index_line = i + 1;  // 1-based for diagnostics
    if (!is_integer(lines[i])) {
      throw ParseError("line " + std::to_string(index_line) +
                       ": expected cue index, got '" + lines[i] + "'");
    }
    ++i;
    if (i >= lines.size()) {
      throw ParseError("line " + std::to_string(index_line) +
                       ": cue truncated before timecode");
    }
    const std::string& tc_line = lines[i];
    size_t tc_lineno = i + 1;
    const std::string sep = " --> ";
    size_t sep_pos = tc_line.find(sep);
    if (sep_pos == std::string::npos) {
      throw ParseError("line " + std::to_string(tc_lineno) +
                       ": expected 'HH:MM:SS,mmm --> HH:MM:SS,mmm'");
    }
    Subtitle sub;
    try {
      sub.start = TimeCode::parse(tc_line.substr(0, sep_pos));
      sub.end = TimeCode::parse(tc_line.substr(sep_pos + sep.size()));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(tc_lineno) + ": " + e.what());
    }
    if (!(sub.start < sub.end)) {
      throw ParseError("line " + std::to_string(tc_lineno) +
                       ": cue start is not before its end");
    }
    ++i;
    std::string text;
    while (i < lines.size() && !is_blank(lines[i])) {
      if (!text.empty()) text += ' ';
      text += lines[i];
      ++i;
    }
    if (text.empty()) {
      throw ParseError("line " + std::to_string(tc_lineno) + ": cue has no text");
    }
    sub.text = std::move(text);
    sub.index = static_cast<int>(track.subtitles.size()) + 1;
    track.subtitles.push_back(std::move(sub));
  }

  validate_track(track);
  return track;
}

std::string serialize_srt(const SubtitleTrack& track) {
  validate_track(track);
  if (track.kind == TrackKind::kPredicted) {
    auto overlaps = track.overlapping_pairs();
    if (!overlaps.empty()) {
      throw Error("refusing to serialize predicted track: cues " +
                  std::to_string(overlaps[0].first + 1) + " and " +
                  std::to_string(overlaps[0].second + 1) + " overlap");
    }
  }
  std::string out;
  for (size_t i = 0; i < track.subtitles.size(); ++i) {
    const Subtitle& s = track.subtitles[i];
    out += std::to_string(i + 1);
    out += '\n';
    out += s.start.to_string();
    out += " --> ";
    out += s.end.to_string();
    out += '\n';
    out += s.text;
    out += '\n';
    out += '\n';  // one blank line closes every cue, the last included
  }
  return out;
}

SubtitleTrack load_srt_file(const std::string& path, TrackKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_srt(ss.str(), kind);
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_srt_file(const std::string& path, const SubtitleTrack& track) {
  std::string bytes = serialize_srt(track);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

SubtitleTrack shift_track(const SubtitleTrack& track, int64_t delta_ms) {
  SubtitleTrack out;
  out.kind = track.kind;
  out.subtitles.reserve(track.subtitles.size());
  for (const Subtitle& s : track.subtitles) {
    Subtitle moved = s;
    int64_t start = std::max<int64_t>(0, s.start.ms() + delta_ms);
    int64_t end = std::max(start + 1, s.end.ms() + delta_ms);
    moved.start = TimeCode(start);
    moved.end = TimeCode(end);
    out.subtitles.push_back(std::move(moved));
  }
  return out;
}

}  // namespace subalign
