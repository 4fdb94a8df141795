// src/metrics.cc

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

#include "subalign/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace subalign {

namespace {

// Membership of an interval on a window's stride frames, via the same
// intersection rule encode_span uses.
int matching_frames(const Interval& pred, const Interval& gt, const Window& w) {
  PriorVector pb = encode_span(pred, w);
  PriorVector gb = encode_span(gt, w);
  int match = 0;
  for (int k = 0; k < w.T; ++k) {
    if (pb.bits[static_cast<size_t>(k)] == gb.bits[static_cast<size_t>(k)]) ++match;
  }
  return match;
}

std::vector<PerSubtitleEval> per_subtitle_rows(const std::vector<Interval>& pred,
                                               const std::vector<Interval>& gt,
                                               const std::vector<Window>& windows) {
  if (pred.size() != gt.size()) {
    throw Error("evaluate: prediction and ground-truth counts differ");
  }
  if (windows.size() != gt.size()) {
    throw Error("evaluate: need one window per subtitle");
  }
  std::vector<PerSubtitleEval> rows(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    PerSubtitleEval& r = rows[i];
    r.index = static_cast<int>(i) + 1;
    r.pred_non_empty = !pred[i].empty();
    r.iou = interval_iou(pred[i], gt[i]);
    for (size_t t = 0; t < kIouThresholds.size(); ++t) {
      r.hit[t] = r.pred_non_empty && r.iou >= kIouThresholds[t];
    }
    const Window& w = windows[i];
    r.frame_acc = static_cast<double>(matching_frames(pred[i], gt[i], w)) / w.T;
  }
  return rows;
}

double f1_from_rows(const std::vector<PerSubtitleEval>& rows, size_t t) {
  int hits = 0, non_empty = 0;
  for (const auto& r : rows) {
    if (r.hit[t]) ++hits;
    if (r.pred_non_empty) ++non_empty;
  }
  if (rows.empty()) return 0.0;
  double precision = non_empty > 0 ? static_cast<double>(hits) / non_empty : 0.0;
  double recall = static_cast<double>(hits) / static_cast<double>(rows.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

EvalReport report_from_rows(std::vector<PerSubtitleEval> rows) {
  EvalReport rep;
  rep.per_subtitle = std::move(rows);
  if (rep.per_subtitle.empty()) return rep;
  double acc = 0.0;
  for (const auto& r : rep.per_subtitle) acc += r.frame_acc;
  rep.frame_acc = acc / static_cast<double>(rep.per_subtitle.size());
  for (size_t t = 0; t < kIouThresholds.size(); ++t) {
    rep.f1[t] = f1_from_rows(rep.per_subtitle, t);
  }
  return rep;
}

}  // namespace

double frame_accuracy(const std::vector<Interval>& pred,
                      const std::vector<Interval>& gt,
                      const std::vector<Window>& windows) {
  auto rows = per_subtitle_rows(pred, gt, windows);
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : rows) acc += r.frame_acc;
  return acc / static_cast<double>(rows.size());
}

double f1_at_iou(const std::vector<Interval>& pred,
                 const std::vector<Interval>& gt, double threshold) {
  if (pred.size() != gt.size()) {
    throw Error("f1_at_iou: prediction and ground-truth counts differ");
  }
  int hits = 0, non_empty = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    bool ne = !pred[i].empty();
    if (ne) ++non_empty;
    if (ne && interval_iou(pred[i], gt[i]) >= threshold) ++hits;
  }
  if (pred.empty()) return 0.0;
  double precision = non_empty > 0 ? static_cast<double>(hits) / non_empty : 0.0;
  double recall = static_cast<double>(hits) / static_cast<double>(gt.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

EvalReport evaluate(const std::vector<Interval>& pred,
                    const std::vector<Interval>& gt,
                    const std::vector<Window>& windows) {
  return report_from_rows(per_subtitle_rows(pred, gt, windows));
}

void EvalAccumulator::add_episode(const std::vector<Interval>& pred,
                                  const std::vector<Interval>& gt,
                                  const std::vector<Window>& windows) {
  auto rows = per_subtitle_rows(pred, gt, windows);
  rows_.insert(rows_.end(), rows.begin(), rows.end());

  if (scope_ == FrameAccScope::kEpisode && !windows.empty()) {
    // Shared stride grid from time zero to the last labeled instant; each
    // frame's label is the covering cue index (or none).
    const Window& w0 = windows[0];
    int64_t extent = 0;
    for (const auto& iv : gt) extent = std::max(extent, iv.end_ms);
    for (const auto& iv : pred) extent = std::max(extent, iv.end_ms);
    int64_t frame_ms = static_cast<int64_t>(std::llround(w0.stride * 1000.0 / w0.fps));
    if (frame_ms <= 0) frame_ms = 1;
    for (int64_t t = 0; t < extent; t += frame_ms) {
      Interval frame{t, t + frame_ms};
      int pred_label = -1, gt_label = -1;
      for (size_t i = 0; i < gt.size(); ++i) {
        if (intervals_overlap(frame, pred[i]) && pred_label < 0) pred_label = static_cast<int>(i);
        if (intervals_overlap(frame, gt[i]) && gt_label < 0) gt_label = static_cast<int>(i);
      }
      ++episode_frames_;
      if (pred_label == gt_label) ++episode_matches_;
    }
  }
}

EvalReport EvalAccumulator::report() const {
  EvalReport rep = report_from_rows(rows_);
  if (scope_ == FrameAccScope::kEpisode && episode_frames_ > 0) {
    rep.frame_acc = static_cast<double>(episode_matches_) /
                    static_cast<double>(episode_frames_);
  }
  return rep;
}

std::vector<Interval> track_intervals(const SubtitleTrack& track) {
  std::vector<Interval> out;
  out.reserve(track.size());
  for (const auto& s : track.subtitles) out.push_back(s.interval());
  return out;
}

std::string report_table(const EvalReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-10s %8s %8s %8s\n", "frame-acc", "F1@.10",
                "F1@.25", "F1@.50");
  std::string out = buf;
  std::snprintf(buf, sizeof(buf), "%-10.2f %8.2f %8.2f %8.2f\n",
                100.0 * report.frame_acc, 100.0 * report.f1[0],
                100.0 * report.f1[1], 100.0 * report.f1[2]);
  out += buf;
  return out;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "frame_acc," << report.frame_acc << "\n";
  out << "f1_at_0.10," << report.f1[0] << "\n";
  out << "f1_at_0.25," << report.f1[1] << "\n";
  out << "f1_at_0.50," << report.f1[2] << "\n";
  out << "subtitle,iou,hit10,hit25,hit50,frame_acc\n";
  for (const auto& r : report.per_subtitle) {
    out << r.index << ',' << r.iou << ',' << r.hit[0] << ',' << r.hit[1] << ','
        << r.hit[2] << ',' << r.frame_acc << "\n";
  }
  return out.str();
}

}  // namespace subalign
