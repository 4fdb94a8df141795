// src/global_align.cc

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

#include "subalign/global_align.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace subalign {

namespace {

// Episode source-frame index of window frame k.
int64_t source_frame(const Window& w, int k) {
  return w.start_frame + static_cast<int64_t>(k) * w.stride;
}

}  // namespace

ScoreMatrix select_frames(const std::vector<SubtitleInference>& inferences,
                          double tau_dtw) {
  const size_t n = inferences.size();
  if (n == 0) throw Error("select_frames: no subtitles");

  // Source-frame index -> (fps, stride) context comes from each window; all
  // windows of an episode share fps and stride.
  std::map<int64_t, std::pair<int64_t, int64_t>> selected;  // frame -> times
  auto add_frame = [&](const Window& w, int k) {
    if (w.pad_mask[static_cast<size_t>(k)]) return;
    int64_t s = source_frame(w, k);
    selected.emplace(s, std::make_pair(w.frame_start_ms(k), w.frame_end_ms(k)));
  };

  for (const auto& inf : inferences) {
    if (inf.probs.size() != inf.window.T) {
      throw Error("select_frames: probability vector does not match window");
    }
    bool any = false;
    for (int k = 0; k < inf.window.T; ++k) {
      if (static_cast<double>(inf.probs[k]) > tau_dtw &&
          !inf.window.pad_mask[static_cast<size_t>(k)]) {
        add_frame(inf.window, k);
        any = true;
      }
    }
    if (!any) {
      // Fall back to the prior location.
      PriorVector bits = encode_span(inf.prior, inf.window);
      for (int k = 0; k < inf.window.T; ++k) {
        if (bits.bits[static_cast<size_t>(k)]) add_frame(inf.window, k);
      }
    }
  }
  if (selected.empty()) {
    throw Error("select_frames: empty selection (no scores above threshold and empty priors)");
  }

  ScoreMatrix m;
  const Eigen::Index F = static_cast<Eigen::Index>(selected.size());
  m.probs = Mat::Zero(F, static_cast<Eigen::Index>(n));
  m.frame_start_ms.reserve(selected.size());
  m.frame_end_ms.reserve(selected.size());
  std::map<int64_t, Eigen::Index> row_of;
  Eigen::Index row = 0;
  for (const auto& [frame, times] : selected) {
    m.frame_start_ms.push_back(times.first);
    m.frame_end_ms.push_back(times.second);
    row_of[frame] = row++;
  }

  for (size_t j = 0; j < n; ++j) {
    const auto& inf = inferences[j];
    for (int k = 0; k < inf.window.T; ++k) {
      if (inf.window.pad_mask[static_cast<size_t>(k)]) continue;
      auto it = row_of.find(source_frame(inf.window, k));
      if (it != row_of.end()) {
        m.probs(it->second, static_cast<Eigen::Index>(j)) = inf.probs[k];
      }
    }
  }
  return m;
}

std::vector<size_t> order_subtitles(const std::vector<SubtitleInference>& inferences) {
  std::vector<size_t> perm(inferences.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::stable_sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
    const auto& ia = inferences[a];
    const auto& ib = inferences[b];
    int64_t ma = ia.decoded.empty() ? ia.prior.mid_ms() : ia.decoded.mid_ms();
    int64_t mb = ib.decoded.empty() ? ib.prior.mid_ms() : ib.decoded.mid_ms();
    return ma < mb;
  });
  return perm;
}

GlobalAlignment dtw_align(const ScoreMatrix& scores, const std::vector<size_t>& order) {
  const int64_t F = scores.probs.rows();
  const int64_t N = scores.probs.cols();
  if (N < 1) throw Error("dtw_align: no subtitles");
  if (static_cast<int64_t>(order.size()) != N) throw Error("dtw_align: bad permutation");
  if (F < N) {
    throw Error("dtw_align: only " + std::to_string(F) + " selected frames for " +
                std::to_string(N) + " subtitles");
  }

  // Integer scores, column j = ordered subtitle j.
  std::vector<std::vector<int64_t>> q(static_cast<size_t>(N));
  for (int64_t j = 0; j < N; ++j) {
    auto& col = q[static_cast<size_t>(j)];
    col.resize(static_cast<size_t>(F));
    for (int64_t i = 0; i < F; ++i) {
      col[static_cast<size_t>(i)] = static_cast<int64_t>(std::llround(
          static_cast<double>(scores.probs(i, static_cast<Eigen::Index>(order[static_cast<size_t>(j)]))) *
          static_cast<double>(kDtwScoreScale)));
    }
  }

  constexpr int64_t kNeg = std::numeric_limits<int64_t>::min() / 4;
  // best[i][j]: max total over the first i frames split into the first j
  // runs; prefix[i] = sum of column j over frames < i.
  std::vector<std::vector<int64_t>> best(static_cast<size_t>(F + 1),
                                         std::vector<int64_t>(static_cast<size_t>(N + 1), kNeg));
  std::vector<std::vector<int32_t>> split(static_cast<size_t>(F + 1),
                                          std::vector<int32_t>(static_cast<size_t>(N + 1), -1));
  best[0][0] = 0;

  std::vector<int64_t> prefix(static_cast<size_t>(F + 1), 0);
  for (int64_t j = 1; j <= N; ++j) {
    const auto& col = q[static_cast<size_t>(j - 1)];
    for (int64_t i = 0; i < F; ++i) prefix[static_cast<size_t>(i + 1)] = prefix[static_cast<size_t>(i)] + col[static_cast<size_t>(i)];

    // Rolling maximum of best[i'][j-1] - prefix[i'] over i' in [j-1, i-1];
    // strict improvement keeps the earliest split on ties.
    int64_t run_best = kNeg;
    int32_t run_arg = -1;
    for (int64_t i = j; i <= F; ++i) {
      int64_t cand_idx = i - 1;  // newly admissible i'
      if (cand_idx >= j - 1 && best[static_cast<size_t>(cand_idx)][static_cast<size_t>(j - 1)] > kNeg) {
        int64_t val = best[static_cast<size_t>(cand_idx)][static_cast<size_t>(j - 1)] -
                      prefix[static_cast<size_t>(cand_idx)];
        if (val > run_best) {
          run_best = val;
          run_arg = static_cast<int32_t>(cand_idx);
        }
      }
      if (run_arg >= 0) {
        best[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            run_best + prefix[static_cast<size_t>(i)];
        split[static_cast<size_t>(i)][static_cast<size_t>(j)] = run_arg;
      }
    }
  }

  // Backtrack run boundaries in ordered space.
  std::vector<std::pair<int64_t, int64_t>> runs(static_cast<size_t>(N));  // [first, last]
  int64_t i = F;
  for (int64_t j = N; j >= 1; --j) {
    int32_t s = split[static_cast<size_t>(i)][static_cast<size_t>(j)];
    if (s < 0) throw Error("dtw_align: no feasible partition");
    runs[static_cast<size_t>(j - 1)] = {s, i - 1};
    i = s;
  }

  GlobalAlignment result;
  result.intervals.resize(static_cast<size_t>(N));
  result.runs = runs;
  double total = 0.0;
  for (int64_t j = 0; j < N; ++j) {
    auto [a, b] = runs[static_cast<size_t>(j)];
    int64_t start = scores.frame_start_ms[static_cast<size_t>(a)];
    int64_t end = scores.frame_end_ms[static_cast<size_t>(b)];
    if (j + 1 < N) {
      // Runs from differently phased windows can interleave at source-frame
      // granularity; cap at the next run's first frame to stay disjoint.
      end = std::min(end, scores.frame_start_ms[static_cast<size_t>(runs[static_cast<size_t>(j + 1)].first)]);
    }
    if (end <= start) end = start + 1;
    result.intervals[order[static_cast<size_t>(j)]] = Interval{start, end};
    for (int64_t r = a; r <= b; ++r) {
      total += static_cast<double>(scores.probs(
          static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(order[static_cast<size_t>(j)])));
    }
  }
  result.total_score = total;
  return result;
}

SubtitleTrack resolve_track(const std::vector<SubtitleInference>& inferences,
                            const SubtitleTrack& audio, double tau_dtw) {
  if (inferences.size() != audio.size()) {
    throw Error("resolve_track: inference count does not match track");
  }
  ScoreMatrix scores = select_frames(inferences, tau_dtw);
  std::vector<size_t> order = order_subtitles(inferences);
  GlobalAlignment alignment = dtw_align(scores, order);

  SubtitleTrack out;
  out.kind = TrackKind::kPredicted;
  out.subtitles.reserve(audio.size());
  for (size_t i = 0; i < audio.size(); ++i) {
    Subtitle s;
    s.index = static_cast<int>(i) + 1;
    s.text = audio[i].text;
    const Interval& iv = alignment.intervals[i];
    s.start = TimeCode(std::max<int64_t>(0, iv.start_ms));
    s.end = TimeCode(std::max<int64_t>(s.start.ms() + 1, iv.end_ms));
    out.subtitles.push_back(std::move(s));
  }
  return out;
}

}  // namespace subalign
