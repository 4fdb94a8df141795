// tests/test_global_align.cc

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

#include <doctest.h>

#include "dtw_oracle.h"
#include "subalign/global_align.h"
#include "subalign/rng.h"

using namespace subalign;

namespace {

// ScoreMatrix over consecutive stride frames (40 ms apart at stride 1).
ScoreMatrix make_scores(const Mat& probs, int64_t frame_ms = 160) {
  ScoreMatrix m;
  m.probs = probs;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    m.frame_start_ms.push_back(i * frame_ms);
    m.frame_end_ms.push_back((i + 1) * frame_ms);
  }
  return m;
}

std::vector<size_t> identity_order(size_t n) {
  std::vector<size_t> o(n);
  for (size_t i = 0; i < n; ++i) o[i] = i;
  return o;
}

// A subtitle inference with explicit probabilities on a synthetic window.
SubtitleInference make_inference(int64_t start_frame, const std::vector<double>& probs,
                                 Interval prior, double tau = 0.5) {
  SubtitleInference inf;
  inf.window.start_frame = start_frame;
  inf.window.T = static_cast<int>(probs.size());
  inf.window.fps = 25.0;
  inf.window.stride = 4;
  inf.window.pad_mask.assign(probs.size(), 0);
  inf.probs.resize(static_cast<Eigen::Index>(probs.size()));
  for (size_t i = 0; i < probs.size(); ++i) inf.probs[static_cast<Eigen::Index>(i)] = static_cast<Real>(probs[i]);
  inf.prior = prior;
  inf.decoded = decode_span(inf.probs, tau, inf.window);
  return inf;
}

}  // namespace

TEST_CASE("single subtitle receives every frame") {
  Mat p(4, 1);
  p << 0.9f, 0.2f, 0.8f, 0.7f;
  auto alignment = dtw_align(make_scores(p), identity_order(1));
  CHECK(alignment.intervals[0] == Interval{0, 4 * 160});
  CHECK(alignment.total_score == doctest::Approx(0.9 + 0.2 + 0.8 + 0.7));
}

TEST_CASE("three-frame example splits after the second frame") {
  Mat p(3, 2);
  p << 0.9f, 0.1f, 0.9f, 0.1f, 0.1f, 0.9f;
  auto alignment = dtw_align(make_scores(p), identity_order(2));
  CHECK(alignment.total_score == doctest::Approx(2.7));
  CHECK(alignment.runs[0] == std::pair<int64_t, int64_t>{0, 1});
  CHECK(alignment.runs[1] == std::pair<int64_t, int64_t>{2, 2});
  CHECK(alignment.intervals[0] == Interval{0, 320});
  CHECK(alignment.intervals[1] == Interval{320, 480});
}

TEST_CASE("dp matches the exhaustive oracle on random instances") {
  Rng rng(2026);
  for (int trial = 0; trial < 60; ++trial) {
    int F = static_cast<int>(rng.uniform_int(2, 10));
    int N = static_cast<int>(rng.uniform_int(1, std::min<int64_t>(4, F)));
    Mat p(F, N);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<Real>(rng.uniform());
    ScoreMatrix scores = make_scores(p);
    auto order = identity_order(static_cast<size_t>(N));
    auto alignment = dtw_align(scores, order);
    int64_t got = dtwtest::scaled_total(scores, order, alignment);
    int64_t best = dtwtest::brute_force_best(scores, order);
    CHECK(got == best);
  }
}

TEST_CASE("dtw_align rejects too few frames") {
  Mat p(2, 3);
  p.setConstant(0.5f);
  CHECK_THROWS_WITH_AS(dtw_align(make_scores(p), identity_order(3)),
                       doctest::Contains("selected frames"), Error);
}

TEST_CASE("tie break prefers earlier split points") {
  Mat p(4, 2);
  p.setConstant(0.5f);  // every partition has the same total
  auto alignment = dtw_align(make_scores(p), identity_order(2));
  CHECK(alignment.runs[0] == std::pair<int64_t, int64_t>{0, 0});
  CHECK(alignment.runs[1] == std::pair<int64_t, int64_t>{1, 3});
}

TEST_CASE("select_frames keeps scoring frames and dedupes overlaps") {
  auto a = make_inference(0, {0.9, 0.9, 0.2, 0.2}, {0, 640});
  auto b = make_inference(8, {0.2, 0.8, 0.8, 0.2}, {320, 960});  // overlaps a's window
  ScoreMatrix m = select_frames({a, b}, 0.4);
  // a selects source frames {0, 4}; b selects {12, 16}; b's window covers
  // source frames {8, 12, 16, 20}.
  REQUIRE(m.probs.rows() == 4);
  CHECK(m.frame_start_ms == std::vector<int64_t>{0, 160, 480, 640});
  // Source frame 12 sits in both windows: each subtitle keeps its own score.
  CHECK(m.probs(2, 0) == doctest::Approx(0.2));
  CHECK(m.probs(2, 1) == doctest::Approx(0.8));
  // Frames outside a subtitle's window score zero for it.
  CHECK(m.probs(3, 0) == 0.0f);  // source frame 16, past a's window
  CHECK(m.probs(0, 1) == 0.0f);  // source frame 0, before b's window
}

TEST_CASE("select_frames falls back to prior frames") {
  auto low = make_inference(0, {0.1, 0.1, 0.1, 0.1}, {160, 480});
  ScoreMatrix m = select_frames({low}, 0.4);
  REQUIRE(m.probs.rows() == 2);  // the two prior frames
  CHECK(m.frame_start_ms == std::vector<int64_t>{160, 320});
}

TEST_CASE("order_subtitles sorts by predicted midpoint with stable ties") {
  auto a = make_inference(0, {0.9, 0.9, 0.2, 0.2}, {0, 320});     // decoded early
  auto b = make_inference(0, {0.2, 0.2, 0.9, 0.9}, {320, 640});   // decoded late
  CHECK(order_subtitles({a, b}) == std::vector<size_t>{0, 1});
  CHECK(order_subtitles({b, a}) == std::vector<size_t>{1, 0});  // swapped midpoints reorder

  // Empty decodes use the prior midpoint; exact ties keep audio order.
  auto e1 = make_inference(0, {0.1, 0.1, 0.1, 0.1}, {100, 200});
  auto e2 = make_inference(0, {0.1, 0.1, 0.1, 0.1}, {100, 200});
  CHECK(order_subtitles({e1, e2}) == std::vector<size_t>{0, 1});
}

TEST_CASE("resolve_track eliminates overlaps and keeps consistent input") {
  SubtitleTrack audio;
  audio.kind = TrackKind::kAudio;
  for (int i = 0; i < 2; ++i) {
    Subtitle s;
    s.index = i + 1;
    s.start = TimeCode(i * 1000);
    s.end = TimeCode(i * 1000 + 600);
    s.text = "cue " + std::to_string(i + 1);
    audio.subtitles.push_back(s);
  }

  // Already-consistent predictions: each subtitle confident exactly on its
  // own frames; DTW reproduces them.
  auto a = make_inference(0, {0.9, 0.9, 0.1, 0.1}, {0, 320});
  auto b = make_inference(8, {0.1, 0.1, 0.9, 0.9}, {640, 960});
  SubtitleTrack track = resolve_track({a, b}, audio, 0.4);
  CHECK(track.overlapping_pairs().empty());
  CHECK(track[0].interval() == a.decoded);
  CHECK(track[1].interval() == b.decoded);

  // Conflicting predictions: both claim the same frames; output may not
  // overlap and both cues survive.
  auto c = make_inference(0, {0.9, 0.9, 0.9, 0.2}, {0, 480});
  auto d = make_inference(0, {0.2, 0.9, 0.9, 0.9}, {160, 640});
  SubtitleTrack fixed = resolve_track({c, d}, audio, 0.4);
  CHECK(fixed.size() == 2);
  CHECK(fixed.overlapping_pairs().empty());

  // Determinism.
  SubtitleTrack again = resolve_track({c, d}, audio, 0.4);
  CHECK(serialize_srt(again) == serialize_srt(fixed));
}
