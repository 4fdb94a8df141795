// tests/test_metrics.cc

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

#include "subalign/metrics.h"
#include "subalign/rng.h"

using namespace subalign;

namespace {

// Synthetic evaluation window without features: start_frame in source
// frames, defaults T=10 stride 4 at 25 fps (1.6 s per window).
Window eval_window(int64_t start_frame, int T = 10) {
  Window w;
  w.start_frame = start_frame;
  w.T = T;
  w.fps = 25.0;
  w.stride = 4;
  w.pad_mask.assign(static_cast<size_t>(T), 0);
  return w;
}

}  // namespace

TEST_CASE("identity prediction scores one everywhere") {
  std::vector<Interval> gt = {{320, 800}, {2000, 2640}};
  std::vector<Window> windows = {eval_window(0), eval_window(50)};
  EvalReport rep = evaluate(gt, gt, windows);
  CHECK(rep.frame_acc == doctest::Approx(1.0));
  for (double f1 : rep.f1) CHECK(f1 == doctest::Approx(1.0));
}

TEST_CASE("empty prediction against a half-window cue gives 0.5") {
  // gt covers exactly half of the 10 window frames.
  std::vector<Interval> gt = {{0, 800}};
  std::vector<Interval> pred = {{0, 0}};
  std::vector<Window> windows = {eval_window(0)};
  CHECK(frame_accuracy(pred, gt, windows) == doctest::Approx(0.5));
  // Empty predictions are misses and leave precision undefined -> F1 = 0.
  CHECK(f1_at_iou(pred, gt, 0.10) == doctest::Approx(0.0));
}

TEST_CASE("quarter-window shift of a half-window cue gives 0.5") {
  std::vector<Interval> gt = {{0, 800}};
  std::vector<Interval> pred = {{400, 1200}};
  std::vector<Window> windows = {eval_window(0)};
  CHECK(frame_accuracy(pred, gt, windows) == doctest::Approx(0.5));
}

TEST_CASE("f1 counting example at 0.3 IoU") {
  // 2 of 4 subtitles hit IoU 0.3, the others miss entirely.
  std::vector<Interval> gt = {{0, 1000}, {2000, 3000}, {4000, 5000}, {6000, 7000}};
  // IoU 0.3 shift: overlap/union = 0.3 when shift = 700/1.3 ~ 538.46 -> use
  // intervals computed directly: [0,1000] vs [538,1538]: overlap 462,
  // union 1538 -> 0.3004.
  std::vector<Interval> pred = {{538, 1538}, {2538, 3538}, {9000, 9400}, {8000, 8500}};
  double f25 = f1_at_iou(pred, gt, 0.25);
  double f50 = f1_at_iou(pred, gt, 0.50);
  CHECK(f25 == doctest::Approx(0.5));
  CHECK(f50 == doctest::Approx(0.0));
}

TEST_CASE("f1 is monotone non-increasing in the threshold") {
  Rng rng(314);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = static_cast<int>(rng.uniform_int(1, 6));
    std::vector<Interval> gt, pred;
    for (int i = 0; i < n; ++i) {
      int64_t gs = rng.uniform_int(0, 50000);
      gt.push_back({gs, gs + rng.uniform_int(400, 5000)});
      if (rng.bernoulli(0.15)) {
        pred.push_back({0, 0});
      } else {
        int64_t ps = std::max<int64_t>(0, gs + rng.uniform_int(-3000, 3000));
        pred.push_back({ps, ps + rng.uniform_int(400, 5000)});
      }
    }
    double f10 = f1_at_iou(pred, gt, 0.10);
    double f25 = f1_at_iou(pred, gt, 0.25);
    double f50 = f1_at_iou(pred, gt, 0.50);
    CHECK(f10 >= f25);
    CHECK(f25 >= f50);
    for (double v : {f10, f25, f50}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("metrics are invariant under a common frame-aligned shift") {
  Rng rng(159);
  for (int trial = 0; trial < 200; ++trial) {
    int n = static_cast<int>(rng.uniform_int(1, 5));
    std::vector<Interval> gt, pred;
    std::vector<Window> windows;
    for (int i = 0; i < n; ++i) {
      int64_t gs = rng.uniform_int(1000, 30000);
      gt.push_back({gs, gs + rng.uniform_int(400, 4000)});
      int64_t ps = gs + rng.uniform_int(-2000, 2000);
      pred.push_back({ps, ps + rng.uniform_int(400, 4000)});
      windows.push_back(eval_window(gs / 40 - 20));
    }
    // Shift everything by a whole number of source frames (40 ms).
    int64_t shift = rng.uniform_int(0, 500) * 40;
    std::vector<Interval> gt2, pred2;
    std::vector<Window> windows2;
    for (int i = 0; i < n; ++i) {
      gt2.push_back({gt[i].start_ms + shift, gt[i].end_ms + shift});
      pred2.push_back({pred[i].start_ms + shift, pred[i].end_ms + shift});
      windows2.push_back(eval_window(windows[i].start_frame + shift / 40));
    }
    EvalReport a = evaluate(pred, gt, windows);
    EvalReport b = evaluate(pred2, gt2, windows2);
    CHECK(a.frame_acc == doctest::Approx(b.frame_acc).epsilon(1e-12));
    for (size_t t = 0; t < a.f1.size(); ++t) {
      CHECK(a.f1[t] == doctest::Approx(b.f1[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("hit at exactly the threshold counts") {
  // [0,1000] vs [250,1250]: overlap 750, union 1250 -> IoU = 0.6 exactly;
  // craft IoU 0.25: overlap/union = 0.25 with [0,1000] vs [600,2600]:
  // overlap 400, union 2600 -> 0.1538... use algebra: need inter/union=1/4.
  // [0,1000] vs [500,2500]: inter 500, union 2500 -> exactly 0.2.
  // [0,1000] vs [400,1800]: inter 600, union 1800 -> 1/3 >= 0.25.
  std::vector<Interval> gt = {{0, 1000}};
  std::vector<Interval> pred = {{500, 2500}};
  CHECK(f1_at_iou(pred, gt, 0.20) == doctest::Approx(1.0));
  CHECK(f1_at_iou(pred, gt, 0.2000001) == doctest::Approx(0.0));
}

TEST_CASE("accumulator pools across episodes") {
  std::vector<Interval> gt1 = {{0, 800}};
  std::vector<Interval> pr1 = {{0, 800}};
  std::vector<Interval> gt2 = {{0, 800}};
  std::vector<Interval> pr2 = {{0, 0}};
  std::vector<Window> w = {eval_window(0)};
  EvalAccumulator acc;
  acc.add_episode(pr1, gt1, w);
  acc.add_episode(pr2, gt2, w);
  EvalReport rep = acc.report();
  CHECK(rep.frame_acc == doctest::Approx(0.75));
  // one hit, one non-empty prediction, two gt: precision 1, recall 0.5.
  CHECK(rep.f1[0] == doctest::Approx(2.0 * 0.5 / 1.5));
  CHECK(rep.per_subtitle.size() == 2);
}

TEST_CASE("episode-scope frame accuracy is available behind the flag") {
  std::vector<Interval> gt = {{0, 800}, {1600, 2400}};
  std::vector<Interval> pred = {{0, 800}, {1600, 2400}};
  std::vector<Window> w = {eval_window(0), eval_window(40)};
  EvalAccumulator acc(FrameAccScope::kEpisode);
  acc.add_episode(pred, gt, w);
  CHECK(acc.report().frame_acc == doctest::Approx(1.0));
}

TEST_CASE("report renders table and csv") {
  std::vector<Interval> gt = {{0, 800}};
  std::vector<Window> w = {eval_window(0)};
  EvalReport rep = evaluate(gt, gt, w);
  std::string table = report_table(rep);
  CHECK(table.find("frame-acc") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
  std::string csv = report_csv(rep);
  CHECK(csv.find("frame_acc,1") != std::string::npos);
}
