// tests/test_synthgen.cc

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

#include <cmath>

#include "subalign/synthgen.h"

using namespace subalign;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.vocab_size = 12;
  cfg.d_video = 8;
  cfg.subs_per_episode = 6;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg = small_config();
  SynthEpisode a = gen_episode(cfg, 3);
  SynthEpisode b = gen_episode(cfg, 3);
  CHECK(a.features.frames == b.features.frames);
  CHECK(serialize_srt(a.gt) == serialize_srt(b.gt));
  CHECK(serialize_srt(a.audio) == serialize_srt(b.audio));

  SynthEpisode c = gen_episode(cfg, 4);
  CHECK(serialize_srt(a.gt) != serialize_srt(c.gt));
}

TEST_CASE("noise-free config reproduces gt from shifted audio exactly") {
  SynthConfig cfg = small_config();
  cfg.shift_std_s = 0.0;
  cfg.dur_noise_std_s = 0.0;
  SynthEpisode ep = gen_episode(cfg, 1);
  SubtitleTrack shifted = shift_track(ep.audio, 3200);
  REQUIRE(shifted.size() == ep.gt.size());
  for (size_t i = 0; i < ep.gt.size(); ++i) {
    CHECK(shifted[i].interval() == ep.gt[i].interval());
    CHECK(ep.audio[i].text == ep.gt[i].text);
  }
}

TEST_CASE("tracks validate and stay index-aligned") {
  SynthConfig cfg = small_config();
  cfg.shift_std_s = 1.5;
  cfg.dur_noise_std_s = 0.5;
  for (uint64_t seed = 0; seed < 8; ++seed) {
    SynthEpisode ep = gen_episode(cfg, seed);
    CHECK_NOTHROW(validate_track(ep.gt));
    CHECK_NOTHROW(validate_track(ep.audio));
    CHECK(ep.gt.size() == ep.audio.size());
    CHECK(ep.features.num_frames() > 0);
    CHECK(ep.features.frames.allFinite());
  }
}

TEST_CASE("start-time shifts match the configured distribution") {
  SynthConfig cfg = small_config();
  cfg.shift_std_s = 1.0;
  cfg.gap_frames_min = 60;  // sparse cues keep repairs rare
  cfg.gap_frames_max = 150;
  cfg.subs_per_episode = 10;
  double sum = 0.0;
  int count = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SynthEpisode ep = gen_episode(cfg, seed);
    for (size_t i = 0; i < ep.gt.size(); ++i) {
      sum += static_cast<double>(ep.gt[i].start.ms() - ep.audio[i].start.ms()) / 1000.0;
      ++count;
    }
  }
  REQUIRE(count == 1000);
  double mean = sum / count;
  // 3 sigma / sqrt(1000) with sigma 1 s, plus margin for overlap repairs.
  CHECK(std::abs(mean - 3.2) < 0.15);
}

TEST_CASE("perturb_track at zero sigma is the identity") {
  SynthEpisode ep = gen_episode(small_config(), 2);
  SubtitleTrack p = perturb_track(ep.gt, 0.0, 0.0, 77);
  REQUIRE(p.size() == ep.gt.size());
  for (size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i].interval() == ep.gt[i].interval());
  }
  CHECK(p.kind == TrackKind::kPrior);
}

TEST_CASE("perturb_track is seeded and jitters at the table setting") {
  SynthEpisode ep = gen_episode(small_config(), 2);
  SubtitleTrack a = perturb_track(ep.gt, 3.5, 1.5, 7);
  SubtitleTrack b = perturb_track(ep.gt, 3.5, 1.5, 7);
  SubtitleTrack c = perturb_track(ep.gt, 3.5, 1.5, 8);
  bool same = true, differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].interval() == b[i].interval())) same = false;
    if (!(a[i].interval() == c[i].interval())) differs = true;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("spottings cover motifs at the requested recall") {
  SynthConfig cfg = small_config();
  cfg.subs_per_episode = 30;
  int total = 0, kept = 0;
  for (uint64_t seed = 0; seed < 60; ++seed) {
    SynthEpisode ep = gen_episode(cfg, seed);
    auto spots = gen_spottings(ep, 0.5, seed);
    total += static_cast<int>(ep.motifs.size());
    kept += static_cast<int>(spots.size());
    for (const auto& s : spots) {
      CHECK(s.confidence >= 0.8);
      CHECK(s.confidence <= 1.0);
      CHECK(s.episode_id == ep.id);
    }
  }
  REQUIRE(total > 5000);
  double ratio = static_cast<double>(kept) / total;
  CHECK(std::abs(ratio - 0.5) < 0.02);

  SynthEpisode ep = gen_episode(cfg, 0);
  CHECK(gen_spottings(ep, 1.0, 0).size() == ep.motifs.size());
}

TEST_CASE("active segments cover the gt cues") {
  SynthEpisode ep = gen_episode(small_config(), 5);
  auto active = active_segments_from_gt(ep);
  CHECK(!active.empty());
  for (const auto& s : ep.gt.subtitles) {
    bool covered = false;
    for (const auto& seg : active) {
      if (seg.interval.start_ms <= s.start.ms() && s.end.ms() <= seg.interval.end_ms) {
        covered = true;
      }
    }
    CHECK(covered);
  }
}
