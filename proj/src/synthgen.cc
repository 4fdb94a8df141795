// src/synthgen.cc

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

#include "subalign/synthgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace subalign {

void SynthConfig::validate() const {
  if (vocab_size < 2) throw Error("synth config: vocab_size too small");
  if (d_video < 1) throw Error("synth config: d_video must be positive");
  if (fps <= 0) throw Error("synth config: fps must be positive");
  if (motif_frames_mean < 2) throw Error("synth config: motifs too short");
  if (subtitle_len_min < 1 || subtitle_len_max < subtitle_len_min) {
    throw Error("synth config: bad subtitle length range");
  }
  if (gap_frames_min < 0 || gap_frames_max < gap_frames_min) {
    throw Error("synth config: bad gap range");
  }
  if (shift_std_s < 0 || dur_noise_std_s < 0) throw Error("synth config: negative sigma");
  if (subs_per_episode < 1) throw Error("synth config: need at least one subtitle");
}

namespace {

std::string word_name(int w) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%03d", w);
  return buf;
}

// Latent width of the word lexicon; matches the desk text embedding so the
// text-to-video correspondence is a (seeded, unknown) linear map rather
// than an arbitrary per-word table.
constexpr int kLexiconDim = 64;

// Unit-norm mean feature vector for a vocabulary word: the word's stable
// hash embedding pushed through a corpus-seeded projection. A function of
// the corpus seed only, so all episodes share the same lexicon.
Vec word_vector(const SynthConfig& cfg, int w) {
  TokenSequence h = hash_embed({word_name(w)}, kLexiconDim, false);
  Rng rng(Rng::mix(cfg.seed, 0x6c6578));
  Vec v = Vec::Zero(cfg.d_video);
  for (int i = 0; i < cfg.d_video; ++i) {
    for (int j = 0; j < kLexiconDim; ++j) {
      v[i] += static_cast<Real>(rng.normal()) * h.embeddings(0, j);
    }
  }
  Real norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

int64_t frame_to_ms(int64_t frame, double fps) {
  return static_cast<int64_t>(std::llround(frame * 1000.0 / fps));
}

}  // namespace

SynthEpisode gen_episode(const SynthConfig& cfg, uint64_t episode_seed) {
  cfg.validate();
  Rng rng(Rng::mix(cfg.seed, Rng::mix(0x657069, episode_seed)));

  SynthEpisode ep;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ep%04llu", static_cast<unsigned long long>(episode_seed));
    ep.id = buf;
  }
  for (int w = 0; w < cfg.vocab_size; ++w) ep.token_vocab.push_back(word_name(w));

  std::vector<Vec> lexicon(static_cast<size_t>(cfg.vocab_size));
  for (int w = 0; w < cfg.vocab_size; ++w) lexicon[static_cast<size_t>(w)] = word_vector(cfg, w);

  const double noise_sigma = cfg.noise_scale / std::sqrt(static_cast<double>(cfg.d_video));

  struct PlannedSub {
    std::vector<std::string> tokens;  // subtitle text
    int64_t start_frame = 0, end_frame = 0;
  };
  std::vector<PlannedSub> subs;
  std::vector<Vec> frames;

  auto push_noise_frames = [&](int64_t count) {
    for (int64_t i = 0; i < count; ++i) {
      Vec f(cfg.d_video);
      for (int j = 0; j < cfg.d_video; ++j) f[j] = static_cast<Real>(rng.normal(0.0, noise_sigma));
      frames.push_back(std::move(f));
    }
  };

  // Leading gap large enough that shifting audio backwards stays positive.
  int64_t lead = rng.uniform_int(cfg.gap_frames_min, cfg.gap_frames_max) +
                 static_cast<int64_t>(std::ceil((cfg.shift_mean_s + 4.0 * cfg.shift_std_s) * cfg.fps));
  push_noise_frames(lead);

  for (int s = 0; s < cfg.subs_per_episode; ++s) {
    PlannedSub sub;
    int len = static_cast<int>(rng.uniform_int(cfg.subtitle_len_min, cfg.subtitle_len_max));
    std::vector<int> word_ids(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
      word_ids[static_cast<size_t>(t)] = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(cfg.vocab_size)));
      sub.tokens.push_back(word_name(word_ids[static_cast<size_t>(t)]));
    }

    // The signing realization: drop some words, sometimes reorder.
    std::vector<int> realized;
    for (int id : word_ids) {
      if (!rng.bernoulli(cfg.drop_token_prob)) realized.push_back(id);
    }
    if (realized.empty()) realized.push_back(word_ids[rng.uniform_index(word_ids.size())]);
    if (rng.bernoulli(cfg.reorder_prob)) rng.shuffle(realized);

    sub.start_frame = static_cast<int64_t>(frames.size());
    for (int id : realized) {
      int64_t m = static_cast<int64_t>(std::llround(rng.normal(cfg.motif_frames_mean, cfg.motif_frames_std)));
      m = std::max<int64_t>(2, m);
      int64_t motif_start = static_cast<int64_t>(frames.size());
      const Vec& mean = lexicon[static_cast<size_t>(id)];
      for (int64_t i = 0; i < m; ++i) {
        Vec f = mean;
        for (int j = 0; j < cfg.d_video; ++j) f[j] += static_cast<Real>(rng.normal(0.0, noise_sigma));
        frames.push_back(std::move(f));
      }
      ep.motifs.push_back({word_name(id), frame_to_ms(motif_start, cfg.fps),
                           frame_to_ms(static_cast<int64_t>(frames.size()), cfg.fps)});
    }
    sub.end_frame = static_cast<int64_t>(frames.size());
    subs.push_back(std::move(sub));

    push_noise_frames(rng.uniform_int(cfg.gap_frames_min, cfg.gap_frames_max));
  }

  ep.features.fps = cfg.fps;
  ep.features.frames.resize(static_cast<Eigen::Index>(frames.size()), cfg.d_video);
  for (size_t i = 0; i < frames.size(); ++i) {
    ep.features.frames.row(static_cast<Eigen::Index>(i)) = frames[i].transpose();
  }

  // Ground truth = realized extents; audio = gt shifted back with jitter.
  ep.gt.kind = TrackKind::kGroundTruth;
  ep.audio.kind = TrackKind::kAudio;
  const int64_t episode_end_ms = frame_to_ms(static_cast<int64_t>(frames.size()), cfg.fps);
  int64_t prev_audio_end = 0;
  for (size_t i = 0; i < subs.size(); ++i) {
    const PlannedSub& p = subs[i];
    std::string text;
    for (const auto& t : p.tokens) {
      if (!text.empty()) text += ' ';
      text += t;
    }

    Subtitle gt;
    gt.index = static_cast<int>(i) + 1;
    gt.start = TimeCode(frame_to_ms(p.start_frame, cfg.fps));
    gt.end = TimeCode(frame_to_ms(p.end_frame, cfg.fps));
    gt.text = text;

    int64_t shift_ms = static_cast<int64_t>(std::llround(rng.normal(cfg.shift_mean_s, cfg.shift_std_s) * 1000.0));
    int64_t dur_change = 0;
    if (cfg.dur_noise_std_s > 0 && !rng.bernoulli(cfg.dur_zero_prob)) {
      dur_change = static_cast<int64_t>(std::llround(rng.normal(0.0, cfg.dur_noise_std_s) * 1000.0));
    }
    int64_t a_start = std::max<int64_t>(0, gt.start.ms() - shift_ms);
    // Duration floor never exceeds the true duration, so noise-free configs
    // reproduce the ground truth exactly.
    int64_t dur_floor = std::min(cfg.min_audio_dur_ms, gt.interval().length_ms());
    int64_t a_dur = std::max(dur_floor, gt.interval().length_ms() + dur_change);
    // Keep the audio track sorted and disjoint (cue order is the broadcast
    // order); push starts forward when jitter makes neighbours collide.
    if (a_start < prev_audio_end) a_start = prev_audio_end;
    if (a_start >= episode_end_ms) {
      throw Error("gen_episode: audio cues ran past the episode; config too dense");
    }
    Subtitle audio = gt;
    audio.start = TimeCode(a_start);
    audio.end = TimeCode(a_start + a_dur);
    prev_audio_end = audio.end.ms();

    ep.gt.subtitles.push_back(std::move(gt));
    ep.audio.subtitles.push_back(std::move(audio));
  }

  validate_track(ep.gt);
  validate_track(ep.audio);
  return ep;
}

SubtitleTrack perturb_track(const SubtitleTrack& gt, double sigma_pos_s,
                            double sigma_dur_s, uint64_t seed) {
  if (sigma_pos_s < 0 || sigma_dur_s < 0) throw Error("perturb_track: negative sigma");
  Rng rng(Rng::mix(seed, 0x70657274));
  SubtitleTrack out;
  out.kind = TrackKind::kPrior;
  out.subtitles.reserve(gt.size());
  constexpr int64_t kMinDurMs = 400;
  for (const Subtitle& s : gt.subtitles) {
    double mid = 0.5 * static_cast<double>(s.start.ms() + s.end.ms());
    mid += rng.normal(0.0, sigma_pos_s) * 1000.0;
    double dur = static_cast<double>(s.interval().length_ms()) + rng.normal(0.0, sigma_dur_s) * 1000.0;
    dur = std::max(dur, static_cast<double>(kMinDurMs));
    int64_t start = std::max<int64_t>(0, static_cast<int64_t>(std::llround(mid - dur / 2.0)));
    int64_t end = start + static_cast<int64_t>(std::llround(dur));
    Subtitle p = s;
    p.start = TimeCode(start);
    p.end = TimeCode(std::max(start + 1, end));
    out.subtitles.push_back(std::move(p));
  }
  return out;
}

std::vector<SpottingAnnotation> gen_spottings(const SynthEpisode& episode,
                                              double recall, uint64_t seed) {
  if (recall <= 0 || recall > 1) throw Error("gen_spottings: recall must be in (0, 1]");
  Rng rng(Rng::mix(seed, 0x73706f74));
  std::vector<SpottingAnnotation> out;
  for (const auto& m : episode.motifs) {
    if (!rng.bernoulli(recall)) continue;
    SpottingAnnotation s;
    s.episode_id = episode.id;
    s.word = m.word;
    s.time_ms = (m.start_ms + m.end_ms) / 2;
    s.confidence = rng.uniform(0.8, 1.0);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ActiveSegment> active_segments_from_gt(const SynthEpisode& episode) {
  std::vector<ActiveSegment> out;
  for (const Subtitle& s : episode.gt.subtitles) {
    if (!out.empty() && out.back().interval.end_ms >= s.start.ms()) {
      out.back().interval.end_ms = std::max(out.back().interval.end_ms, s.end.ms());
    } else {
      out.push_back({s.interval()});
    }
  }
  return out;
}

}  // namespace subalign
