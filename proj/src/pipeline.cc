// src/pipeline.cc

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

#include "subalign/pipeline.h"

#include "subalign/threading.h"

namespace subalign {

std::vector<SubtitleInference> infer_episode(const Episode& episode,
                                             const ModelParams& params,
                                             const ModelConfig& mcfg,
                                             const WindowConfig& wcfg,
                                             const TextEncoderConfig& tcfg,
                                             const AlignOptions& opts) {
  if (!episode.has_audio()) throw Error("episode " + episode.id + ": no audio track");
  SubtitleTrack prior_track = shift_track(episode.audio, opts.prior_delta_ms);

  std::vector<SubtitleInference> out(prior_track.size());
  parallel_for(prior_track.size(), [&](size_t i) {
    const Subtitle& base = prior_track[i];
    Interval prior{base.start.ms() + opts.prior_shift_ms,
                   base.end.ms() + opts.prior_shift_ms};

    SubtitleInference& inf = out[i];
    inf.window = make_window_at(base.interval().mid_ms() + opts.window_shift_ms,
                                episode.features, wcfg, episode.id);
    inf.prior = prior;

    TokenSequence text = encode_tokens(tokenize(episode.audio[i].text), tcfg);
    PriorVector bits = encode_span(prior, inf.window);
    inf.probs = sat_infer<Real>(text.embeddings, inf.window.features, bits.bits,
                                inf.window.pad_mask, params, mcfg);
    inf.decoded = decode_span(inf.probs, opts.tau, inf.window);
  });
  return out;
}

SubtitleTrack align_episode(const Episode& episode, const ModelParams& params,
                            const ModelConfig& mcfg, const WindowConfig& wcfg,
                            const TextEncoderConfig& tcfg, const AlignOptions& opts) {
  std::vector<SubtitleInference> inferences =
      infer_episode(episode, params, mcfg, wcfg, tcfg, opts);
  if (opts.use_dtw) {
    return resolve_track(inferences, episode.audio, opts.tau_dtw);
  }
  // Raw threshold decodes; conflicts between neighbours are kept, which is
  // why the overlap-permitting kind is used.
  SubtitleTrack out;
  out.kind = TrackKind::kPrior;
  out.subtitles.reserve(inferences.size());
  for (size_t i = 0; i < inferences.size(); ++i) {
    Interval iv = inferences[i].decoded;
    if (iv.empty()) iv = inferences[i].prior;
    Subtitle s;
    s.index = static_cast<int>(i) + 1;
    s.text = episode.audio[i].text;
    s.start = TimeCode(std::max<int64_t>(0, iv.start_ms));
    s.end = TimeCode(std::max<int64_t>(s.start.ms() + 1, iv.end_ms));
    out.subtitles.push_back(std::move(s));
  }
  return out;
}

std::vector<Window> evaluation_windows(const Episode& episode,
                                       const WindowConfig& wcfg,
                                       int64_t prior_delta_ms) {
  SubtitleTrack prior_track = shift_track(episode.audio, prior_delta_ms);
  std::vector<Window> windows;
  windows.reserve(prior_track.size());
  for (const auto& s : prior_track.subtitles) {
    windows.push_back(make_test_window(s, episode.features, wcfg, episode.id));
  }
  return windows;
}

void accumulate_episode_eval(EvalAccumulator& acc, const Episode& episode,
                             const SubtitleTrack& pred, const WindowConfig& wcfg,
                             int64_t prior_delta_ms) {
  if (!episode.has_gt()) throw Error("episode " + episode.id + ": no ground truth");
  if (pred.size() != episode.gt.size()) {
    throw Error("episode " + episode.id + ": prediction count mismatch");
  }
  acc.add_episode(track_intervals(pred), track_intervals(episode.gt),
                  evaluation_windows(episode, wcfg, prior_delta_ms));
}

}  // namespace subalign
