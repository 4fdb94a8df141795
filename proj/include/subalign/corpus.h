// include/subalign/corpus.h

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

#ifndef SUBALIGN_CORPUS_H_
#define SUBALIGN_CORPUS_H_

#include <string>
#include <vector>

#include "subalign/baselines.h"
#include "subalign/features.h"
#include "subalign/subtitles.h"
#include "subalign/training.h"

namespace subalign {

// One episode on disk: <id>.feat plus optional <id>.audio.srt, <id>.gt.srt,
// <id>.spot.tsv and <id>.active.tsv next to it.
struct Episode {
  std::string id;
  FeatureSequence features;
  SubtitleTrack audio;  // may be empty
  SubtitleTrack gt;     // may be empty
  std::vector<SpottingAnnotation> spottings;
  std::vector<ActiveSegment> active;

  bool has_audio() const { return !audio.subtitles.empty(); }
  bool has_gt() const { return !gt.subtitles.empty(); }
};

// Scans dir for *.feat, sorted by name. Companion files are optional;
// audio/gt track lengths must agree when both are present.
std::vector<Episode> load_corpus(const std::string& dir);

void save_episode(const std::string& dir, const Episode& episode);

const Episode& find_episode(const std::vector<Episode>& episodes,
                            const std::string& id);

// Sorted unique tokens across all audio subtitle texts.
std::vector<std::string> corpus_vocab(const std::vector<Episode>& episodes);

// All spottings pooled over the corpus.
std::vector<SpottingAnnotation> corpus_spottings(const std::vector<Episode>& episodes);

}  // namespace subalign

#endif  // SUBALIGN_CORPUS_H_
