// src/corpus.cc

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

#include "subalign/corpus.h"

#include <algorithm>
#include <filesystem>
#include <set>

namespace subalign {

namespace fs = std::filesystem;

std::vector<Episode> load_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".feat") {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw IoError("no .feat files in " + dir);

  std::vector<Episode> episodes;
  episodes.reserve(stems.size());
  for (const auto& stem : stems) {
    Episode ep;
    ep.id = stem;
    fs::path base = fs::path(dir) / stem;
    ep.features = load_features(base.string() + ".feat");
    if (fs::exists(base.string() + ".audio.srt")) {
      ep.audio = load_srt_file(base.string() + ".audio.srt", TrackKind::kAudio);
    }
    if (fs::exists(base.string() + ".gt.srt")) {
      ep.gt = load_srt_file(base.string() + ".gt.srt", TrackKind::kGroundTruth);
    }
    if (fs::exists(base.string() + ".spot.tsv")) {
      ep.spottings = load_spottings(base.string() + ".spot.tsv");
    }
    if (fs::exists(base.string() + ".active.tsv")) {
      ep.active = load_active_segments(base.string() + ".active.tsv");
    }
    if (ep.has_audio() && ep.has_gt() && ep.audio.size() != ep.gt.size()) {
      throw Error("episode " + ep.id + ": audio and gt track sizes differ");
    }
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

void save_episode(const std::string& dir, const Episode& episode) {
  fs::create_directories(dir);
  fs::path base = fs::path(dir) / episode.id;
  save_features(base.string() + ".feat", episode.features);
  if (episode.has_audio()) save_srt_file(base.string() + ".audio.srt", episode.audio);
  if (episode.has_gt()) save_srt_file(base.string() + ".gt.srt", episode.gt);
  if (!episode.spottings.empty()) save_spottings(base.string() + ".spot.tsv", episode.spottings);
  if (!episode.active.empty()) save_active_segments(base.string() + ".active.tsv", episode.active);
}

const Episode& find_episode(const std::vector<Episode>& episodes,
                            const std::string& id) {
  for (const auto& e : episodes) {
    if (e.id == id) return e;
  }
  throw Error("unknown episode id '" + id + "'");
}

std::vector<std::string> corpus_vocab(const std::vector<Episode>& episodes) {
  std::set<std::string> words;
  for (const auto& ep : episodes) {
    for (const auto& s : ep.audio.subtitles) {
      for (const auto& t : tokenize(s.text)) words.insert(t);
    }
  }
  if (words.empty()) throw Error("corpus_vocab: no subtitle text in corpus");
  return {words.begin(), words.end()};
}

std::vector<SpottingAnnotation> corpus_spottings(const std::vector<Episode>& episodes) {
  std::vector<SpottingAnnotation> out;
  for (const auto& ep : episodes) {
    out.insert(out.end(), ep.spottings.begin(), ep.spottings.end());
  }
  return out;
}

}  // namespace subalign
