// include/subalign/features.h

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

#ifndef SUBALIGN_FEATURES_H_
#define SUBALIGN_FEATURES_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "subalign/common.h"

namespace subalign {

// Per-frame video features at a fixed frame rate.
struct FeatureSequence {
  Mat frames;        // num_frames x d_video
  double fps = 25.0;

  int64_t num_frames() const { return frames.rows(); }
  int dim() const { return static_cast<int>(frames.cols()); }
  int64_t duration_ms() const {
    return static_cast<int64_t>(std::llround(frames.rows() * 1000.0 / fps));
  }
};

// Token strings plus one embedding row per token.
struct TokenSequence {
  std::vector<std::string> tokens;
  Mat embeddings;    // num_tokens x d_text
};

// Binary matrix container: magic "SUBALNF1", u32 version=1, u64 rows,
// u32 cols, u32 fps*1000, then rows*cols little-endian f32, row-major.
// fps_milli is 0 for matrices that are not frame sequences.
void write_matrix_file(const std::string& path, const Mat& m, uint32_t fps_milli);
Mat read_matrix_file(const std::string& path, uint32_t* fps_milli_out);

// Same container, embedded in a larger stream (checkpoints).
void write_matrix_stream(std::ostream& out, const Mat& m, uint32_t fps_milli);
Mat read_matrix_stream(std::istream& in, const std::string& what,
                       uint32_t* fps_milli_out);

void save_features(const std::string& path, const FeatureSequence& seq);
FeatureSequence load_features(const std::string& path);

// Lowercases, splits on whitespace, strips leading/trailing punctuation per
// token. Throws Error when no token survives.
std::vector<std::string> tokenize(const std::string& text);

// Deterministic stand-in for pretrained text encoders: each token row is a
// unit-norm pseudo-random vector keyed by a stable hash of the token, so
// the same token maps to the same row on every run and platform. With
// add_positional, sinusoidal position codes are added and the row is
// re-normalized, making the embedding order-sensitive.
TokenSequence hash_embed(const std::vector<std::string>& tokens, int d_text,
                         bool add_positional);

// Mean-pool the rows into a single-row sequence (sentence-embedding mode).
TokenSequence pool_sentence(const TokenSequence& seq);

// Hash-backend settings used by the pipeline when no precomputed
// embeddings are supplied.
struct TextEncoderConfig {
  int d_text = 64;
  bool add_positional = false;      // extra positional codes on token rows
  bool sentence_embedding = false;  // collapse to a single pooled row
};

TokenSequence encode_tokens(const std::vector<std::string>& tokens,
                            const TextEncoderConfig& cfg);

// Embedding container plus a UTF-8 sidecar at path + ".tokens", one token
// per line. Row count must match the sidecar.
void save_token_embeddings(const std::string& path, const TokenSequence& seq);
TokenSequence load_token_embeddings(const std::string& path);

}  // namespace subalign

#endif  // SUBALIGN_FEATURES_H_
