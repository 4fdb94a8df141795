// src/features.cc

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

#include "subalign/features.h"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "subalign/rng.h"

namespace subalign {

namespace {

constexpr char kMagic[8] = {'S', 'U', 'B', 'A', 'L', 'N', 'F', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_matrix_stream(std::ostream& out, const Mat& m, uint32_t fps_milli) {
  std::string header;
  header.append(kMagic, sizeof(kMagic));
  put_u32(header, kVersion);
  put_u64(header, static_cast<uint64_t>(m.rows()));
  put_u32(header, static_cast<uint32_t>(m.cols()));
  put_u32(header, fps_milli);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  static_assert(sizeof(float) == 4);
  std::vector<float> row(static_cast<size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] = m(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * 4));
  }
}

Mat read_matrix_stream(std::istream& in, const std::string& what,
                       uint32_t* fps_milli_out) {
  unsigned char magic[8];
  in.read(reinterpret_cast<char*>(magic), sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(what + ": bad magic, not a feature container");
  }
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != sizeof(header)) throw IoError(what + ": truncated header");
  uint32_t version = get_u32(header);
  if (version != kVersion) {
    throw IoError(what + ": unsupported container version " + std::to_string(version));
  }
  uint64_t rows = get_u64(header + 4);
  uint32_t cols = get_u32(header + 12);

  unsigned char fps_buf[4];
  in.read(reinterpret_cast<char*>(fps_buf), 4);
  if (in.gcount() != 4) throw IoError(what + ": truncated header");
  uint32_t fps_milli = get_u32(fps_buf);
  if (fps_milli_out) *fps_milli_out = fps_milli;

  if (cols == 0) throw IoError(what + ": zero columns");

  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<float> row(cols);
  for (uint64_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols) * 4);
    if (in.gcount() != static_cast<std::streamsize>(cols) * 4) {
      throw IoError(what + ": truncated payload at row " + std::to_string(r));
    }
    for (uint32_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = row[c];
  }
  return m;
}

void write_matrix_file(const std::string& path, const Mat& m, uint32_t fps_milli) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_matrix_stream(out, m, fps_milli);
  if (!out) throw IoError("short write to " + path);
}

Mat read_matrix_file(const std::string& path, uint32_t* fps_milli_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_matrix_stream(in, path, fps_milli_out);
}

void save_features(const std::string& path, const FeatureSequence& seq) {
  if (seq.fps <= 0) throw Error("save_features: fps must be positive");
  write_matrix_file(path, seq.frames,
                    static_cast<uint32_t>(std::llround(seq.fps * 1000.0)));
}

FeatureSequence load_features(const std::string& path) {
  uint32_t fps_milli = 0;
  FeatureSequence seq;
  seq.frames = read_matrix_file(path, &fps_milli);
  if (seq.frames.rows() == 0) throw IoError(path + ": empty feature file");
  if (fps_milli == 0) throw IoError(path + ": fps missing from header");
  seq.fps = fps_milli / 1000.0;
  if (!seq.frames.allFinite()) throw IoError(path + ": non-finite feature values");
  return seq;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  auto is_punct = [](unsigned char c) { return c < 0x80 && std::ispunct(c); };
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string tok = text.substr(start, i - start);
    size_t lo = 0, hi = tok.size();
    while (lo < hi && is_punct(static_cast<unsigned char>(tok[lo]))) ++lo;
    while (hi > lo && is_punct(static_cast<unsigned char>(tok[hi - 1]))) --hi;
    tok = tok.substr(lo, hi - lo);
    if (tok.empty()) continue;
    for (char& c : tok) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    tokens.push_back(std::move(tok));
  }
  if (tokens.empty()) throw Error("no tokens in text '" + text + "'");
  return tokens;
}

TokenSequence hash_embed(const std::vector<std::string>& tokens, int d_text,
                         bool add_positional) {
  if (d_text < 8) throw Error("hash_embed: d_text must be at least 8");
  if (tokens.empty()) throw Error("hash_embed: empty token list");

  TokenSequence seq;
  seq.tokens = tokens;
  seq.embeddings.resize(static_cast<Eigen::Index>(tokens.size()), d_text);
  for (size_t t = 0; t < tokens.size(); ++t) {
    Rng rng(stable_hash64(tokens[t]));
    double norm_sq = 0.0;
    std::vector<double> row(static_cast<size_t>(d_text));
    for (int j = 0; j < d_text; ++j) {
      row[static_cast<size_t>(j)] = rng.normal();
      norm_sq += row[static_cast<size_t>(j)] * row[static_cast<size_t>(j)];
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (int j = 0; j < d_text; ++j) {
      seq.embeddings(static_cast<Eigen::Index>(t), j) =
          static_cast<Real>(row[static_cast<size_t>(j)] * inv);
    }
  }

  if (add_positional) {
    for (Eigen::Index t = 0; t < seq.embeddings.rows(); ++t) {
      for (int j = 0; j < d_text; j += 2) {
        double angle = t / std::pow(10000.0, static_cast<double>(j) / d_text);
        seq.embeddings(t, j) += static_cast<Real>(std::sin(angle));
        if (j + 1 < d_text) seq.embeddings(t, j + 1) += static_cast<Real>(std::cos(angle));
      }
      Real norm = seq.embeddings.row(t).norm();
      if (norm > 0) seq.embeddings.row(t) /= norm;
    }
  }
  return seq;
}

TokenSequence pool_sentence(const TokenSequence& seq) {
  if (seq.tokens.empty()) throw Error("pool_sentence: empty sequence");
  TokenSequence out;
  std::string joined;
  for (const auto& t : seq.tokens) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  out.tokens = {joined};
  out.embeddings = seq.embeddings.colwise().mean();
  return out;
}

TokenSequence encode_tokens(const std::vector<std::string>& tokens,
                            const TextEncoderConfig& cfg) {
  TokenSequence seq = hash_embed(tokens, cfg.d_text, cfg.add_positional);
  if (cfg.sentence_embedding) seq = pool_sentence(seq);
  return seq;
}

void save_token_embeddings(const std::string& path, const TokenSequence& seq) {
  if (static_cast<size_t>(seq.embeddings.rows()) != seq.tokens.size()) {
    throw Error("token/embedding count mismatch");
  }
  write_matrix_file(path, seq.embeddings, 0);
  std::ofstream side(path + ".tokens", std::ios::binary);
  if (!side) throw IoError("cannot write " + path + ".tokens");
  for (const auto& t : seq.tokens) side << t << '\n';
}

TokenSequence load_token_embeddings(const std::string& path) {
  TokenSequence seq;
  seq.embeddings = read_matrix_file(path, nullptr);
  std::ifstream side(path + ".tokens", std::ios::binary);
  if (!side) throw IoError("cannot open " + path + ".tokens");
  std::string line;
  while (std::getline(side, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) seq.tokens.push_back(line);
  }
  if (static_cast<size_t>(seq.embeddings.rows()) != seq.tokens.size()) {
    throw IoError(path + ": " + std::to_string(seq.embeddings.rows()) +
                  " embedding rows but " + std::to_string(seq.tokens.size()) +
                  " sidecar tokens");
  }
  return seq;
}

}  // namespace subalign
