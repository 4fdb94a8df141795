// tests/test_features.cc

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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "subalign/features.h"
#include "subalign/rng.h"

using namespace subalign;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("feature container round trips a known layout") {
  Mat m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  FeatureSequence seq{m, 25.0};
  std::string path = temp_path("subalign_feat_basic.feat");
  save_features(path, seq);
  FeatureSequence back = load_features(path);
  CHECK(back.fps == doctest::Approx(25.0));
  REQUIRE(back.frames.rows() == 3);
  REQUIRE(back.frames.cols() == 2);
  CHECK(back.frames(0, 0) == 1.0f);
  CHECK(back.frames(2, 1) == 6.0f);
  std::remove(path.c_str());
}

TEST_CASE("feature container save/load is bit exact") {
  Rng rng(42);
  std::string path = temp_path("subalign_feat_bits.feat");
  for (int trial = 0; trial < 20; ++trial) {
    Mat m(static_cast<Eigen::Index>(rng.uniform_int(1, 16)),
          static_cast<Eigen::Index>(rng.uniform_int(1, 16)));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = static_cast<Real>(rng.normal(0, 10));
      }
    }
    save_features(path, {m, 12.5});
    FeatureSequence back = load_features(path);
    CHECK(back.frames == m);  // exact
    CHECK(back.fps == doctest::Approx(12.5));
  }
  std::remove(path.c_str());
}

TEST_CASE("empty feature files are rejected") {
  std::string path = temp_path("subalign_feat_empty.feat");
  write_matrix_file(path, Mat(0, 4), 25000);
  CHECK_THROWS_WITH_AS(load_features(path), doctest::Contains("empty feature file"),
                       IoError);
  std::remove(path.c_str());
}

TEST_CASE("truncated payloads are detected") {
  std::string path = temp_path("subalign_feat_trunc.feat");
  Mat m(4, 4);
  m.setConstant(1.0f);
  save_features(path, {m, 25.0});
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 6);
  CHECK_THROWS_WITH_AS(load_features(path), doctest::Contains("truncated"), IoError);
  std::remove(path.c_str());
}

TEST_CASE("bad magic is detected") {
  std::string path = temp_path("subalign_feat_magic.feat");
  std::ofstream(path, std::ios::binary) << "NOTMAGIC just text";
  CHECK_THROWS_WITH_AS(load_features(path), doctest::Contains("bad magic"), IoError);
  std::remove(path.c_str());
}

TEST_CASE("tokenize lowercases and strips punctuation") {
  CHECK(tokenize("Hello, world!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("It's here") == std::vector<std::string>{"it's", "here"});
  CHECK(tokenize("  a  b ") == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_WITH_AS(tokenize("?! ..."), doctest::Contains("no tokens"), Error);
}

TEST_CASE("hash_embed is deterministic with unit rows") {
  auto a = hash_embed({"cake"}, 32, false);
  auto b = hash_embed({"cake"}, 32, false);
  CHECK(a.embeddings == b.embeddings);
  auto multi = hash_embed({"cake", "the", "cake"}, 32, false);
  CHECK(multi.embeddings.row(0) == multi.embeddings.row(2));
  for (Eigen::Index i = 0; i < multi.embeddings.rows(); ++i) {
    CHECK(multi.embeddings.row(i).norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(hash_embed({"x"}, 4, false), Error);
}

TEST_CASE("positional codes break permutation symmetry") {
  auto ab = hash_embed({"a", "b"}, 32, true);
  auto ba = hash_embed({"b", "a"}, 32, true);
  // Rows as sets differ: row of "a" at position 0 differs from "a" at 1.
  CHECK(ab.embeddings.row(0) != ba.embeddings.row(1));
  // Without positions the rows are position-independent.
  auto ab0 = hash_embed({"a", "b"}, 32, false);
  auto ba0 = hash_embed({"b", "a"}, 32, false);
  CHECK(ab0.embeddings.row(0) == ba0.embeddings.row(1));
  CHECK(ab0.embeddings.row(1) == ba0.embeddings.row(0));
}

TEST_CASE("sentence pooling collapses to one row") {
  auto seq = hash_embed({"a", "b", "c"}, 16, false);
  auto pooled = pool_sentence(seq);
  CHECK(pooled.embeddings.rows() == 1);
  CHECK(pooled.tokens.size() == 1);
  Mat mean = seq.embeddings.colwise().mean();
  CHECK((pooled.embeddings - mean).norm() == doctest::Approx(0.0));
}

TEST_CASE("token embeddings round trip with sidecar") {
  auto seq = hash_embed({"alpha", "beta", "gamma", "delta"}, 24, false);
  std::string path = temp_path("subalign_tok.emb");
  save_token_embeddings(path, seq);
  auto back = load_token_embeddings(path);
  CHECK(back.tokens == seq.tokens);
  CHECK(back.embeddings == seq.embeddings);  // bit exact

  // Row/token mismatch is an error.
  std::ofstream(path + ".tokens", std::ios::binary) << "a\nb\nc\n";
  CHECK_THROWS_WITH_AS(load_token_embeddings(path), doctest::Contains("sidecar"),
                       IoError);
  std::remove(path.c_str());
  std::remove((path + ".tokens").c_str());
}
