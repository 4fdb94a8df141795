// src/model.cc

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

#include "subalign/model.h"

#include <fstream>

#include <json.hpp>

#include "subalign/features.h"

namespace subalign {

void ModelConfig::validate() const {
  if (d_model <= 0 || num_layers <= 0 || num_heads <= 0 || d_video_in <= 0 ||
      d_text_in <= 0 || ffn_dim <= 0 || fusion_half_dim <= 0) {
    throw Error("model config: all dimensions must be positive");
  }
  if (d_model % num_heads != 0) {
    throw Error("model config: d_model must be divisible by num_heads");
  }
  if (d_model % 2 != 0) {
    throw Error("model config: d_model must be even for positional encodings");
  }
  if (dropout_rate < 0 || dropout_rate >= 1) {
    throw Error("model config: dropout_rate out of range");
  }
}

ModelConfig ModelConfig::paper_profile() {
  ModelConfig c;
  c.d_model = 512;
  c.num_layers = 2;
  c.num_heads = 2;
  c.d_video_in = 1024;
  c.d_text_in = 768;
  c.ffn_dim = 2048;
  c.fusion_half_dim = 256;
  return c;
}

ModelConfig ModelConfig::desk_profile() {
  ModelConfig c;
  c.d_model = 64;
  c.num_layers = 2;
  c.num_heads = 2;
  c.d_video_in = 32;
  c.d_text_in = 64;
  c.ffn_dim = 256;
  c.fusion_half_dim = 32;
  return c;
}

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  return init_params_t<Real>(cfg, seed);
}

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"d_model", c.d_model},
              {"num_layers", c.num_layers},
              {"num_heads", c.num_heads},
              {"d_video_in", c.d_video_in},
              {"d_text_in", c.d_text_in},
              {"ffn_dim", c.ffn_dim},
              {"fusion_half_dim", c.fusion_half_dim},
              {"dropout_rate", c.dropout_rate},
              {"normalize_fused_input", c.normalize_fused_input}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.d_video_in = j.at("d_video_in").get<int>();
  c.d_text_in = j.at("d_text_in").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.fusion_half_dim = j.at("fusion_half_dim").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.normalize_fused_input = j.at("normalize_fused_input").get<bool>();
  return c;
}

constexpr char kCheckpointMagic[8] = {'S', 'U', 'B', 'A', 'L', 'N', 'C', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (in.gcount() != 4) throw IoError(what + ": truncated checkpoint");
  return static_cast<uint32_t>(buf[0]) | (static_cast<uint32_t>(buf[1]) << 8) |
         (static_cast<uint32_t>(buf[2]) << 16) | (static_cast<uint32_t>(buf[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ModelParams& params) {
  json manifest;
  manifest["config"] = config_to_json(cfg);
  json tensors = json::array();
  for_each_tensor(params, [&](const std::string& name, const Mat& m) {
    tensors.push_back(json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  manifest["tensors"] = std::move(tensors);
  std::string manifest_bytes = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, 1);  // version
  put_u32(out, static_cast<uint32_t>(manifest_bytes.size()));
  out.write(manifest_bytes.data(), static_cast<std::streamsize>(manifest_bytes.size()));
  for_each_tensor(params, [&](const std::string&, const Mat& m) {
    write_matrix_stream(out, m, 0);
  });
  if (!out) throw IoError("short write to " + path);
}

void load_checkpoint(const std::string& path, ModelConfig* cfg,
                     ModelParams* params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::string(magic, 8) != std::string(kCheckpointMagic, 8)) {
    throw IoError(path + ": not a checkpoint file");
  }
  uint32_t version = get_u32(in, path);
  if (version != 1) {
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  uint32_t manifest_len = get_u32(in, path);
  std::string manifest_bytes(manifest_len, '\0');
  in.read(manifest_bytes.data(), manifest_len);
  if (in.gcount() != static_cast<std::streamsize>(manifest_len)) {
    throw IoError(path + ": truncated manifest");
  }
  json manifest;
  try {
    manifest = json::parse(manifest_bytes);
  } catch (const json::exception& e) {
    throw IoError(path + ": bad manifest: " + e.what());
  }
  ModelConfig loaded = config_from_json(manifest.at("config"));
  loaded.validate();

  // Lay out parameters for the stored config, then fill in order.
  ModelParams p = init_params(loaded, 0);
  const json& tensors = manifest.at("tensors");
  size_t idx = 0;
  std::string error;
  for_each_tensor(p, [&](const std::string& name, Mat& m) {
    if (!error.empty()) return;
    if (idx >= tensors.size()) {
      error = "manifest lists too few tensors";
      return;
    }
    const json& t = tensors[idx++];
    if (t.at("name").get<std::string>() != name) {
      error = "tensor order mismatch at '" + name + "'";
      return;
    }
    Mat loaded_m = read_matrix_stream(in, path + ":" + name, nullptr);
    if (loaded_m.rows() != m.rows() || loaded_m.cols() != m.cols()) {
      error = "tensor '" + name + "' has unexpected shape";
      return;
    }
    m = std::move(loaded_m);
  });
  if (error.empty() && idx != tensors.size()) error = "manifest lists extra tensors";
  if (!error.empty()) throw IoError(path + ": " + error);

  if (cfg) *cfg = loaded;
  if (params) *params = std::move(p);
}

}  // namespace subalign
