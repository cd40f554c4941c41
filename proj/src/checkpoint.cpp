// Copyright 2026 The InsPose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "inspose/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "inspose/error.hpp"

namespace inspose {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'I', 'N', 'S', 'P', 'O', 'S', 'E', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ParseError("truncated checkpoint " + path.string());
  return v;
}

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_text(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const NamedArray& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

ModelConfig Checkpoint::model_config() const {
  ConfigMap model_keys;
  for (const auto& [k, v] : config)
    if (k.rfind("model.", 0) == 0) model_keys[k] = v;
  if (model_keys.empty()) throw ConfigError("checkpoint carries no model configuration");
  ModelConfig m;
  apply_model_config(m, model_keys);
  m.validate();
  return m;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json header;
  header["config"] = ckpt.config;
  header["state"] = {{"epoch", ckpt.state.epoch},
                     {"iteration", ckpt.state.iteration},
                     {"epoch_offset", ckpt.state.epoch_offset}};
  json table = json::array();
  for (const NamedArray& a : ckpt.arrays) {
    if (element_count(a.shape) != a.data.size())
      throw ConfigError("array " + a.name + " has " + std::to_string(a.data.size()) +
                        " values for shape " + shape_text(a.shape));
    table.push_back({{"name", a.name}, {"shape", a.shape}});
  }
  header["arrays"] = table;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const NamedArray& a : ckpt.arrays)
      out.write(reinterpret_cast<const char*>(a.data.data()),
                static_cast<std::streamsize>(a.data.size() * sizeof(float)));
    if (!out) throw Error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path.string() + " is not an InsPose checkpoint");
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto len = read_pod<std::uint64_t>(in, path);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
    throw ParseError("truncated checkpoint header in " + path.string());

  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.config = header.at("config").get<ConfigMap>();
    const json& st = header.at("state");
    ckpt.state.epoch = st.at("epoch").get<int>();
    ckpt.state.iteration = st.at("iteration").get<std::int64_t>();
    ckpt.state.epoch_offset = st.at("epoch_offset").get<std::int64_t>();
    for (const json& a : header.at("arrays")) {
      NamedArray arr;
      arr.name = a.at("name").get<std::string>();
      arr.shape = a.at("shape").get<std::vector<int>>();
      ckpt.arrays.push_back(std::move(arr));
    }
  } catch (const json::exception& e) {
    throw ParseError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  for (NamedArray& a : ckpt.arrays) {
    a.data.resize(element_count(a.shape));
    if (!in.read(reinterpret_cast<char*>(a.data.data()),
                 static_cast<std::streamsize>(a.data.size() * sizeof(float))))
      throw ParseError("truncated array " + a.name + " in " + path.string());
  }
  return ckpt;
}

std::vector<NamedArray> model_arrays(const Model& model) {
  std::vector<NamedArray> out;
  for (const nn::Parameter& p : model.params()) out.push_back({p.name, p.shape, p.value});
  return out;
}

void load_model_arrays(Model& model, const Checkpoint& ckpt, const std::string& prefix) {
  for (nn::Parameter& p : model.params()) {
    const NamedArray* a = ckpt.find(prefix + p.name);
    if (a == nullptr) throw ConfigError("checkpoint is missing array " + prefix + p.name);
    if (a->shape != p.shape)
      throw ConfigError("array " + prefix + p.name + " has shape " + shape_text(a->shape) +
                        ", model expects " + shape_text(p.shape));
    p.value = a->data;
  }
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model(ckpt.model_config());
  load_model_arrays(model, ckpt);
  return model;
}

}  // namespace inspose
