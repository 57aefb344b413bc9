// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace awplab {

namespace {

const char* kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (size_t i = 0; i < values.size(); ++i) {
    std::uint64_t u;
    std::memcpy(&u, &values[i], 8);
    for (int b = 0; b < 8; ++b)  // little-endian
      bytes[i * 8 + static_cast<size_t>(b)] = static_cast<unsigned char>((u >> (8 * b)) & 0xff);
  }
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t v = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) v |= bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kB64[v & 63] : '=';
  }
  return out;
}

std::vector<double> b64_decode(const std::string& s, const std::string& name) {
  static int rev[256];
  static bool init = false;
  if (!init) {
    for (int i = 0; i < 256; ++i) rev[i] = -1;
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64[i])] = i;
    init = true;
  }
  if (s.size() % 4 != 0) throw Error("checkpoint: malformed base64 payload in tensor '" + name + "'");
  std::vector<unsigned char> bytes;
  bytes.reserve(s.size() / 4 * 3);
  for (size_t i = 0; i < s.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = s[i + static_cast<size_t>(j)];
      if (c == '=') {
        vals[j] = 0;
        ++pad;
      } else {
        vals[j] = rev[static_cast<unsigned char>(c)];
        if (vals[j] < 0) throw Error("checkpoint: invalid base64 character in tensor '" + name + "'");
      }
    }
    const std::uint32_t v = (static_cast<std::uint32_t>(vals[0]) << 18) |
                            (static_cast<std::uint32_t>(vals[1]) << 12) |
                            (static_cast<std::uint32_t>(vals[2]) << 6) | static_cast<std::uint32_t>(vals[3]);
    bytes.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    if (pad < 2) bytes.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    if (pad < 1) bytes.push_back(static_cast<unsigned char>(v & 0xff));
  }
  if (bytes.size() % 8 != 0) throw Error("checkpoint: payload of tensor '" + name + "' is not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / 8);
  for (size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b)
      u |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<size_t>(b)]) << (8 * b);
    std::memcpy(&out[i], &u, 8);
  }
  return out;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path, int epoch,
                     const std::string& config_echo, std::uint64_t prng_state) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["epoch"] = epoch;
  j["config"] = config_echo;
  j["prng_state"] = prng_state;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : net.params) {
    const std::string base = "layer" + std::to_string(p.layer_index);
    nlohmann::json tw;
    tw["name"] = base + ".weight";
    tw["shape"] = p.weight.shape;
    tw["data"] = b64_encode(p.weight.data);
    tensors.push_back(std::move(tw));
    if (p.has_bias) {
      nlohmann::json tb;
      tb["name"] = base + ".bias";
      tb["shape"] = p.bias.shape;
      tb["data"] = b64_encode(p.bias.data);
      tensors.push_back(std::move(tb));
    }
  }
  j["tensors"] = std::move(tensors);
  std::ofstream f(path);
  if (!f) throw Error("checkpoint: cannot write " + path);
  f << j.dump(1) << '\n';
}

CheckpointRecord read_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint: malformed file " + path + ": " + e.what());
  }
  CheckpointRecord rec;
  try {
    rec.version = j.at("version").get<int>();
    if (rec.version != kCheckpointVersion)
      throw Error("checkpoint: version " + std::to_string(rec.version) + " unsupported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
    rec.epoch = j.at("epoch").get<int>();
    rec.config_echo = j.at("config").get<std::string>();
    rec.prng_state = j.at("prng_state").get<std::uint64_t>();
    for (const auto& t : j.at("tensors")) {
      CheckpointRecord::Entry e;
      e.name = t.at("name").get<std::string>();
      e.shape = t.at("shape").get<std::vector<int>>();
      e.data = b64_decode(t.at("data").get<std::string>(), e.name);
      if (static_cast<std::int64_t>(e.data.size()) != Tensor::numel_of(e.shape))
        throw Error("checkpoint: tensor '" + e.name + "' payload does not match its shape");
      rec.tensors.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint: malformed record in " + path + ": " + e.what());
  }
  return rec;
}

void load_checkpoint(Network& net, const std::string& path) {
  CheckpointRecord rec = read_checkpoint(path);
  for (auto& p : net.params) {
    const std::string base = "layer" + std::to_string(p.layer_index);
    auto find = [&](const std::string& name) -> CheckpointRecord::Entry* {
      for (auto& e : rec.tensors)
        if (e.name == name) return &e;
      return nullptr;
    };
    CheckpointRecord::Entry* w = find(base + ".weight");
    if (!w) throw Error("checkpoint: missing tensor '" + base + ".weight'");
    if (w->shape != p.weight.shape)
      throw Error("checkpoint: shape mismatch for '" + w->name + "': file " + shape_str(w->shape) +
                  " vs model " + shape_str(p.weight.shape));
    p.weight.data = w->data;
    if (p.has_bias) {
      CheckpointRecord::Entry* b = find(base + ".bias");
      if (!b) throw Error("checkpoint: missing tensor '" + base + ".bias'");
      if (b->shape != p.bias.shape)
        throw Error("checkpoint: shape mismatch for '" + b->name + "'");
      p.bias.data = b->data;
    }
  }
}

}  // namespace awplab
