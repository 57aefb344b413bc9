// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awplab/network.hpp"

namespace awplab {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointRecord {
  int version = kCheckpointVersion;
  int epoch = 0;
  std::string config_echo;
  std::uint64_t prng_state = 0;
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
  };
  std::vector<Entry> tensors;
};

/// Weights serialized as base64 little-endian f64; round-trip is bitwise.
void save_checkpoint(const Network& net, const std::string& path, int epoch = 0,
                     const std::string& config_echo = "", std::uint64_t prng_state = 0);

CheckpointRecord read_checkpoint(const std::string& path);

/// Loads a checkpoint into a network built from the same architecture;
/// shape mismatches are errors naming the offending tensor.
void load_checkpoint(Network& net, const std::string& path);

}  // namespace awplab
