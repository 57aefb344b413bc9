// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "awplab/landscape.hpp"
#include "awplab/trainer.hpp"

namespace awplab {

/// Flat key=value experiment description. Unknown keys are errors; every run
/// can echo its fully resolved configuration.
class ExperimentConfig {
 public:
  /// Parses a config file; throws Error with line numbers on bad input.
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);

  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  void override_value(const std::string& key, const std::string& value);

  /// All resolved key=value pairs, sorted, one per line.
  std::string resolved() const;

  // Typed views over the flat keys.
  TrainConfig train_config() const;
  LossSpec loss_spec() const;
  ThreatModel threat(const std::string& prefix) const;  // "attack" or "eval"
  Dataset make_dataset(const std::string& split) const;  // "train" or "test"
  std::vector<int> input_shape() const;
  Network build_network() const;  // preset + seed, no weights loaded

  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace awplab
