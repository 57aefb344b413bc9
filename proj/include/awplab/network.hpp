// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "awplab/tape.hpp"
#include "awplab/tensor.hpp"

namespace awplab {

enum class LayerKind { kDense, kConv2d, kRelu, kFlatten };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int in = 0, out = 0;                      // dense
  int in_ch = 0, out_ch = 0, k = 0, pad = 0;  // conv2d
  bool has_bias = true;

  static LayerSpec dense(int in, int out, bool bias = true);
  static LayerSpec conv2d(int in_ch, int out_ch, int k, int pad, bool bias = true);
  static LayerSpec relu() { return LayerSpec{LayerKind::kRelu}; }
  static LayerSpec flatten() { return LayerSpec{LayerKind::kFlatten}; }

  bool parameterized() const { return kind == LayerKind::kDense || kind == LayerKind::kConv2d; }
};

enum class Granularity { kLayer, kFilter };
enum class NormKind { kL1, kFrobenius };

/// Small classifier: ordered layers plus per-layer parameters. Weights for a
/// dense layer are stored [out, in] so that a "filter" is one output row;
/// conv weights are OIHW so that a filter is one output channel.
struct Network {
  struct Param {
    Tensor weight;
    Tensor bias;  // empty shape if absent
    bool has_bias = false;
    int layer_index = 0;  // into layers
  };

  std::vector<LayerSpec> layers;
  std::vector<Param> params;        // parameterized layers, in order
  std::vector<int> input_shape;     // per example: {d} or {C,H,W}
  int num_classes = 0;

  /// Value-only forward: batch is [n,d] or [N,C,H,W]; returns logits [n,classes].
  Tensor forward(const Tensor& batch) const;

  struct TapedForward {
    Tape::NodeId input = -1;
    std::vector<Tape::NodeId> weights;
    std::vector<Tape::NodeId> biases;  // -1 where absent
    Tape::NodeId logits = -1;
  };
  /// Forward on a tape; leaves for every parameter and optionally the input.
  /// param_grad=false skips parameter adjoints; attacks only need d/dx.
  TapedForward forward_taped(Tape& tape, const Tensor& batch, bool input_grad,
                             bool param_grad = true) const;

  int num_parameters() const;

  /// Filters in parameterized layer p (output rows / output channels).
  int filter_count(int p) const;
  /// Contiguous [begin, end) span of filter j within params[p].weight.data.
  std::pair<std::int64_t, std::int64_t> filter_span(int p, int j) const;
};

struct Histogram {
  std::vector<double> edges;   // bins + 1
  std::vector<std::int64_t> counts;  // bins
};

Network build_model(const std::vector<LayerSpec>& spec, const std::vector<int>& input_shape,
                    int num_classes, std::uint64_t seed);

/// Named presets from the default experiment configurations.
std::vector<LayerSpec> preset_spec(const std::string& name, const std::vector<int>& input_shape,
                                   int num_classes);

/// Per-layer (or per-filter, flattened layer-major) weight norms.
std::vector<double> layer_norms(const Network& net, Granularity g, NormKind norm);

double tensor_norm(const Tensor& t, NormKind norm);

/// Multiply layer l's weights (and bias) by c and divide the next
/// parameterized layer's weights by c. Function-preserving on ReLU chains.
Network rescale_pair(const Network& net, int l, double c);

Histogram weight_histogram(const Network& net, int p, int bins);

}  // namespace awplab
