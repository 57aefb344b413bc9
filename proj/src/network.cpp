// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/network.hpp"

#include <algorithm>
#include <cmath>

#include "awplab/rng.hpp"

namespace awplab {

LayerSpec LayerSpec::dense(int in, int out, bool bias) {
  if (in <= 0 || out <= 0) throw Error("dense: dimensions must be positive");
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in = in;
  s.out = out;
  s.has_bias = bias;
  return s;
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int k, int pad, bool bias) {
  if (in_ch <= 0 || out_ch <= 0 || k <= 0 || pad < 0)
    throw Error("conv2d: invalid layer dimensions");
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.k = k;
  s.pad = pad;
  s.has_bias = bias;
  return s;
}

namespace {

// Walks the spec, validating shape compatibility; returns the output shape.
std::vector<int> trace_shapes(const std::vector<LayerSpec>& spec,
                              const std::vector<int>& input_shape) {
  std::vector<int> cur = input_shape;
  for (size_t i = 0; i < spec.size(); ++i) {
    const LayerSpec& l = spec[i];
    switch (l.kind) {
      case LayerKind::kDense: {
        if (cur.size() != 1 || cur[0] != l.in)
          throw Error("layer " + std::to_string(i) + ": dense(" + std::to_string(l.in) +
                      "," + std::to_string(l.out) + ") cannot consume " + shape_str(cur));
        cur = {l.out};
        break;
      }
      case LayerKind::kConv2d: {
        if (cur.size() != 3 || cur[0] != l.in_ch)
          throw Error("layer " + std::to_string(i) + ": conv2d expects " +
                      std::to_string(l.in_ch) + " channels, got " + shape_str(cur));
        const int oh = cur[1] + 2 * l.pad - l.k + 1;
        const int ow = cur[2] + 2 * l.pad - l.k + 1;
        if (oh <= 0 || ow <= 0)
          throw Error("layer " + std::to_string(i) + ": conv2d kernel too large for " +
                      shape_str(cur));
        cur = {l.out_ch, oh, ow};
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kFlatten: {
        int n = 1;
        for (int d : cur) n *= d;
        cur = {n};
        break;
      }
    }
  }
  return cur;
}

}  // namespace

Network build_model(const std::vector<LayerSpec>& spec, const std::vector<int>& input_shape,
                    int num_classes, std::uint64_t seed) {
  std::vector<int> out_shape = trace_shapes(spec, input_shape);
  if (out_shape.size() != 1 || out_shape[0] != num_classes)
    throw Error("model output shape " + shape_str(out_shape) + " does not match " +
                std::to_string(num_classes) + " classes");
  Network net;
  net.layers = spec;
  net.input_shape = input_shape;
  net.num_classes = num_classes;
  SplitMix64 rng(seed);
  for (size_t i = 0; i < spec.size(); ++i) {
    const LayerSpec& l = spec[i];
    if (!l.parameterized()) continue;
    Network::Param p;
    p.layer_index = static_cast<int>(i);
    p.has_bias = l.has_bias;
    if (l.kind == LayerKind::kDense) {
      const double limit = std::sqrt(6.0 / l.in);
      p.weight = Tensor::zeros({l.out, l.in});
      for (double& v : p.weight.data) v = rng.uniform(-limit, limit);
      if (l.has_bias) p.bias = Tensor::zeros({l.out});
    } else {
      const int fan_in = l.in_ch * l.k * l.k;
      const double limit = std::sqrt(6.0 / fan_in);
      p.weight = Tensor::zeros({l.out_ch, l.in_ch, l.k, l.k});
      for (double& v : p.weight.data) v = rng.uniform(-limit, limit);
      if (l.has_bias) p.bias = Tensor::zeros({l.out_ch});
    }
    net.params.push_back(std::move(p));
  }
  return net;
}

std::vector<LayerSpec> preset_spec(const std::string& name, const std::vector<int>& input_shape,
                                   int num_classes) {
  if (name == "mlp-small") {
    if (input_shape.size() != 1)
      throw Error("mlp-small expects flat input, got " + shape_str(input_shape));
    return {LayerSpec::dense(input_shape[0], 64), LayerSpec::relu(),
            LayerSpec::dense(64, num_classes)};
  }
  if (name == "cnn-small") {
    if (input_shape.size() != 3)
      throw Error("cnn-small expects CHW input, got " + shape_str(input_shape));
    const int h = input_shape[1], w = input_shape[2];
    return {LayerSpec::conv2d(input_shape[0], 8, 3, 1), LayerSpec::relu(),
            LayerSpec::conv2d(8, 16, 3, 1),             LayerSpec::relu(),
            LayerSpec::flatten(),
            LayerSpec::dense(16 * h * w, num_classes)};
  }
  throw Error("unknown model preset '" + name + "'");
}

Tensor Network::forward(const Tensor& batch) const {
  Tape tape;
  auto tf = forward_taped(tape, batch, false);
  return tape.value(tf.logits);
}

Network::TapedForward Network::forward_taped(Tape& tape, const Tensor& batch,
                                             bool input_grad, bool param_grad) const {
  TapedForward tf;
  tf.input = tape.leaf(batch, input_grad);
  Tape::NodeId cur = tf.input;
  size_t pi = 0;
  for (const LayerSpec& l : layers) {
    switch (l.kind) {
      case LayerKind::kDense: {
        const Param& p = params[pi];
        Tape::NodeId w = tape.leaf(p.weight, param_grad);
        tf.weights.push_back(w);
        cur = tape.linear(cur, w);
        if (p.has_bias) {
          Tape::NodeId b = tape.leaf(p.bias, param_grad);
          tf.biases.push_back(b);
          cur = tape.add_bias(cur, b);
        } else {
          tf.biases.push_back(-1);
        }
        ++pi;
        break;
      }
      case LayerKind::kConv2d: {
        const Param& p = params[pi];
        Tape::NodeId w = tape.leaf(p.weight, param_grad);
        tf.weights.push_back(w);
        cur = tape.conv2d(cur, w, l.pad);
        if (p.has_bias) {
          Tape::NodeId b = tape.leaf(p.bias, param_grad);
          tf.biases.push_back(b);
          cur = tape.add_bias(cur, b);
        } else {
          tf.biases.push_back(-1);
        }
        ++pi;
        break;
      }
      case LayerKind::kRelu:
        cur = tape.relu(cur);
        break;
      case LayerKind::kFlatten:
        cur = tape.flatten(cur);
        break;
    }
  }
  tf.logits = cur;
  return tf;
}

int Network::num_parameters() const {
  int n = 0;
  for (const Param& p : params) {
    n += static_cast<int>(p.weight.numel());
    if (p.has_bias) n += static_cast<int>(p.bias.numel());
  }
  return n;
}

int Network::filter_count(int p) const {
  return params[static_cast<size_t>(p)].weight.shape[0];
}

std::pair<std::int64_t, std::int64_t> Network::filter_span(int p, int j) const {
  const Tensor& w = params[static_cast<size_t>(p)].weight;
  std::int64_t per = w.numel() / w.shape[0];
  return {j * per, (j + 1) * per};
}

double tensor_norm(const Tensor& t, NormKind norm) {
  return norm == NormKind::kL1 ? l1_norm(t.data) : l2_norm(t.data);
}

std::vector<double> layer_norms(const Network& net, Granularity g, NormKind norm) {
  if (net.params.empty()) throw Error("layer_norms: no parameterized layers");
  std::vector<double> out;
  for (size_t p = 0; p < net.params.size(); ++p) {
    const Tensor& w = net.params[p].weight;
    if (g == Granularity::kLayer) {
      out.push_back(tensor_norm(w, norm));
    } else {
      const int fc = net.filter_count(static_cast<int>(p));
      for (int j = 0; j < fc; ++j) {
        auto [b, e] = net.filter_span(static_cast<int>(p), j);
        double s = 0.0;
        if (norm == NormKind::kL1) {
          for (auto i = b; i < e; ++i) s += std::fabs(w.data[static_cast<size_t>(i)]);
        } else {
          for (auto i = b; i < e; ++i) s += w.data[static_cast<size_t>(i)] * w.data[static_cast<size_t>(i)];
          s = std::sqrt(s);
        }
        out.push_back(s);
      }
    }
  }
  return out;
}

Network rescale_pair(const Network& net, int l, double c) {
  if (!(c > 0.0)) throw Error("rescale_pair: c must be positive");
  if (l < 0 || l >= static_cast<int>(net.params.size()))
    throw Error("rescale_pair: layer index out of range");
  if (l + 1 >= static_cast<int>(net.params.size()))
    throw Error("rescale_pair: no following parameterized layer");
  // Only ReLU/flatten may sit between the pair (positive homogeneity).
  const int li = net.params[static_cast<size_t>(l)].layer_index;
  const int lj = net.params[static_cast<size_t>(l) + 1].layer_index;
  for (int i = li + 1; i < lj; ++i) {
    const LayerKind k = net.layers[static_cast<size_t>(i)].kind;
    if (k != LayerKind::kRelu && k != LayerKind::kFlatten)
      throw Error("rescale_pair: layers " + std::to_string(l) + " and " + std::to_string(l + 1) +
                  " are separated by a non-homogeneous layer");
  }
  Network out = net;
  Network::Param& a = out.params[static_cast<size_t>(l)];
  Network::Param& b = out.params[static_cast<size_t>(l) + 1];
  for (double& v : a.weight.data) v *= c;
  if (a.has_bias)
    for (double& v : a.bias.data) v *= c;
  for (double& v : b.weight.data) v /= c;
  return out;
}

Histogram weight_histogram(const Network& net, int p, int bins) {
  if (p < 0 || p >= static_cast<int>(net.params.size()))
    throw Error("weight_histogram: layer index out of range");
  if (bins < 1) throw Error("weight_histogram: bins must be >= 1");
  const Tensor& w = net.params[static_cast<size_t>(p)].weight;
  double lo = w.data[0], hi = w.data[0];
  for (double v : w.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;  // degenerate all-equal layer: single occupied bin
  Histogram h;
  h.edges.resize(static_cast<size_t>(bins) + 1);
  h.counts.assign(static_cast<size_t>(bins), 0);
  for (int i = 0; i <= bins; ++i)
    h.edges[static_cast<size_t>(i)] = lo + (hi - lo) * i / bins;
  for (double v : w.data) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<size_t>(b)];
  }
  return h;
}

}  // namespace awplab
