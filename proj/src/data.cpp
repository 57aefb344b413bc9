// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "awplab/rng.hpp"

namespace awplab {

int Dataset::size() const {
  const std::int64_t per = example_numel();
  return per == 0 ? 0 : static_cast<int>(static_cast<std::int64_t>(inputs.size()) / per);
}

Tensor Dataset::batch_inputs(const std::vector<int>& idx) const {
  const std::int64_t per = example_numel();
  std::vector<int> shape;
  shape.push_back(static_cast<int>(idx.size()));
  for (int d : input_shape) shape.push_back(d);
  Tensor out = Tensor::zeros(shape);
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy_n(inputs.begin() + idx[i] * per, per, out.data.begin() + static_cast<std::int64_t>(i) * per);
  return out;
}

std::vector<int> Dataset::batch_labels(const std::vector<int>& idx) const {
  std::vector<int> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = labels[static_cast<size_t>(idx[i])];
  return out;
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
  Dataset out;
  out.input_shape = input_shape;
  out.num_classes = num_classes;
  out.split_tag = split_tag;
  const std::int64_t per = example_numel();
  out.inputs.reserve(idx.size() * static_cast<size_t>(per));
  for (int i : idx) {
    out.inputs.insert(out.inputs.end(), inputs.begin() + i * per, inputs.begin() + (i + 1) * per);
    if (!labels.empty()) out.labels.push_back(labels[static_cast<size_t>(i)]);
  }
  return out;
}

Dataset Dataset::sample(int n, std::uint64_t seed) const {
  std::vector<int> idx(static_cast<size_t>(size()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  SplitMix64 rng(seed);
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_u64() % i]);
  idx.resize(static_cast<size_t>(std::min(n, size())));
  return subset(idx);
}

Dataset synth_blobs(int n, int num_classes, const std::vector<int>& shape, double margin,
                    std::uint64_t seed) {
  if (n < num_classes) throw Error("synth_blobs: need n >= class count");
  const bool image_mode = shape.size() == 3;
  if (!image_mode && shape.size() != 1)
    throw Error("synth_blobs: shape must be {d} or {C,H,W}");
  SplitMix64 rng(seed);
  Dataset ds;
  ds.input_shape = shape;
  ds.num_classes = num_classes;
  ds.split_tag = "synth";

  // Class-balanced labels within +-1, then shuffled.
  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = i % num_classes;
  for (size_t i = labels.size(); i > 1; --i)
    std::swap(labels[i - 1], labels[rng.next_u64() % i]);

  const double noise = std::max(margin / 8.0, 1e-3);
  if (!image_mode) {
    const int d = shape[0];
    // Centers depend only on the problem (C, d, margin), never the sampling
    // seed, so train/test splits drawn with different seeds share clusters.
    std::uint64_t mbits;
    static_assert(sizeof mbits == sizeof margin);
    std::memcpy(&mbits, &margin, sizeof mbits);
    SplitMix64 center_rng(SplitMix64::mix(
        SplitMix64::mix(static_cast<std::uint64_t>(num_classes), static_cast<std::uint64_t>(d)),
        mbits));
    // Centers kept pairwise >= margin apart (best effort, bounded retries).
    std::vector<std::vector<double>> centers;
    for (int c = 0; c < num_classes; ++c) {
      std::vector<double> best;
      for (int attempt = 0; attempt < 200; ++attempt) {
        std::vector<double> cand(static_cast<size_t>(d));
        for (double& v : cand) v = center_rng.uniform(0.15, 0.85);
        double min_dist = 1e300;
        for (const auto& prev : centers) {
          double s = 0.0;
          for (int i = 0; i < d; ++i) s += (cand[static_cast<size_t>(i)] - prev[static_cast<size_t>(i)]) *
                                           (cand[static_cast<size_t>(i)] - prev[static_cast<size_t>(i)]);
          min_dist = std::min(min_dist, std::sqrt(s));
        }
        if (best.empty() || min_dist >= margin) {
          best = std::move(cand);
          if (min_dist >= margin) break;
        }
      }
      centers.push_back(std::move(best));
    }
    for (int i = 0; i < n; ++i) {
      const auto& c = centers[static_cast<size_t>(labels[static_cast<size_t>(i)])];
      for (int j = 0; j < d; ++j)
        ds.inputs.push_back(std::clamp(c[static_cast<size_t>(j)] + noise * rng.gaussian(), 0.0, 1.0));
    }
  } else {
    // Render a per-class Gaussian bump at a class-specific grid position.
    const int C = shape[0], H = shape[1], W = shape[2];
    std::vector<std::pair<double, double>> centers;
    for (int c = 0; c < num_classes; ++c) {
      // spread centers on a ring
      const double pi = 3.14159265358979323846;
      const double ang = 2.0 * pi * c / num_classes;
      centers.emplace_back(0.5 * H + 0.28 * H * std::sin(ang), 0.5 * W + 0.28 * W * std::cos(ang));
    }
    const double sigma = 0.14 * H;
    for (int i = 0; i < n; ++i) {
      auto [ci, cj] = centers[static_cast<size_t>(labels[static_cast<size_t>(i)])];
      ci += noise * H * rng.gaussian() * 0.5;
      cj += noise * W * rng.gaussian() * 0.5;
      const double amp = 0.75 + 0.2 * rng.uniform();
      for (int ch = 0; ch < C; ++ch)
        for (int pi2 = 0; pi2 < H; ++pi2)
          for (int pj = 0; pj < W; ++pj) {
            const double r2 = (pi2 - ci) * (pi2 - ci) + (pj - cj) * (pj - cj);
            double v = amp * std::exp(-r2 / (2.0 * sigma * sigma));
            v += 0.02 * rng.gaussian();
            ds.inputs.push_back(std::clamp(v, 0.0, 1.0));
          }
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw Error("idx: truncated header in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw Error("idx: cannot open " + images_path);
  if (read_be32(fi, images_path) != 0x00000803u)
    throw Error("idx: bad image magic in " + images_path);
  const std::uint32_t n = read_be32(fi, images_path);
  const std::uint32_t h = read_be32(fi, images_path);
  const std::uint32_t w = read_be32(fi, images_path);
  std::vector<unsigned char> buf(static_cast<size_t>(n) * h * w);
  if (!fi.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw Error("idx: truncated image payload in " + images_path);

  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw Error("idx: cannot open " + labels_path);
  if (read_be32(fl, labels_path) != 0x00000801u)
    throw Error("idx: bad label magic in " + labels_path);
  const std::uint32_t nl = read_be32(fl, labels_path);
  if (nl != n)
    throw Error("idx: image count " + std::to_string(n) + " != label count " + std::to_string(nl));
  std::vector<unsigned char> lab(static_cast<size_t>(nl));
  if (!fl.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(lab.size())))
    throw Error("idx: truncated label payload in " + labels_path);

  Dataset ds;
  ds.input_shape = {1, static_cast<int>(h), static_cast<int>(w)};
  ds.split_tag = "idx";
  ds.inputs.reserve(buf.size());
  for (unsigned char b : buf) ds.inputs.push_back(b / 255.0);
  int max_label = 0;
  for (unsigned char b : lab) {
    ds.labels.push_back(static_cast<int>(b));
    max_label = std::max(max_label, static_cast<int>(b));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

std::pair<Dataset, Dataset> split_labeled(const Dataset& ds, double labeled_fraction,
                                          std::uint64_t seed) {
  std::vector<int> idx(static_cast<size_t>(ds.size()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  SplitMix64 rng(seed);
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_u64() % i]);
  const int nl = static_cast<int>(std::lround(labeled_fraction * ds.size()));
  std::vector<int> li(idx.begin(), idx.begin() + nl);
  std::vector<int> ui(idx.begin() + nl, idx.end());
  Dataset labeled = ds.subset(li);
  labeled.split_tag = "labeled";
  Dataset unlabeled = ds.subset(ui);
  unlabeled.labels.clear();
  unlabeled.split_tag = "unlabeled";
  return {labeled, unlabeled};
}

std::vector<std::vector<int>> batches(const Dataset& ds, int m, std::uint64_t seed, int epoch) {
  if (m < 1) throw Error("batches: batch size must be >= 1");
  std::vector<int> idx(static_cast<size_t>(ds.size()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  SplitMix64 rng(SplitMix64::mix(seed, static_cast<std::uint64_t>(epoch)));
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_u64() % i]);
  std::vector<std::vector<int>> out;
  for (size_t b = 0; b < idx.size(); b += static_cast<size_t>(m)) {
    out.emplace_back(idx.begin() + static_cast<std::int64_t>(b),
                     idx.begin() + static_cast<std::int64_t>(std::min(b + static_cast<size_t>(m), idx.size())));
  }
  return out;
}

}  // namespace awplab
