// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awplab/tensor.hpp"

namespace awplab {

/// Immutable labeled (or unlabeled) dataset; inputs live in [0,1].
struct Dataset {
  std::vector<int> input_shape;  // per example
  std::vector<double> inputs;    // n * prod(input_shape), row-major
  std::vector<int> labels;       // empty when unlabeled
  int num_classes = 0;
  std::string split_tag;

  int size() const;
  std::int64_t example_numel() const { return Tensor::numel_of(input_shape); }

  /// Batch tensor for example indices [begin, end).
  Tensor batch_inputs(const std::vector<int>& idx) const;
  std::vector<int> batch_labels(const std::vector<int>& idx) const;

  Dataset subset(const std::vector<int>& idx) const;
  /// First max(n) examples of a seeded shuffle; stable eval subsets.
  Dataset sample(int n, std::uint64_t seed) const;
};

/// C Gaussian clusters in [0,1]^d (or rendered onto a 1xHxW grid when
/// image_shape is given), class-balanced within +-1.
Dataset synth_blobs(int n, int num_classes, const std::vector<int>& shape, double margin,
                    std::uint64_t seed);

/// IDX (MNIST-format) ingestion: big-endian magic, dims, unsigned bytes / 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Deterministic labeled/unlabeled split: first fraction keeps labels.
std::pair<Dataset, Dataset> split_labeled(const Dataset& ds, double labeled_fraction,
                                          std::uint64_t seed);

/// Per-epoch Fisher-Yates shuffle keyed by (seed, epoch); last partial batch kept.
std::vector<std::vector<int>> batches(const Dataset& ds, int m, std::uint64_t seed, int epoch);

}  // namespace awplab
