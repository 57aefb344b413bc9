// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "awplab/landscape.hpp"
#include "awplab/network.hpp"
#include "awplab/rng.hpp"

using namespace awplab;

namespace {

Tensor random_batch(const std::vector<int>& input_shape, int n, std::uint64_t seed) {
  std::vector<int> shape{n};
  for (int d : input_shape) shape.push_back(d);
  Tensor x = Tensor::zeros(shape);
  SplitMix64 rng(seed);
  for (double& v : x.data) v = rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("build_model is deterministic per seed") {
  auto spec = std::vector<LayerSpec>{LayerSpec::dense(2, 2)};
  Network a = build_model(spec, {2}, 2, 123);
  Network b = build_model(spec, {2}, 2, 123);
  CHECK(a.params[0].weight.data == b.params[0].weight.data);
  Network c = build_model(spec, {2}, 2, 124);
  CHECK(a.params[0].weight.data != c.params[0].weight.data);
}

TEST_CASE("inconsistent spec names the offending pair") {
  auto spec = std::vector<LayerSpec>{LayerSpec::dense(2, 3), LayerSpec::dense(4, 2)};
  CHECK_THROWS_WITH_AS(build_model(spec, {2}, 2, 1), doctest::Contains("layer 1"), Error);
}

TEST_CASE("conv2d with pad 1 preserves 8x8 spatial size") {
  auto spec = std::vector<LayerSpec>{LayerSpec::conv2d(1, 4, 3, 1), LayerSpec::flatten(),
                                     LayerSpec::dense(4 * 8 * 8, 3)};
  Network net = build_model(spec, {1, 8, 8}, 3, 5);
  Tensor out = net.forward(random_batch({1, 8, 8}, 2, 9));
  CHECK(out.shape == std::vector<int>{2, 3});
}

TEST_CASE("layer_norms") {
  Network net = build_model({LayerSpec::dense(2, 2, false)}, {2}, 2, 1);
  SUBCASE("frobenius 3-4-5") {
    net.params[0].weight = Tensor({2, 2}, {3.0, 4.0, 0.0, 0.0});
    CHECK(layer_norms(net, Granularity::kLayer, NormKind::kFrobenius)[0] == doctest::Approx(5.0));
  }
  SUBCASE("zero layer has zero norm") {
    net.params[0].weight = Tensor::zeros({2, 2});
    CHECK(layer_norms(net, Granularity::kLayer, NormKind::kFrobenius)[0] == 0.0);
  }
  SUBCASE("l1") {
    net.params[0].weight = Tensor({2, 2}, {1.0, -2.0, 3.0, 0.0});
    CHECK(layer_norms(net, Granularity::kLayer, NormKind::kL1)[0] == doctest::Approx(6.0));
  }
}

TEST_CASE("per-filter norms aggregate to the layer norm") {
  Network net = build_model(
      {LayerSpec::conv2d(2, 4, 3, 1), LayerSpec::flatten(), LayerSpec::dense(4 * 6 * 6, 2)},
      {2, 6, 6}, 2, 77);
  auto layer = layer_norms(net, Granularity::kLayer, NormKind::kFrobenius);
  auto filt = layer_norms(net, Granularity::kFilter, NormKind::kFrobenius);
  // first 4 filter entries belong to the conv layer
  double s = 0.0;
  for (int j = 0; j < 4; ++j) s += filt[static_cast<size_t>(j)] * filt[static_cast<size_t>(j)];
  CHECK(std::sqrt(s) == doctest::Approx(layer[0]).epsilon(1e-12));
}

TEST_CASE("rescale_pair") {
  auto spec = std::vector<LayerSpec>{LayerSpec::dense(4, 8, false), LayerSpec::relu(),
                                     LayerSpec::dense(8, 3, false)};
  Network net = build_model(spec, {4}, 3, 11);

  SUBCASE("c = 1 is the identity") {
    Network r = rescale_pair(net, 0, 1.0);
    CHECK(r.params[0].weight.data == net.params[0].weight.data);
    CHECK(r.params[1].weight.data == net.params[1].weight.data);
  }
  SUBCASE("c <= 0 rejected") {
    CHECK_THROWS_AS(rescale_pair(net, 0, 0.0), Error);
    CHECK_THROWS_AS(rescale_pair(net, 0, -2.0), Error);
  }
  SUBCASE("function preserved for c in {0.1, 1, 10} over 100 random inputs") {
    for (double c : {0.1, 1.0, 10.0}) {
      Network r = rescale_pair(net, 0, c);
      Tensor x = random_batch({4}, 100, 21);
      Tensor y0 = net.forward(x);
      Tensor y1 = r.forward(x);
      for (size_t i = 0; i < y0.data.size(); ++i)
        CHECK(std::fabs(y0.data[i] - y1.data[i]) < 1e-9);
    }
  }
  SUBCASE("invalid layer pair rejected") {
    CHECK_THROWS_AS(rescale_pair(net, 1, 2.0), Error);  // no following layer
  }
}

TEST_CASE("filter-normalization covariance under rescale_pair") {
  // a direction normalized against the rescaled net has filter norms scaled by c
  auto spec = std::vector<LayerSpec>{LayerSpec::dense(4, 8, false), LayerSpec::relu(),
                                     LayerSpec::dense(8, 3, false)};
  Network net = build_model(spec, {4}, 3, 13);
  const double c = 3.0;
  Network scaled = rescale_pair(net, 0, c);
  Direction d0 = sample_direction(net, 555);
  Direction d1 = sample_direction(scaled, 555);
  // layer 0 filters scale by c
  for (int j = 0; j < 8; ++j) {
    auto [b, e] = net.filter_span(0, j);
    double n0 = 0.0, n1 = 0.0;
    for (auto i = b; i < e; ++i) {
      n0 += d0.d[0].data[static_cast<size_t>(i)] * d0.d[0].data[static_cast<size_t>(i)];
      n1 += d1.d[0].data[static_cast<size_t>(i)] * d1.d[0].data[static_cast<size_t>(i)];
    }
    CHECK(std::sqrt(n1) == doctest::Approx(c * std::sqrt(n0)).epsilon(1e-12));
  }
}

TEST_CASE("weight_histogram") {
  Network net = build_model({LayerSpec::dense(2, 2, false)}, {2}, 2, 1);
  SUBCASE("all-equal weights land in one bin") {
    net.params[0].weight = Tensor::full({2, 2}, 0.7);
    Histogram h = weight_histogram(net, 0, 4);
    std::int64_t total = 0, nonzero_bins = 0;
    for (auto c : h.counts) {
      total += c;
      if (c) ++nonzero_bins;
    }
    CHECK(total == 4);
    CHECK(nonzero_bins == 1);
  }
  SUBCASE("{-1,1} into 2 bins") {
    net.params[0].weight = Tensor({2, 2}, {-1.0, 1.0, -1.0, 1.0});
    Histogram h = weight_histogram(net, 0, 2);
    CHECK(h.counts == std::vector<std::int64_t>{2, 2});
  }
  SUBCASE("counts sum to layer parameter count") {
    Network big = build_model({LayerSpec::dense(10, 7, false)}, {10}, 7, 3);
    Histogram h = weight_histogram(big, 0, 13);
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == 70);
    CHECK(h.counts.size() == 13);
  }
  SUBCASE("bad layer index") { CHECK_THROWS_AS(weight_histogram(net, 5, 4), Error); }
}

TEST_CASE("preset architectures build") {
  Network mlp = build_model(preset_spec("mlp-small", {16}, 3), {16}, 3, 1);
  CHECK(mlp.params.size() == 2);
  Network cnn = build_model(preset_spec("cnn-small", {1, 8, 8}, 4), {1, 8, 8}, 4, 1);
  CHECK(cnn.params.size() == 3);
  CHECK_THROWS_AS(preset_spec("resnet-1000", {1, 8, 8}, 4), Error);
}
