// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "awplab/attacks.hpp"
#include "awplab/data.hpp"
#include "awplab/losses.hpp"
#include "awplab/network.hpp"

using namespace awplab;

namespace {

// Binary logistic model as a 2-class softmax: logits = [w*x, 0], so
// p(y=0) = sigmoid(w*x) and CE(y=0) = -log sigmoid(w*x).
Network logistic_net(double w) {
  Network net = build_model({LayerSpec::dense(1, 2, /*bias=*/false)}, {1}, 2, 1);
  net.params[0].weight.data = {w, 0.0};
  return net;
}

double mean_ce(const Network& net, const Tensor& x, const std::vector<int>& y) {
  LossResult r = at_loss(net, x, y);
  return r.value;
}

}  // namespace

TEST_CASE("project_ball clamp and rescale") {
  ThreatModel tm;
  tm.epsilon = 0.1;
  Tensor x{{1, 2}, {0.0, 0.0}};
  Tensor xp{{1, 2}, {0.3, -0.05}};
  SUBCASE("linf coordinate clamp") {
    Tensor out = project_ball(xp, x, tm);
    CHECK(out.data[0] == 0.1);
    CHECK(out.data[1] == -0.05);
  }
  SUBCASE("l2 3-4-5 rescale") {
    tm.p = NormP::kL2;
    tm.epsilon = 1.0;
    Tensor z{{1, 2}, {3.0, 4.0}};
    Tensor out = project_ball(z, x, tm);
    CHECK(out.data[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out.data[1] == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("feasible point unchanged") {
    Tensor z{{1, 2}, {0.05, -0.1}};
    Tensor out = project_ball(z, x, tm);
    CHECK(out.data == z.data);
  }
  SUBCASE("idempotence, bitwise") {
    for (NormP p : {NormP::kLinf, NormP::kL2}) {
      tm.p = p;
      tm.epsilon = 0.07;
      Tensor z{{1, 2}, {0.31, -0.275}};
      Tensor once = project_ball(z, x, tm);
      Tensor twice = project_ball(once, x, tm);
      CHECK(once.data == twice.data);
    }
  }
}

TEST_CASE("fgsm logistic hand trace: x' = 0.4") {
  Network net = logistic_net(2.0);
  ThreatModel tm;
  tm.epsilon = 0.1;
  Tensor x{{1, 1}, {0.5}};
  Tensor xp = fgsm(net, x, {0}, tm);
  // gradient of -log sigmoid(2x) wrt x is negative -> step down by epsilon
  CHECK(xp.data[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("fgsm with epsilon 0 is identity") {
  Network net = logistic_net(2.0);
  ThreatModel tm;
  tm.epsilon = 0.0;
  Tensor x{{1, 1}, {0.5}};
  CHECK(fgsm(net, x, {0}, tm).data == x.data);
}

TEST_CASE("fgsm rejects non-linf threat model") {
  Network net = logistic_net(2.0);
  ThreatModel tm;
  tm.p = NormP::kL2;
  Tensor x{{1, 1}, {0.5}};
  CHECK_THROWS_AS(fgsm(net, x, {0}, tm), Error);
}

TEST_CASE("pgd logistic hand trace: 0.5 -> 0.43 -> clamp(0.36) = 0.40") {
  Network net = logistic_net(2.0);
  ThreatModel tm;
  tm.epsilon = 0.1;
  tm.step_size = 0.07;
  tm.steps = 2;
  tm.random_start = false;
  Tensor x{{1, 1}, {0.5}};
  Tensor xp = pgd(net, x, {0}, tm, AttackLoss::kCe, 0);
  CHECK(xp.data[0] == doctest::Approx(0.40).epsilon(1e-15));
}

TEST_CASE("pgd(K1=1, eta1=eps, no random start) collapses to fgsm bitwise") {
  Dataset ds = synth_blobs(16, 3, {5}, 0.3, 11);
  Network net = build_model(preset_spec("mlp-small", {5}, 3), {5}, 3, 4);
  ThreatModel tm;
  tm.epsilon = 0.05;
  tm.step_size = 0.05;
  tm.steps = 1;
  tm.random_start = false;
  std::vector<int> idx(16);
  for (int i = 0; i < 16; ++i) idx[static_cast<size_t>(i)] = i;
  Tensor x = ds.batch_inputs(idx);
  std::vector<int> y = ds.batch_labels(idx);
  Tensor a = fgsm(net, x, y, tm);
  Tensor b = pgd(net, x, y, tm, AttackLoss::kCe, 123);
  CHECK(a.data == b.data);
}

TEST_CASE("pgd with epsilon 0 is bitwise identity regardless of K1") {
  Dataset ds = synth_blobs(8, 2, {4}, 0.3, 3);
  Network net = build_model(preset_spec("mlp-small", {4}, 2), {4}, 2, 9);
  ThreatModel tm;
  tm.epsilon = 0.0;
  tm.steps = 5;
  std::vector<int> idx{0, 1, 2, 3, 4, 5, 6, 7};
  Tensor x = ds.batch_inputs(idx);
  Tensor out = pgd(net, x, ds.batch_labels(idx), tm, AttackLoss::kCe, 7);
  CHECK(out.data == x.data);
}

TEST_CASE("pgd feasibility and seed determinism, both norms") {
  Dataset ds = synth_blobs(32, 3, {6}, 0.3, 21);
  Network net = build_model(preset_spec("mlp-small", {6}, 3), {6}, 3, 2);
  std::vector<int> idx(32);
  for (int i = 0; i < 32; ++i) idx[static_cast<size_t>(i)] = i;
  Tensor x = ds.batch_inputs(idx);
  std::vector<int> y = ds.batch_labels(idx);
  for (NormP p : {NormP::kLinf, NormP::kL2}) {
    ThreatModel tm;
    tm.p = p;
    tm.epsilon = 0.08;
    tm.step_size = 0.02;
    tm.steps = 7;
    Tensor a = pgd(net, x, y, tm, AttackLoss::kCe, 5);
    Tensor b = pgd(net, x, y, tm, AttackLoss::kCe, 5);
    CHECK(a.data == b.data);
    Tensor c = pgd(net, x, y, tm, AttackLoss::kCe, 6);
    CHECK(a.data != c.data);
    const std::int64_t d = x.numel() / 32;
    for (int i = 0; i < 32; ++i) {
      double linf = 0.0, l2 = 0.0;
      for (std::int64_t j = 0; j < d; ++j) {
        const double diff = a.data[static_cast<size_t>(i * d + j)] - x.data[static_cast<size_t>(i * d + j)];
        linf = std::max(linf, std::abs(diff));
        l2 += diff * diff;
        CHECK(a.data[static_cast<size_t>(i * d + j)] >= 0.0);
        CHECK(a.data[static_cast<size_t>(i * d + j)] <= 1.0);
      }
      const double tol = tm.epsilon * (1.0 + 1e-12);
      if (p == NormP::kLinf)
        CHECK(linf <= tol);
      else
        CHECK(std::sqrt(l2) <= tol);
    }
  }
}

TEST_CASE("monotone menace: pgd >= fgsm >= clean - 1e-9 in mean loss") {
  Dataset ds = synth_blobs(64, 3, {6}, 0.4, 31);
  Network net = build_model(preset_spec("mlp-small", {6}, 3), {6}, 3, 13);
  std::vector<int> idx(64);
  for (int i = 0; i < 64; ++i) idx[static_cast<size_t>(i)] = i;
  Tensor x = ds.batch_inputs(idx);
  std::vector<int> y = ds.batch_labels(idx);
  ThreatModel tm;
  tm.epsilon = 0.06;
  tm.step_size = 0.015;
  tm.steps = 10;
  const double clean = mean_ce(net, x, y);
  ThreatModel tf = tm;
  const double lf = mean_ce(net, fgsm(net, x, y, tf), y);
  const double lp = mean_ce(net, pgd(net, x, y, tm, AttackLoss::kCe, 17), y);
  CHECK(lf >= clean - 1e-9);
  CHECK(lp >= lf - 1e-9);
}
