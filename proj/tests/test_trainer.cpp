// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "awplab/data.hpp"
#include "awplab/trainer.hpp"

using namespace awplab;

TEST_CASE("lr_at piecewise: /10 at milestones 100 and 150") {
  ScheduleSpec s;  // piecewise(0.1, {100,150}, 0.1)
  CHECK(lr_at(s, 1, 200) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(lr_at(s, 100, 200) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(lr_at(s, 120, 200) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(lr_at(s, 150, 200) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(lr_at(s, 99, 200) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("lr_at cosine: 0.05 (cos(pi t / T) + 1) for init 0.1") {
  ScheduleSpec s;
  s.kind = ScheduleKind::kCosine;
  s.init_lr = 0.1;
  const int T = 200;
  CHECK(lr_at(s, T, T) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(lr_at(s, 100, T) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(lr_at(s, 50, T) ==
        doctest::Approx(0.05 * (std::cos(M_PI * 50.0 / 200.0) + 1.0)).epsilon(1e-12));
}

TEST_CASE("lr_at cyclic: linear to 0.2 at epoch 80, then linear to 0") {
  ScheduleSpec s;
  s.kind = ScheduleKind::kCyclic;
  s.peak_epoch = 80;
  s.peak_lr = 0.2;
  const int T = 200;
  CHECK(lr_at(s, 40, T) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lr_at(s, 80, T) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(lr_at(s, 140, T) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lr_at(s, 200, T) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("train_step scalar hand trace: w_next = w - lr * g") {
  Network net = build_model({LayerSpec::dense(1, 2, false)}, {1}, 2, 1);
  net.params[0].weight.data = {0.3, -0.2};
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  cfg.threat.epsilon = 0.0;  // x' = x, removes attack randomness
  TrainerState st = TrainerState::init(net, cfg);

  Tensor x{{1, 1}, {1.0}};
  const double z0 = 0.3, z1 = -0.2;
  const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
  const double lr = 0.05;
  train_step(net, x, {0}, cfg, lr, st, 123);
  CHECK(net.params[0].weight.data[0] == doctest::Approx(0.3 - lr * (p0 - 1.0)).epsilon(1e-12));
  CHECK(net.params[0].weight.data[1] == doctest::Approx(-0.2 - lr * (1.0 - p0)).epsilon(1e-12));
}

TEST_CASE("train_step momentum and weight decay bookkeeping") {
  // two identical steps; check v_t = mu v_{t-1} + (g + wd*w) unrolled by hand
  Network net = build_model({LayerSpec::dense(1, 2, false)}, {1}, 2, 1);
  net.params[0].weight.data = {0.5, 0.0};
  TrainConfig cfg;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.01;
  cfg.threat.epsilon = 0.0;
  TrainerState st = TrainerState::init(net, cfg);
  Tensor x{{1, 1}, {1.0}};
  const double lr = 0.1;

  auto grad0 = [](double w0, double w1) {
    const double p0 = std::exp(w0) / (std::exp(w0) + std::exp(w1));
    return p0 - 1.0;  // y = 0, x = 1
  };
  double w0 = 0.5, w1 = 0.0, m0 = 0.0, m1 = 0.0;
  for (int s = 0; s < 2; ++s) {
    const double p0 = std::exp(w0) / (std::exp(w0) + std::exp(w1));
    const double g0 = (p0 - 1.0) + 0.01 * w0;
    const double g1 = (1.0 - p0) + 0.01 * w1;
    m0 = 0.9 * m0 + g0;
    m1 = 0.9 * m1 + g1;
    w0 -= lr * m0;
    w1 -= lr * m1;
    (void)grad0;
    train_step(net, x, {0}, cfg, lr, st, 5);
  }
  CHECK(net.params[0].weight.data[0] == doctest::Approx(w0).epsilon(1e-12));
  CHECK(net.params[0].weight.data[1] == doctest::Approx(w1).epsilon(1e-12));
}

TEST_CASE("train_step leaves no v residue in w (gamma 0 equivalence)") {
  Dataset ds = synth_blobs(32, 3, {5}, 0.3, 2);
  std::vector<int> idx(32);
  for (int i = 0; i < 32; ++i) idx[static_cast<size_t>(i)] = i;
  Tensor x = ds.batch_inputs(idx);
  std::vector<int> y = ds.batch_labels(idx);

  Network a = build_model(preset_spec("mlp-small", {5}, 3), {5}, 3, 7);
  Network b = a;
  TrainConfig plain;
  plain.threat.epsilon = 0.03;
  plain.threat.step_size = 0.01;
  plain.threat.steps = 5;
  TrainConfig awp = plain;
  awp.use_awp = true;
  awp.awp.gamma = 0.0;
  TrainerState sa = TrainerState::init(a, plain);
  TrainerState sb = TrainerState::init(b, awp);
  for (int s = 0; s < 4; ++s) {
    train_step(a, x, y, plain, 0.1, sa, 400 + static_cast<std::uint64_t>(s));
    train_step(b, x, y, awp, 0.1, sb, 400 + static_cast<std::uint64_t>(s));
  }
  for (size_t l = 0; l < a.params.size(); ++l)
    CHECK(a.params[l].weight.data == b.params[l].weight.data);
}

TEST_CASE("evaluate: eps 0 collapses robustness onto natural accuracy") {
  Dataset ds = synth_blobs(128, 4, {6}, 0.35, 13);
  Network net = build_model(preset_spec("mlp-small", {6}, 4), {6}, 4, 3);
  ThreatModel none;
  none.epsilon = 0.0;
  EvalResult r = evaluate(net, ds, none, 9);
  CHECK(r.robustness_pct == r.nat_acc_pct);

  ThreatModel tm;
  tm.epsilon = 0.05;
  tm.step_size = 0.0125;
  tm.steps = 10;
  EvalResult s = evaluate(net, ds, tm, 9);
  CHECK(s.robustness_pct <= s.nat_acc_pct);
  CHECK(s.robustness_pct >= 0.0);
  CHECK(s.nat_acc_pct <= 100.0);
}

TEST_CASE("evaluate on an untrained balanced problem sits near chance") {
  Dataset ds = synth_blobs(1000, 4, {6}, 0.35, 29);
  Network net = build_model(preset_spec("mlp-small", {6}, 4), {6}, 4, 31);
  ThreatModel none;
  none.epsilon = 0.0;
  EvalResult r = evaluate(net, ds, none, 1);
  CHECK(r.nat_acc_pct > 5.0);
  CHECK(r.nat_acc_pct < 60.0);
}

TEST_CASE("best tracker rules") {
  BestTracker t;
  t.update(1, 50.0);
  t.update(2, 55.0);
  t.update(3, 52.0);
  CHECK(t.best_epoch() == 2);
  BestTracker tie;
  tie.update(1, 55.0);
  tie.update(2, 55.0);
  CHECK(tie.best_epoch() == 1);
  BestTracker mono;
  mono.update(1, 10.0);
  mono.update(2, 20.0);
  mono.update(3, 30.0);
  CHECK(mono.best_epoch() == 3);
}

TEST_CASE("pseudo_label rules") {
  Network net = build_model({LayerSpec::dense(1, 3, false)}, {1}, 3, 1);
  SUBCASE("uniform output -> class 0") {
    net.params[0].weight.data = {0.0, 0.0, 0.0};
    Tensor x{{1, 1}, {1.0}};
    CHECK(pseudo_label(net, x) == std::vector<int>{0});
  }
  SUBCASE("dominant logit wins; labels in range") {
    net.params[0].weight.data = {-1.0, 3.0, 0.5};
    Tensor x{{2, 1}, {1.0, 0.5}};
    auto labs = pseudo_label(net, x);
    REQUIRE(labs.size() == 2);
    CHECK(labs[0] == 1);
    for (int l : labs) {
      CHECK(l >= 0);
      CHECK(l < 3);
    }
  }
}

TEST_CASE("train: determinism, gap bookkeeping, metrics csv") {
  Dataset tr = synth_blobs(96, 3, {5}, 0.35, 41);
  Dataset te = synth_blobs(48, 3, {5}, 0.35, 42);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.threat.epsilon = 0.03;
  cfg.threat.step_size = 0.0125;
  cfg.threat.steps = 3;
  cfg.eval_attack = cfg.threat;
  cfg.seed = 5;

  Network n1 = build_model(preset_spec("mlp-small", {5}, 3), {5}, 3, 5);
  Network n2 = n1;
  RunMetrics m1 = train(n1, tr, te, cfg);
  RunMetrics m2 = train(n2, tr, te, cfg);
  REQUIRE(m1.epochs.size() == 2);
  for (size_t e = 0; e < m1.epochs.size(); ++e) {
    CHECK(m1.epochs[e].test_rob == m2.epochs[e].test_rob);
    CHECK(m1.epochs[e].train_rob == m2.epochs[e].train_rob);
    CHECK(m1.epochs[e].gap == m1.epochs[e].train_rob - m1.epochs[e].test_rob);
    CHECK(m1.epochs[e].train_rob >= 0.0);
    CHECK(m1.epochs[e].train_rob <= 100.0);
  }
  for (size_t l = 0; l < n1.params.size(); ++l)
    CHECK(n1.params[l].weight.data == n2.params[l].weight.data);

  const std::string csv = metrics_csv(m1);
  CHECK(csv.rfind("epoch,lr,train_rob,test_rob,nat_acc,gap,adv_loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("training actually learns the separable synthetic problem") {
  Dataset tr = synth_blobs(240, 3, {5}, 0.4, 51);
  Dataset te = synth_blobs(120, 3, {5}, 0.4, 52);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 32;
  cfg.schedule.init_lr = 0.1;
  cfg.schedule.milestones = {6};
  cfg.threat.epsilon = 0.02;
  cfg.threat.step_size = 0.01;
  cfg.threat.steps = 3;
  cfg.eval_attack = cfg.threat;
  cfg.eval_attack.steps = 5;
  cfg.seed = 3;
  Network net = build_model(preset_spec("mlp-small", {5}, 3), {5}, 3, 11);
  RunMetrics m = train(net, tr, te, cfg);
  CHECK(m.epochs.back().nat_acc > 80.0);
  CHECK(m.best_epoch >= 1);
  CHECK(m.best_epoch <= 8);
}
