// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "awplab/attacks.hpp"
#include "awplab/awp.hpp"
#include "awplab/data.hpp"
#include "awplab/losses.hpp"
#include "awplab/network.hpp"

namespace awplab {

enum class ScheduleKind { kPiecewise, kCosine, kCyclic };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kPiecewise;
  double init_lr = 0.1;
  std::vector<int> milestones = {100, 150};  // piecewise
  double factor = 0.1;
  int peak_epoch = 80;   // cyclic
  double peak_lr = 0.2;  // cyclic
};

/// Learning rate at epoch t (1-based) of a T-epoch run.
double lr_at(const ScheduleSpec& s, int t, int T);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 128;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  ScheduleSpec schedule;
  ThreatModel threat;        // training attack (PGD-10 default)
  ThreatModel eval_attack;   // evaluation attack (PGD-20 default)
  LossSpec loss;
  bool use_awp = false;
  PerturbationState awp;     // gamma/steps/alternations/norm template
  bool rwp = false;          // random instead of adversarial weight perturbation
  bool carry_v = false;      // persist v across minibatches instead of re-deriving
  std::uint64_t seed = 1;
  int eval_subset = 0;       // 0 = full set

  TrainConfig() {
    threat.steps = 10;
    eval_attack.steps = 20;
  }
};

struct EvalResult {
  double robustness_pct = 0.0;
  double nat_acc_pct = 0.0;
  double adv_loss = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_rob = 0.0;
  double test_rob = 0.0;
  double nat_acc = 0.0;
  double gap = 0.0;  // train_rob - test_rob, exactly
  double adv_loss = 0.0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;  // 1-based
};

/// argmax of test robustness, ties broken by the earlier epoch.
class BestTracker {
 public:
  void update(int epoch, double test_rob) {
    if (best_epoch_ == 0 || test_rob > best_rob_) {
      best_epoch_ = epoch;
      best_rob_ = test_rob;
    }
  }
  int best_epoch() const { return best_epoch_; }
  double best_rob() const { return best_rob_; }

 private:
  int best_epoch_ = 0;
  double best_rob_ = 0.0;
};

struct TrainerState {
  std::vector<Tensor> mom_w;
  std::vector<Tensor> mom_b;
  PerturbationState v;

  static TrainerState init(const Network& net, const TrainConfig& cfg);
};

/// One minibatch step of the double-perturbation loop: alternate x'
/// generation against f_{w+v} and v updates, then one SGD commit at the
/// center. `grad_scale` weights this batch's gradient (1 for labeled data,
/// lambda for pseudo-labeled batches).
void train_step(Network& net, const Tensor& x, const std::vector<int>& y,
                const TrainConfig& cfg, double lr, TrainerState& state,
                std::uint64_t step_seed, double grad_scale = 1.0);

/// Robustness under the attack plus natural accuracy and mean adversarial CE.
/// Adversarial examples are regenerated; per-batch seeds derive from `seed`.
EvalResult evaluate(const Network& net, const Dataset& ds, const ThreatModel& attack,
                    std::uint64_t seed);

/// argmax class per example, ties broken by lowest class index.
std::vector<int> pseudo_label(const Network& natural_net, const Tensor& batch);

using EpochCallback = std::function<void(const EpochMetrics&, const Network&)>;

/// Full training run; `unlabeled` (already pseudo-labeled) batches contribute
/// with gradient weight loss.lambda per the semi-supervised objective.
RunMetrics train(Network& net, const Dataset& train_ds, const Dataset& test_ds,
                 const TrainConfig& cfg, const Dataset* unlabeled = nullptr,
                 const EpochCallback& on_epoch = {});

std::string metrics_csv(const RunMetrics& m);

}  // namespace awplab
