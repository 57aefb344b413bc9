// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "awplab/rng.hpp"

namespace awplab {

double lr_at(const ScheduleSpec& s, int t, int T) {
  if (t < 1 || t > T) throw Error("lr_at: epoch out of range");
  switch (s.kind) {
    case ScheduleKind::kPiecewise: {
      double lr = s.init_lr;
      for (int m : s.milestones)
        if (t >= m) lr *= s.factor;
      return lr;
    }
    case ScheduleKind::kCosine: {
      const double pi = 3.14159265358979323846;
      return 0.5 * s.init_lr * (std::cos(pi * t / T) + 1.0);
    }
    case ScheduleKind::kCyclic: {
      if (t <= s.peak_epoch) return s.peak_lr * t / s.peak_epoch;
      return s.peak_lr * (T - t) / static_cast<double>(T - s.peak_epoch);
    }
  }
  throw Error("lr_at: unknown schedule");
}

TrainerState TrainerState::init(const Network& net, const TrainConfig& cfg) {
  TrainerState st;
  for (const auto& p : net.params) {
    st.mom_w.push_back(Tensor::zeros(p.weight.shape));
    st.mom_b.push_back(p.has_bias ? Tensor::zeros(p.bias.shape) : Tensor::zeros({1}));
  }
  st.v = PerturbationState::zeros_like(net);
  st.v.gamma = cfg.awp.gamma;
  st.v.steps = cfg.awp.steps;
  st.v.alternations = cfg.awp.alternations;
  st.v.step_size = cfg.awp.step_size;
  st.v.norm_kind = cfg.awp.norm_kind;
  return st;
}

namespace {

AttackLoss attack_loss_for(const LossSpec& loss) {
  const LossKind k = loss.kind == LossKind::kSsl ? loss.ssl_inner : loss.kind;
  return k == LossKind::kTrades ? AttackLoss::kKl : AttackLoss::kCe;
}

}  // namespace

void train_step(Network& net, const Tensor& x, const std::vector<int>& y,
                const TrainConfig& cfg, double lr, TrainerState& state,
                std::uint64_t step_seed, double grad_scale) {
  if (x.shape.empty() || x.shape[0] == 0) throw Error("train_step: empty batch");
  const bool perturbing = cfg.use_awp || cfg.rwp;
  const AttackLoss aloss = attack_loss_for(cfg.loss);

  if (perturbing && !cfg.carry_v) {
    for (Tensor& vl : state.v.v)
      for (double& v : vl.data) v = 0.0;
  }
  if (cfg.rwp) {
    state.v = random_weight_perturbation(net, cfg.awp.gamma, SplitMix64::mix(step_seed, 7),
                                         cfg.awp.norm_kind);
  }

  Tensor x_adv;
  const int A = perturbing && cfg.use_awp ? cfg.awp.alternations : 1;
  for (int a = 0; a < A; ++a) {
    // x' against the currently perturbed model (v = 0 on the first pass)
    if (perturbing) {
      Network pert = perturbed_copy(net, state.v);
      x_adv = pgd(pert, x, y, cfg.threat, aloss, SplitMix64::mix(step_seed, static_cast<std::uint64_t>(a)));
    } else {
      x_adv = pgd(net, x, y, cfg.threat, aloss, SplitMix64::mix(step_seed, static_cast<std::uint64_t>(a)));
    }
    if (cfg.use_awp && !cfg.rwp) {
      state.v = compute_awp(net, x, x_adv, y, cfg.loss, std::move(state.v));
    }
  }

  // Gradient of the batch-mean loss at w+v; commit back at the center.
  Network pert = perturbing ? perturbed_copy(net, state.v) : net;
  LossResult r = combined_loss(pert, cfg.loss, x, x_adv, y);
  if (!std::isfinite(r.value)) throw Error("train_step: non-finite loss");
  LossGrads g = parameter_gradients(r, pert);
  add_weight_penalty_grad(pert, cfg.loss.weight_penalty, cfg.loss.lambda_w, g.weights);

  for (size_t l = 0; l < net.params.size(); ++l) {
    Tensor& w = net.params[l].weight;
    Tensor& mw = state.mom_w[l];
    const Tensor& wp = pert.params[l].weight;
    for (size_t i = 0; i < w.data.size(); ++i) {
      const double grad = grad_scale * g.weights[l].data[i] + cfg.weight_decay * wp.data[i];
      mw.data[i] = cfg.momentum * mw.data[i] + grad;
      w.data[i] -= lr * mw.data[i];
    }
    if (net.params[l].has_bias) {
      Tensor& b = net.params[l].bias;
      Tensor& mb = state.mom_b[l];
      for (size_t i = 0; i < b.data.size(); ++i) {
        const double grad = grad_scale * g.biases[l].data[i] + cfg.weight_decay * b.data[i];
        mb.data[i] = cfg.momentum * mb.data[i] + grad;
        b.data[i] -= lr * mb.data[i];
      }
    }
  }
}

EvalResult evaluate(const Network& net, const Dataset& ds, const ThreatModel& attack,
                    std::uint64_t seed) {
  if (ds.labels.empty()) throw Error("evaluate: dataset must be labeled");
  const int n = ds.size();
  const int m = 128;
  int correct_nat = 0, correct_adv = 0;
  double loss_sum = 0.0;
  std::vector<int> idx;
  int bi = 0;
  for (int b = 0; b < n; b += m, ++bi) {
    idx.clear();
    for (int i = b; i < std::min(b + m, n); ++i) idx.push_back(i);
    Tensor x = ds.batch_inputs(idx);
    std::vector<int> y = ds.batch_labels(idx);

    Tensor logits_nat = net.forward(x);
    Tensor x_adv = attack.epsilon > 0.0
                       ? pgd(net, x, y, attack, AttackLoss::kCe, SplitMix64::mix(seed, static_cast<std::uint64_t>(bi)))
                       : x;
    LossResult r = at_loss(net, x_adv, y);
    loss_sum += r.value * static_cast<double>(idx.size());
    const Tensor& logits_adv = r.tape.value(r.adv.logits);

    const int C = net.num_classes;
    for (size_t i = 0; i < idx.size(); ++i) {
      auto argmax = [&](const Tensor& t) {
        int best = 0;
        for (int c = 1; c < C; ++c)
          if (t.data[i * static_cast<size_t>(C) + static_cast<size_t>(c)] >
              t.data[i * static_cast<size_t>(C) + static_cast<size_t>(best)])
            best = c;
        return best;
      };
      if (argmax(logits_nat) == y[i]) ++correct_nat;
      if (argmax(logits_adv) == y[i]) ++correct_adv;
    }
  }
  EvalResult res;
  res.nat_acc_pct = 100.0 * correct_nat / n;
  res.robustness_pct = 100.0 * correct_adv / n;
  res.adv_loss = loss_sum / n;
  return res;
}

std::vector<int> pseudo_label(const Network& natural_net, const Tensor& batch) {
  Tensor logits = natural_net.forward(batch);
  const int n = logits.shape[0], C = logits.shape[1];
  std::vector<int> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (logits.data[static_cast<size_t>(i) * C + c] > logits.data[static_cast<size_t>(i) * C + best])
        best = c;  // strict: ties keep the lowest index
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

RunMetrics train(Network& net, const Dataset& train_ds, const Dataset& test_ds,
                 const TrainConfig& cfg, const Dataset* unlabeled,
                 const EpochCallback& on_epoch) {
  TrainerState state = TrainerState::init(net, cfg);
  RunMetrics rm;
  BestTracker tracker;

  Dataset train_eval = cfg.eval_subset > 0 && cfg.eval_subset < train_ds.size()
                           ? train_ds.sample(cfg.eval_subset, SplitMix64::mix(cfg.seed, 101))
                           : train_ds;
  Dataset test_eval = cfg.eval_subset > 0 && cfg.eval_subset < test_ds.size()
                          ? test_ds.sample(cfg.eval_subset, SplitMix64::mix(cfg.seed, 102))
                          : test_ds;

  for (int t = 1; t <= cfg.epochs; ++t) {
    const double lr = lr_at(cfg.schedule, t, cfg.epochs);
    auto bs = batches(train_ds, cfg.batch_size, cfg.seed, t);
    for (size_t b = 0; b < bs.size(); ++b) {
      Tensor x = train_ds.batch_inputs(bs[b]);
      std::vector<int> y = train_ds.batch_labels(bs[b]);
      const std::uint64_t step_seed =
          SplitMix64::mix(cfg.seed, static_cast<std::uint64_t>(t) * 1000003ULL + b);
      try {
        train_step(net, x, y, cfg, lr, state, step_seed);
      } catch (const Error& e) {
        throw Error("epoch " + std::to_string(t) + " batch " + std::to_string(b) + ": " + e.what());
      }
    }
    if (unlabeled && unlabeled->size() > 0) {
      auto ubs = batches(*unlabeled, cfg.batch_size, SplitMix64::mix(cfg.seed, 77), t);
      for (size_t b = 0; b < ubs.size(); ++b) {
        Tensor x = unlabeled->batch_inputs(ubs[b]);
        std::vector<int> y = unlabeled->batch_labels(ubs[b]);
        const std::uint64_t step_seed =
            SplitMix64::mix(cfg.seed, 500009ULL + static_cast<std::uint64_t>(t) * 1000003ULL + b);
        train_step(net, x, y, cfg, lr, state, step_seed, cfg.loss.lambda);
      }
    }

    EvalResult tr = evaluate(net, train_eval, cfg.eval_attack, SplitMix64::mix(cfg.seed, 200 + static_cast<std::uint64_t>(t)));
    EvalResult te = evaluate(net, test_eval, cfg.eval_attack, SplitMix64::mix(cfg.seed, 900 + static_cast<std::uint64_t>(t)));
    EpochMetrics em;
    em.epoch = t;
    em.lr = lr;
    em.train_rob = tr.robustness_pct;
    em.test_rob = te.robustness_pct;
    em.nat_acc = te.nat_acc_pct;
    em.gap = em.train_rob - em.test_rob;
    em.adv_loss = te.adv_loss;
    rm.epochs.push_back(em);
    tracker.update(t, em.test_rob);
    if (on_epoch) on_epoch(em, net);
  }
  rm.best_epoch = tracker.best_epoch();
  return rm;
}

std::string metrics_csv(const RunMetrics& m) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,lr,train_rob,test_rob,nat_acc,gap,adv_loss\n";
  for (const EpochMetrics& e : m.epochs) {
    os << e.epoch << ',' << e.lr << ',' << e.train_rob << ',' << e.test_rob << ','
       << e.nat_acc << ',' << e.gap << ',' << e.adv_loss << '\n';
  }
  return os.str();
}

}  // namespace awplab
