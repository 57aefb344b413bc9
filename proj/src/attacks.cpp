// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "awplab/rng.hpp"

namespace awplab {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void clamp01(Tensor& x) {
  for (double& v : x.data) v = std::clamp(v, 0.0, 1.0);
}

/// Gradient of the summed per-example attack loss with respect to the input.
/// For the KL criterion, nat_probs holds the frozen softmax(f(x)).
Tensor input_gradient(const Network& net, const Tensor& x_cur, const std::vector<int>& y,
                      AttackLoss loss, const Tensor* nat_probs) {
  Tape t;
  auto tf = net.forward_taped(t, x_cur, /*input_grad=*/true, /*param_grad=*/false);
  auto lsm = t.log_softmax(tf.logits);
  Tape::NodeId root;
  if (loss == AttackLoss::kCe) {
    auto logp = t.log_floor(t.exp(lsm));
    root = t.affine(t.sum_all(t.pick(logp, y)), -1.0, 0.0);
  } else {
    auto pn = t.constant(*nat_probs);
    auto lpn = t.log_floor(pn);
    auto lpa = t.log_floor(t.exp(lsm));
    root = t.sum_all(t.mul(pn, t.sub(lpn, lpa)));
  }
  t.backward(root);
  Tensor g = t.grad(tf.input);
  g.check_finite("attack gradient");
  return g;
}

Tensor softmax_probs(const Network& net, const Tensor& x) {
  Tape t;
  auto tf = net.forward_taped(t, x, false);
  auto p = t.exp(t.log_softmax(tf.logits));
  return t.value(p);
}

Tensor attack_iterate(const Network& net, const Tensor& x, const std::vector<int>& y,
                      const ThreatModel& tm, AttackLoss loss, int steps, double eta,
                      bool random_start, std::uint64_t seed) {
  if (tm.epsilon == 0.0) return x;  // degenerate ball: x' = x regardless of steps

  Tensor nat_probs;
  if (loss == AttackLoss::kKl) nat_probs = softmax_probs(net, x);

  Tensor x_adv = x;
  if (random_start && tm.epsilon > 0.0) {
    const std::int64_t per = x.numel() / x.shape[0];
    for (int i = 0; i < x.shape[0]; ++i) {
      SplitMix64 rng(SplitMix64::mix(seed, static_cast<std::uint64_t>(i)));
      for (std::int64_t j = 0; j < per; ++j)
        x_adv.data[static_cast<size_t>(i * per + j)] += tm.epsilon * rng.uniform(-1.0, 1.0);
    }
    clamp01(x_adv);
  }

  for (int k = 0; k < steps; ++k) {
    Tensor g;
    try {
      g = input_gradient(net, x_adv, y, loss, loss == AttackLoss::kKl ? &nat_probs : nullptr);
    } catch (const Error& e) {
      throw Error("pgd step " + std::to_string(k + 1) + ": " + e.what());
    }
    if (tm.p == NormP::kLinf) {
      for (size_t i = 0; i < x_adv.data.size(); ++i)
        x_adv.data[i] += eta * sign0(g.data[i]);
    } else {
      const std::int64_t per = x.numel() / x.shape[0];
      for (int i = 0; i < x.shape[0]; ++i) {
        double n2 = 0.0;
        for (std::int64_t j = 0; j < per; ++j) {
          const double v = g.data[static_cast<size_t>(i * per + j)];
          n2 += v * v;
        }
        n2 = std::sqrt(n2);
        if (n2 == 0.0) continue;
        for (std::int64_t j = 0; j < per; ++j)
          x_adv.data[static_cast<size_t>(i * per + j)] += eta * g.data[static_cast<size_t>(i * per + j)] / n2;
      }
    }
    x_adv = project_ball(x_adv, x, tm);
    clamp01(x_adv);
  }
  return x_adv;
}

}  // namespace

Tensor project_ball(const Tensor& x_adv, const Tensor& x, const ThreatModel& tm) {
  if (!x_adv.same_shape(x))
    throw Error("project_ball: shape mismatch " + shape_str(x_adv.shape) + " vs " +
                shape_str(x.shape));
  Tensor out = x_adv;
  if (tm.p == NormP::kLinf) {
    // Bounds are materialized once so repeated projection is bitwise stable.
    for (size_t i = 0; i < out.data.size(); ++i) {
      const double hi = x.data[i] + tm.epsilon;
      const double lo = x.data[i] - tm.epsilon;
      if (out.data[i] > hi) out.data[i] = hi;
      if (out.data[i] < lo) out.data[i] = lo;
    }
  } else {
    const std::int64_t per = x.numel() / x.shape[0];
    for (int i = 0; i < x.shape[0]; ++i) {
      double n2 = 0.0;
      for (std::int64_t j = 0; j < per; ++j) {
        const double d = out.data[static_cast<size_t>(i * per + j)] - x.data[static_cast<size_t>(i * per + j)];
        n2 += d * d;
      }
      n2 = std::sqrt(n2);
      if (n2 <= tm.epsilon * (1.0 + 1e-12)) continue;
      const double scale = tm.epsilon / n2;
      for (std::int64_t j = 0; j < per; ++j) {
        const size_t ij = static_cast<size_t>(i * per + j);
        out.data[ij] = x.data[ij] + (out.data[ij] - x.data[ij]) * scale;
      }
    }
  }
  return out;
}

Tensor fgsm(const Network& net, const Tensor& x, const std::vector<int>& y,
            const ThreatModel& tm, AttackLoss loss) {
  if (tm.p != NormP::kLinf) throw Error("fgsm: defined for the Linf threat model only");
  return attack_iterate(net, x, y, tm, loss, /*steps=*/1, /*eta=*/tm.epsilon,
                        /*random_start=*/false, /*seed=*/0);
}

Tensor pgd(const Network& net, const Tensor& x, const std::vector<int>& y,
           const ThreatModel& tm, AttackLoss loss, std::uint64_t seed) {
  if (tm.steps < 1) throw Error("pgd: steps must be >= 1");
  return attack_iterate(net, x, y, tm, loss, tm.steps, tm.step_size, tm.random_start, seed);
}

}  // namespace awplab
