// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "awplab/losses.hpp"
#include "awplab/network.hpp"

namespace awplab {

/// Adversarial weight perturbation v, layer-aligned with the network's
/// perturbable weights (multiplicative conv/dense weights only; biases are
/// never perturbed).
struct PerturbationState {
  std::vector<Tensor> v;      // one tensor per parameterized layer
  double gamma = 5e-3;        // relative constraint: ||v_l|| <= gamma * ||w_l||
  double step_size = 0.0;     // eta2; 0 means the gamma/(A*K2) default
  int steps = 1;              // K2
  int alternations = 1;       // A
  NormKind norm_kind = NormKind::kFrobenius;

  static PerturbationState zeros_like(const Network& net);
  bool is_zero() const;
  /// eta2 = gamma / (A * K2) unless step_size overrides.
  double effective_step() const {
    return step_size > 0.0 ? step_size : gamma / (alternations * steps);
  }
};

/// Layer-wise projection onto {||v_l|| <= gamma ||w_l||}; layers with zero
/// weight norm get a zero perturbation.
void project_gamma(PerturbationState& ps, const Network& net);

/// One ascent step of v given per-layer gradients of the batch-mean loss at
/// w+v: v_l += eta2 * (g_l / ||g_l||) * ||w_l||, then projection. Layers with
/// zero gradient norm are left untouched.
void awp_ascent_step(PerturbationState& ps, const Network& net,
                     const std::vector<Tensor>& weight_grads, double eta2);

/// K2 steps of the weight-space adversary at (x, x', y) under `loss`.
/// x is only consulted by losses that need the natural batch.
PerturbationState compute_awp(const Network& net, const Tensor& x, const Tensor& x_adv,
                              const std::vector<int>& y, const LossSpec& loss,
                              PerturbationState ps);

/// Gaussian direction per layer, rescaled so ||v_l|| = gamma * ||w_l|| exactly.
PerturbationState random_weight_perturbation(const Network& net, double gamma,
                                             std::uint64_t seed,
                                             NormKind norm = NormKind::kFrobenius);

/// Runs f against f_{w+v}; the original weights are restored bitwise
/// afterwards (snapshot discipline, not add-then-subtract).
template <typename F>
auto with_perturbed_weights(Network& net, const PerturbationState& ps, F&& f) {
  struct Guard {
    Network& net;
    std::vector<Tensor> saved;
    explicit Guard(Network& n) : net(n) {
      saved.reserve(n.params.size());
      for (const auto& p : n.params) saved.push_back(p.weight);
    }
    ~Guard() {
      for (size_t i = 0; i < saved.size(); ++i) net.params[i].weight = std::move(saved[i]);
    }
  };
  Guard guard(net);
  for (size_t l = 0; l < net.params.size(); ++l) {
    Tensor& w = net.params[l].weight;
    const Tensor& vl = ps.v[l];
    for (size_t i = 0; i < w.data.size(); ++i) w.data[i] += vl.data[i];
  }
  return f(net);
}

/// Non-restoring variant: returns a copy of the network with w+v.
Network perturbed_copy(const Network& net, const PerturbationState& ps);

}  // namespace awplab
