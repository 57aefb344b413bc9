// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/awp.hpp"

#include <cmath>

#include "awplab/rng.hpp"

namespace awplab {

PerturbationState PerturbationState::zeros_like(const Network& net) {
  PerturbationState ps;
  for (const auto& p : net.params) ps.v.push_back(Tensor::zeros(p.weight.shape));
  return ps;
}

bool PerturbationState::is_zero() const {
  for (const Tensor& t : v)
    for (double x : t.data)
      if (x != 0.0) return false;
  return true;
}

void project_gamma(PerturbationState& ps, const Network& net) {
  if (ps.v.size() != net.params.size())
    throw Error("project_gamma: perturbation not layer-aligned with network");
  for (size_t l = 0; l < ps.v.size(); ++l) {
    Tensor& vl = ps.v[l];
    const double wn = tensor_norm(net.params[l].weight, ps.norm_kind);
    const double vn = tensor_norm(vl, ps.norm_kind);
    // tolerance keeps the operator bitwise idempotent after a rescale that
    // lands a few ulp above the bound
    if (vn <= ps.gamma * wn * (1.0 + 1e-12)) continue;
    if (wn == 0.0) {
      // degenerate ball: only v = 0 is feasible
      for (double& x : vl.data) x = 0.0;
      continue;
    }
    const double scale = ps.gamma * wn / vn;
    for (double& x : vl.data) x *= scale;
  }
}

void awp_ascent_step(PerturbationState& ps, const Network& net,
                     const std::vector<Tensor>& weight_grads, double eta2) {
  for (size_t l = 0; l < ps.v.size(); ++l) {
    const Tensor& g = weight_grads[l];
    const double gn = tensor_norm(g, ps.norm_kind);
    if (gn == 0.0) continue;  // no ascent direction in this layer
    const double wn = tensor_norm(net.params[l].weight, ps.norm_kind);
    const double scale = eta2 * wn / gn;
    Tensor& vl = ps.v[l];
    for (size_t i = 0; i < vl.data.size(); ++i) vl.data[i] += scale * g.data[i];
  }
  project_gamma(ps, net);
}

PerturbationState compute_awp(const Network& net, const Tensor& x, const Tensor& x_adv,
                              const std::vector<int>& y, const LossSpec& loss,
                              PerturbationState ps) {
  if (ps.gamma == 0.0) {
    for (Tensor& vl : ps.v)
      for (double& v : vl.data) v = 0.0;
    return ps;
  }
  const double eta2 = ps.effective_step();
  Network scratch = net;  // mutated under the guard only
  for (int k = 0; k < ps.steps; ++k) {
    std::vector<Tensor> grads = with_perturbed_weights(scratch, ps, [&](Network& pert) {
      LossResult r = combined_loss(pert, loss, x, x_adv, y);
      return parameter_gradients(r, pert).weights;
    });
    awp_ascent_step(ps, net, grads, eta2);
  }
  return ps;
}

PerturbationState random_weight_perturbation(const Network& net, double gamma,
                                             std::uint64_t seed, NormKind norm) {
  PerturbationState ps = PerturbationState::zeros_like(net);
  ps.gamma = gamma;
  ps.norm_kind = norm;
  if (gamma == 0.0) return ps;
  for (size_t l = 0; l < ps.v.size(); ++l) {
    SplitMix64 rng(SplitMix64::mix(seed, static_cast<std::uint64_t>(l)));
    Tensor& vl = ps.v[l];
    for (double& v : vl.data) v = rng.gaussian();
    const double wn = tensor_norm(net.params[l].weight, norm);
    const double vn = tensor_norm(vl, norm);
    if (vn == 0.0 || wn == 0.0) {
      for (double& v : vl.data) v = 0.0;
      continue;
    }
    const double scale = gamma * wn / vn;
    for (double& v : vl.data) v *= scale;
  }
  return ps;
}

Network perturbed_copy(const Network& net, const PerturbationState& ps) {
  Network out = net;
  for (size_t l = 0; l < out.params.size(); ++l) {
    Tensor& w = out.params[l].weight;
    for (size_t i = 0; i < w.data.size(); ++i) w.data[i] += ps.v[l].data[i];
  }
  return out;
}

}  // namespace awplab
