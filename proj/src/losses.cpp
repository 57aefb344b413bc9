// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/losses.hpp"

#include <cmath>

namespace awplab {

namespace {

int batch_size(const Tensor& x) {
  if (x.shape.empty()) throw Error("loss: rank-0 batch");
  return x.shape[0];
}

}  // namespace

LossResult at_loss(const Network& net, const Tensor& x_adv, const std::vector<int>& y,
                   bool input_grad) {
  LossResult r;
  const int n = batch_size(x_adv);
  r.adv = net.forward_taped(r.tape, x_adv, input_grad);
  Tape& t = r.tape;
  auto lsm = t.log_softmax(r.adv.logits);
  auto logp = t.log_floor(t.exp(lsm));
  auto picked = t.pick(logp, y);
  r.root = t.affine(t.sum_all(picked), -1.0 / n, 0.0);
  r.value = t.value(r.root).item();
  return r;
}

LossResult trades_loss(const Network& net, const Tensor& x, const Tensor& x_adv,
                       const std::vector<int>& y, double beta, bool input_grad) {
  LossResult r;
  const int n = batch_size(x);
  r.nat = net.forward_taped(r.tape, x, input_grad);
  r.adv = net.forward_taped(r.tape, x_adv, input_grad);
  r.has_nat = true;
  Tape& t = r.tape;
  auto pn = t.exp(t.log_softmax(r.nat.logits));
  auto pa = t.exp(t.log_softmax(r.adv.logits));
  auto logpn = t.log_floor(pn);
  auto logpa = t.log_floor(pa);
  auto ce = t.affine(t.sum_all(t.pick(logpn, y)), -1.0 / n, 0.0);
  auto kl = t.affine(t.sum_all(t.mul(pn, t.sub(logpn, logpa))), 1.0 / n, 0.0);
  r.root = t.add(ce, t.affine(kl, beta, 0.0));
  r.value = t.value(r.root).item();
  return r;
}

LossResult mart_loss(const Network& net, const Tensor& x, const Tensor& x_adv,
                     const std::vector<int>& y, double lambda, bool input_grad) {
  LossResult r;
  const int n = batch_size(x);
  r.nat = net.forward_taped(r.tape, x, input_grad);
  r.adv = net.forward_taped(r.tape, x_adv, input_grad);
  r.has_nat = true;
  Tape& t = r.tape;
  auto pn = t.exp(t.log_softmax(r.nat.logits));
  auto pa = t.exp(t.log_softmax(r.adv.logits));
  // BCE(f(x'), y) = -log p_y(x') - log(1 - max_{k != y} p_k(x'))
  auto bce = t.affine(t.add(t.log_floor(t.pick(pa, y)),
                            t.log_floor(t.affine(t.max_off_label(pa, y), -1.0, 1.0))),
                      -1.0, 0.0);
  auto kl_rows = t.sum_rows(t.mul(pn, t.sub(t.log_floor(pn), t.log_floor(pa))));
  auto weight = t.affine(t.pick(pn, y), -1.0, 1.0);  // 1 - [f(x)]_y, in [0,1]
  auto term = t.mul(weight, kl_rows);
  r.root = t.affine(t.sum_all(t.add(bce, t.affine(term, lambda, 0.0))), 1.0 / n, 0.0);
  r.value = t.value(r.root).item();
  return r;
}

double ssl_loss(double rho_labeled, double rho_unlabeled, double lambda) {
  return rho_labeled + lambda * rho_unlabeled;
}

double weight_penalty(const Network& net, PenaltyKind kind, double lambda_w) {
  if (kind == PenaltyKind::kNone || lambda_w == 0.0) return 0.0;
  double s = 0.0;
  for (const Network::Param& p : net.params) {
    if (kind == PenaltyKind::kL1) {
      s += l1_norm(p.weight.data);
    } else {
      s += 0.5 * dot(p.weight.data, p.weight.data);
    }
  }
  return lambda_w * s;
}

void add_weight_penalty_grad(const Network& net, PenaltyKind kind, double lambda_w,
                             std::vector<Tensor>& weight_grads) {
  if (kind == PenaltyKind::kNone || lambda_w == 0.0) return;
  for (size_t p = 0; p < net.params.size(); ++p) {
    const Tensor& w = net.params[p].weight;
    Tensor& g = weight_grads[p];
    for (size_t i = 0; i < w.data.size(); ++i) {
      if (kind == PenaltyKind::kL1) {
        const double v = w.data[i];
        g.data[i] += lambda_w * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
      } else {
        g.data[i] += lambda_w * w.data[i];
      }
    }
  }
}

LossGrads parameter_gradients(LossResult& r, const Network& net) {
  r.tape.backward(r.root);
  LossGrads g;
  for (size_t l = 0; l < net.params.size(); ++l) {
    Tensor gw = r.tape.grad(r.adv.weights[l]);
    if (r.has_nat) {
      const Tensor& gn = r.tape.grad(r.nat.weights[l]);
      for (size_t i = 0; i < gw.data.size(); ++i) gw.data[i] += gn.data[i];
    }
    g.weights.push_back(std::move(gw));
    if (net.params[l].has_bias) {
      Tensor gb = r.tape.grad(r.adv.biases[l]);
      if (r.has_nat) {
        const Tensor& gn = r.tape.grad(r.nat.biases[l]);
        for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += gn.data[i];
      }
      g.biases.push_back(std::move(gb));
    } else {
      g.biases.push_back(Tensor::zeros({1}));
    }
  }
  return g;
}

LossResult combined_loss(const Network& net, const LossSpec& spec, const Tensor& x,
                         const Tensor& x_adv, const std::vector<int>& y, bool input_grad) {
  const LossKind kind = spec.kind == LossKind::kSsl ? spec.ssl_inner : spec.kind;
  switch (kind) {
    case LossKind::kAtCe:
      return at_loss(net, x_adv, y, input_grad);
    case LossKind::kTrades:
      return trades_loss(net, x, x_adv, y, spec.beta, input_grad);
    case LossKind::kMart:
      return mart_loss(net, x, x_adv, y, spec.lambda, input_grad);
    default:
      throw Error("combined_loss: unsupported loss kind");
  }
}

}  // namespace awplab
