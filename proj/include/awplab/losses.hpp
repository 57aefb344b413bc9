// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "awplab/network.hpp"
#include "awplab/tape.hpp"

namespace awplab {

enum class LossKind { kAtCe, kTrades, kMart, kSsl };
enum class PenaltyKind { kNone, kL1, kL2 };

struct LossSpec {
  LossKind kind = LossKind::kAtCe;
  double beta = 6.0;    // trades trade-off
  double lambda = 5.0;  // mart misclassification weight / ssl unlabeled weight
  LossKind ssl_inner = LossKind::kAtCe;
  PenaltyKind weight_penalty = PenaltyKind::kNone;
  double lambda_w = 0.0;
};

/// One loss evaluation with everything a caller may need afterwards.
struct LossResult {
  double value = 0.0;
  Tape tape;                        // kept alive so gradients stay readable
  Tape::NodeId root = -1;
  Network::TapedForward adv;        // forward of x' (always present)
  Network::TapedForward nat;        // forward of x (trades/mart only)
  bool has_nat = false;
};

/// Mean cross-entropy on adversarial examples (vanilla adversarial loss).
LossResult at_loss(const Network& net, const Tensor& x_adv, const std::vector<int>& y,
                   bool input_grad = false);

/// CE(f(x), y) + beta * KL(f(x) || f(x')), batch mean.
LossResult trades_loss(const Network& net, const Tensor& x, const Tensor& x_adv,
                       const std::vector<int>& y, double beta, bool input_grad = false);

/// BCE(f(x'), y) + lambda * KL(f(x) || f(x')) * (1 - [f(x)]_y), batch mean.
LossResult mart_loss(const Network& net, const Tensor& x, const Tensor& x_adv,
                     const std::vector<int>& y, double lambda, bool input_grad = false);

/// Semi-supervised combination: rho_labeled + lambda * rho_unlabeled.
double ssl_loss(double rho_labeled, double rho_unlabeled, double lambda);

/// lambda_w * sum_l ||w_l||_1 or lambda_w * 0.5 * sum_l ||w_l||_F^2 over
/// perturbable (multiplicative) weights only.
double weight_penalty(const Network& net, PenaltyKind kind, double lambda_w);
/// Gradient of the penalty with respect to params[p].weight, added into g.
void add_weight_penalty_grad(const Network& net, PenaltyKind kind, double lambda_w,
                             std::vector<Tensor>& weight_grads);

/// Runs backward on the loss root and collects parameter gradients, summing
/// contributions from the natural and adversarial forwards when both exist.
struct LossGrads {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;  // zero tensors where the layer has no bias
};
LossGrads parameter_gradients(LossResult& r, const Network& net);

/// Dispatch on spec.kind for the training objective at (x, x', y).
LossResult combined_loss(const Network& net, const LossSpec& spec, const Tensor& x,
                         const Tensor& x_adv, const std::vector<int>& y,
                         bool input_grad = false);

}  // namespace awplab
