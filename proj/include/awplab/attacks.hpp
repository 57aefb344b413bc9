// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "awplab/network.hpp"
#include "awplab/tensor.hpp"

namespace awplab {

enum class NormP { kLinf, kL2 };

/// Which loss the attacker ascends: plain CE, or the TRADES KL criterion
/// (KL between the frozen natural distribution and the perturbed one).
enum class AttackLoss { kCe, kKl };

struct ThreatModel {
  NormP p = NormP::kLinf;
  double epsilon = 8.0 / 255.0;
  double step_size = 2.0 / 255.0;  // eta1
  int steps = 10;                  // K1
  bool random_start = true;
};

/// Project x' onto the epsilon-ball around x (coordinate clamp for Linf,
/// radial rescale for L2), per example.
Tensor project_ball(const Tensor& x_adv, const Tensor& x, const ThreatModel& tm);

/// Single-step signed-gradient attack; requires the Linf threat model.
Tensor fgsm(const Network& net, const Tensor& x, const std::vector<int>& y,
            const ThreatModel& tm, AttackLoss loss = AttackLoss::kCe);

/// Multi-step PGD with seeded uniform random start and per-step projection;
/// outputs stay inside the ball and in [0,1].
Tensor pgd(const Network& net, const Tensor& x, const std::vector<int>& y,
           const ThreatModel& tm, AttackLoss loss, std::uint64_t seed);

}  // namespace awplab
