// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awplab/attacks.hpp"
#include "awplab/data.hpp"
#include "awplab/network.hpp"

namespace awplab {

/// Filter-normalized random direction, layer-aligned with the network.
struct Direction {
  std::vector<Tensor> d;
  std::uint64_t seed = 0;
  bool normalized = false;
};

struct LandscapeProfile {
  std::vector<double> alphas;
  std::vector<double> betas;   // empty for 1-D
  std::vector<double> losses;  // 1-D: g(alpha); 2-D: |g(a,b) - g(0,0)|, row-major over (alpha, beta)
  bool relative = false;
};

/// Gaussian direction, each filter rescaled to the Frobenius norm of the
/// matching weight filter; zero-norm weight filters give a zero block.
Direction sample_direction(const Network& net, std::uint64_t seed);

/// Uniform grid over [lo, hi] in `points` steps; always contains 0.
std::vector<double> alpha_grid(double lo, double hi, int points);

/// Adversarial loss of f_{w + alpha d} with on-the-fly attacks per grid
/// point (never reusing x' across alphas). attack_seed feeds per-point
/// streams mix(attack_seed, grid index).
LandscapeProfile profile_1d(const Network& net, const Dataset& data, const Direction& dir,
                            const std::vector<double>& grid, const ThreatModel& attack,
                            std::uint64_t attack_seed);

LandscapeProfile profile_2d(const Network& net, const Dataset& data, const Direction& d,
                            const Direction& e, const std::vector<double>& grid_a,
                            const std::vector<double>& grid_b, const ThreatModel& attack,
                            std::uint64_t attack_seed);

/// Worst rise within the window: max over grid of g(alpha) - g(0).
double flatness(const LandscapeProfile& p);
/// Mean rise over the non-center grid points.
double mean_rise(const LandscapeProfile& p);

struct PacBayesEstimate {
  double mean_rise = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// Monte-Carlo estimate of E_u[rho(w+u)] - rho(w) with per-layer elementwise
/// Gaussian sigma_l = alpha_var * ||w_l||_F; adversarial examples are
/// regenerated per sample.
PacBayesEstimate pac_bayes_flatness(const Network& net, const Dataset& data, double alpha_var,
                                    int samples, std::uint64_t seed, const ThreatModel& attack);

std::string profile_csv(const LandscapeProfile& p);
/// Minimal standalone SVG line plot of a 1-D profile.
std::string profile_svg(const LandscapeProfile& p);

}  // namespace awplab
