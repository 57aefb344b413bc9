// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "awplab/losses.hpp"
#include "awplab/rng.hpp"

namespace awplab {

Direction sample_direction(const Network& net, std::uint64_t seed) {
  if (net.params.empty()) throw Error("sample_direction: no parameterized layers");
  Direction dir;
  dir.seed = seed;
  SplitMix64 rng(seed);
  for (size_t p = 0; p < net.params.size(); ++p) {
    Tensor d = Tensor::zeros(net.params[p].weight.shape);
    for (double& v : d.data) v = rng.gaussian();
    dir.d.push_back(std::move(d));
  }
  // filter normalization: d_{l,j} <- d_{l,j} / ||d_{l,j}||_F * ||w_{l,j}||_F
  for (size_t p = 0; p < net.params.size(); ++p) {
    Tensor& d = dir.d[p];
    const Tensor& w = net.params[p].weight;
    const int fc = net.filter_count(static_cast<int>(p));
    for (int j = 0; j < fc; ++j) {
      auto [b, e] = net.filter_span(static_cast<int>(p), j);
      double dn = 0.0, wn = 0.0;
      for (auto i = b; i < e; ++i) {
        dn += d.data[static_cast<size_t>(i)] * d.data[static_cast<size_t>(i)];
        wn += w.data[static_cast<size_t>(i)] * w.data[static_cast<size_t>(i)];
      }
      dn = std::sqrt(dn);
      wn = std::sqrt(wn);
      const double s = (dn == 0.0 || wn == 0.0) ? 0.0 : wn / dn;
      for (auto i = b; i < e; ++i) d.data[static_cast<size_t>(i)] *= s;
    }
  }
  dir.normalized = true;
  return dir;
}

std::vector<double> alpha_grid(double lo, double hi, int points) {
  if (points < 2 || lo > 0.0 || hi < 0.0)
    throw Error("alpha_grid: window must contain 0 with >= 2 points");
  std::vector<double> g(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i)
    g[static_cast<size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  // snap the closest point to exactly 0
  size_t zi = 0;
  for (size_t i = 1; i < g.size(); ++i)
    if (std::fabs(g[i]) < std::fabs(g[zi])) zi = i;
  g[zi] = 0.0;
  return g;
}

namespace {

Network displaced_copy(const Network& net, const std::vector<Tensor>& d, double alpha) {
  Network out = net;
  for (size_t p = 0; p < out.params.size(); ++p) {
    Tensor& w = out.params[p].weight;
    for (size_t i = 0; i < w.data.size(); ++i) w.data[i] += alpha * d[p].data[i];
  }
  return out;
}

/// Mean adversarial CE with the same batching and per-batch seed stream the
/// trainer's evaluate() uses, so g(0) matches it exactly.
double adv_ce_loss(const Network& net, const Dataset& ds, const ThreatModel& attack,
                   std::uint64_t seed) {
  const int n = ds.size();
  const int m = 128;
  double loss_sum = 0.0;
  std::vector<int> idx;
  int bi = 0;
  for (int b = 0; b < n; b += m, ++bi) {
    idx.clear();
    for (int i = b; i < std::min(b + m, n); ++i) idx.push_back(i);
    Tensor x = ds.batch_inputs(idx);
    std::vector<int> y = ds.batch_labels(idx);
    Tensor x_adv = attack.epsilon > 0.0
                       ? pgd(net, x, y, attack, AttackLoss::kCe,
                             SplitMix64::mix(seed, static_cast<std::uint64_t>(bi)))
                       : x;
    loss_sum += at_loss(net, x_adv, y).value * static_cast<double>(idx.size());
  }
  return loss_sum / n;
}

int thread_count() {
  if (const char* env = std::getenv("AWP_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 1) return n;
  }
  return 1;
}

/// Evaluates `fn(index)` for every grid index; results ordered by index.
std::vector<double> map_grid(int n, const std::function<double(int)>& fn) {
  std::vector<double> out(static_cast<size_t>(n));
  const int threads = std::min(thread_count(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) out[static_cast<size_t>(i)] = fn(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace

LandscapeProfile profile_1d(const Network& net, const Dataset& data, const Direction& dir,
                            const std::vector<double>& grid, const ThreatModel& attack,
                            std::uint64_t attack_seed) {
  if (std::find(grid.begin(), grid.end(), 0.0) == grid.end())
    throw Error("profile_1d: grid must contain alpha = 0");
  LandscapeProfile p;
  p.alphas = grid;
  p.losses = map_grid(static_cast<int>(grid.size()), [&](int i) {
    const double a = grid[static_cast<size_t>(i)];
    Network pert = displaced_copy(net, dir.d, a);
    try {
      return adv_ce_loss(pert, data, attack, SplitMix64::mix(attack_seed, static_cast<std::uint64_t>(i)));
    } catch (const Error& e) {
      throw Error("profile_1d at alpha " + std::to_string(a) + ": " + e.what());
    }
  });
  return p;
}

LandscapeProfile profile_2d(const Network& net, const Dataset& data, const Direction& d,
                            const Direction& e, const std::vector<double>& grid_a,
                            const std::vector<double>& grid_b, const ThreatModel& attack,
                            std::uint64_t attack_seed) {
  if (std::find(grid_a.begin(), grid_a.end(), 0.0) == grid_a.end() ||
      std::find(grid_b.begin(), grid_b.end(), 0.0) == grid_b.end())
    throw Error("profile_2d: grid must contain (0,0)");
  LandscapeProfile p;
  p.alphas = grid_a;
  p.betas = grid_b;
  p.relative = true;
  const int na = static_cast<int>(grid_a.size());
  const int nb = static_cast<int>(grid_b.size());
  std::vector<double> raw = map_grid(na * nb, [&](int i) {
    const double a = grid_a[static_cast<size_t>(i / nb)];
    const double b = grid_b[static_cast<size_t>(i % nb)];
    Network pert = displaced_copy(net, d.d, a);
    pert = displaced_copy(pert, e.d, b);
    return adv_ce_loss(pert, data, attack, SplitMix64::mix(attack_seed, static_cast<std::uint64_t>(i)));
  });
  double g00 = 0.0;
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      if (grid_a[static_cast<size_t>(i)] == 0.0 && grid_b[static_cast<size_t>(j)] == 0.0)
        g00 = raw[static_cast<size_t>(i * nb + j)];
  p.losses.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) p.losses[i] = std::fabs(raw[i] - g00);
  return p;
}

namespace {

double center_loss(const LandscapeProfile& p) {
  for (size_t i = 0; i < p.alphas.size(); ++i)
    if (p.alphas[i] == 0.0) return p.losses[i];
  throw Error("flatness: profile has no alpha = 0 sample");
}

}  // namespace

double flatness(const LandscapeProfile& p) {
  const double g0 = center_loss(p);
  double worst = 0.0;
  for (double g : p.losses) worst = std::max(worst, g - g0);
  return worst;
}

double mean_rise(const LandscapeProfile& p) {
  const double g0 = center_loss(p);
  double s = 0.0;
  int n = 0;
  for (size_t i = 0; i < p.losses.size(); ++i) {
    if (p.alphas[i] == 0.0) continue;
    s += p.losses[i] - g0;
    ++n;
  }
  return n ? s / n : 0.0;
}

PacBayesEstimate pac_bayes_flatness(const Network& net, const Dataset& data, double alpha_var,
                                    int samples, std::uint64_t seed, const ThreatModel& attack) {
  if (samples < 1) throw Error("pac_bayes_flatness: need >= 1 sample");
  PacBayesEstimate est;
  est.samples = samples;
  if (alpha_var == 0.0) return est;  // u = 0: rise is identically zero

  const double base = adv_ce_loss(net, data, attack, SplitMix64::mix(seed, 0xba5e));
  std::vector<double> sigmas;
  for (const auto& p : net.params)
    sigmas.push_back(alpha_var * l2_norm(p.weight.data));

  std::vector<double> rises = map_grid(samples, [&](int s) {
    Network pert = net;
    SplitMix64 rng(SplitMix64::mix(seed, static_cast<std::uint64_t>(s) + 1));
    for (size_t p = 0; p < pert.params.size(); ++p)
      for (double& w : pert.params[p].weight.data) w += sigmas[p] * rng.gaussian();
    return adv_ce_loss(pert, data, attack, SplitMix64::mix(seed, 0x5a0 + static_cast<std::uint64_t>(s))) - base;
  });
  double mean = 0.0;
  for (double r : rises) mean += r;
  mean /= samples;
  double var = 0.0;
  for (double r : rises) var += (r - mean) * (r - mean);
  est.mean_rise = mean;
  est.std_error = samples > 1 ? std::sqrt(var / (samples - 1) / samples) : 0.0;
  return est;
}

std::string profile_csv(const LandscapeProfile& p) {
  std::ostringstream os;
  os.precision(17);
  if (p.betas.empty()) {
    os << "alpha,loss\n";
    for (size_t i = 0; i < p.alphas.size(); ++i) os << p.alphas[i] << ',' << p.losses[i] << '\n';
  } else {
    os << "alpha,beta,rel_loss\n";
    const size_t nb = p.betas.size();
    for (size_t i = 0; i < p.alphas.size(); ++i)
      for (size_t j = 0; j < nb; ++j)
        os << p.alphas[i] << ',' << p.betas[j] << ',' << p.losses[i * nb + j] << '\n';
  }
  return os.str();
}

std::string profile_svg(const LandscapeProfile& p) {
  if (!p.betas.empty()) throw Error("profile_svg: 1-D profiles only");
  const int W = 640, H = 400, pad = 50;
  double lo = p.losses[0], hi = p.losses[0];
  for (double v : p.losses) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  const double amin = p.alphas.front(), amax = p.alphas.back();
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < p.alphas.size(); ++i) {
    const double x = pad + (p.alphas[i] - amin) / (amax - amin) * (W - 2 * pad);
    const double y = H - pad - (p.losses[i] - lo) / (hi - lo) * (H - 2 * pad);
    os << x << ',' << y << ' ';
  }
  os << "\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\""
     << H - pad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">alpha</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << H / 2 << ")\">adversarial loss</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace awplab
