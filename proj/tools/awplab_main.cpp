// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: adversarial training with optional weight perturbation,
// weight-loss-landscape profiling, AWP-vs-RWP comparison, weight histograms.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "awplab/checkpoint.hpp"
#include "awplab/config.hpp"
#include "awplab/rng.hpp"

namespace fs = std::filesystem;
using namespace awplab;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
}

int cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  TrainConfig tc = cfg.train_config();
  Dataset train_ds = cfg.make_dataset("train");
  Dataset test_ds = cfg.make_dataset("test");
  Network net = cfg.build_network();

  Dataset unlabeled;
  Dataset* unlabeled_ptr = nullptr;
  if (tc.loss.kind == LossKind::kSsl) {
    auto [labeled, unlab] = split_labeled(train_ds, cfg.get_double("ssl.labeled_fraction"), tc.seed);
    // Pseudo-labels come from a natural (epsilon = 0) run on the labeled split.
    TrainConfig nat_cfg = tc;
    nat_cfg.threat.epsilon = 0.0;
    nat_cfg.eval_attack.epsilon = 0.0;
    nat_cfg.epochs = cfg.get_int("ssl.natural_epochs");
    nat_cfg.use_awp = false;
    nat_cfg.rwp = false;
    nat_cfg.loss.kind = LossKind::kAtCe;
    Network natural_net = cfg.build_network();
    train(natural_net, labeled, test_ds, nat_cfg);
    unlab.labels = pseudo_label(natural_net, unlab.batch_inputs([&] {
      std::vector<int> idx(static_cast<size_t>(unlab.size()));
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      return idx;
    }()));
    unlab.num_classes = train_ds.num_classes;
    train_ds = std::move(labeled);
    unlabeled = std::move(unlab);
    unlabeled_ptr = &unlabeled;
  }

  BestTracker tracker;
  const fs::path best_path = out / "best.ckpt";
  RunMetrics rm = train(net, train_ds, test_ds, tc, unlabeled_ptr,
                        [&](const EpochMetrics& em, const Network& n) {
                          tracker.update(em.epoch, em.test_rob);
                          if (tracker.best_epoch() == em.epoch)
                            save_checkpoint(n, best_path.string(), em.epoch, cfg.resolved(), tc.seed);
                          std::cout << "epoch " << em.epoch << " lr " << em.lr << " train_rob "
                                    << em.train_rob << " test_rob " << em.test_rob << " gap "
                                    << em.gap << '\n';
                        });
  save_checkpoint(net, (out / "last.ckpt").string(), tc.epochs, cfg.resolved(), tc.seed);
  write_file(out / "metrics.csv", metrics_csv(rm));
  write_file(out / "config.resolved", cfg.resolved());
  std::cout << "best epoch " << rm.best_epoch << '\n';
  return 0;
}

int cmd_landscape(const ExperimentConfig& cfg, const fs::path& out, int repeat) {
  fs::create_directories(out);
  Network net = cfg.build_network();
  const std::string ckpt = cfg.get("checkpoint");
  if (ckpt.empty()) throw Error("landscape: config must set checkpoint=");
  load_checkpoint(net, ckpt);

  Dataset data = cfg.make_dataset("train").sample(cfg.get_int("landscape.subset"),
                                                  SplitMix64::mix(cfg.get_u64("seed"), 31));
  ThreatModel attack = cfg.threat("eval");
  auto grid = alpha_grid(cfg.get_double("landscape.alpha_min"),
                         cfg.get_double("landscape.alpha_max"), cfg.get_int("landscape.points"));
  const std::uint64_t seed = cfg.get_u64("seed");
  const bool svg = cfg.get_bool("landscape.svg");

  for (int r = 0; r < std::max(repeat, 1); ++r) {
    const std::string suffix = repeat > 1 ? "_" + std::to_string(r) : "";
    if (cfg.get_int("landscape.dim") == 2) {
      Direction d = sample_direction(net, SplitMix64::mix(seed, 2 * static_cast<std::uint64_t>(r)));
      Direction e = sample_direction(net, SplitMix64::mix(seed, 2 * static_cast<std::uint64_t>(r) + 1));
      LandscapeProfile p = profile_2d(net, data, d, e, grid, grid, attack, SplitMix64::mix(seed, 41));
      write_file(out / ("landscape2d" + suffix + ".csv"), profile_csv(p));
    } else {
      Direction d = sample_direction(net, SplitMix64::mix(seed, static_cast<std::uint64_t>(r)));
      LandscapeProfile p = profile_1d(net, data, d, grid, attack, SplitMix64::mix(seed, 41));
      write_file(out / ("landscape" + suffix + ".csv"), profile_csv(p));
      if (svg) write_file(out / ("landscape" + suffix + ".svg"), profile_svg(p));
      std::cout << "profile " << r << " flatness " << flatness(p) << '\n';
    }
  }
  return 0;
}

int cmd_perturb_compare(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  Network net = cfg.build_network();
  const std::string ckpt = cfg.get("checkpoint");
  if (ckpt.empty()) throw Error("perturb-compare: config must set checkpoint=");
  load_checkpoint(net, ckpt);

  Dataset data = cfg.make_dataset("train").sample(cfg.get_int("compare.subset"),
                                                  SplitMix64::mix(cfg.get_u64("seed"), 53));
  ThreatModel attack = cfg.threat("eval");
  const std::uint64_t seed = cfg.get_u64("seed");
  const int draws = cfg.get_int("compare.draws");
  TrainConfig tc = cfg.train_config();

  std::vector<int> all(static_cast<size_t>(data.size()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  Tensor x = data.batch_inputs(all);
  std::vector<int> y = data.batch_labels(all);
  Tensor x_adv = pgd(net, x, y, attack, AttackLoss::kCe, SplitMix64::mix(seed, 59));

  auto loss_at = [&](const PerturbationState& ps) {
    Network pert = perturbed_copy(net, ps);
    return at_loss(pert, x_adv, y).value;
  };

  std::ostringstream os;
  os.precision(17);
  os << "strategy,gamma,loss\n";
  for (double gamma : cfg.get_double_list("compare.gammas")) {
    PerturbationState awp_ps = PerturbationState::zeros_like(net);
    awp_ps.gamma = gamma;
    awp_ps.steps = tc.awp.steps;
    awp_ps.alternations = tc.awp.alternations;
    awp_ps.norm_kind = tc.awp.norm_kind;
    awp_ps = compute_awp(net, x, x_adv, y, tc.loss, std::move(awp_ps));
    os << "awp," << gamma << ',' << loss_at(awp_ps) << '\n';

    std::vector<double> rwp_losses;
    for (int d = 0; d < draws; ++d)
      rwp_losses.push_back(loss_at(random_weight_perturbation(
          net, gamma, SplitMix64::mix(seed, 1000 + static_cast<std::uint64_t>(d)), tc.awp.norm_kind)));
    std::sort(rwp_losses.begin(), rwp_losses.end());
    const double median = rwp_losses[rwp_losses.size() / 2];
    os << "rwp," << gamma << ',' << median << '\n';
  }
  write_file(out / "perturb_compare.csv", os.str());
  std::cout << "wrote " << (out / "perturb_compare.csv").string() << '\n';
  return 0;
}

int cmd_histogram(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  Network net = cfg.build_network();
  const std::string ckpt = cfg.get("checkpoint");
  if (!ckpt.empty()) load_checkpoint(net, ckpt);
  const int layer = cfg.get_int("histogram.layer");
  Histogram h = weight_histogram(net, layer, cfg.get_int("histogram.bins"));
  std::ostringstream os;
  os.precision(17);
  os << "bin_left,bin_right,count\n";
  for (size_t i = 0; i < h.counts.size(); ++i)
    os << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  write_file(out / "histogram.csv", os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial-weight-perturbation training lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::string seed_override;
  int repeat = 1;
  for (auto* name : {"train", "landscape", "perturb-compare", "histogram"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "override the config seed");
    if (std::string(name) == "landscape")
      sub->add_option("--repeat", repeat, "number of direction-seeded profiles");
  }

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::parse_file(config_path);
    if (!seed_override.empty()) cfg.override_value("seed", seed_override);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    const std::string sub = app.get_subcommands()[0]->get_name();
    if (sub == "train") return cmd_train(cfg, out_dir);
    if (sub == "landscape") return cmd_landscape(cfg, out_dir, repeat);
    if (sub == "perturb-compare") return cmd_perturb_compare(cfg, out_dir);
    if (sub == "histogram") return cmd_histogram(cfg, out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
