// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include "awplab/config.hpp"

using namespace awplab;

TEST_CASE("defaults resolve to a usable experiment") {
  ExperimentConfig cfg = ExperimentConfig::parse_text("");
  CHECK(cfg.get("mode") == "at");
  CHECK(cfg.get_int("epochs") == 30);
  CHECK(cfg.get_int("batch") == 128);
  CHECK(cfg.get_double("attack.eps") == doctest::Approx(8.0 / 255.0).epsilon(1e-12));
  CHECK(cfg.get_bool("awp") == false);
  CHECK(cfg.get_double("awp.gamma") == doctest::Approx(5e-3).epsilon(1e-15));

  TrainConfig tc = cfg.train_config();
  CHECK(tc.threat.steps == 10);
  CHECK(tc.eval_attack.steps == 20);
  CHECK(tc.momentum == 0.9);
  CHECK(tc.weight_decay == 5e-4);

  Network net = cfg.build_network();
  CHECK(net.num_classes == cfg.get_int("data.classes"));

  Dataset tr = cfg.make_dataset("train");
  CHECK(tr.size() == cfg.get_int("data.n"));
}

TEST_CASE("parse_text: comments, whitespace, overrides") {
  ExperimentConfig cfg = ExperimentConfig::parse_text(
      "# a comment\n"
      "\n"
      "epochs = 5\n"
      "mode=trades\n"
      "trades.beta = 3.5\n");
  CHECK(cfg.get_int("epochs") == 5);
  CHECK(cfg.get("mode") == "trades");
  CHECK(cfg.get_double("trades.beta") == 3.5);

  cfg.override_value("epochs", "7");
  CHECK(cfg.get_int("epochs") == 7);
}

TEST_CASE("unknown key is an error with the line number") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse_text("epochs=3\ntypo_key=1\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("not a key value pair\n"), Error);
}

TEST_CASE("resolved() echoes every key once, sorted") {
  ExperimentConfig cfg = ExperimentConfig::parse_text("epochs=3\n");
  const std::string r = cfg.resolved();
  CHECK(r.find("epochs=3\n") != std::string::npos);
  const size_t n_lines = static_cast<size_t>(std::count(r.begin(), r.end(), '\n'));
  CHECK(n_lines == ExperimentConfig::defaults().size());
  // sorted: "attack.eps" precedes "batch"
  CHECK(r.find("attack.eps") < r.find("batch"));
}

TEST_CASE("typed views track overrides") {
  ExperimentConfig cfg = ExperimentConfig::parse_text(
      "mode=mart\n"
      "mart.lambda=4\n"
      "awp=on\n"
      "awp.gamma=0.01\n"
      "schedule=cosine\n"
      "lr=0.2\n");
  TrainConfig tc = cfg.train_config();
  CHECK(tc.loss.kind == LossKind::kMart);
  CHECK(tc.loss.lambda == 4.0);
  CHECK(tc.use_awp);
  CHECK(tc.awp.gamma == 0.01);
  CHECK(tc.schedule.kind == ScheduleKind::kCosine);
  CHECK(tc.schedule.init_lr == 0.2);
}

TEST_CASE("schedule milestones parse as an int list") {
  ExperimentConfig cfg = ExperimentConfig::parse_text("schedule.milestones=10,20,25\n");
  CHECK(cfg.get_int_list("schedule.milestones") == std::vector<int>{10, 20, 25});
  CHECK(cfg.train_config().schedule.milestones == std::vector<int>{10, 20, 25});
}

TEST_CASE("bad typed values raise structured errors") {
  ExperimentConfig cfg = ExperimentConfig::parse_text("epochs=3\n");
  cfg.override_value("epochs", "banana");
  CHECK_THROWS_AS(cfg.get_int("epochs"), Error);
  CHECK_THROWS_AS(cfg.get("no.such.key"), Error);
}
