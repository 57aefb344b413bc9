// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/config.hpp"

#include <fstream>
#include <sstream>

#include "awplab/rng.hpp"

namespace awplab {

const std::map<std::string, std::string>& ExperimentConfig::defaults() {
  static const std::map<std::string, std::string> d = {
      // data
      {"data", "synth"},             // synth | idx
      {"data.n", "1000"},            // synth train size
      {"data.test_n", "500"},        // synth test size
      {"data.classes", "4"},
      {"data.shape", "1x8x8"},       // "d" or "CxHxW"
      {"data.margin", "0.35"},
      {"data.images", ""},           // idx paths
      {"data.labels", ""},
      {"data.test_images", ""},
      {"data.test_labels", ""},
      {"data.limit", "0"},           // cap idx examples, 0 = all
      // model
      {"model", "cnn-small"},        // mlp-small | cnn-small
      // objective
      {"mode", "at"},                // at | trades | mart | ssl
      {"trades.beta", "6.0"},
      {"mart.lambda", "5.0"},
      {"ssl.lambda", "1.0"},
      {"ssl.inner", "at"},
      {"ssl.labeled_fraction", "0.5"},
      {"ssl.natural_epochs", "10"},
      {"penalty", "none"},           // none | l1 | l2
      {"penalty.lambda", "0.0"},
      // input threat model (training attack)
      {"attack.p", "linf"},
      {"attack.eps", "0.031372549019607843"},  // 8/255
      {"attack.step", "0.00784313725490196"},  // 2/255
      {"attack.steps", "10"},
      {"attack.random_start", "on"},
      // evaluation attack
      {"eval.p", "linf"},
      {"eval.eps", "0.031372549019607843"},
      {"eval.step", "0.00784313725490196"},
      {"eval.steps", "20"},
      {"eval.random_start", "on"},
      {"eval.subset", "0"},
      // weight perturbation
      {"awp", "off"},
      {"awp.gamma", "0.005"},
      {"awp.k2", "1"},
      {"awp.a", "1"},
      {"awp.step", "0"},             // 0 = gamma/(A*K2) default
      {"awp.norm", "frobenius"},     // frobenius | l1
      {"awp.carry", "off"},
      {"rwp", "off"},
      // outer minimization
      {"epochs", "30"},
      {"batch", "128"},
      {"momentum", "0.9"},
      {"weight_decay", "0.0005"},
      {"schedule", "piecewise"},     // piecewise | cosine | cyclic
      {"lr", "0.1"},
      {"schedule.milestones", "15,23"},
      {"schedule.factor", "0.1"},
      {"schedule.peak_epoch", "12"},
      {"schedule.peak_lr", "0.2"},
      {"seed", "1"},
      // landscape
      {"checkpoint", ""},
      {"landscape.dim", "1"},
      {"landscape.alpha_min", "-1"},
      {"landscape.alpha_max", "1"},
      {"landscape.points", "21"},
      {"landscape.subset", "1000"},
      {"landscape.svg", "off"},
      // perturb-compare
      {"compare.gammas", "0,0.001,0.005,0.01"},
      {"compare.draws", "20"},
      {"compare.subset", "256"},
      // histogram
      {"histogram.layer", "0"},
      {"histogram.bins", "40"},
  };
  return d;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.values_ = defaults();
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b2 = s.find_first_not_of(" \t");
      const auto e2 = s.find_last_not_of(" \t");
      s = b2 == std::string::npos ? "" : s.substr(b2, e2 - b2 + 1);
    };
    trim(key);
    trim(val);
    if (cfg.values_.find(key) == cfg.values_.end())
      throw Error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    cfg.values_[key] = val;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

std::string ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("config: unknown key '" + key + "'");
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' is not a number: '" + get(key) + "'");
  }
}

int ExperimentConfig::get_int(const std::string& key) const {
  try {
    return std::stoi(get(key));
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' is not an integer: '" + get(key) + "'");
  }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' is not an integer: '" + get(key) + "'");
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string v = get(key);
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw Error("config: key '" + key + "' must be on/off, got '" + v + "'");
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::istringstream is(get(key));
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::istringstream is(get(key));
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

void ExperimentConfig::override_value(const std::string& key, const std::string& value) {
  if (values_.find(key) == values_.end()) throw Error("config: unknown key '" + key + "'");
  values_[key] = value;
}

std::string ExperimentConfig::resolved() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
  return os.str();
}

ThreatModel ExperimentConfig::threat(const std::string& prefix) const {
  ThreatModel tm;
  const std::string p = get(prefix + ".p");
  if (p == "linf")
    tm.p = NormP::kLinf;
  else if (p == "l2")
    tm.p = NormP::kL2;
  else
    throw Error("config: " + prefix + ".p must be linf or l2");
  tm.epsilon = get_double(prefix + ".eps");
  tm.step_size = get_double(prefix + ".step");
  tm.steps = get_int(prefix + ".steps");
  tm.random_start = get_bool(prefix + ".random_start");
  if (tm.epsilon < 0.0) throw Error("config: " + prefix + ".eps must be >= 0");
  return tm;
}

LossSpec ExperimentConfig::loss_spec() const {
  LossSpec ls;
  const std::string mode = get("mode");
  auto parse_kind = [](const std::string& m) {
    if (m == "at") return LossKind::kAtCe;
    if (m == "trades") return LossKind::kTrades;
    if (m == "mart") return LossKind::kMart;
    if (m == "ssl") return LossKind::kSsl;
    throw Error("config: mode must be at|trades|mart|ssl, got '" + m + "'");
  };
  ls.kind = parse_kind(mode);
  ls.beta = get_double("trades.beta");
  ls.lambda = ls.kind == LossKind::kSsl ? get_double("ssl.lambda") : get_double("mart.lambda");
  if (ls.kind == LossKind::kSsl) ls.ssl_inner = parse_kind(get("ssl.inner"));
  const std::string pen = get("penalty");
  if (pen == "none")
    ls.weight_penalty = PenaltyKind::kNone;
  else if (pen == "l1")
    ls.weight_penalty = PenaltyKind::kL1;
  else if (pen == "l2")
    ls.weight_penalty = PenaltyKind::kL2;
  else
    throw Error("config: penalty must be none|l1|l2");
  ls.lambda_w = get_double("penalty.lambda");
  return ls;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig tc;
  tc.epochs = get_int("epochs");
  tc.batch_size = get_int("batch");
  tc.momentum = get_double("momentum");
  tc.weight_decay = get_double("weight_decay");
  tc.seed = get_u64("seed");
  tc.eval_subset = get_int("eval.subset");
  tc.threat = threat("attack");
  tc.eval_attack = threat("eval");
  tc.loss = loss_spec();

  const std::string sched = get("schedule");
  if (sched == "piecewise") {
    tc.schedule.kind = ScheduleKind::kPiecewise;
  } else if (sched == "cosine") {
    tc.schedule.kind = ScheduleKind::kCosine;
  } else if (sched == "cyclic") {
    tc.schedule.kind = ScheduleKind::kCyclic;
  } else {
    throw Error("config: schedule must be piecewise|cosine|cyclic");
  }
  tc.schedule.init_lr = get_double("lr");
  tc.schedule.milestones = get_int_list("schedule.milestones");
  tc.schedule.factor = get_double("schedule.factor");
  tc.schedule.peak_epoch = get_int("schedule.peak_epoch");
  tc.schedule.peak_lr = get_double("schedule.peak_lr");

  tc.use_awp = get_bool("awp");
  tc.rwp = get_bool("rwp");
  tc.awp.gamma = get_double("awp.gamma");
  tc.awp.steps = get_int("awp.k2");
  tc.awp.alternations = get_int("awp.a");
  tc.awp.step_size = get_double("awp.step");
  const std::string nk = get("awp.norm");
  if (nk == "frobenius")
    tc.awp.norm_kind = NormKind::kFrobenius;
  else if (nk == "l1")
    tc.awp.norm_kind = NormKind::kL1;
  else
    throw Error("config: awp.norm must be frobenius|l1");
  tc.carry_v = get_bool("awp.carry");
  return tc;
}

std::vector<int> ExperimentConfig::input_shape() const {
  std::vector<int> shape;
  std::istringstream is(get("data.shape"));
  std::string tok;
  while (std::getline(is, tok, 'x'))
    if (!tok.empty()) shape.push_back(std::stoi(tok));
  if (shape.empty()) throw Error("config: data.shape is empty");
  return shape;
}

Dataset ExperimentConfig::make_dataset(const std::string& split) const {
  const std::string kind = get("data");
  if (kind == "synth") {
    const int n = split == "train" ? get_int("data.n") : get_int("data.test_n");
    const std::uint64_t seed = SplitMix64::mix(get_u64("seed"), split == "train" ? 11 : 13);
    Dataset ds = synth_blobs(n, get_int("data.classes"), input_shape(), get_double("data.margin"), seed);
    ds.split_tag = split;
    return ds;
  }
  if (kind == "idx") {
    const std::string img = split == "train" ? get("data.images") : get("data.test_images");
    const std::string lab = split == "train" ? get("data.labels") : get("data.test_labels");
    if (img.empty() || lab.empty())
      throw Error("config: data=idx requires data." + std::string(split == "train" ? "" : "test_") +
                  "images and matching labels paths");
    Dataset ds = load_idx(img, lab);
    const int limit = get_int("data.limit");
    if (limit > 0 && limit < ds.size()) ds = ds.sample(limit, SplitMix64::mix(get_u64("seed"), 17));
    ds.split_tag = split;
    return ds;
  }
  throw Error("config: data must be synth|idx");
}

Network ExperimentConfig::build_network() const {
  const std::vector<int> shape = input_shape();
  const int classes = get("data") == "synth" ? get_int("data.classes") : 10;
  return build_model(preset_spec(get("model"), shape, classes), shape, classes, get_u64("seed"));
}

}  // namespace awplab
