// src/run_config.cc

// Copyright 2026  The dasa-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dasa/run_config.h"

#include <fstream>
#include <sstream>

namespace dasa {

const std::vector<std::pair<std::string, std::string>> &RunConfig::Defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"seed", "1"},
      {"data.path", ""},
      {"data.seed", "auto"},
      {"data.num_classes", "10"},
      {"data.input_dim", "20"},
      {"data.samples_per_class", "50"},
      {"data.sigma", "0.3"},
      {"data.anisotropy", "0.5"},
      {"data.hard_pair_fraction", "0"},
      {"model.hidden", "64"},
      {"model.embed_dim", "16"},
      {"loss.variant", "dasa"},
      {"loss.difficulty", "auto"},
      {"loss.strength", "constant"},
      {"loss.gamma", "2"},
      {"loss.scale", "32"},
      {"loss.margin", "0.2"},
      {"sched.lambda0", "1"},
      {"sched.total_iters", "auto"},
      {"sched.deferred_fraction", "0.4"},
      {"cov.mode", "full"},
      {"cov.from_deferred", "false"},
      {"optim.lr_init", "0.05"},
      {"optim.lr_final", "1e-4"},
      {"optim.momentum", "0.9"},
      {"optim.nesterov", "true"},
      {"optim.weight_decay", "1e-4"},
      {"optim.batch_size", "32"},
      {"optim.epochs", "60"},
      {"eval.max_nontarget_per_target", "10"},
      {"eval.p_target", "0.01"},
      {"eval.c_miss", "1"},
      {"eval.c_fa", "1"},
      {"log.samples", "false"},
      {"compare.variants", "am,daam,dasa"},
      {"compare.seeds", "1"},
      {"bound.trials", "50"},
      {"bound.samples", "100000"},
      {"bound.num_classes", "3"},
      {"bound.dim", "4"},
      {"bound.lambda", "random"},
      {"bound.lambda_max", "1"},
      {"bound.scale_max", "16"},
      {"bound.margin_max", "0.4"},
      {"grad.trials", "100"},
      {"grad.backbone_trials", "10"},
      {"grad.epsilon", "1e-6"},
      {"score.embeddings", ""},
      {"score.trials", ""},
  };
  return defaults;
}

RunConfig::RunConfig() {
  for (const auto &[k, v] : Defaults()) values_[k] = v;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  auto it = values_.find(key);
  if (it == values_.end()) ThrowValidation("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::Assign(const std::string &assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    ThrowValidation("expected key=value, got '" + assignment + "'");
  Set(std::string(Trim(std::string_view(assignment).substr(0, eq))),
      std::string(Trim(std::string_view(assignment).substr(eq + 1))));
}

void RunConfig::LoadFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) ThrowIo("cannot open config '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view body = Trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      Assign(std::string(body));
    } catch (const Error &e) {
      ThrowValidation(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

bool RunConfig::Has(const std::string &key) const {
  return values_.count(key) > 0;
}

const std::string &RunConfig::Get(const std::string &key) const {
  auto it = values_.find(key);
  if (it == values_.end()) ThrowValidation("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::GetDouble(const std::string &key) const {
  double v = 0.0;
  if (!ParseDouble(Get(key), &v))
    ThrowValidation(key + ": expected a number, got '" + Get(key) + "'");
  return v;
}

int64_t RunConfig::GetInt(const std::string &key) const {
  int64_t v = 0;
  if (!ParseInt(Get(key), &v))
    ThrowValidation(key + ": expected an integer, got '" + Get(key) + "'");
  return v;
}

bool RunConfig::GetBool(const std::string &key) const {
  const std::string &v = Get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  ThrowValidation(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::GetList(const std::string &key) const {
  std::vector<std::string> out;
  for (const std::string &item : SplitFields(Get(key))) {
    std::string_view t = Trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string RunConfig::Serialize() const {
  std::ostringstream os;
  for (const auto &[k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

void RunConfig::Write(const std::string &path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << Serialize();
  if (!os) ThrowIo("write failed for '" + path + "'");
}

namespace {

int CheckedInt(const RunConfig &c, const std::string &key, int64_t lo,
               int64_t hi) {
  int64_t v = c.GetInt(key);
  if (v < lo || v > hi)
    ThrowValidation(key + " must lie in [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "], got " + std::to_string(v));
  return static_cast<int>(v);
}

uint64_t SeedValue(const RunConfig &c, const std::string &key) {
  int64_t v = c.GetInt(key);
  if (v < 0) ThrowValidation(key + " must be >= 0");
  return static_cast<uint64_t>(v);
}

}  // namespace

SynthSpec ToSynthSpec(const RunConfig &config) {
  SynthSpec spec;
  // Range checks live in SynthSpec::Validate; CheckedInt only guards the
  // narrowing to int.
  spec.num_classes = CheckedInt(config, "data.num_classes", -1000000, 1000000);
  spec.input_dim = CheckedInt(config, "data.input_dim", -1000000, 1000000);
  spec.samples_per_class =
      CheckedInt(config, "data.samples_per_class", -1000000, 1000000);
  spec.sigma = config.GetDouble("data.sigma");
  spec.anisotropy = config.GetDouble("data.anisotropy");
  spec.hard_pair_fraction = config.GetDouble("data.hard_pair_fraction");
  spec.seed = config.Get("data.seed") == "auto" ? SeedValue(config, "seed")
                                                : SeedValue(config, "data.seed");
  spec.Validate();
  return spec;
}

Difficulty DefaultDifficulty(LossVariant variant) {
  return variant == LossVariant::kDaam || variant == LossVariant::kDasa
             ? Difficulty::kDA
             : Difficulty::kNone;
}

TrainConfig ToTrainConfig(const RunConfig &config) {
  TrainConfig tc;
  tc.loss.variant = ParseLossVariant(config.Get("loss.variant"));
  tc.loss.difficulty = config.Get("loss.difficulty") == "auto"
                           ? DefaultDifficulty(tc.loss.variant)
                           : ParseDifficulty(config.Get("loss.difficulty"));
  tc.loss.strength_mode = ParseStrengthMode(config.Get("loss.strength"));
  tc.loss.gamma = config.GetDouble("loss.gamma");
  tc.loss.lambda0 = config.GetDouble("sched.lambda0");
  tc.loss.schedule.deferred_fraction =
      config.GetDouble("sched.deferred_fraction");
  tc.loss.schedule.total_iters =
      config.Get("sched.total_iters") == "auto"
          ? 0
          : CheckedInt(config, "sched.total_iters", 1, 1LL << 40);
  tc.scale = config.GetDouble("loss.scale");
  tc.margin = config.GetDouble("loss.margin");
  tc.optim.lr_init = config.GetDouble("optim.lr_init");
  tc.optim.lr_final = config.GetDouble("optim.lr_final");
  tc.optim.momentum = config.GetDouble("optim.momentum");
  tc.optim.nesterov = config.GetBool("optim.nesterov");
  tc.optim.weight_decay = config.GetDouble("optim.weight_decay");
  tc.batch_size = CheckedInt(config, "optim.batch_size", 1, 1 << 20);
  tc.epochs = CheckedInt(config, "optim.epochs", 1, 1 << 20);
  tc.hidden.clear();
  for (const std::string &h : config.GetList("model.hidden")) {
    int64_t v = 0;
    if (!ParseInt(h, &v) || v < 1 || v > (1 << 16))
      ThrowValidation("model.hidden: bad layer width '" + h + "'");
    tc.hidden.push_back(static_cast<int>(v));
  }
  tc.embed_dim = CheckedInt(config, "model.embed_dim", 2, 1 << 16);
  tc.cov_mode = ParseCovarianceMode(config.Get("cov.mode"));
  tc.cov_from_deferred = config.GetBool("cov.from_deferred");
  tc.dcf.p_target = config.GetDouble("eval.p_target");
  tc.dcf.c_miss = config.GetDouble("eval.c_miss");
  tc.dcf.c_fa = config.GetDouble("eval.c_fa");
  tc.max_nontarget_per_target = static_cast<size_t>(
      CheckedInt(config, "eval.max_nontarget_per_target", 1, 1 << 30));
  tc.seed = SeedValue(config, "seed");
  tc.trial_seed = config.Get("data.seed") == "auto"
                      ? tc.seed
                      : SeedValue(config, "data.seed");
  tc.Validate();
  return tc;
}

}  // namespace dasa
