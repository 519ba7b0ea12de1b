// src/commands.cc

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

#include "dasa/commands.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "dasa/checks.h"
#include "dasa/run_config.h"
#include "dasa/synth_data.h"
#include "dasa/tiny_trainer.h"
#include "dasa/verif_eval.h"

namespace dasa {

CompareEntry ParseCompareEntry(const std::string &text) {
  std::vector<std::string> parts = SplitFields(text, ':');
  if (parts.empty() || parts.size() > 4)
    ThrowValidation("compare.variants: bad entry '" + text +
                    "', expected variant[:difficulty[:strength[:lambda0]]]");
  for (std::string &p : parts) p = std::string(Trim(p));
  CompareEntry e;
  e.variant = ParseLossVariant(parts[0]);
  if (parts.size() > 1) {
    e.difficulty = parts[1];
    if (e.difficulty != "auto") ParseDifficulty(e.difficulty);
  }
  if (parts.size() > 2) {
    e.strength = parts[2];
    ParseStrengthMode(e.strength);
  }
  if (parts.size() > 3) {
    double v = 0.0;
    if (!ParseDouble(parts[3], &v))
      ThrowValidation("compare.variants: bad lambda0 in '" + text + "'");
    e.lambda0 = parts[3];
  }
  return e;
}

namespace {

struct CommonFlags {
  std::string config;
  std::optional<int64_t> seed;
  std::string out = "out";
  std::vector<std::string> sets;
  std::string embeddings;
  std::string trials;
};

RunConfig Resolve(const CommonFlags &flags) {
  RunConfig cfg;
  if (!flags.config.empty()) cfg.LoadFile(flags.config);
  if (flags.seed) cfg.Set("seed", std::to_string(*flags.seed));
  for (const std::string &s : flags.sets) cfg.Assign(s);
  if (!flags.embeddings.empty()) cfg.Set("score.embeddings", flags.embeddings);
  if (!flags.trials.empty()) cfg.Set("score.trials", flags.trials);
  return cfg;
}

std::string PrepareOut(const std::string &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) ThrowIo("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

std::string Join(const std::string &dir, const char *name) {
  return (std::filesystem::path(dir) / name).string();
}

Dataset LoadOrGenerate(const RunConfig &cfg) {
  const std::string &path = cfg.Get("data.path");
  if (!path.empty()) return ReadDataset(path);
  return Generate(ToSynthSpec(cfg));
}

int CmdGen(const RunConfig &cfg, const std::string &out_dir, std::ostream &out) {
  Dataset data = Generate(ToSynthSpec(cfg));
  PrepareOut(out_dir);
  cfg.Write(Join(out_dir, "run.cfg"));
  std::string path = Join(out_dir, "dataset.csv");
  WriteDataset(data, path);
  out << path << '\n';
  return kExitOk;
}

int CmdTrain(const RunConfig &cfg, const std::string &out_dir, std::ostream &out,
             std::ostream &err) {
  TrainConfig tc = ToTrainConfig(cfg);
  Dataset data = LoadOrGenerate(cfg);
  PrepareOut(out_dir);
  cfg.Write(Join(out_dir, "run.cfg"));

  std::ofstream samples;
  SampleLogger logger;
  if (cfg.GetBool("log.samples")) {
    std::string path = Join(out_dir, "samples.csv");
    samples.open(path, std::ios::binary);
    if (!samples) ThrowIo("cannot open '" + path + "' for writing");
    samples << "iteration,sample,cos_y,coef,lambda,loss\n";
    logger = [&samples](const SampleLogRow &r) {
      samples << r.iteration << ',' << r.sample << ',' << FormatDouble(r.cos_y)
              << ',' << FormatDouble(r.coef) << ',' << FormatDouble(r.lambda)
              << ',' << FormatDouble(r.loss) << '\n';
    };
  }

  TrainRun run = Train(tc, data, logger);
  WriteMetrics(run.metrics, Join(out_dir, "metrics.csv"));
  WriteModel(run.model, run.head, Join(out_dir, "model.csv"));
  run.bank.Write(Join(out_dir, "bank.csv"));
  const EvalResult &ev = run.final_eval;
  WriteEmbeddings(ev.embeddings, ev.labels, Join(out_dir, "embeddings.csv"));
  WriteTrials(ev.trials, Join(out_dir, "trials.csv"));
  WriteScores(ev.trials, ev.scores, Join(out_dir, "scores.csv"));
  if (run.degenerate_outputs > 0)
    err << "warning: " << run.degenerate_outputs
        << " zero-norm embeddings were replaced by e_1\n";
  out << FormatMetrics(ev.eer, ev.min_dcf) << '\n';
  return kExitOk;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int CmdCompare(const RunConfig &cfg, const std::string &out_dir,
               std::ostream &out, std::ostream &err) {
  std::vector<CompareEntry> entries;
  std::vector<std::string> labels;
  for (const std::string &item : cfg.GetList("compare.variants")) {
    CompareEntry e = ParseCompareEntry(item);
    if (std::find(entries.begin(), entries.end(), e) != entries.end()) {
      err << "warning: duplicate compare entry '" << item << "' ignored\n";
      continue;
    }
    entries.push_back(e);
    labels.push_back(item);
  }
  if (entries.size() < 2)
    ThrowValidation("compare.variants needs at least 2 distinct entries");
  std::vector<uint64_t> seeds;
  for (const std::string &s : cfg.GetList("compare.seeds")) {
    int64_t v = 0;
    if (!ParseInt(s, &v) || v < 0)
      ThrowValidation("compare.seeds: bad seed '" + s + "'");
    seeds.push_back(static_cast<uint64_t>(v));
  }
  if (seeds.empty()) ThrowValidation("compare.seeds must not be empty");

  // Resolve every sub-configuration before any training starts.
  std::vector<std::vector<RunConfig>> runs(seeds.size());
  for (size_t si = 0; si < seeds.size(); ++si) {
    for (const CompareEntry &e : entries) {
      RunConfig sub = cfg;
      sub.Set("seed", std::to_string(seeds[si]));
      sub.Set("loss.variant", ToString(e.variant));
      if (!e.difficulty.empty()) sub.Set("loss.difficulty", e.difficulty);
      if (!e.strength.empty()) sub.Set("loss.strength", e.strength);
      if (!e.lambda0.empty()) sub.Set("sched.lambda0", e.lambda0);
      ToTrainConfig(sub);
      runs[si].push_back(sub);
    }
  }
  PrepareOut(out_dir);
  cfg.Write(Join(out_dir, "run.cfg"));

  std::string path = Join(out_dir, "compare.csv");
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "variant,difficulty,strength_mode,lambda0,seed,eer,min_dcf\n";
  std::vector<std::vector<double>> eers(entries.size()), dcfs(entries.size());
  for (size_t si = 0; si < seeds.size(); ++si) {
    // One dataset per seed, shared by every variant.
    Dataset data = LoadOrGenerate(runs[si][0]);
    for (size_t k = 0; k < entries.size(); ++k) {
      TrainConfig tc = ToTrainConfig(runs[si][k]);
      TrainRun run;
      try {
        run = Train(tc, data);
      } catch (const Error &e) {
        throw Error(e.kind(), "compare run '" + labels[k] + "' seed " +
                                  std::to_string(seeds[si]) + ": " + e.what());
      }
      const double eer = run.final_eval.eer, dcf = run.final_eval.min_dcf;
      eers[k].push_back(eer);
      dcfs[k].push_back(dcf);
      os << ToString(tc.loss.variant) << ',' << ToString(tc.loss.difficulty)
         << ',' << ToString(tc.loss.strength_mode) << ','
         << FormatDouble(tc.loss.lambda0) << ',' << seeds[si] << ','
         << FormatDouble(eer) << ',' << FormatDouble(dcf) << '\n';
    }
  }
  if (!os) ThrowIo("write failed for '" + path + "'");
  for (size_t k = 0; k < entries.size(); ++k)
    out << labels[k] << " median " << FormatMetrics(Median(eers[k]), Median(dcfs[k]))
        << '\n';
  return kExitOk;
}

BoundCheckOptions ToBoundOptions(const RunConfig &cfg) {
  BoundCheckOptions o;
  o.trials = static_cast<int>(std::clamp<int64_t>(cfg.GetInt("bound.trials"),
                                                  -1, 1 << 24));
  o.samples = cfg.GetInt("bound.samples");
  o.num_classes = static_cast<int>(
      std::clamp<int64_t>(cfg.GetInt("bound.num_classes"), -1, 1 << 16));
  o.dim = static_cast<int>(
      std::clamp<int64_t>(cfg.GetInt("bound.dim"), -1, 1 << 12));
  if (cfg.Get("bound.lambda") != "random") o.lambda = cfg.GetDouble("bound.lambda");
  o.lambda_max = cfg.GetDouble("bound.lambda_max");
  o.scale_max = cfg.GetDouble("bound.scale_max");
  o.margin_max = cfg.GetDouble("bound.margin_max");
  int64_t seed = cfg.GetInt("seed");
  if (seed < 0) ThrowValidation("seed must be >= 0");
  o.seed = static_cast<uint64_t>(seed);
  o.Validate();
  return o;
}

int CmdBoundCheck(const RunConfig &cfg, const std::string &out_dir,
                  std::ostream &out, std::ostream &err) {
  BoundCheckOptions o = ToBoundOptions(cfg);
  PrepareOut(out_dir);
  cfg.Write(Join(out_dir, "run.cfg"));
  BoundCheckResult r = RunBoundCheck(o);
  WriteBoundCheck(r, Join(out_dir, "bound_check.csv"));
  for (const BoundFamilySummary &s : r.families) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%-6s trials=%d violations=%d mean_slack=%.6g %s",
                  s.variant.c_str(), s.trials, s.violations, s.mean_slack,
                  s.passed ? "PASS" : "FAIL");
    out << buf << '\n';
  }
  if (r.passed) return kExitOk;
  for (const BoundTrialRow &row : r.rows)
    if (row.report.z_score < -3.0)
      err << "violation: trial " << row.trial << " variant " << row.variant
          << " z=" << FormatDouble(row.report.z_score) << '\n';
  err << "bound check failed\n";
  return kExitNumerical;
}

int CmdGradCheck(const RunConfig &cfg, const std::string &out_dir,
                 std::ostream &out, std::ostream &err) {
  GradCheckOptions o;
  o.trials = static_cast<int>(
      std::clamp<int64_t>(cfg.GetInt("grad.trials"), -1, 1 << 24));
  o.backbone_trials = static_cast<int>(
      std::clamp<int64_t>(cfg.GetInt("grad.backbone_trials"), -1, 1 << 24));
  o.epsilon = cfg.GetDouble("grad.epsilon");
  int64_t seed = cfg.GetInt("seed");
  if (seed < 0) ThrowValidation("seed must be >= 0");
  o.seed = static_cast<uint64_t>(seed);
  o.Validate();
  PrepareOut(out_dir);
  cfg.Write(Join(out_dir, "run.cfg"));
  GradCheckResult r = RunGradCheck(o);
  WriteGradCheck(r, Join(out_dir, "grad_check.csv"));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "rows=%zu worst_rel_error=%.3e %s",
                r.rows.size(), r.worst, r.passed ? "PASS" : "FAIL");
  out << buf << '\n';
  if (r.passed) return kExitOk;
  for (const GradTrialRow &row : r.rows)
    if (!(row.max_rel_error < kGradTolerance))
      err << "violation: trial " << row.trial << " variant " << row.variant
          << " rel_error=" << FormatDouble(row.max_rel_error) << '\n';
  err << "gradient check failed\n";
  return kExitNumerical;
}

int CmdScore(const RunConfig &cfg, const std::string &out_dir,
             std::ostream &out) {
  const std::string &emb_path = cfg.Get("score.embeddings");
  const std::string &trial_path = cfg.Get("score.trials");
  if (emb_path.empty()) ThrowValidation("score needs --embeddings");
  if (trial_path.empty()) ThrowValidation("score needs --trials");
  DcfParams dcf{cfg.GetDouble("eval.p_target"), cfg.GetDouble("eval.c_miss"),
                cfg.GetDouble("eval.c_fa")};
  dcf.Validate();
  std::vector<Vector> embeddings = ReadEmbeddings(emb_path);
  TrialSet trials = ReadTrials(trial_path);
  ScoreSet scores = ScoreTrials(trials, embeddings);
  double eer = ComputeEer(scores).eer;
  double min_dcf = ComputeMinDcf(scores, dcf);
  PrepareOut(out_dir);
  cfg.Write(Join(out_dir, "run.cfg"));
  WriteScores(trials, scores, Join(out_dir, "scores.csv"));
  out << FormatMetrics(eer, min_dcf) << '\n';
  return kExitOk;
}

void AddCommon(CLI::App *sub, CommonFlags *flags) {
  sub->add_option("--config", flags->config, "Configuration file (key = value)");
  sub->add_option("--seed", flags->seed, "Master seed");
  sub->add_option("--out", flags->out, "Output directory")->capture_default_str();
  sub->add_option("--set", flags->sets, "Override one key: key=value")
      ->take_all()
      ->allow_extra_args(false);
}

}  // namespace

int RunCli(int argc, const char *const *argv, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"Difficulty-aware semantic augmentation lab", "dasa-lab"};
  app.require_subcommand(1);
  CommonFlags flags;
  struct Sub {
    const char *name;
    const char *help;
  };
  const Sub subs[] = {
      {"gen", "Generate a synthetic dataset"},
      {"train", "Train the embedder and report EER/minDCF"},
      {"compare", "Train several loss configurations on shared data"},
      {"bound-check", "Monte-Carlo check of the augmented-loss upper bounds"},
      {"grad-check", "Finite-difference check of every loss gradient"},
      {"score", "Score trials from embedding and trial CSVs"},
  };
  for (const Sub &s : subs) {
    CLI::App *sub = app.add_subcommand(s.name, s.help);
    AddCommon(sub, &flags);
    if (std::string(s.name) == "score") {
      sub->add_option("--embeddings", flags.embeddings, "Embedding CSV");
      sub->add_option("--trials", flags.trials, "Trial CSV");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = Resolve(flags);
    if (name == "gen") return CmdGen(cfg, flags.out, out);
    if (name == "train") return CmdTrain(cfg, flags.out, out, err);
    if (name == "compare") return CmdCompare(cfg, flags.out, out, err);
    if (name == "bound-check") return CmdBoundCheck(cfg, flags.out, out, err);
    if (name == "grad-check") return CmdGradCheck(cfg, flags.out, out, err);
    return CmdScore(cfg, flags.out, out);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kNumerical ? kExitNumerical : kExitValidation;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err) {
  std::vector<const char *> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("dasa-lab");
  for (const std::string &a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dasa
