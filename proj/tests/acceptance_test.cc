// tests/acceptance_test.cc

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

// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed criterion numbers. Exit status is
// 0 only if every selected criterion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dasa/checks.h"
#include "dasa/commands.h"
#include "dasa/embedding_stats.h"
#include "dasa/loss_family.h"
#include "dasa/mc_oracle.h"
#include "dasa/tiny_trainer.h"
#include "dasa/verif_eval.h"
#include "oracles.h"
#include "test_util.h"

namespace dasa {
namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

ClassifierHead RandomTrialHead(Rng &rng, int *label, Vector *f) {
  const int c = 2 + static_cast<int>(rng.Below(9));
  const int dim = 2 + static_cast<int>(rng.Below(15));
  ClassifierHead h = testing::RandomHead(c, dim, rng, 1.0 + 63.0 * rng.Uniform(),
                                         0.5 * rng.Uniform());
  h.biases = testing::RandomVector(c, rng, 0.5);
  *label = static_cast<int>(rng.Below(static_cast<uint64_t>(c)));
  *f = testing::RandomUnit(dim, rng);
  return h;
}

Outcome Reductions() {
  double worst[4] = {0.0, 0.0, 0.0, 0.0};
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng(101, trial);
    int y = 0;
    Vector f;
    ClassifierHead h = RandomTrialHead(rng, &y, &f);
    ClassStats stats = testing::StatsWith(
        testing::RandomPsd(static_cast<int>(f.size()), rng, 1.0), y);
    const Difficulty d = trial % 2 ? Difficulty::kDY : Difficulty::kDA;

    worst[0] = std::max(worst[0],
                        std::abs(DasaBoundAt(f, h, stats, y, d, 2.0, 0.0).value -
                                 DaamSoftmax(f, h, y, d, 2.0).value));
    worst[1] = std::max(
        worst[1], std::abs(DaamSoftmax(f, h, y, Difficulty::kNone, 2.0).value -
                           AmSoftmax(f, h, y).value));
    worst[2] = std::max(worst[2],
                        std::abs(IsdaBound(f, h, stats, 0.0, y).value -
                                 SoftmaxCe(f, h, y).value));
    ClassifierHead unit = h;
    unit.scale = 1.0;
    unit.margin = 0.0;
    ClassifierHead cosine = h;
    cosine.weights = h.weights.rowwise().normalized();
    cosine.biases = Vector::Zero(h.num_classes());
    worst[3] = std::max(worst[3], std::abs(AmSoftmax(f, unit, y).value -
                                           SoftmaxCe(f, cosine, y).value));
  }
  double w = *std::max_element(worst, worst + 4);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |diff| dasa/daam=%.1e daam/am=%.1e isda/ce=%.1e am/cos=%.1e",
                worst[0], worst[1], worst[2], worst[3]);
  return {w <= 1e-12, buf};
}

Outcome BoundSuite() {
  BoundCheckResult r = RunBoundCheck(BoundCheckOptions());
  std::ostringstream os;
  for (const BoundFamilySummary &s : r.families)
    os << s.variant << " violations=" << s.violations << "/" << s.trials
       << " mean_slack=" << s.mean_slack << "; ";
  return {r.passed, os.str()};
}

Outcome MomentIdentity() {
  const double settings[10][3] = {
      {0.0, 1.0, 1.0},   {0.5, 0.25, 2.0}, {-1.0, 2.0, 0.5}, {2.0, 0.1, -1.5},
      {0.0, 4.0, -0.7},  {1.0, 0.0, 3.0},  {-0.3, 0.5, 1.2}, {0.7, 1.5, -1.0},
      {3.0, 0.01, 10.0}, {-2.0, 9.0, 0.3}};
  int passed = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    MomentCheck m = MomentIdentityCheck(settings[k][0], settings[k][1],
                                        settings[k][2], 1000000, 300 + k);
    passed += m.passed ? 1 : 0;
    if (m.std_error > 0.0)
      worst = std::max(worst, std::abs(m.mc_mean - m.closed_form) / m.std_error);
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d/10 settings within 5 SE (worst %.2f SE)",
                passed, worst);
  return {passed == 10, buf};
}

Outcome GradientChecks() {
  GradCheckResult r = RunGradCheck(GradCheckOptions());
  std::map<std::string, std::pair<int, double>> per;
  for (const GradTrialRow &row : r.rows) {
    auto &p = per[row.variant];
    ++p.first;
    p.second = std::max(p.second, row.max_rel_error);
  }
  bool counts_ok = per.size() == 6;
  std::ostringstream os;
  for (const auto &[name, p] : per) {
    counts_ok = counts_ok && p.first == (name == "backbone" ? 10 : 100);
    os << name << " n=" << p.first << " max=" << p.second << "; ";
  }
  return {r.passed && counts_ok, os.str()};
}

Outcome CovarianceOracle() {
  double worst = 0.0;
  for (int stream = 0; stream < 100; ++stream) {
    Rng rng(202, stream);
    const int dim = 1 + static_cast<int>(rng.Below(16));
    const int n = 2 + static_cast<int>(rng.Below(500));
    Vector offset = testing::RandomVector(dim, rng, 5.0);
    std::vector<Vector> xs;
    for (int i = 0; i < n; ++i)
      xs.push_back(offset + testing::RandomVector(dim, rng, 0.05 + rng.Uniform()));
    Vector mean;
    Matrix cov;
    oracle::TwoPassCovariance(xs, &mean, &cov);
    auto rel = [&](const Matrix &m) {
      return (m - cov).norm() / std::max(cov.norm(), 1e-300);
    };
    ClassStats s(0, dim, CovarianceMode::kFull);
    for (const Vector &x : xs) s.Add(x);
    worst = std::max(worst, rel(s.Covariance()));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.Below(static_cast<uint64_t>(i + 1))]);
    ClassStats p(0, dim, CovarianceMode::kFull);
    for (int i : perm) p.Add(xs[i]);
    worst = std::max(worst, rel(p.Covariance()));
  }
  char buf[80];
  std::snprintf(buf, sizeof(buf), "worst relative Frobenius error %.2e", worst);
  return {worst <= 1e-8, buf};
}

Outcome DifficultyCoefficients() {
  bool ok = DifficultyDa(1.0) == 0.0 && DifficultyDa(-1.0) == 1.0 &&
            DifficultyDa(0.0) == 0.5 && DifficultyDy(1.0, 2.0) == 0.5 &&
            std::abs(DifficultyDy(0.0, 2.0) - std::exp(1.0) / 2.0) <= 1e-12;
  const bool exact = ok;
  for (int i = 1; i < 1000; ++i) {
    const double a = -1.0 + 2.0 * (i - 1) / 999.0;
    const double b = -1.0 + 2.0 * i / 999.0;
    ok = ok && DifficultyDa(b) < DifficultyDa(a) &&
         DifficultyDy(b, 2.0) < DifficultyDy(a, 2.0);
  }
  return {ok, std::string("endpoint values ") + (exact ? "exact" : "wrong") +
                  ", strictly decreasing on a 1000-point grid: " +
                  (ok ? "yes" : "no")};
}

Outcome EvalOracle() {
  int agree = 0, invariant = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(303, trial);
    const size_t n = 2 + rng.Below(99);
    ScoreSet s;
    const double grid = 1.0 + static_cast<double>(rng.Below(20));
    for (size_t i = 0; i < n; ++i) {
      bool target = i == 0 ? true : i == 1 ? false : rng.Uniform() < 0.3;
      s.scores.push_back(std::round((rng.Normal() + (target ? 0.8 : 0.0)) * grid) /
                         grid);
      s.is_target.push_back(target);
    }
    DcfParams p;
    const double eer = ComputeEer(s).eer, dcf = ComputeMinDcf(s, p);
    bool same = eer == oracle::BruteEer(s.scores, s.is_target) &&
                dcf == oracle::BruteMinDcf(s.scores, s.is_target, p.p_target,
                                           p.c_miss, p.c_fa);
    for (const SweepPoint &pt : ThresholdSweep(s)) {
      oracle::Rates r = oracle::CountRates(s.scores, s.is_target, pt.threshold);
      same = same && r.far == pt.far && r.frr == pt.frr;
    }
    agree += same ? 1 : 0;
    ScoreSet t = s;
    for (double &v : t.scores) v = 2.0 * std::tanh(v) - 7.0;
    invariant += ComputeEer(t).eer == eer && ComputeMinDcf(t, p) == dcf ? 1 : 0;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "%d/200 equal to enumeration, %d/200 transform-invariant", agree,
                invariant);
  return {agree == 200 && invariant == 200, buf};
}

// Settings of the desk-scale directional experiment, shared by all variants.
const std::vector<std::string> kDirectionalSettings = {
    "data.num_classes=20",      "data.hard_pair_fraction=0.5",
    "compare.variants=am,daam,dasa", "compare.seeds=1,2,3,4,5",
};

Outcome Directional(const std::string &dir) {
  std::vector<std::string> args = {"compare", "--out", dir};
  for (const std::string &kv : kDirectionalSettings) {
    args.push_back("--set");
    args.push_back(kv);
  }
  std::ostringstream out, err;
  if (RunCli(args, out, err) != kExitOk)
    return {false, "compare failed: " + err.str()};
  std::map<std::string, std::vector<double>> eers;
  std::istringstream csv(testing::Slurp(dir + "/compare.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    eers[f[0]].push_back(std::stod(f[5]));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  if (eers["am"].size() != 5 || eers["daam"].size() != 5 ||
      eers["dasa"].size() != 5)
    return {false, "compare.csv does not hold 5 seeds per variant"};
  const double am = median(eers["am"]), daam = median(eers["daam"]),
               dasa = median(eers["dasa"]);
  const double reduction = am > 0.0 ? (am - dasa) / am : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "median EER(%%) am=%.3f daam=%.3f dasa=%.3f, dasa vs am "
                "reduction=%.1f%%",
                100 * am, 100 * daam, 100 * dasa, 100 * reduction);
  return {daam <= am && dasa <= daam && reduction >= 0.03, buf};
}

Outcome ScheduleContract() {
  LossConfig c;
  c.lambda0 = 0.75;
  c.schedule.total_iters = 1000;
  c.schedule.deferred_fraction = 0.4;
  bool ok = true;
  for (int64_t t = 0; t < 400; ++t) ok = ok && LambdaSchedule(t, c) == 0.0;
  ok = ok && LambdaSchedule(400, c) > 0.0;
  ok = ok && LambdaSchedule(1000, c) == 0.75;
  const bool lr = LearningRate(0, 1000, 0.05, 1e-4) == 0.05 &&
                  LearningRate(1000, 1000, 0.05, 1e-4) == 1e-4;
  return {ok && lr, std::string("lambda contract ") + (ok ? "holds" : "broken") +
                        ", lr endpoints " + (lr ? "exact" : "wrong")};
}

Outcome Determinism(const std::string &root) {
  namespace fs = std::filesystem;
  const std::vector<std::string> small = {
      "--set", "data.num_classes=4",  "--set", "data.samples_per_class=20",
      "--set", "optim.epochs=3",      "--set", "model.hidden=16",
      "--set", "model.embed_dim=8",   "--set", "compare.seeds=1,2",
      "--set", "bound.trials=3",      "--set", "bound.samples=5000",
      "--set", "grad.trials=3",       "--set", "grad.backbone_trials=2"};
  std::vector<std::string> failures;
  auto run = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    return RunCli(args, out, err);
  };
  const std::string train_dir = root + "/train_first";
  for (const std::string cmd :
       {"gen", "train", "compare", "bound-check", "grad-check", "score"}) {
    const std::string first = root + "/" + cmd + "_first";
    const std::string second = root + "/" + cmd + "_second";
    std::vector<std::string> args = {cmd, "--out", first};
    args.insert(args.end(), small.begin(), small.end());
    if (cmd == "score") {
      args.insert(args.end(), {"--embeddings", train_dir + "/embeddings.csv",
                               "--trials", train_dir + "/trials.csv"});
    }
    if (run(args) != kExitOk ||
        run({cmd, "--config", first + "/run.cfg", "--out", second}) != kExitOk) {
      failures.push_back(cmd + " did not run");
      continue;
    }
    for (const auto &entry : fs::directory_iterator(first)) {
      const std::string name = entry.path().filename().string();
      if (testing::Slurp(first + "/" + name) !=
          testing::Slurp(second + "/" + name))
        failures.push_back(cmd + "/" + name);
    }
  }
  std::string detail = failures.empty() ? "6 commands reproduced byte-identically"
                                        : "differs:";
  for (const std::string &f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

}  // namespace
}  // namespace dasa

int main(int argc, char **argv) {
  using namespace dasa;
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  const std::string root = testing::TempDir("acceptance");

  struct Criterion {
    std::string name;
    double budget_seconds;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"reduction identities", 10, Reductions},
      {"Jensen bound suite", 180, BoundSuite},
      {"moment identity", 30, MomentIdentity},
      {"gradient checks", 60, GradientChecks},
      {"covariance oracle", 10, CovarianceOracle},
      {"difficulty coefficients", 0, DifficultyCoefficients},
      {"EER/minDCF oracle", 30, EvalOracle},
      {"directional experiment", 600,
       [&] { return Directional(root + "/compare"); }},
      {"schedule contract", 0, ScheduleContract},
      {"determinism", 0, [&] { return Determinism(root); }},
  };

  bool all = true;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].run();
    } catch (const std::exception &e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    const double budget = criteria[k].budget_seconds;
    if (budget > 0.0 && secs > budget) {
      o.passed = false;
      o.detail += " [over the " + std::to_string(static_cast<int>(budget)) +
                  "s budget]";
    }
    all = all && o.passed;
    std::printf("criterion %2d %-24s %s (%.1fs) %s\n", id,
                criteria[k].name.c_str(), o.passed ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
