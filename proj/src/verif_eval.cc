// src/verif_eval.cc

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

#include "dasa/verif_eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dasa/rng.h"

namespace dasa {

void TrialSet::Validate() const {
  bool any_target = false, any_nontarget = false;
  for (const Trial &t : pairs) {
    if (t.a == t.b) ThrowValidation("trial pairs an index with itself");
    (t.is_target ? any_target : any_nontarget) = true;
  }
  if (!any_target) ThrowValidation("trial set has no target pairs");
  if (!any_nontarget) ThrowValidation("trial set has no nontarget pairs");
}

void ScoreSet::Validate() const {
  if (scores.size() != is_target.size())
    ThrowValidation("score set: scores and labels differ in length");
  size_t targets = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      ThrowValidation("score set: non-finite score at trial " +
                      std::to_string(i));
    targets += is_target[i] ? 1 : 0;
  }
  if (targets == 0) ThrowValidation("score set: no target trials");
  if (targets == scores.size())
    ThrowValidation("score set: no nontarget trials");
}

void DcfParams::Validate() const {
  if (!(p_target > 0.0 && p_target < 1.0))
    ThrowValidation("eval.p_target must lie in (0, 1)");
  if (!(c_miss > 0.0) || !(c_fa > 0.0))
    ThrowValidation("eval.c_miss and eval.c_fa must be > 0");
}

TrialSet BuildTrials(std::span<const int> labels,
                     size_t max_nontarget_per_target, uint64_t seed) {
  TrialSet out;
  std::vector<Trial> nontargets;
  for (size_t i = 0; i < labels.size(); ++i) {
    for (size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) {
        out.pairs.push_back({i, j, true});
      } else {
        nontargets.push_back({i, j, false});
      }
    }
  }
  const size_t num_targets = out.pairs.size();
  if (num_targets == 0)
    ThrowValidation("BuildTrials: no class has two eval samples");
  if (nontargets.empty())
    ThrowValidation("BuildTrials: eval split has a single class");

  size_t cap = nontargets.size();
  if (max_nontarget_per_target != kUnlimitedNontargets &&
      max_nontarget_per_target <= nontargets.size() / num_targets)
    cap = std::min(cap, max_nontarget_per_target * num_targets);
  if (cap < nontargets.size()) {
    // Partial Fisher-Yates: the first `cap` slots are a uniform sample.
    Rng rng(seed, 11);
    for (size_t k = 0; k < cap; ++k) {
      size_t pick = k + rng.Below(nontargets.size() - k);
      std::swap(nontargets[k], nontargets[pick]);
    }
    nontargets.resize(cap);
    std::sort(nontargets.begin(), nontargets.end(),
              [](const Trial &x, const Trial &y) {
                return x.a != y.a ? x.a < y.a : x.b < y.b;
              });
  }
  out.pairs.insert(out.pairs.end(), nontargets.begin(), nontargets.end());
  return out;
}

double CosineScore(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) ThrowValidation("CosineScore: dimension mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) ThrowValidation("CosineScore: zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

ScoreSet ScoreTrials(const TrialSet &trials,
                     const std::vector<Vector> &embeddings) {
  ScoreSet out;
  out.scores.reserve(trials.pairs.size());
  for (const Trial &t : trials.pairs) {
    if (t.a >= embeddings.size() || t.b >= embeddings.size())
      ThrowValidation("trial index out of range of the embedding list");
    out.scores.push_back(CosineScore(embeddings[t.a], embeddings[t.b]));
    out.is_target.push_back(t.is_target);
  }
  return out;
}

std::vector<SweepPoint> ThresholdSweep(const ScoreSet &scores) {
  scores.Validate();
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    return scores.scores[x] < scores.scores[y];
  });
  size_t n_target = 0;
  for (bool t : scores.is_target) n_target += t ? 1 : 0;
  const size_t n_nontarget = n - n_target;
  const double nt = static_cast<double>(n_target);
  const double nn = static_cast<double>(n_nontarget);

  std::vector<SweepPoint> sweep;
  sweep.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
  // Counts of targets / nontargets strictly below the current threshold.
  size_t below_t = 0, below_n = 0;
  size_t k = 0;
  while (k < n) {
    const double thr = scores.scores[order[k]];
    sweep.push_back({thr, static_cast<double>(below_t) / nt,
                     static_cast<double>(n_nontarget - below_n) / nn});
    while (k < n && scores.scores[order[k]] == thr) {
      (scores.is_target[order[k]] ? below_t : below_n)++;
      ++k;
    }
  }
  sweep.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return sweep;
}

EerResult ComputeEer(const ScoreSet &scores) {
  const std::vector<SweepPoint> sweep = ThresholdSweep(scores);
  for (size_t k = 1; k < sweep.size(); ++k) {
    const double d = sweep[k].far - sweep[k].frr;
    if (d > 0.0) continue;
    if (d == 0.0) return {sweep[k].far, sweep[k].threshold};
    const SweepPoint &lo = sweep[k - 1];
    const SweepPoint &hi = sweep[k];
    const double d_lo = lo.far - lo.frr;
    const double alpha = d_lo / (d_lo - d);
    EerResult r;
    r.eer = lo.far + alpha * (hi.far - lo.far);
    if (std::isinf(lo.threshold)) {
      r.threshold = hi.threshold;
    } else if (std::isinf(hi.threshold)) {
      r.threshold = lo.threshold;
    } else {
      r.threshold = lo.threshold + alpha * (hi.threshold - lo.threshold);
    }
    return r;
  }
  // Unreachable: the +inf point always has FAR - FRR = -1.
  ThrowNumerical("ComputeEer: sweep never crossed");
}

double ComputeMinDcf(const ScoreSet &scores, const DcfParams &params) {
  params.Validate();
  const double miss = params.c_miss * params.p_target;
  const double fa = params.c_fa * (1.0 - params.p_target);
  const double norm = std::min(miss, fa);
  double best = std::numeric_limits<double>::infinity();
  for (const SweepPoint &p : ThresholdSweep(scores))
    best = std::min(best, (miss * p.frr + fa * p.far) / norm);
  return best;
}

std::string FormatMetrics(double eer, double min_dcf) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "EER(%%)=%.3f minDCF=%.3f", 100.0 * eer,
                min_dcf);
  return buf;
}

void WriteTrials(const TrialSet &trials, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "index_a,index_b,is_target\n";
  for (const Trial &t : trials.pairs)
    os << t.a << ',' << t.b << ',' << (t.is_target ? 1 : 0) << '\n';
  if (!os) ThrowIo("write failed for '" + path + "'");
}

TrialSet ReadTrials(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("cannot open trial list '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || Trim(line) != "index_a,index_b,is_target")
    ThrowIo(path + ":1: header must be index_a,index_b,is_target");
  TrialSet out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto f = SplitFields(Trim(line));
    int64_t a = 0, b = 0, t = 0;
    if (f.size() != 3 || !ParseInt(f[0], &a) || !ParseInt(f[1], &b) ||
        !ParseInt(f[2], &t) || a < 0 || b < 0 || a == b ||
        (t != 0 && t != 1))
      ThrowIo(path + ":" + std::to_string(line_no) + ": malformed trial row");
    out.pairs.push_back(
        {static_cast<size_t>(a), static_cast<size_t>(b), t == 1});
  }
  if (out.pairs.empty()) ThrowIo(path + ": no data rows");
  return out;
}

void WriteScores(const TrialSet &trials, const ScoreSet &scores,
                 const std::string &path) {
  if (trials.pairs.size() != scores.size())
    ThrowValidation("WriteScores: trial and score counts differ");
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "index_a,index_b,score,is_target\n";
  for (size_t i = 0; i < scores.size(); ++i)
    os << trials.pairs[i].a << ',' << trials.pairs[i].b << ','
       << FormatDouble(scores.scores[i]) << ','
       << (scores.is_target[i] ? 1 : 0) << '\n';
  if (!os) ThrowIo("write failed for '" + path + "'");
}

void WriteEmbeddings(const std::vector<Vector> &embeddings,
                     const std::vector<int> &labels, const std::string &path) {
  if (embeddings.size() != labels.size())
    ThrowValidation("WriteEmbeddings: label count mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  const Eigen::Index dim = embeddings.empty() ? 0 : embeddings[0].size();
  os << "index,label";
  for (Eigen::Index a = 0; a < dim; ++a) os << ",e" << a;
  os << '\n';
  for (size_t i = 0; i < embeddings.size(); ++i) {
    os << i << ',' << labels[i];
    for (Eigen::Index a = 0; a < dim; ++a)
      os << ',' << FormatDouble(embeddings[i][a]);
    os << '\n';
  }
  if (!os) ThrowIo("write failed for '" + path + "'");
}

std::vector<Vector> ReadEmbeddings(const std::string &path,
                                   std::vector<int> *labels) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("cannot open embeddings '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) ThrowIo(path + ": no data rows");
  auto header = SplitFields(Trim(line));
  if (header.size() < 3 || header[0] != "index" || header[1] != "label")
    ThrowIo(path + ":1: header must be index,label,e0,...");
  const size_t dim = header.size() - 2;
  std::vector<Vector> out;
  if (labels) labels->clear();
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto f = SplitFields(Trim(line));
    const std::string where = path + ":" + std::to_string(line_no);
    int64_t index = 0, label = 0;
    if (f.size() != header.size() || !ParseInt(f[0], &index) ||
        !ParseInt(f[1], &label))
      ThrowIo(where + ": malformed embedding row");
    if (index != static_cast<int64_t>(out.size()))
      ThrowIo(where + ": indices must run 0, 1, 2, ...");
    Vector e(dim);
    for (size_t a = 0; a < dim; ++a)
      if (!ParseDouble(f[2 + a], &e[a]))
        ThrowIo(where + ": bad embedding value");
    out.push_back(std::move(e));
    if (labels) labels->push_back(static_cast<int>(label));
  }
  if (out.empty()) ThrowIo(path + ": no data rows");
  return out;
}

}  // namespace dasa
