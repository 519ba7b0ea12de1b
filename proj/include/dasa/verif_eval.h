// include/dasa/verif_eval.h

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

#ifndef DASA_VERIF_EVAL_H_
#define DASA_VERIF_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dasa/common.h"

namespace dasa {

struct Trial {
  size_t a = 0;
  size_t b = 0;
  bool is_target = false;

  bool operator==(const Trial &) const = default;
};

struct TrialSet {
  std::vector<Trial> pairs;

  /// At least one target and one nontarget; no self pairs.
  void Validate() const;
};

struct ScoreSet {
  std::vector<double> scores;
  std::vector<bool> is_target;

  size_t size() const { return scores.size(); }
  /// Equal lengths, finite scores, both classes present.
  void Validate() const;
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void Validate() const;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// One operating point of the threshold sweep: accept iff score >= threshold.
struct SweepPoint {
  double threshold;
  double frr;  // fraction of targets with score < threshold
  double far;  // fraction of nontargets with score >= threshold
};

inline constexpr size_t kUnlimitedNontargets =
    std::numeric_limits<size_t>::max();

/**
   Every same-label pair (i < j) becomes a target trial. Cross-label pairs
   are sampled uniformly without replacement, keeping at most
   max_nontarget_per_target * (number of targets) of them. Indices refer to
   positions in `labels`. Output: targets, then nontargets, each in
   lexicographic (a, b) order.
*/
TrialSet BuildTrials(std::span<const int> labels,
                     size_t max_nontarget_per_target, uint64_t seed);

double CosineScore(const Vector &a, const Vector &b);

ScoreSet ScoreTrials(const TrialSet &trials,
                     const std::vector<Vector> &embeddings);

/// Operating points at -inf, each unique score in ascending order, and +inf.
std::vector<SweepPoint> ThresholdSweep(const ScoreSet &scores);

/// FAR and FRR crossing, linearly interpolated between adjacent sweep points.
EerResult ComputeEer(const ScoreSet &scores);

/// min over the sweep of (c_miss p FRR + c_fa (1 - p) FAR), divided by
/// min(c_miss p, c_fa (1 - p)).
double ComputeMinDcf(const ScoreSet &scores, const DcfParams &params);

/// "EER(%)=x.xxx minDCF=0.xxx"
std::string FormatMetrics(double eer, double min_dcf);

// CSV helpers. Trials: "index_a,index_b,is_target". Scores:
// "index_a,index_b,score,is_target". Embeddings: "index,label,e0,...".
void WriteTrials(const TrialSet &trials, const std::string &path);
TrialSet ReadTrials(const std::string &path);
void WriteScores(const TrialSet &trials, const ScoreSet &scores,
                 const std::string &path);
void WriteEmbeddings(const std::vector<Vector> &embeddings,
                     const std::vector<int> &labels, const std::string &path);
std::vector<Vector> ReadEmbeddings(const std::string &path,
                                   std::vector<int> *labels = nullptr);

}  // namespace dasa

#endif  // DASA_VERIF_EVAL_H_
