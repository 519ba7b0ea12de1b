// include/dasa/checks.h

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

#ifndef DASA_CHECKS_H_
#define DASA_CHECKS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dasa/mc_oracle.h"

namespace dasa {

// Randomized property suites behind the bound-check and grad-check commands.

struct BoundCheckOptions {
  int trials = 50;
  int64_t samples = 100000;
  int num_classes = 3;
  int dim = 4;
  std::optional<double> lambda;  // fixed strength; random when empty
  double lambda_max = 1.0;
  double scale_max = 16.0;
  double margin_max = 0.4;
  uint64_t seed = 1;

  void Validate() const;
};

struct BoundTrialRow {
  int trial;
  std::string variant;  // isda, am-sa or dasa
  double lambda;
  McReport report;
};

struct BoundFamilySummary {
  std::string variant;
  int trials = 0;
  int violations = 0;  // z_score < -3
  double mean_slack = 0.0;
  bool passed = false;  // violations <= 2% of trials and mean_slack >= 0
};

struct BoundCheckResult {
  std::vector<BoundTrialRow> rows;
  std::vector<BoundFamilySummary> families;
  bool passed = false;
};

/// For each trial draws Omega (random PSD), head, unit f, label, lambda, s
/// and m from Rng(seed, trial), then runs the three Monte-Carlo estimators
/// against the softmax bound, the margin bound and the difficulty-aware
/// margin bound.
BoundCheckResult RunBoundCheck(const BoundCheckOptions &options);

/// CSV: trial,variant,lambda,M,mc_mean,se,bound,slack,z_score.
void WriteBoundCheck(const BoundCheckResult &result, const std::string &path);

inline constexpr double kGradTolerance = 1e-5;

struct GradCheckOptions {
  int trials = 100;
  int backbone_trials = 10;
  double epsilon = 1e-6;
  uint64_t seed = 1;

  void Validate() const;
};

struct GradTrialRow {
  int trial;
  std::string variant;  // a loss variant, or "backbone"
  double max_rel_error;
};

struct GradCheckResult {
  std::vector<GradTrialRow> rows;
  double worst = 0.0;
  bool passed = false;  // every row below kGradTolerance
};

GradCheckResult RunGradCheck(const GradCheckOptions &options);

/// CSV: trial,variant,max_rel_error.
void WriteGradCheck(const GradCheckResult &result, const std::string &path);

}  // namespace dasa

#endif  // DASA_CHECKS_H_
