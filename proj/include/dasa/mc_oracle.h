// include/dasa/mc_oracle.h

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

#ifndef DASA_MC_ORACLE_H_
#define DASA_MC_ORACLE_H_

#include <cstdint>

#include "dasa/common.h"
#include "dasa/embedding_stats.h"
#include "dasa/loss_family.h"
#include "dasa/rng.h"

namespace dasa {

/// Monte-Carlo estimate of an expected loss next to its closed-form bound.
struct McReport {
  double mean = 0.0;
  double std_error = 0.0;
  int64_t samples = 0;
  double bound_value = 0.0;
  double slack = 0.0;    // bound_value - mean
  double z_score = 0.0;  // slack / std_error; 0 when both are 0
};

/// Smallest M the estimators accept.
inline constexpr int64_t kMinMcSamples = 100;

/// One draw of f + L z, z ~ N(0, I), L = SamplerFactor(stats, lambda).
/// lambda == 0 returns f unchanged.
Vector SampleAugmented(const Vector &f, const ClassStats &stats, double lambda,
                       Rng &rng);

/// Mean over M augmented draws of the softmax cross entropy, against
/// IsdaBound on the same inputs. Draws come from Rng(seed, 0).
McReport McExpectedCe(const Vector &f, const ClassifierHead &head,
                      const ClassStats &stats, double lambda, int label,
                      int64_t samples, uint64_t seed);

/// Mean over M augmented draws of
///   log(1 + sum_{j != y} exp(s (w_j - w_y)^T f~ + s m coef))
/// with unit-normalized weight rows and coef evaluated once at the clean
/// embedding. The bound is DasaBoundAt with the same difficulty.
McReport McExpectedMargin(const Vector &f, const ClassifierHead &head,
                          const ClassStats &stats, double lambda, int label,
                          Difficulty difficulty, double gamma, int64_t samples,
                          uint64_t seed);

struct MomentCheck {
  double mc_mean = 0.0;
  double closed_form = 0.0;
  double std_error = 0.0;
  double rel_error = 0.0;  // |mc_mean - closed_form| / closed_form
  bool passed = false;     // rel_error <= 5 * std_error / closed_form
};

/// Compares the sample mean of exp(t X), X ~ N(mu, sigma2), with
/// exp(t mu + sigma2 t^2 / 2). Requires sigma2 >= 0 and |t| sqrt(sigma2) <= 3.
MomentCheck MomentIdentityCheck(double mu, double sigma2, double t,
                                int64_t samples, uint64_t seed);

}  // namespace dasa

#endif  // DASA_MC_ORACLE_H_
