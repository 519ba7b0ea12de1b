// include/dasa/loss_family.h

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

#ifndef DASA_LOSS_FAMILY_H_
#define DASA_LOSS_FAMILY_H_

#include <cstdint>
#include <functional>
#include <string>

#include "dasa/common.h"
#include "dasa/embedding_stats.h"

namespace dasa {

/// Last fully connected layer. Biases are read only by the softmax path;
/// the margin losses normalize the weight rows in the forward pass.
struct ClassifierHead {
  Matrix weights;  // C x F
  Vector biases;   // C
  double scale = 32.0;
  double margin = 0.2;

  int num_classes() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }
};

enum class LossVariant { kSoftmax, kIsda, kAm, kDaam, kDasa };
enum class Difficulty { kNone, kDA, kDY };
enum class StrengthMode { kConstant, kDA, kDY };

std::string ToString(LossVariant v);
std::string ToString(Difficulty d);
std::string ToString(StrengthMode s);
LossVariant ParseLossVariant(const std::string &text);
Difficulty ParseDifficulty(const std::string &text);
StrengthMode ParseStrengthMode(const std::string &text);

struct Schedule {
  int64_t total_iters = 1;         // T
  double deferred_fraction = 0.4;  // lambda is 0 while t < fraction * T
};

struct LossConfig {
  LossVariant variant = LossVariant::kDasa;
  Difficulty difficulty = Difficulty::kDA;
  StrengthMode strength_mode = StrengthMode::kConstant;
  double lambda0 = 1.0;
  double gamma = 2.0;
  Schedule schedule;

  /// Throws a validation error naming the offending field.
  void Validate() const;
};

/// Per-sample diagnostics.
struct SampleTerms {
  double cos_y = 0.0;   // target cosine (margin path) or 0 (softmax path)
  double coef = 1.0;    // margin difficulty coefficient actually applied
  double lambda = 0.0;  // effective augmentation strength
  double max_phi = 0.0; // largest quadratic form entering the exponent
};

struct LossOutput {
  double value = 0.0;
  Vector grad_embedding;  // dL/df
  Matrix grad_weights;    // dL/dW, C x F
  Vector grad_biases;     // dL/db; empty on the margin path
  SampleTerms terms;
};

/// -log softmax(W f + b)[label].
LossOutput SoftmaxCe(const Vector &f, const ClassifierHead &head, int label);

/// log sum_j exp((w_j - w_y) f + (b_j - b_y) + lambda/2 * Phi_j), with
/// Omega_y taken from `stats` and held constant.
LossOutput IsdaBound(const Vector &f, const ClassifierHead &head,
                     const ClassStats &stats, double lambda, int label);
LossOutput IsdaBound(const Vector &f, const ClassifierHead &head,
                     const CovarianceBank &bank, double lambda, int label);

/// log(1 + sum_{j != y} exp(s (cos_j - cos_y) + s m)). `f` is expected to
/// be unit norm.
LossOutput AmSoftmax(const Vector &f, const ClassifierHead &head, int label);

/// (1 - cos_y) / 2, with cos_y clamped to [-1, 1].
double DifficultyDa(double cos_y);
/// exp(1 - cos_y) / gamma, with cos_y clamped to [-1, 1].
double DifficultyDy(double cos_y, double gamma);
/// Dispatches on `d`; Difficulty::kNone gives 1.
double DifficultyCoef(Difficulty d, double cos_y, double gamma);

/// AM-Softmax whose margin is m * coef(cos_y).
LossOutput DaamSoftmax(const Vector &f, const ClassifierHead &head, int label,
                       Difficulty difficulty, double gamma);

/// Closed-form bound of the expected difficulty-aware margin loss under
/// Gaussian augmentation with covariance lambda * Omega_y:
///   log(1 + sum_{j != y} exp(s (cos_j - cos_y) + s m coef
///                            + lambda/2 * s^2 * Phi_j)).
/// Strength follows LambdaSchedule at iteration t.
LossOutput DasaBound(const Vector &f, const ClassifierHead &head,
                     const CovarianceBank &bank, int label,
                     const LossConfig &config, int64_t t);

/// Same bound at a fixed strength lambda.
LossOutput DasaBoundAt(const Vector &f, const ClassifierHead &head,
                       const ClassStats &stats, int label,
                       Difficulty difficulty, double gamma, double lambda);

/// 0 while t < deferred_fraction * T, else t / T. t is clamped to [0, T].
double RampFactor(int64_t t, const Schedule &schedule);

/// Constant-strength schedule: RampFactor(t) * lambda0.
double LambdaSchedule(int64_t t, const LossConfig &config);
/// Per-sample schedule: RampFactor(t) * base, with base = lambda0 in
/// constant mode and DA(cos_y) or DY(cos_y, gamma) otherwise.
double LambdaSchedule(int64_t t, const LossConfig &config, double cos_y);

/// Evaluates whichever variant `config` selects at iteration t.
LossOutput EvaluateLoss(const LossConfig &config, const Vector &f,
                        const ClassifierHead &head, const CovarianceBank &bank,
                        int label, int64_t t);

using LossFunction =
    std::function<LossOutput(const Vector &f, const ClassifierHead &head)>;

/**
   Derivative of g at 0 from central differences (g(h) - g(-h)) / 2h,
   Richardson-extrapolated over steps shrinking from kFdFirstStep by a
   factor 1.4 down to `epsilon` (Ridders' scheme). A single difference at a
   tiny step loses about ulp(g) / h to cancellation, which swamps gradient
   entries near zero; the extrapolated tableau reaches ~1e-12 instead.
*/
inline constexpr double kFdFirstStep = 1e-3;
double CentralDifference(const std::function<double(double)> &g,
                         double epsilon);

/// Central-difference check of every analytic gradient entry (f, W, and b
/// when the loss reports bias gradients). Returns
///   max |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
double LossGradientCheck(const LossFunction &loss, const Vector &f,
                         const ClassifierHead &head, double epsilon);

}  // namespace dasa

#endif  // DASA_LOSS_FAMILY_H_
