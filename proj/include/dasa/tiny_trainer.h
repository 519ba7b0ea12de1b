// include/dasa/tiny_trainer.h

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

#ifndef DASA_TINY_TRAINER_H_
#define DASA_TINY_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dasa/common.h"
#include "dasa/embedding_stats.h"
#include "dasa/loss_family.h"
#include "dasa/rng.h"
#include "dasa/synth_data.h"
#include "dasa/verif_eval.h"

namespace dasa {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Feed-forward embedder: ReLU hidden layers, linear output layer, then L2
/// normalization onto the unit sphere.
class TinyEmbedder {
 public:
  struct Cache {
    std::vector<Vector> inputs;  // input of each layer (post-ReLU)
    Vector pre_norm;             // output layer result before normalization
    double norm = 0.0;
    bool degenerate = false;     // pre_norm was zero; output is e_1
    bool valid = false;
  };

  TinyEmbedder() = default;
  explicit TinyEmbedder(std::vector<DenseLayer> layers);

  /// He-normal weights, zero biases. dims = {d_in, h_1, ..., F}.
  static TinyEmbedder Random(const std::vector<int> &dims, Rng &rng);

  Vector Forward(const Vector &x, Cache *cache = nullptr) const;

  /// Parameter gradients for an upstream dL/df. The cache must come from
  /// Forward on the same model.
  std::vector<DenseLayer> Backward(const Cache &cache,
                                   const Vector &grad_embedding) const;

  const std::vector<DenseLayer> &layers() const { return layers_; }
  std::vector<DenseLayer> &mutable_layers() { return layers_; }
  int input_dim() const;
  int output_dim() const;

  /// Layer dump: "embedder,L" then per layer "layer,i,out,in", `out` rows
  /// of "w,..." and one "b,..." row. 17 significant digits.
  void Write(std::ostream &os) const;
  static TinyEmbedder Read(std::istream &is);

 private:
  std::vector<DenseLayer> layers_;
};

/// lr(t) = lr_init * (lr_final / lr_init)^(t / T); the endpoints are exact.
double LearningRate(int64_t t, int64_t total_iters, double lr_init,
                    double lr_final);

struct OptimizerConfig {
  double lr_init = 0.05;
  double lr_final = 1e-4;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 1e-4;

  void Validate() const;
};

/**
   SGD with momentum. With g = grad + weight_decay * theta:
     v' = mu v - lr g
     theta' = theta + mu v' - lr g   (Nesterov)
     theta' = theta + v'             (plain)
*/
void SgdStep(const OptimizerConfig &config, double lr, const Matrix &grad,
             Matrix *param, Matrix *velocity);
void SgdStep(const OptimizerConfig &config, double lr, const Vector &grad,
             Vector *param, Vector *velocity);

struct TrainConfig {
  TrainConfig() { loss.schedule.total_iters = 0; }

  LossConfig loss;  // schedule.total_iters == 0: epochs * batches
  double scale = 32.0;
  double margin = 0.2;
  OptimizerConfig optim;
  int epochs = 60;
  int batch_size = 32;
  std::vector<int> hidden = {64};
  int embed_dim = 16;
  CovarianceMode cov_mode = CovarianceMode::kFull;
  /// Accumulate class statistics only once the deferred phase is over.
  bool cov_from_deferred = false;
  DcfParams dcf;
  size_t max_nontarget_per_target = 10;
  uint64_t seed = 1;
  uint64_t trial_seed = 1;

  void Validate() const;
  /// Iterations for a train split of `train_size` rows.
  int64_t TotalIters(int train_size) const;
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double mean_cos_y = 0.0;
  double mean_coef = 0.0;
  double lambda = 0.0;
  double eer = 0.0;
  double min_dcf = 0.0;
};

struct SampleLogRow {
  int64_t iteration;
  int sample;
  double cos_y;
  double coef;
  double lambda;
  double loss;
};

struct EvalResult {
  std::vector<Vector> embeddings;  // eval split, row order
  std::vector<int> labels;
  TrialSet trials;
  ScoreSet scores;
  double eer = 0.0;
  double min_dcf = 0.0;
};

struct TrainRun {
  TrainConfig config;
  std::vector<EpochMetrics> metrics;
  TinyEmbedder model;
  ClassifierHead head;
  CovarianceBank bank{1, 1};
  int64_t degenerate_outputs = 0;
  EvalResult final_eval;
};

/// Embeds the eval split and scores cosine trials.
EvalResult Evaluate(const TinyEmbedder &model, const Dataset &data,
                    const TrainConfig &config);

using SampleLogger = std::function<void(const SampleLogRow &)>;

/// Single-threaded, deterministic given config.seed. Throws a numerical
/// error naming the iteration if the loss stops being finite.
TrainRun Train(const TrainConfig &config, const Dataset &data,
               const SampleLogger &logger = nullptr);

/// Central-difference check of loss(Forward(x), head) against Backward,
/// over every embedder weight and bias and every head weight. Same error
/// measure as LossGradientCheck.
double CompositionGradientCheck(const TinyEmbedder &model,
                                const ClassifierHead &head, const Vector &x,
                                const LossFunction &loss, double epsilon);

void WriteMetrics(const std::vector<EpochMetrics> &metrics,
                  const std::string &path);
/// Embedder layers followed by "head,C,F,scale,margin", C "w,..." rows and a
/// "b,..." row.
void WriteModel(const TinyEmbedder &model, const ClassifierHead &head,
                const std::string &path);
void ReadModel(const std::string &path, TinyEmbedder *model,
               ClassifierHead *head);

}  // namespace dasa

#endif  // DASA_TINY_TRAINER_H_
