// src/mc_oracle.cc

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

#include "dasa/mc_oracle.h"

#include <cmath>
#include <limits>

namespace dasa {

namespace {

// Welford accumulator; a constant stream keeps its mean bit-exact.
struct RunningMean {
  int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double StdError() const {
    if (n < 2) return 0.0;
    double var = m2 / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
  }
};

McReport Finish(const RunningMean &acc, double bound) {
  McReport r;
  r.mean = acc.mean;
  r.std_error = acc.StdError();
  r.samples = acc.n;
  r.bound_value = bound;
  r.slack = bound - acc.mean;
  if (r.std_error > 0.0) {
    r.z_score = r.slack / r.std_error;
  } else if (r.slack == 0.0) {
    r.z_score = 0.0;
  } else {
    r.z_score = r.slack > 0 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
  }
  return r;
}

void CheckMc(const Vector &f, const ClassifierHead &head,
             const ClassStats &stats, double lambda, int label,
             int64_t samples) {
  if (samples < kMinMcSamples)
    ThrowValidation("Monte-Carlo sample count " + std::to_string(samples) +
                    " is below the minimum " + std::to_string(kMinMcSamples));
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    ThrowValidation("Monte-Carlo lambda must be finite and >= 0");
  if (f.size() != head.dim() || stats.dim() != head.dim())
    ThrowValidation("Monte-Carlo inputs have inconsistent dimensions");
  if (label < 0 || label >= head.num_classes())
    ThrowValidation("Monte-Carlo label out of range");
}

// Draws f + L z into `out`.
void Draw(const Vector &f, const Matrix &factor, Rng &rng, Vector *z,
          Vector *out) {
  for (Eigen::Index a = 0; a < z->size(); ++a) (*z)[a] = rng.Normal();
  out->noalias() = factor.triangularView<Eigen::Lower>() * *z;
  *out += f;
}

// log(1 + sum_{j != skip} exp(x_j)).
double Log1pSumExp(const Vector &x, int skip) {
  double top = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (j != skip) top = std::max(top, x[j]);
  double rest = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (j != skip) rest += std::exp(x[j] - top);
  if (top == 0.0) return std::log1p(rest);
  return top + std::log(std::exp(-top) + rest);
}

}  // namespace

Vector SampleAugmented(const Vector &f, const ClassStats &stats, double lambda,
                       Rng &rng) {
  if (f.size() != stats.dim())
    ThrowValidation("SampleAugmented: dimension mismatch");
  Matrix factor = SamplerFactor(stats, lambda);
  if (lambda == 0.0) return f;
  Vector z(f.size()), out(f.size());
  Draw(f, factor, rng, &z, &out);
  return out;
}

McReport McExpectedCe(const Vector &f, const ClassifierHead &head,
                      const ClassStats &stats, double lambda, int label,
                      int64_t samples, uint64_t seed) {
  CheckMc(f, head, stats, lambda, label, samples);
  const double bound = IsdaBound(f, head, stats, lambda, label).value;
  if (lambda == 0.0) {
    // Nothing to sample: every draw is f itself.
    RunningMean acc;
    acc.Add(SoftmaxCe(f, head, label).value);
    McReport r = Finish(acc, bound);
    r.samples = samples;
    return r;
  }
  const Matrix factor = SamplerFactor(stats, lambda);
  Rng rng(seed, 0);
  RunningMean acc;
  Vector z(f.size()), ft(f.size()), logits(head.num_classes());
  for (int64_t k = 0; k < samples; ++k) {
    Draw(f, factor, rng, &z, &ft);
    logits.noalias() = head.weights * ft;
    logits += head.biases;
    const double top = logits.maxCoeff();
    const double lse = top + std::log((logits.array() - top).exp().sum());
    acc.Add(lse - logits[label]);
  }
  return Finish(acc, bound);
}

McReport McExpectedMargin(const Vector &f, const ClassifierHead &head,
                          const ClassStats &stats, double lambda, int label,
                          Difficulty difficulty, double gamma, int64_t samples,
                          uint64_t seed) {
  CheckMc(f, head, stats, lambda, label, samples);
  const double bound =
      DasaBoundAt(f, head, stats, label, difficulty, gamma, lambda).value;
  if (lambda == 0.0) {
    RunningMean acc;
    acc.Add(DaamSoftmax(f, head, label, difficulty, gamma).value);
    McReport r = Finish(acc, bound);
    r.samples = samples;
    return r;
  }
  const Matrix factor = SamplerFactor(stats, lambda);

  const int c = head.num_classes();
  Matrix w_hat = head.weights;
  for (int j = 0; j < c; ++j) w_hat.row(j).normalize();
  // Rows s (w_j - w_y); the target row is unused.
  const double s = head.scale;
  Matrix diff(c, head.dim());
  for (int j = 0; j < c; ++j) diff.row(j) = s * (w_hat.row(j) - w_hat.row(label));
  const double cos_y = w_hat.row(label).dot(f);
  const double shift =
      s * head.margin * DifficultyCoef(difficulty, cos_y, gamma);

  Rng rng(seed, 0);
  RunningMean acc;
  Vector z(f.size()), ft(f.size()), x(c);
  for (int64_t k = 0; k < samples; ++k) {
    Draw(f, factor, rng, &z, &ft);
    x.noalias() = diff * ft;
    x.array() += shift;
    acc.Add(Log1pSumExp(x, label));
  }
  return Finish(acc, bound);
}

MomentCheck MomentIdentityCheck(double mu, double sigma2, double t,
                                int64_t samples, uint64_t seed) {
  if (!(sigma2 >= 0.0)) ThrowValidation("MomentIdentityCheck: sigma2 < 0");
  const double sigma = std::sqrt(sigma2);
  if (std::abs(t) * sigma > 3.0)
    ThrowValidation("MomentIdentityCheck: |t| * sigma must be <= 3");
  if (samples < 1) ThrowValidation("MomentIdentityCheck: samples must be >= 1");
  Rng rng(seed, 0);
  RunningMean acc;
  for (int64_t k = 0; k < samples; ++k) {
    double x = sigma2 == 0.0 ? mu : mu + sigma * rng.Normal();
    acc.Add(std::exp(t * x));
  }
  MomentCheck out;
  out.mc_mean = acc.mean;
  out.closed_form = std::exp(t * mu + 0.5 * sigma2 * t * t);
  out.std_error = acc.StdError();
  out.rel_error = std::abs(out.mc_mean - out.closed_form) / out.closed_form;
  out.passed = out.rel_error <= 5.0 * out.std_error / out.closed_form;
  return out;
}

}  // namespace dasa
