// src/checks.cc

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

#include "dasa/checks.h"

#include <cmath>
#include <fstream>

#include "dasa/tiny_trainer.h"

namespace dasa {

void BoundCheckOptions::Validate() const {
  if (trials < 1) ThrowValidation("bound.trials must be >= 1");
  if (samples < kMinMcSamples)
    ThrowValidation("bound.samples must be >= " +
                    std::to_string(kMinMcSamples) + ", got " +
                    std::to_string(samples));
  if (num_classes < 2) ThrowValidation("bound.num_classes must be >= 2");
  if (dim < 1) ThrowValidation("bound.dim must be >= 1");
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda)))
    ThrowValidation("bound.lambda must be finite and >= 0");
  if (!(lambda_max >= 0.0)) ThrowValidation("bound.lambda_max must be >= 0");
  if (!(scale_max >= 1.0)) ThrowValidation("bound.scale_max must be >= 1");
  if (!(margin_max >= 0.0)) ThrowValidation("bound.margin_max must be >= 0");
}

void GradCheckOptions::Validate() const {
  if (trials < 1) ThrowValidation("grad.trials must be >= 1");
  if (backbone_trials < 0) ThrowValidation("grad.backbone_trials must be >= 0");
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4))
    ThrowValidation("grad.epsilon must lie in [1e-7, 1e-4]");
}

namespace {

Vector RandomUnit(int dim, Rng &rng) {
  Vector v(dim);
  do {
    for (int a = 0; a < dim; ++a) v[a] = rng.Normal();
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Matrix RandomNormal(int rows, int cols, Rng &rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

// Omega = scale * A A^T / F, symmetrized exactly.
ClassStats RandomStats(int dim, double scale, Rng &rng) {
  Matrix a = RandomNormal(dim, dim, rng);
  Matrix omega = scale * (a * a.transpose()) / static_cast<double>(dim);
  omega = 0.5 * (omega + omega.transpose()).eval();
  return ClassStats::FromParts(0, CovarianceMode::kFull, 100, Vector::Zero(dim),
                               omega);
}

constexpr double kMaxProbeCos = 0.99;
// Smallest |pre-activation| allowed in backbone trials, so that no probe
// step crosses a ReLU kink.
constexpr double kMinPreActivation = 1e-2;

double UniformIn(double lo, double hi, Rng &rng) {
  return lo + (hi - lo) * rng.Uniform();
}

// Unit embedding that leans towards its own class row. Finite differences
// in double cannot resolve tiny gradient entries once the loss itself is
// large, so the gradient suite stays in the moderate-loss regime training
// operates in. cos_y is kept off +-1, where the coefficient clamp puts a
// kink that off-sphere probes would cross.
Vector NearClass(const ClassifierHead &head, int label, Rng &rng) {
  const int dim = head.dim();
  const Vector w = head.weights.row(label).normalized().transpose();
  for (;;) {
    Vector v = UniformIn(0.5, 2.0, rng) * w + RandomUnit(dim, rng);
    if (v.norm() < 1e-6) continue;
    v.normalize();
    if (std::abs(w.dot(v)) <= kMaxProbeCos) return v;
  }
}

}  // namespace

BoundCheckResult RunBoundCheck(const BoundCheckOptions &options) {
  options.Validate();
  BoundCheckResult result;
  const char *names[] = {"isda", "am-sa", "dasa"};
  std::vector<BoundFamilySummary> fam(3);
  for (int k = 0; k < 3; ++k) fam[k].variant = names[k];

  for (int trial = 0; trial < options.trials; ++trial) {
    Rng rng(options.seed, 5000 + static_cast<uint64_t>(trial));
    const int c = options.num_classes;
    const int dim = options.dim;
    ClassStats stats = RandomStats(dim, UniformIn(0.02, 0.3, rng), rng);
    ClassifierHead head;
    head.weights = RandomNormal(c, dim, rng);
    head.biases = 0.5 * RandomNormal(c, 1, rng).col(0);
    head.scale = UniformIn(1.0, options.scale_max, rng);
    head.margin = UniformIn(0.0, options.margin_max, rng);
    const Vector f = RandomUnit(dim, rng);
    const int label = static_cast<int>(rng.Below(static_cast<uint64_t>(c)));
    const double lambda =
        options.lambda ? *options.lambda : UniformIn(0.0, options.lambda_max, rng);

    for (int k = 0; k < 3; ++k) {
      const uint64_t mc_seed =
          Rng::Mix(options.seed ^ Rng::Mix(static_cast<uint64_t>(trial) * 4 + k));
      McReport r;
      if (k == 0) {
        r = McExpectedCe(f, head, stats, lambda, label, options.samples,
                         mc_seed);
      } else {
        Difficulty d = k == 1 ? Difficulty::kNone : Difficulty::kDA;
        r = McExpectedMargin(f, head, stats, lambda, label, d, 2.0,
                             options.samples, mc_seed);
      }
      result.rows.push_back({trial, names[k], lambda, r});
      fam[k].trials++;
      if (r.z_score < -3.0) fam[k].violations++;
      fam[k].mean_slack += r.slack;
    }
  }

  result.passed = true;
  for (BoundFamilySummary &s : fam) {
    s.mean_slack /= static_cast<double>(s.trials);
    s.passed = static_cast<double>(s.violations) <=
                   0.02 * static_cast<double>(s.trials) &&
               s.mean_slack >= 0.0;
    result.passed = result.passed && s.passed;
  }
  result.families = std::move(fam);
  return result;
}

void WriteBoundCheck(const BoundCheckResult &result, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "trial,variant,lambda,M,mc_mean,se,bound,slack,z_score\n";
  for (const BoundTrialRow &row : result.rows)
    os << row.trial << ',' << row.variant << ',' << FormatDouble(row.lambda)
       << ',' << row.report.samples << ',' << FormatDouble(row.report.mean)
       << ',' << FormatDouble(row.report.std_error) << ','
       << FormatDouble(row.report.bound_value) << ','
       << FormatDouble(row.report.slack) << ','
       << FormatDouble(row.report.z_score) << '\n';
  if (!os) ThrowIo("write failed for '" + path + "'");
}

GradCheckResult RunGradCheck(const GradCheckOptions &options) {
  options.Validate();
  GradCheckResult result;
  const double eps = options.epsilon;
  const LossVariant variants[] = {LossVariant::kSoftmax, LossVariant::kIsda,
                                  LossVariant::kAm, LossVariant::kDaam,
                                  LossVariant::kDasa};
  for (LossVariant variant : variants) {
    for (int trial = 0; trial < options.trials; ++trial) {
      Rng rng(options.seed,
              7000 + 1000 * static_cast<uint64_t>(variant) +
                  static_cast<uint64_t>(trial));
      const int c = 2 + static_cast<int>(rng.Below(5));
      const int dim = 2 + static_cast<int>(rng.Below(5));
      ClassifierHead head;
      head.weights = RandomNormal(c, dim, rng);
      head.biases = RandomNormal(c, 1, rng).col(0);
      head.scale = UniformIn(1.0, 4.0, rng);
      head.margin = UniformIn(0.0, 0.5, rng);
      const int label = static_cast<int>(rng.Below(static_cast<uint64_t>(c)));
      const Vector f = NearClass(head, label, rng);
      const double lambda = UniformIn(0.0, 1.0, rng);
      CovarianceBank bank(c, dim);
      bank.set_stats(label, [&] {
        ClassStats s = RandomStats(dim, UniformIn(0.01, 0.1, rng), rng);
        return ClassStats::FromParts(label, CovarianceMode::kFull, s.count(),
                                     s.mean(), s.cov_storage());
      }());
      const ClassStats &stats = bank.stats(label);
      const Difficulty diff = trial % 2 == 0 ? Difficulty::kDA : Difficulty::kDY;

      LossFunction fn;
      switch (variant) {
        case LossVariant::kSoftmax:
          fn = [&](const Vector &x, const ClassifierHead &h) {
            return SoftmaxCe(x, h, label);
          };
          break;
        case LossVariant::kIsda:
          fn = [&](const Vector &x, const ClassifierHead &h) {
            return IsdaBound(x, h, stats, lambda, label);
          };
          break;
        case LossVariant::kAm:
          fn = [&](const Vector &x, const ClassifierHead &h) {
            return AmSoftmax(x, h, label);
          };
          break;
        case LossVariant::kDaam:
          fn = [&](const Vector &x, const ClassifierHead &h) {
            return DaamSoftmax(x, h, label, diff, 2.0);
          };
          break;
        case LossVariant::kDasa:
          if (trial % 3 == 2) {
            // Per-sample strength: lambda itself depends on cos_y.
            LossConfig cfg;
            cfg.difficulty = diff;
            cfg.strength_mode =
                trial % 2 == 0 ? StrengthMode::kDY : StrengthMode::kDA;
            cfg.schedule.total_iters = 100;
            cfg.schedule.deferred_fraction = 0.4;
            const int64_t t = 40 + static_cast<int64_t>(rng.Below(61));
            fn = [&, cfg, t](const Vector &x, const ClassifierHead &h) {
              return DasaBound(x, h, bank, label, cfg, t);
            };
          } else {
            fn = [&](const Vector &x, const ClassifierHead &h) {
              return DasaBoundAt(x, h, stats, label, diff, 2.0, lambda);
            };
          }
          break;
      }
      result.rows.push_back(
          {trial, ToString(variant), LossGradientCheck(fn, f, head, eps)});
    }
  }

  for (int trial = 0; trial < options.backbone_trials; ++trial) {
    Rng rng(options.seed, 90000 + static_cast<uint64_t>(trial));
    const int d_in = 3 + static_cast<int>(rng.Below(4));
    const int hidden = 4 + static_cast<int>(rng.Below(5));
    const int dim = 3 + static_cast<int>(rng.Below(3));
    const int c = 3 + static_cast<int>(rng.Below(3));
    TinyEmbedder model = TinyEmbedder::Random({d_in, hidden, dim}, rng);
    for (auto &layer : model.mutable_layers())
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
        layer.bias[i] = 0.1 * rng.Normal();
    ClassifierHead head;
    head.weights = RandomNormal(c, dim, rng);
    head.biases = Vector::Zero(c);
    head.scale = UniformIn(1.0, 4.0, rng);
    head.margin = UniformIn(0.0, 0.5, rng);
    Vector x(d_in);
    for (;;) {
      for (int a = 0; a < d_in; ++a) x[a] = rng.Normal();
      const DenseLayer &first = model.layers().front();
      Vector pre = first.weight * x + first.bias;
      if (pre.cwiseAbs().minCoeff() >= kMinPreActivation) break;
    }
    const int label = static_cast<int>(rng.Below(static_cast<uint64_t>(c)));
    // Point the target row near the current embedding (see NearClass).
    const Vector e = model.Forward(x);
    for (;;) {
      head.weights.row(label) =
          (UniformIn(0.5, 2.0, rng) * e + RandomUnit(dim, rng)).transpose();
      if (head.weights.row(label).norm() > 1e-6 &&
          std::abs(head.weights.row(label).normalized().dot(e.transpose())) <=
              kMaxProbeCos)
        break;
    }
    ClassStats stats = RandomStats(dim, UniformIn(0.01, 0.1, rng), rng);
    const double lambda = UniformIn(0.0, 1.0, rng);
    LossFunction fn = [&](const Vector &e, const ClassifierHead &h) {
      return DasaBoundAt(e, h, stats, label, Difficulty::kDA, 2.0, lambda);
    };
    result.rows.push_back(
        {trial, "backbone", CompositionGradientCheck(model, head, x, fn, eps)});
  }

  result.worst = 0.0;
  for (const GradTrialRow &row : result.rows)
    result.worst = std::max(result.worst, row.max_rel_error);
  result.passed = result.worst < kGradTolerance;
  return result;
}

void WriteGradCheck(const GradCheckResult &result, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "trial,variant,max_rel_error\n";
  for (const GradTrialRow &row : result.rows)
    os << row.trial << ',' << row.variant << ','
       << FormatDouble(row.max_rel_error) << '\n';
  if (!os) ThrowIo("write failed for '" + path + "'");
}

}  // namespace dasa
