// src/loss_family.cc

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

#include "dasa/loss_family.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dasa {

std::string ToString(LossVariant v) {
  switch (v) {
    case LossVariant::kSoftmax: return "softmax";
    case LossVariant::kIsda: return "isda";
    case LossVariant::kAm: return "am";
    case LossVariant::kDaam: return "daam";
    case LossVariant::kDasa: return "dasa";
  }
  return "?";
}

std::string ToString(Difficulty d) {
  switch (d) {
    case Difficulty::kNone: return "none";
    case Difficulty::kDA: return "DA";
    case Difficulty::kDY: return "DY";
  }
  return "?";
}

std::string ToString(StrengthMode s) {
  switch (s) {
    case StrengthMode::kConstant: return "constant";
    case StrengthMode::kDA: return "DA";
    case StrengthMode::kDY: return "DY";
  }
  return "?";
}

LossVariant ParseLossVariant(const std::string &text) {
  if (text == "softmax") return LossVariant::kSoftmax;
  if (text == "isda") return LossVariant::kIsda;
  if (text == "am") return LossVariant::kAm;
  if (text == "daam") return LossVariant::kDaam;
  if (text == "dasa") return LossVariant::kDasa;
  ThrowValidation("unknown loss variant '" + text +
                  "' (expected softmax, isda, am, daam or dasa)");
}

Difficulty ParseDifficulty(const std::string &text) {
  if (text == "none") return Difficulty::kNone;
  if (text == "DA" || text == "da") return Difficulty::kDA;
  if (text == "DY" || text == "dy") return Difficulty::kDY;
  ThrowValidation("unknown difficulty '" + text +
                  "' (expected none, DA or DY)");
}

StrengthMode ParseStrengthMode(const std::string &text) {
  if (text == "constant") return StrengthMode::kConstant;
  if (text == "DA" || text == "da") return StrengthMode::kDA;
  if (text == "DY" || text == "dy") return StrengthMode::kDY;
  ThrowValidation("unknown strength mode '" + text +
                  "' (expected constant, DA or DY)");
}

void LossConfig::Validate() const {
  if ((variant == LossVariant::kSoftmax || variant == LossVariant::kIsda ||
       variant == LossVariant::kAm) &&
      difficulty != Difficulty::kNone)
    ThrowValidation("loss.difficulty must be none for variant " +
                    ToString(variant));
  if (variant == LossVariant::kIsda && strength_mode != StrengthMode::kConstant)
    ThrowValidation("loss.strength must be constant for variant isda");
  if (!(lambda0 >= 0.0) || !std::isfinite(lambda0))
    ThrowValidation("sched.lambda0 must be finite and >= 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    ThrowValidation("loss.gamma must be > 0");
  if (!(schedule.deferred_fraction >= 0.0 && schedule.deferred_fraction <= 1.0))
    ThrowValidation("sched.deferred_fraction must lie in [0, 1]");
  if (schedule.total_iters < 1)
    ThrowValidation("sched.total_iters must be >= 1");
}

namespace {

void CheckHead(const Vector &f, const ClassifierHead &head, int label,
               bool need_biases) {
  if (head.weights.rows() < 2)
    ThrowValidation("classifier head needs at least 2 classes");
  if (f.size() != head.weights.cols())
    ThrowValidation("embedding dim " + std::to_string(f.size()) +
                    " != head dim " + std::to_string(head.weights.cols()));
  if (label < 0 || label >= head.weights.rows())
    ThrowValidation("label " + std::to_string(label) + " out of range");
  if (need_biases && head.biases.size() != head.weights.rows())
    ThrowValidation("head biases must have one entry per class");
  if (!f.allFinite() || !head.weights.allFinite() ||
      (need_biases && !head.biases.allFinite()))
    ThrowValidation("non-finite loss input");
  if (!(head.scale > 0.0) || !std::isfinite(head.scale))
    ThrowValidation("head scale must be > 0");
  if (!(head.margin >= 0.0) || !std::isfinite(head.margin))
    ThrowValidation("head margin must be >= 0");
}

void CheckStats(const ClassStats &stats, const ClassifierHead &head) {
  if (stats.dim() != head.dim())
    ThrowValidation("covariance dim " + std::to_string(stats.dim()) +
                    " != head dim " + std::to_string(head.dim()));
}

// log(sum_j exp(a_j)) where a[label] == 0, plus the softmax weights. When
// the target term dominates, log1p keeps tiny losses accurate.
double LogSumExpWithZeroTarget(const Vector &a, int label, Vector *p) {
  const double top = a.maxCoeff();
  *p = (a.array() - top).exp();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) sum += (*p)[j];
  *p /= sum;
  if (top <= 0.0) {
    double rest = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j)
      if (j != label) rest += std::exp(a[j]);
    return std::log1p(rest);
  }
  return top + std::log(sum);
}

// Softmax path shared by SoftmaxCe and IsdaBound. `stats` may be null.
LossOutput SoftmaxFamily(const Vector &f, const ClassifierHead &head,
                         const ClassStats *stats, double lambda, int label) {
  CheckHead(f, head, label, true);
  const int c = head.num_classes();
  Vector z = head.weights * f + head.biases;
  Vector a(c);
  for (int j = 0; j < c; ++j) a[j] = z[j] - z[label];

  LossOutput out;
  out.terms.lambda = lambda;
  Matrix aug_dir;  // rows Omega (w_j - w_y), only when lambda > 0
  if (stats != nullptr && lambda > 0.0) {
    aug_dir = Matrix::Zero(c, head.dim());
    for (int j = 0; j < c; ++j) {
      if (j == label) continue;
      Vector dw = (head.weights.row(j) - head.weights.row(label)).transpose();
      Vector u = stats->Apply(dw);
      double phi = dw.dot(u);
      out.terms.max_phi = std::max(out.terms.max_phi, phi);
      a[j] += 0.5 * lambda * phi;
      aug_dir.row(j) = u.transpose();
    }
  }

  Vector p;
  out.value = LogSumExpWithZeroTarget(a, label, &p);

  Vector dz = p;
  double rest = 0.0;
  for (int j = 0; j < c; ++j)
    if (j != label) rest += p[j];
  dz[label] = -rest;

  out.grad_biases = dz;
  out.grad_weights = dz * f.transpose();
  out.grad_embedding = head.weights.transpose() * dz;
  if (aug_dir.size() > 0) {
    for (int j = 0; j < c; ++j) {
      if (j == label) continue;
      out.grad_weights.row(j) += (p[j] * lambda) * aug_dir.row(j);
      out.grad_weights.row(label) -= (p[j] * lambda) * aug_dir.row(j);
    }
  }
  return out;
}

struct MarginSpec {
  Difficulty difficulty = Difficulty::kNone;
  double gamma = 2.0;
  StrengthMode strength = StrengthMode::kConstant;
  // lambda itself in constant mode, the ramp factor t/T otherwise.
  double strength_value = 0.0;
  const ClassStats *stats = nullptr;
};

// Value and derivative (w.r.t. the unclamped cosine) of a coefficient.
struct Coef {
  double value;
  double slope;
};

Coef CoefWithSlope(Difficulty d, double cos_y, double gamma) {
  const bool inside = cos_y >= -1.0 && cos_y <= 1.0;
  switch (d) {
    case Difficulty::kNone:
      return {1.0, 0.0};
    case Difficulty::kDA:
      return {DifficultyDa(cos_y), inside ? -0.5 : 0.0};
    case Difficulty::kDY: {
      double v = DifficultyDy(cos_y, gamma);
      return {v, inside ? -v : 0.0};
    }
  }
  return {1.0, 0.0};
}

Difficulty StrengthDifficulty(StrengthMode s) {
  switch (s) {
    case StrengthMode::kDA: return Difficulty::kDA;
    case StrengthMode::kDY: return Difficulty::kDY;
    default: return Difficulty::kNone;
  }
}

// Margin path shared by AM, DAAM and the DASA bound.
LossOutput MarginFamily(const Vector &f, const ClassifierHead &head, int label,
                        const MarginSpec &spec) {
  CheckHead(f, head, label, false);
  if (f.squaredNorm() == 0.0) ThrowValidation("zero-norm embedding");
  const int c = head.num_classes();
  const int dim = head.dim();
  const double s = head.scale;
  const double m = head.margin;

  Vector norms(c);
  Matrix w_hat(c, dim);
  for (int j = 0; j < c; ++j) {
    norms[j] = head.weights.row(j).norm();
    if (norms[j] == 0.0)
      ThrowValidation("zero-norm weight row " + std::to_string(j));
    w_hat.row(j) = head.weights.row(j) / norms[j];
  }
  Vector cosines = w_hat * f;
  const double cos_y = cosines[label];

  const Coef margin_coef = CoefWithSlope(spec.difficulty, cos_y, spec.gamma);
  double lambda = spec.strength_value;
  double lambda_slope = 0.0;
  if (spec.strength != StrengthMode::kConstant) {
    Coef sc = CoefWithSlope(StrengthDifficulty(spec.strength), cos_y,
                            spec.gamma);
    lambda = spec.strength_value * sc.value;
    lambda_slope = spec.strength_value * sc.slope;
  }

  LossOutput out;
  out.terms.cos_y = cos_y;
  out.terms.coef = margin_coef.value;
  out.terms.lambda = lambda;

  const double shift = s * m * margin_coef.value;
  Vector a(c);
  for (int j = 0; j < c; ++j)
    a[j] = j == label ? 0.0 : s * (cosines[j] - cos_y) + shift;

  const bool augment = spec.stats != nullptr && lambda > 0.0;
  const bool lambda_varies = spec.stats != nullptr && lambda_slope != 0.0;
  Vector phi = Vector::Zero(c);
  Matrix aug_dir;
  if (augment || lambda_varies) {
    aug_dir = Matrix::Zero(c, dim);
    for (int j = 0; j < c; ++j) {
      if (j == label) continue;
      Vector dw = (w_hat.row(j) - w_hat.row(label)).transpose();
      Vector u = spec.stats->Apply(dw);
      phi[j] = dw.dot(u);
      aug_dir.row(j) = u.transpose();
      out.terms.max_phi = std::max(out.terms.max_phi, phi[j]);
      if (augment) a[j] += 0.5 * lambda * s * s * phi[j];
    }
  }

  Vector p;
  out.value = LogSumExpWithZeroTarget(a, label, &p);

  // dL/dcos_j and dL/dw_hat_j.
  Vector dcos = Vector::Zero(c);
  Matrix dw_hat = Matrix::Zero(c, dim);
  double dcos_y = 0.0;
  for (int j = 0; j < c; ++j) {
    if (j == label) continue;
    dcos[j] = s * p[j];
    double da_dcos_y = -s + s * m * margin_coef.slope;
    if (lambda_varies) da_dcos_y += 0.5 * s * s * phi[j] * lambda_slope;
    dcos_y += p[j] * da_dcos_y;
    if (augment) {
      double k = p[j] * lambda * s * s;
      dw_hat.row(j) += k * aug_dir.row(j);
      dw_hat.row(label) -= k * aug_dir.row(j);
    }
  }
  dcos[label] = dcos_y;
  dw_hat += dcos * f.transpose();

  out.grad_embedding = w_hat.transpose() * dcos;
  out.grad_weights.resize(c, dim);
  for (int j = 0; j < c; ++j) {
    double radial = w_hat.row(j).dot(dw_hat.row(j));
    out.grad_weights.row(j) = (dw_hat.row(j) - radial * w_hat.row(j)) / norms[j];
  }
  return out;
}

}  // namespace

LossOutput SoftmaxCe(const Vector &f, const ClassifierHead &head, int label) {
  return SoftmaxFamily(f, head, nullptr, 0.0, label);
}

LossOutput IsdaBound(const Vector &f, const ClassifierHead &head,
                     const ClassStats &stats, double lambda, int label) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    ThrowValidation("IsdaBound: lambda must be finite and >= 0");
  CheckStats(stats, head);
  return SoftmaxFamily(f, head, &stats, lambda, label);
}

LossOutput IsdaBound(const Vector &f, const ClassifierHead &head,
                     const CovarianceBank &bank, double lambda, int label) {
  if (label < 0 || label >= bank.num_classes())
    ThrowValidation("label " + std::to_string(label) + " out of bank range");
  return IsdaBound(f, head, bank.stats(label), lambda, label);
}

LossOutput AmSoftmax(const Vector &f, const ClassifierHead &head, int label) {
  return MarginFamily(f, head, label, MarginSpec{});
}

double DifficultyDa(double cos_y) {
  cos_y = std::clamp(cos_y, -1.0, 1.0);
  return (1.0 - cos_y) / 2.0;
}

double DifficultyDy(double cos_y, double gamma) {
  if (!(gamma > 0.0)) ThrowValidation("DifficultyDy: gamma must be > 0");
  cos_y = std::clamp(cos_y, -1.0, 1.0);
  return std::exp(1.0 - cos_y) / gamma;
}

double DifficultyCoef(Difficulty d, double cos_y, double gamma) {
  switch (d) {
    case Difficulty::kNone: return 1.0;
    case Difficulty::kDA: return DifficultyDa(cos_y);
    case Difficulty::kDY: return DifficultyDy(cos_y, gamma);
  }
  return 1.0;
}

LossOutput DaamSoftmax(const Vector &f, const ClassifierHead &head, int label,
                       Difficulty difficulty, double gamma) {
  if (!(gamma > 0.0)) ThrowValidation("DaamSoftmax: gamma must be > 0");
  MarginSpec spec;
  spec.difficulty = difficulty;
  spec.gamma = gamma;
  return MarginFamily(f, head, label, spec);
}

LossOutput DasaBoundAt(const Vector &f, const ClassifierHead &head,
                       const ClassStats &stats, int label,
                       Difficulty difficulty, double gamma, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    ThrowValidation("DasaBound: lambda must be finite and >= 0");
  if (!(gamma > 0.0)) ThrowValidation("DasaBound: gamma must be > 0");
  CheckStats(stats, head);
  MarginSpec spec;
  spec.difficulty = difficulty;
  spec.gamma = gamma;
  spec.strength_value = lambda;
  spec.stats = &stats;
  return MarginFamily(f, head, label, spec);
}

LossOutput DasaBound(const Vector &f, const ClassifierHead &head,
                     const CovarianceBank &bank, int label,
                     const LossConfig &config, int64_t t) {
  config.Validate();
  if (label < 0 || label >= bank.num_classes())
    ThrowValidation("label " + std::to_string(label) + " out of bank range");
  const ClassStats &stats = bank.stats(label);
  CheckStats(stats, head);
  MarginSpec spec;
  spec.difficulty = config.difficulty;
  spec.gamma = config.gamma;
  spec.strength = config.strength_mode;
  const double ramp = RampFactor(t, config.schedule);
  spec.strength_value =
      config.strength_mode == StrengthMode::kConstant ? ramp * config.lambda0
                                                       : ramp;
  spec.stats = &stats;
  return MarginFamily(f, head, label, spec);
}

double RampFactor(int64_t t, const Schedule &schedule) {
  const int64_t total = std::max<int64_t>(schedule.total_iters, 1);
  t = std::clamp<int64_t>(t, 0, total);
  const double td = static_cast<double>(t);
  const double tt = static_cast<double>(total);
  if (td < schedule.deferred_fraction * tt) return 0.0;
  return td / tt;
}

double LambdaSchedule(int64_t t, const LossConfig &config) {
  return RampFactor(t, config.schedule) * config.lambda0;
}

double LambdaSchedule(int64_t t, const LossConfig &config, double cos_y) {
  const double ramp = RampFactor(t, config.schedule);
  switch (config.strength_mode) {
    case StrengthMode::kConstant: return ramp * config.lambda0;
    case StrengthMode::kDA: return ramp * DifficultyDa(cos_y);
    case StrengthMode::kDY: return ramp * DifficultyDy(cos_y, config.gamma);
  }
  return 0.0;
}

LossOutput EvaluateLoss(const LossConfig &config, const Vector &f,
                        const ClassifierHead &head, const CovarianceBank &bank,
                        int label, int64_t t) {
  switch (config.variant) {
    case LossVariant::kSoftmax:
      return SoftmaxCe(f, head, label);
    case LossVariant::kIsda:
      return IsdaBound(f, head, bank, LambdaSchedule(t, config), label);
    case LossVariant::kAm:
      return AmSoftmax(f, head, label);
    case LossVariant::kDaam:
      return DaamSoftmax(f, head, label, config.difficulty, config.gamma);
    case LossVariant::kDasa:
      return DasaBound(f, head, bank, label, config, t);
  }
  ThrowValidation("unhandled loss variant");
}

namespace {

double RelativeError(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

}  // namespace

double CentralDifference(const std::function<double(double)> &g,
                         double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4))
    ThrowValidation("gradient check epsilon must lie in [1e-7, 1e-4]");
  constexpr double kShrink = 1.4, kShrink2 = kShrink * kShrink;
  constexpr int kMaxSteps = 40;
  std::vector<double> prev, cur;
  double h = kFdFirstStep;
  double best = (g(h) - g(-h)) / (2.0 * h);
  double best_err = std::numeric_limits<double>::infinity();
  prev.push_back(best);
  for (int i = 1; i < kMaxSteps && h / kShrink >= epsilon; ++i) {
    h /= kShrink;
    cur.assign(1, (g(h) - g(-h)) / (2.0 * h));
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      cur.push_back((cur[j - 1] * fac - prev[j - 1]) / (fac - 1.0));
      fac *= kShrink2;
      const double err = std::max(std::abs(cur[j] - cur[j - 1]),
                                  std::abs(cur[j] - prev[j - 1]));
      if (err <= best_err) {
        best_err = err;
        best = cur[j];
      }
    }
    // Higher orders stopped helping: roundoff has taken over.
    if (std::abs(cur[i] - prev[i - 1]) >= 2.0 * best_err) break;
    prev.swap(cur);
  }
  return best;
}

double LossGradientCheck(const LossFunction &loss, const Vector &f,
                         const ClassifierHead &head, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4))
    ThrowValidation("gradient check epsilon must lie in [1e-7, 1e-4]");
  const LossOutput base = loss(f, head);
  double worst = 0.0;

  Vector fp = f;
  for (Eigen::Index a = 0; a < f.size(); ++a) {
    double numeric = CentralDifference(
        [&](double d) {
          fp[a] = f[a] + d;
          double v = loss(fp, head).value;
          fp[a] = f[a];
          return v;
        },
        epsilon);
    worst = std::max(worst, RelativeError(base.grad_embedding[a], numeric));
  }

  ClassifierHead hp = head;
  for (Eigen::Index i = 0; i < head.weights.size(); ++i) {
    double numeric = CentralDifference(
        [&](double d) {
          hp.weights.data()[i] = head.weights.data()[i] + d;
          double v = loss(f, hp).value;
          hp.weights.data()[i] = head.weights.data()[i];
          return v;
        },
        epsilon);
    worst = std::max(worst, RelativeError(base.grad_weights.data()[i], numeric));
  }

  if (base.grad_biases.size() > 0) {
    for (Eigen::Index j = 0; j < head.biases.size(); ++j) {
      double numeric = CentralDifference(
          [&](double d) {
            hp.biases[j] = head.biases[j] + d;
            double v = loss(f, hp).value;
            hp.biases[j] = head.biases[j];
            return v;
          },
          epsilon);
      worst = std::max(worst, RelativeError(base.grad_biases[j], numeric));
    }
  }
  return worst;
}

}  // namespace dasa
