// include/dasa/embedding_stats.h

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

#ifndef DASA_EMBEDDING_STATS_H_
#define DASA_EMBEDDING_STATS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dasa/common.h"

namespace dasa {

enum class CovarianceMode { kFull, kDiagonal };

std::string ToString(CovarianceMode mode);
CovarianceMode ParseCovarianceMode(const std::string &text);

/**
   Streaming mean and population covariance of the embeddings of one class.
   In diagonal mode only the per-coordinate variances are kept.
*/
class ClassStats {
 public:
  ClassStats(int class_id, int dim, CovarianceMode mode);

  /// Rebuilds stats from a snapshot. `cov` is dim x dim in full mode and
  /// dim x 1 in diagonal mode.
  static ClassStats FromParts(int class_id, CovarianceMode mode, int64_t count,
                              const Vector &mean, const Matrix &cov);

  /// Online update: d = x - mean; n' = n + 1; mean += d / n';
  /// cov = (n * cov + (n / n') * d d^T) / n'.
  void Add(const Vector &x);

  int class_id() const { return class_id_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  int64_t count() const { return count_; }
  CovarianceMode mode() const { return mode_; }
  const Vector &mean() const { return mean_; }
  /// Raw storage: dim x dim (full) or dim x 1 (diagonal).
  const Matrix &cov_storage() const { return cov_; }

  /// The covariance as a dense dim x dim matrix in either mode.
  Matrix Covariance() const;
  double Trace() const;
  /// Omega * v.
  Vector Apply(const Vector &v) const;
  /// v^T Omega v.
  double QuadraticForm(const Vector &v) const;

 private:
  int class_id_;
  CovarianceMode mode_;
  int64_t count_ = 0;
  Vector mean_;
  Matrix cov_;
};

/// One ClassStats per class, all of the same dimension and mode.
class CovarianceBank {
 public:
  CovarianceBank(int num_classes, int dim,
                 CovarianceMode mode = CovarianceMode::kFull);

  void Update(const Vector &embedding, int label);

  /// Phi_j = (w_j - w_y)^T Omega_y (w_j - w_y) for every row j of `weights`
  /// (C x F). Phi_y is exactly zero.
  Vector QuadraticForms(int label, const Matrix &weights) const;

  int num_classes() const { return static_cast<int>(stats_.size()); }
  int dim() const { return dim_; }
  CovarianceMode mode() const { return mode_; }
  const ClassStats &stats(int label) const;
  void set_stats(int label, ClassStats stats);

  /// CSV snapshot. First line "bank,C,F,mode", then one row per class:
  /// class_id,count,mean[0..F),cov entries (row-major F*F, or F in
  /// diagonal mode). Values carry 17 significant digits.
  void Write(const std::string &path) const;
  static CovarianceBank Read(const std::string &path);

 private:
  void CheckLabel(int label) const;

  int dim_;
  CovarianceMode mode_;
  std::vector<ClassStats> stats_;
};

/// Returns L with L L^T = lambda * Omega + eps * I, where
/// eps = 1e-9 * max(1, trace(lambda * Omega) / F).
Matrix SamplerFactor(const ClassStats &stats, double lambda);
Matrix SamplerFactor(const Matrix &omega, double lambda);

/// The jitter SamplerFactor adds for a given lambda * Omega.
double SamplerJitter(const Matrix &scaled_omega);

}  // namespace dasa

#endif  // DASA_EMBEDDING_STATS_H_
