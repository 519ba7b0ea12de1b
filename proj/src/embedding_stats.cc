// src/embedding_stats.cc

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

#include "dasa/embedding_stats.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dasa {

std::string ToString(CovarianceMode mode) {
  return mode == CovarianceMode::kFull ? "full" : "diagonal";
}

CovarianceMode ParseCovarianceMode(const std::string &text) {
  if (text == "full") return CovarianceMode::kFull;
  if (text == "diagonal") return CovarianceMode::kDiagonal;
  ThrowValidation("unknown covariance mode '" + text +
                  "' (expected full or diagonal)");
}

ClassStats::ClassStats(int class_id, int dim, CovarianceMode mode)
    : class_id_(class_id), mode_(mode), mean_(Vector::Zero(dim)) {
  if (dim <= 0) ThrowValidation("ClassStats: dimension must be positive");
  cov_ = mode == CovarianceMode::kFull ? Matrix::Zero(dim, dim)
                                       : Matrix::Zero(dim, 1);
}

ClassStats ClassStats::FromParts(int class_id, CovarianceMode mode,
                                 int64_t count, const Vector &mean,
                                 const Matrix &cov) {
  ClassStats s(class_id, static_cast<int>(mean.size()), mode);
  if (count < 0) ThrowValidation("ClassStats: negative count");
  if (cov.rows() != s.cov_.rows() || cov.cols() != s.cov_.cols())
    ThrowValidation("ClassStats: covariance shape does not match mode");
  s.count_ = count;
  s.mean_ = mean;
  s.cov_ = cov;
  return s;
}

void ClassStats::Add(const Vector &x) {
  if (x.size() != mean_.size())
    ThrowValidation("ClassStats::Add: embedding has dim " +
                    std::to_string(x.size()) + ", expected " +
                    std::to_string(mean_.size()));
  const double n = static_cast<double>(count_);
  const double n1 = n + 1.0;
  Vector delta = x - mean_;
  mean_ += delta / n1;
  const double w = n / n1;
  if (mode_ == CovarianceMode::kFull) {
    cov_ = (n * cov_ + w * (delta * delta.transpose())) / n1;
  } else {
    cov_ = (n * cov_ + w * delta.cwiseProduct(delta)) / n1;
  }
  ++count_;
}

Matrix ClassStats::Covariance() const {
  if (mode_ == CovarianceMode::kFull) return cov_;
  Matrix full = Matrix::Zero(dim(), dim());
  full.diagonal() = cov_.col(0);
  return full;
}

double ClassStats::Trace() const {
  return mode_ == CovarianceMode::kFull ? cov_.trace() : cov_.sum();
}

Vector ClassStats::Apply(const Vector &v) const {
  if (v.size() != mean_.size())
    ThrowValidation("ClassStats::Apply: dimension mismatch");
  if (mode_ == CovarianceMode::kFull) return cov_ * v;
  return cov_.col(0).cwiseProduct(v);
}

double ClassStats::QuadraticForm(const Vector &v) const {
  if (v.size() != mean_.size())
    ThrowValidation("ClassStats::QuadraticForm: dimension mismatch");
  if (mode_ == CovarianceMode::kFull) return v.dot(cov_ * v);
  return cov_.col(0).dot(v.cwiseProduct(v));
}

CovarianceBank::CovarianceBank(int num_classes, int dim, CovarianceMode mode)
    : dim_(dim), mode_(mode) {
  if (num_classes <= 0) ThrowValidation("CovarianceBank: need >= 1 class");
  stats_.reserve(num_classes);
  for (int c = 0; c < num_classes; ++c) stats_.emplace_back(c, dim, mode);
}

void CovarianceBank::CheckLabel(int label) const {
  if (label < 0 || label >= num_classes())
    ThrowValidation("CovarianceBank: label " + std::to_string(label) +
                    " out of range [0, " + std::to_string(num_classes()) +
                    ")");
}

void CovarianceBank::Update(const Vector &embedding, int label) {
  CheckLabel(label);
  stats_[label].Add(embedding);
}

const ClassStats &CovarianceBank::stats(int label) const {
  CheckLabel(label);
  return stats_[label];
}

void CovarianceBank::set_stats(int label, ClassStats stats) {
  CheckLabel(label);
  if (stats.dim() != dim_ || stats.mode() != mode_)
    ThrowValidation("CovarianceBank::set_stats: dim or mode mismatch");
  stats_[label] = std::move(stats);
}

Vector CovarianceBank::QuadraticForms(int label, const Matrix &weights) const {
  CheckLabel(label);
  if (weights.cols() != dim_)
    ThrowValidation("QuadraticForms: weight dim " +
                    std::to_string(weights.cols()) + " != bank dim " +
                    std::to_string(dim_));
  if (label >= weights.rows())
    ThrowValidation("QuadraticForms: label has no weight row");
  const ClassStats &s = stats_[label];
  Vector phi(weights.rows());
  for (Eigen::Index j = 0; j < weights.rows(); ++j) {
    if (j == label) {
      phi[j] = 0.0;
      continue;
    }
    Vector dw = (weights.row(j) - weights.row(label)).transpose();
    phi[j] = s.QuadraticForm(dw);
  }
  return phi;
}

void CovarianceBank::Write(const std::string &path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "bank," << num_classes() << ',' << dim_ << ',' << ToString(mode_)
     << '\n';
  for (const ClassStats &s : stats_) {
    os << s.class_id() << ',' << s.count();
    for (Eigen::Index a = 0; a < s.mean().size(); ++a)
      os << ',' << FormatDouble(s.mean()[a]);
    const Matrix &cov = s.cov_storage();
    for (Eigen::Index a = 0; a < cov.rows(); ++a)
      for (Eigen::Index b = 0; b < cov.cols(); ++b)
        os << ',' << FormatDouble(cov(a, b));
    os << '\n';
  }
  if (!os) ThrowIo("write failed for '" + path + "'");
}

CovarianceBank CovarianceBank::Read(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("cannot open bank snapshot '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) ThrowIo(path + ": empty bank snapshot");
  auto head = SplitFields(Trim(line));
  int64_t c = 0, f = 0;
  if (head.size() != 4 || head[0] != "bank" || !ParseInt(head[1], &c) ||
      !ParseInt(head[2], &f) || c <= 0 || f <= 0)
    ThrowIo(path + ":1: malformed bank header");
  CovarianceMode mode = ParseCovarianceMode(head[3]);
  CovarianceBank bank(static_cast<int>(c), static_cast<int>(f), mode);
  const size_t cov_entries =
      mode == CovarianceMode::kFull ? static_cast<size_t>(f * f) : f;
  const size_t arity = 2 + static_cast<size_t>(f) + cov_entries;
  std::vector<bool> seen(c, false);
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitFields(Trim(line));
    std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != arity)
      ThrowIo(where + ": expected " + std::to_string(arity) + " fields, got " +
              std::to_string(fields.size()));
    int64_t id = 0, count = 0;
    if (!ParseInt(fields[0], &id) || id < 0 || id >= c || seen[id])
      ThrowIo(where + ": bad or duplicate class id");
    if (!ParseInt(fields[1], &count) || count < 0)
      ThrowIo(where + ": bad count");
    Vector mean(f);
    for (int64_t a = 0; a < f; ++a)
      if (!ParseDouble(fields[2 + a], &mean[a]))
        ThrowIo(where + ": bad mean entry");
    Matrix cov = mode == CovarianceMode::kFull ? Matrix(f, f) : Matrix(f, 1);
    for (size_t k = 0; k < cov_entries; ++k)
      if (!ParseDouble(fields[2 + f + k], &cov.data()[k]))
        ThrowIo(where + ": bad covariance entry");
    bank.stats_[id] = ClassStats::FromParts(static_cast<int>(id), mode, count,
                                            mean, cov);
    seen[id] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    ThrowIo(path + ": snapshot is missing classes");
  return bank;
}

double SamplerJitter(const Matrix &scaled_omega) {
  const double f = static_cast<double>(scaled_omega.rows());
  return 1e-9 * std::max(1.0, scaled_omega.trace() / f);
}

Matrix SamplerFactor(const Matrix &omega, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    ThrowValidation("SamplerFactor: lambda must be finite and >= 0");
  if (omega.rows() != omega.cols() || omega.rows() == 0)
    ThrowValidation("SamplerFactor: covariance must be square");
  if (!omega.allFinite())
    ThrowValidation("SamplerFactor: covariance has non-finite entries");
  if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    ThrowValidation("SamplerFactor: covariance is not symmetric");
  Matrix a = lambda * omega;
  const double eps = SamplerJitter(a);
  a.diagonal().array() += eps;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    ThrowNumerical("SamplerFactor: degenerate covariance (Cholesky failed "
                   "after jitter " + FormatDouble(eps) + ")");
  return llt.matrixL();
}

Matrix SamplerFactor(const ClassStats &stats, double lambda) {
  if (stats.mode() == CovarianceMode::kFull)
    return SamplerFactor(stats.cov_storage(), lambda);
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    ThrowValidation("SamplerFactor: lambda must be finite and >= 0");
  Vector var = lambda * stats.cov_storage().col(0);
  const double f = static_cast<double>(var.size());
  const double eps = 1e-9 * std::max(1.0, var.sum() / f);
  var.array() += eps;
  if ((var.array() <= 0.0).any())
    ThrowNumerical("SamplerFactor: degenerate diagonal covariance");
  Matrix l = Matrix::Zero(var.size(), var.size());
  l.diagonal() = var.cwiseSqrt();
  return l;
}

}  // namespace dasa
