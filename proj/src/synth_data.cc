// src/synth_data.cc

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

#include "dasa/synth_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "dasa/rng.h"

namespace dasa {

void SynthSpec::Validate() const {
  if (num_classes < 2) ThrowValidation("data.num_classes must be >= 2");
  if (input_dim < 2) ThrowValidation("data.input_dim must be >= 2");
  if (samples_per_class < 2)
    ThrowValidation("data.samples_per_class must be >= 2");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    ThrowValidation("data.sigma must be > 0");
  if (!(anisotropy >= 0.0 && anisotropy < 1.0))
    ThrowValidation("data.anisotropy must lie in [0, 1)");
  if (!(hard_pair_fraction >= 0.0 && hard_pair_fraction <= 1.0))
    ThrowValidation("data.hard_pair_fraction must lie in [0, 1]");
}

std::string ToString(Split s) { return s == Split::kTrain ? "train" : "eval"; }

std::vector<int> Dataset::Indices(Split split) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (splits[i] == split) out.push_back(i);
  return out;
}

void Dataset::Validate() const {
  if (labels.size() != splits.size() ||
      static_cast<Eigen::Index>(labels.size()) != inputs.rows())
    ThrowValidation("dataset: inconsistent row counts");
  if (num_classes < 2) ThrowValidation("dataset: needs at least 2 classes");
  std::vector<int> train(num_classes, 0), eval(num_classes, 0);
  for (int i = 0; i < size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      ThrowValidation("dataset: label out of range at row " +
                      std::to_string(i));
    (splits[i] == Split::kTrain ? train : eval)[labels[i]]++;
  }
  for (int c = 0; c < num_classes; ++c)
    if (train[c] == 0 || eval[c] == 0)
      ThrowValidation("dataset: class " + std::to_string(c) +
                      " is missing from a split");
}

namespace {

Vector RandomUnit(int dim, Rng &rng) {
  Vector v(dim);
  do {
    for (int a = 0; a < dim; ++a) v[a] = rng.Normal();
  } while (v.norm() < 1e-12);
  return v.normalized();
}

}  // namespace

Dataset Generate(const SynthSpec &spec) {
  spec.Validate();
  const int c = spec.num_classes;
  const int d = spec.input_dim;
  const int n = spec.samples_per_class;
  Rng centers_rng(spec.seed, 1);
  Rng noise_rng(spec.seed, 2);
  Rng split_rng(spec.seed, 3);

  std::vector<Vector> centers;
  for (int k = 0; k < c; ++k) centers.push_back(RandomUnit(d, centers_rng));

  const int hard_pairs = static_cast<int>(
      std::lround(spec.hard_pair_fraction * static_cast<double>(c / 2)));
  for (int p = 0; p < hard_pairs; ++p) {
    const Vector &anchor = centers[2 * p];
    Vector u = RandomUnit(d, centers_rng);
    u -= u.dot(anchor) * anchor;
    u.normalize();
    // Angle in (0, max].
    double angle = (1.0 - centers_rng.Uniform()) * kHardPairMaxDegrees *
                   std::numbers::pi / 180.0;
    centers[2 * p + 1] = std::cos(angle) * anchor + std::sin(angle) * u;
  }

  Dataset data;
  data.num_classes = c;
  data.inputs.resize(static_cast<Eigen::Index>(c) * n, d);
  data.labels.resize(static_cast<size_t>(c) * n);
  data.splits.resize(static_cast<size_t>(c) * n, Split::kTrain);

  const int n_eval = std::clamp(
      static_cast<int>(std::lround(0.2 * static_cast<double>(n))), 1, n - 1);
  for (int k = 0; k < c; ++k) {
    Vector scales(d);
    for (int a = 0; a < d; ++a)
      scales[a] = 1.0 + spec.anisotropy * (2.0 * noise_rng.Uniform() - 1.0);
    for (int i = 0; i < n; ++i) {
      const int row = k * n + i;
      for (int a = 0; a < d; ++a)
        data.inputs(row, a) =
            centers[k][a] + spec.sigma * scales[a] * noise_rng.Normal();
      data.labels[row] = k;
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[split_rng.Below(static_cast<uint64_t>(i) + 1)]);
    for (int i = 0; i < n_eval; ++i) data.splits[k * n + order[i]] = Split::kEval;
  }
  return data;
}

void WriteDataset(const Dataset &data, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "label";
  for (int a = 0; a < data.input_dim(); ++a) os << ",x" << a;
  os << ",split\n";
  for (int i = 0; i < data.size(); ++i) {
    os << data.labels[i];
    for (int a = 0; a < data.input_dim(); ++a)
      os << ',' << FormatDouble(data.inputs(i, a));
    os << ',' << ToString(data.splits[i]) << '\n';
  }
  if (!os) ThrowIo("write failed for '" + path + "'");
}

Dataset ReadDataset(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) ThrowIo(path + ": no data rows");
  auto header = SplitFields(Trim(line));
  if (header.size() < 3 || header.front() != "label" ||
      header.back() != "split")
    ThrowIo(path + ":1: header must be label,x0,...,split");
  const int dim = static_cast<int>(header.size()) - 2;
  for (int a = 0; a < dim; ++a)
    if (header[1 + a] != "x" + std::to_string(a))
      ThrowIo(path + ":1: unexpected column '" + header[1 + a] + "'");

  std::vector<double> values;
  Dataset data;
  int line_no = 1;
  int max_label = -1;
  while (std::getline(is, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitFields(Trim(line));
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != header.size())
      ThrowIo(where + ": expected " + std::to_string(header.size()) +
              " fields, got " + std::to_string(fields.size()));
    int64_t label = 0;
    if (!ParseInt(fields[0], &label) || label < 0)
      ThrowIo(where + ": bad label '" + fields[0] + "'");
    for (int a = 0; a < dim; ++a) {
      double v = 0.0;
      if (!ParseDouble(fields[1 + a], &v) || !std::isfinite(v))
        ThrowIo(where + ": bad value in column x" + std::to_string(a));
      values.push_back(v);
    }
    const std::string split(Trim(fields.back()));
    if (split == "train") {
      data.splits.push_back(Split::kTrain);
    } else if (split == "eval") {
      data.splits.push_back(Split::kEval);
    } else {
      ThrowIo(where + ": split must be train or eval");
    }
    data.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  if (data.labels.empty()) ThrowIo(path + ": no data rows");
  data.inputs = Eigen::Map<Matrix>(values.data(), data.size(), dim);
  data.num_classes = max_label + 1;
  try {
    data.Validate();
  } catch (const Error &e) {
    ThrowIo(path + ": " + e.what());
  }
  return data;
}

}  // namespace dasa
