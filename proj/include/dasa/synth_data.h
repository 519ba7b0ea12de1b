// include/dasa/synth_data.h

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

#ifndef DASA_SYNTH_DATA_H_
#define DASA_SYNTH_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dasa/common.h"

namespace dasa {

/// Parameters of a synthetic "speaker" dataset.
struct SynthSpec {
  int num_classes = 10;
  int input_dim = 20;
  int samples_per_class = 50;
  double sigma = 0.3;
  /// Per-class, per-coordinate noise scales are drawn from
  /// [1 - anisotropy, 1 + anisotropy]; 0 gives isotropic classes.
  double anisotropy = 0.5;
  /// Fraction of the floor(C / 2) disjoint class pairs whose centers are
  /// rotated to within 15 degrees of each other.
  double hard_pair_fraction = 0.0;
  uint64_t seed = 1;

  void Validate() const;
};

/// Largest angle between the two centers of a hard pair.
inline constexpr double kHardPairMaxDegrees = 15.0;

enum class Split { kTrain, kEval };

std::string ToString(Split s);

struct Dataset {
  Matrix inputs;  // N x d_in
  std::vector<int> labels;
  std::vector<Split> splits;
  int num_classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }
  /// Row indices of one split, in row order.
  std::vector<int> Indices(Split split) const;

  /// Labels < num_classes; every class present in both splits.
  void Validate() const;
};

/**
   Draws C unit-norm centers uniformly on the sphere, pulls the second
   member of each hard pair to a random angle in (0, 15] degrees from the
   first, and emits center + sigma * scale (.) z per sample. Each class keeps
   round(0.2 n) of its samples (at least 1, at most n - 1) for eval, chosen
   at random. Rows are ordered by class, then by draw.
*/
Dataset Generate(const SynthSpec &spec);

/// CSV with header "label,x0,...,x{d-1},split"; split is train or eval.
void WriteDataset(const Dataset &data, const std::string &path);
Dataset ReadDataset(const std::string &path);

}  // namespace dasa

#endif  // DASA_SYNTH_DATA_H_
