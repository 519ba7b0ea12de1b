// include/dasa/rng.h

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

#ifndef DASA_RNG_H_
#define DASA_RNG_H_

#include <cstdint>

namespace dasa {

/**
   Counter-based generator with a fixed, documented construction so that
   every platform produces the same streams.

   Each (seed, stream) pair selects a 64-bit key:
       key = Mix(seed ^ Mix(stream + 0x632BE59BD9B4E019))
   and the k-th output (k = 1, 2, ...) is
       Mix(key + k * 0x9E3779B97F4A7C15)
   where Mix is the SplitMix64 finalizer
       z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
       z ^= z >> 27; z *= 0x94D049BB133111EB;
       z ^= z >> 31.
   Uniform() takes the top 53 bits; Normal() uses the Box-Muller transform
   and returns the cosine branch followed by the sine branch.
*/
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint64_t NextU64();
  /// Uniform on [0, 1).
  double Uniform();
  /// Standard normal.
  double Normal();
  /// Uniform integer in [0, n); n > 0.
  uint64_t Below(uint64_t n);

  static uint64_t Mix(uint64_t z);

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dasa

#endif  // DASA_RNG_H_
