// tests/mc_oracle_test.cc

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

#include <cmath>

#include "doctest.h"
#include "dasa/mc_oracle.h"
#include "oracles.h"
#include "test_util.h"

namespace dasa {
namespace {

using testing::RandomHead;
using testing::RandomPsd;
using testing::RandomUnit;
using testing::StatsWith;

TEST_CASE("augmented draws") {
  SUBCASE("lambda = 0 returns the embedding") {
    Rng rng(1);
    Vector f = RandomUnit(4, rng);
    ClassStats stats = StatsWith(RandomPsd(4, rng));
    Vector g = SampleAugmented(f, stats, 0.0, rng);
    CHECK((g - f).norm() < 1e-4 * f.norm());
  }
  SUBCASE("identity covariance has unit variance per coordinate") {
    Rng rng(2);
    Vector f = Vector::Zero(3);
    ClassStats stats = StatsWith(Matrix::Identity(3, 3));
    const int n = 100000;
    Vector sum = Vector::Zero(3), sum2 = Vector::Zero(3);
    for (int k = 0; k < n; ++k) {
      Vector g = SampleAugmented(f, stats, 1.0, rng);
      sum += g;
      sum2 += g.cwiseProduct(g);
    }
    for (int a = 0; a < 3; ++a) {
      double mean = sum[a] / n;
      double var = sum2[a] / n - mean * mean;
      CHECK(var >= 0.97);
      CHECK(var <= 1.03);
    }
  }
  SUBCASE("same seed, same draws") {
    ClassStats stats = StatsWith(Matrix::Identity(2, 2));
    Rng a(9, 4), b(9, 4);
    for (int k = 0; k < 100; ++k) {
      Vector x = SampleAugmented(Vector::Zero(2), stats, 0.5, a);
      Vector y = SampleAugmented(Vector::Zero(2), stats, 0.5, b);
      REQUIRE(x == y);
    }
  }
}

TEST_CASE("expected cross entropy against the ISDA bound") {
  Rng rng(11);
  ClassifierHead h = RandomHead(3, 4, rng, 1.0, 0.0);
  Vector f = RandomUnit(4, rng);
  ClassStats stats = StatsWith(RandomPsd(4, rng, 0.3));

  SUBCASE("lambda = 0 is deterministic") {
    McReport r = McExpectedCe(f, h, stats, 0.0, 1, 1000, 5);
    CHECK(r.mean == SoftmaxCe(f, h, 1).value);
    CHECK(r.std_error == 0.0);
    CHECK(r.slack == 0.0);
    CHECK(r.z_score == 0.0);
  }
  SUBCASE("bound holds statistically") {
    McReport r = McExpectedCe(f, h, stats, 1.0, 1, 100000, 5);
    CHECK(r.samples == 100000);
    CHECK(r.bound_value == IsdaBound(f, h, stats, 1.0, 1).value);
    CHECK(r.z_score >= -3.0);
  }
  SUBCASE("hand-set C = 3, F = 2, identity covariance, lambda = 2") {
    ClassifierHead g;
    g.weights.resize(3, 2);
    g.weights << 1.0, 0.0, 0.0, 1.0, -1.0, 0.5;
    g.biases = (Vector(3) << 0.1, -0.2, 0.3).finished();
    Vector x = (Vector(2) << 0.6, 0.8).finished();
    ClassStats id = StatsWith(Matrix::Identity(2, 2));
    McReport r = McExpectedCe(x, g, id, 2.0, 0, 100000, 3);
    CHECK(std::abs(r.bound_value -
                   oracle::IsdaBound(x, g.weights, g.biases,
                                     Matrix::Identity(2, 2), 2.0, 0)) <= 1e-12);
    CHECK(r.z_score >= -3.0);
  }
  SUBCASE("standard error shrinks like 1/sqrt(M)") {
    McReport small = McExpectedCe(f, h, stats, 1.0, 0, 100, 7);
    McReport large = McExpectedCe(f, h, stats, 1.0, 0, 100000, 7);
    double ratio = small.std_error / large.std_error;
    CHECK(ratio >= std::sqrt(1000.0) / 2.0);
    CHECK(ratio <= std::sqrt(1000.0) * 2.0);
  }
  SUBCASE("standard error falls as M grows; slack settles non-negative") {
    double prev = 1e300;
    McReport r;
    for (int64_t m : {1000, 10000, 100000}) {
      r = McExpectedCe(f, h, stats, 1.0, 2, m, 13);
      CHECK(r.std_error < prev);
      prev = r.std_error;
    }
    CHECK(r.slack >= -3.0 * r.std_error);
  }
  SUBCASE("identical inputs give identical reports") {
    McReport a = McExpectedCe(f, h, stats, 0.7, 2, 5000, 99);
    McReport b = McExpectedCe(f, h, stats, 0.7, 2, 5000, 99);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.z_score == b.z_score);
  }
  SUBCASE("too few samples or negative strength are rejected") {
    CHECK_THROWS_AS(McExpectedCe(f, h, stats, 1.0, 0, 10, 1), Error);
    CHECK_THROWS_AS(McExpectedCe(f, h, stats, -1.0, 0, 1000, 1), Error);
  }
}

TEST_CASE("expected margin loss against the margin bounds") {
  Rng rng(21);
  ClassifierHead h = RandomHead(3, 4, rng, 8.0, 0.2);
  Vector f = RandomUnit(4, rng);
  Matrix omega = RandomPsd(4, rng);
  ClassStats stats = StatsWith(omega);

  SUBCASE("lambda = 0 is the deterministic margin loss") {
    McReport r = McExpectedMargin(f, h, stats, 0.0, 0, Difficulty::kDA, 2.0,
                                  1000, 1);
    CHECK(r.mean == DaamSoftmax(f, h, 0, Difficulty::kDA, 2.0).value);
    CHECK(r.std_error == 0.0);
  }
  SUBCASE("coef = 1 against the plain margin bound") {
    McReport r = McExpectedMargin(f, h, stats, 0.5, 0, Difficulty::kNone, 2.0,
                                  100000, 1);
    CHECK(r.bound_value ==
          DasaBoundAt(f, h, stats, 0, Difficulty::kNone, 2.0, 0.5).value);
    CHECK(r.z_score >= -3.0);
  }
  SUBCASE("coef = DA against the difficulty-aware bound") {
    McReport r = McExpectedMargin(f, h, stats, 0.5, 0, Difficulty::kDA, 2.0,
                                  100000, 2);
    double direct =
        oracle::MarginBound(f, h.weights, 0, 8.0, 0.2, 1, 2.0, omega, 0.5);
    CHECK(std::abs(r.bound_value - direct) <= 1e-12 * std::max(1.0, direct));
    CHECK(r.z_score >= -3.0);
  }
}

TEST_CASE("moment generating function identity") {
  SUBCASE("t = 0") {
    MomentCheck m = MomentIdentityCheck(0.3, 2.0, 0.0, 1000, 1);
    CHECK(m.mc_mean == 1.0);
    CHECK(m.closed_form == 1.0);
    CHECK(m.passed);
  }
  SUBCASE("standard normal, t = 1") {
    MomentCheck m = MomentIdentityCheck(0.0, 1.0, 1.0, 1000000, 1);
    CHECK(m.closed_form == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
    CHECK(m.passed);
  }
  SUBCASE("degenerate variance") {
    MomentCheck m = MomentIdentityCheck(0.4, 0.0, 1.5, 1000, 1);
    CHECK(m.rel_error == 0.0);
    CHECK(m.passed);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(MomentIdentityCheck(0.0, -1.0, 1.0, 1000, 1), Error);
    CHECK_THROWS_AS(MomentIdentityCheck(0.0, 4.0, 2.0, 1000, 1), Error);
  }
}

}  // namespace
}  // namespace dasa
