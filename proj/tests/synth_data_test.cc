// tests/synth_data_test.cc

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
#include "dasa/synth_data.h"
#include "oracles.h"
#include "test_util.h"

namespace dasa {
namespace {

std::vector<bool> EvalMask(const Dataset &d) {
  std::vector<bool> m;
  for (Split s : d.splits) m.push_back(s == Split::kEval);
  return m;
}

TEST_CASE("well separated classes are perfectly classified") {
  SynthSpec spec;
  spec.num_classes = 2;
  spec.sigma = 0.01;
  spec.hard_pair_fraction = 0.0;
  Dataset d = Generate(spec);
  CHECK(oracle::NearestCenterAccuracy(d.inputs, d.labels, EvalMask(d), 2) == 1.0);
}

TEST_CASE("a hard pair with wide noise overlaps") {
  SynthSpec spec;
  spec.num_classes = 2;
  spec.sigma = 0.5;
  spec.hard_pair_fraction = 1.0;
  Dataset d = Generate(spec);
  CHECK(oracle::NearestCenterAccuracy(d.inputs, d.labels, EvalMask(d), 2) < 0.95);
}

TEST_CASE("hard pairs pull class means together") {
  SynthSpec spec;
  spec.num_classes = 4;
  spec.sigma = 0.001;
  spec.anisotropy = 0.0;
  spec.samples_per_class = 20;
  spec.hard_pair_fraction = 1.0;
  Dataset d = Generate(spec);
  std::vector<Vector> mean(4, Vector::Zero(spec.input_dim));
  for (int i = 0; i < d.size(); ++i)
    mean[d.labels[i]] += d.inputs.row(i).transpose() / spec.samples_per_class;
  for (int p = 0; p < 2; ++p) {
    double c = mean[2 * p].normalized().dot(mean[2 * p + 1].normalized());
    CHECK(c >= std::cos(kHardPairMaxDegrees * M_PI / 180.0) - 1e-3);
  }
}

TEST_CASE("generation is deterministic and stratified") {
  SynthSpec spec;
  spec.num_classes = 7;
  spec.samples_per_class = 23;
  spec.hard_pair_fraction = 0.5;
  spec.seed = 17;
  Dataset a = Generate(spec), b = Generate(spec);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.splits == b.splits);
  std::string dir = testing::TempDir("synth_det");
  WriteDataset(a, dir + "/a.csv");
  WriteDataset(b, dir + "/b.csv");
  CHECK(testing::Slurp(dir + "/a.csv") == testing::Slurp(dir + "/b.csv"));

  std::vector<int> eval(7, 0), total(7, 0);
  for (int i = 0; i < a.size(); ++i) {
    ++total[a.labels[i]];
    eval[a.labels[i]] += a.splits[i] == Split::kEval ? 1 : 0;
  }
  for (int c = 0; c < 7; ++c) {
    CHECK(total[c] == 23);
    CHECK(std::abs(eval[c] - 0.2 * 23) <= 1.0);
  }
  spec.seed = 18;
  CHECK(Generate(spec).inputs != a.inputs);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec;
  spec.num_classes = 1;
  CHECK_THROWS_AS(Generate(spec), Error);
  spec = SynthSpec();
  spec.samples_per_class = 1;
  CHECK_THROWS_AS(Generate(spec), Error);
  spec = SynthSpec();
  spec.sigma = 0.0;
  CHECK_THROWS_AS(Generate(spec), Error);
  spec = SynthSpec();
  spec.hard_pair_fraction = 1.5;
  CHECK_THROWS_AS(Generate(spec), Error);
}

TEST_CASE("dataset CSV round trip") {
  SynthSpec spec;
  spec.num_classes = 3;
  spec.input_dim = 5;
  spec.samples_per_class = 10;
  Dataset d = Generate(spec);
  std::string dir = testing::TempDir("synth_io");
  WriteDataset(d, dir + "/d.csv");
  Dataset back = ReadDataset(dir + "/d.csv");
  CHECK(back.num_classes == 3);
  CHECK(back.labels == d.labels);
  CHECK(back.splits == d.splits);
  CHECK((back.inputs - d.inputs).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(back.inputs == d.inputs);
}

TEST_CASE("dataset reader errors") {
  std::string dir = testing::TempDir("synth_bad");
  testing::Spit(dir + "/empty.csv", "");
  try {
    ReadDataset(dir + "/empty.csv");
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("no data rows") != std::string::npos);
  }
  testing::Spit(dir + "/header.csv", "label,x0,x1,split\n");
  CHECK_THROWS_WITH_AS(ReadDataset(dir + "/header.csv"),
                       doctest::Contains("no data rows"), Error);
  testing::Spit(dir + "/arity.csv",
                "label,x0,x1,split\n0,1,2,train\n1,3,eval\n");
  CHECK_THROWS_WITH_AS(ReadDataset(dir + "/arity.csv"),
                       doctest::Contains(":3"), Error);
  testing::Spit(dir + "/split.csv", "label,x0,x1,split\n0,1,2,test\n");
  CHECK_THROWS_WITH_AS(ReadDataset(dir + "/split.csv"),
                       doctest::Contains(":2"), Error);
  CHECK_THROWS_WITH_AS(ReadDataset(dir + "/nope.csv"),
                       doctest::Contains("nope.csv"), Error);
}

}  // namespace
}  // namespace dasa
