// tests/embedding_stats_test.cc

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

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "dasa/embedding_stats.h"
#include "oracles.h"
#include "test_util.h"

namespace dasa {
namespace {

using testing::RandomPsd;
using testing::RandomVector;

double RelFrobenius(const Matrix &a, const Matrix &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

TEST_CASE("single sample gives zero covariance") {
  ClassStats s(0, 3, CovarianceMode::kFull);
  CHECK(s.count() == 0);
  CHECK(s.mean().isZero(0.0));
  CHECK(s.Covariance().isZero(0.0));
  Vector x(3);
  x << 0.3, -1.2, 2.5;
  s.Add(x);
  CHECK(s.count() == 1);
  CHECK(s.mean() == x);
  CHECK(s.Covariance().isZero(0.0));
}

TEST_CASE("two samples match the hand covariance") {
  ClassStats s(0, 2, CovarianceMode::kFull);
  s.Add((Vector(2) << 1.0, 0.0).finished());
  s.Add((Vector(2) << 0.0, 1.0).finished());
  CHECK(s.mean()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.mean()[1] == doctest::Approx(0.5).epsilon(1e-15));
  Matrix expect(2, 2);
  expect << 0.25, -0.25, -0.25, 0.25;
  CHECK((s.Covariance() - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("streaming covariance equals two-pass, in any order") {
  for (int stream = 0; stream < 100; ++stream) {
    Rng rng(42, stream);
    const int dim = 1 + static_cast<int>(rng.Below(8));
    const int n = 2 + static_cast<int>(rng.Below(300));
    Vector offset = RandomVector(dim, rng, 3.0);
    std::vector<Vector> xs;
    for (int i = 0; i < n; ++i)
      xs.push_back(offset + RandomVector(dim, rng, 0.1 + rng.Uniform()));

    Vector mean;
    Matrix cov;
    oracle::TwoPassCovariance(xs, &mean, &cov);

    ClassStats s(0, dim, CovarianceMode::kFull);
    for (const Vector &x : xs) {
      s.Add(x);
      const Matrix &c = s.Covariance();
      REQUIRE((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK(RelFrobenius(s.Covariance(), cov) <= 1e-8);
    CHECK((s.mean() - mean).norm() <= 1e-12 * (1.0 + mean.norm()));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.Covariance());
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * s.Trace() / dim);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.Below(static_cast<uint64_t>(i + 1))]);
    ClassStats p(0, dim, CovarianceMode::kFull);
    for (int i : perm) p.Add(xs[i]);
    CHECK(RelFrobenius(p.Covariance(), s.Covariance()) <= 1e-8);
  }
}

TEST_CASE("diagonal mode keeps the variances of full mode") {
  Rng rng(7);
  ClassStats full(0, 4, CovarianceMode::kFull);
  ClassStats diag(0, 4, CovarianceMode::kDiagonal);
  for (int i = 0; i < 50; ++i) {
    Vector x = RandomVector(4, rng);
    full.Add(x);
    diag.Add(x);
  }
  CHECK(diag.cov_storage().cols() == 1);
  for (int a = 0; a < 4; ++a)
    CHECK(diag.Covariance()(a, a) ==
          doctest::Approx(full.Covariance()(a, a)).epsilon(1e-12));
  CHECK(diag.Covariance()(0, 1) == 0.0);
}

TEST_CASE("bank updates only the labelled class and validates input") {
  CovarianceBank bank(3, 2);
  bank.Update((Vector(2) << 1.0, 2.0).finished(), 1);
  CHECK(bank.stats(0).count() == 0);
  CHECK(bank.stats(1).count() == 1);
  CHECK(bank.stats(2).count() == 0);
  CHECK_THROWS_AS(bank.Update(Vector::Zero(3), 0), Error);
  CHECK_THROWS_AS(bank.Update(Vector::Zero(2), 3), Error);
  CHECK_THROWS_AS(bank.Update(Vector::Zero(2), -1), Error);
}

TEST_CASE("quadratic forms") {
  SUBCASE("zero covariance") {
    CovarianceBank bank(3, 2);
    Rng rng(1);
    Vector phi = bank.QuadraticForms(1, testing::RandomMatrix(3, 2, rng));
    CHECK(phi.isZero(0.0));
  }
  SUBCASE("identity covariance is a squared distance") {
    CovarianceBank bank(2, 2);
    bank.set_stats(0, testing::StatsWith(Matrix::Identity(2, 2), 0));
    Matrix w(2, 2);
    w << 1.0, 0.0, 0.0, 1.0;
    Vector phi = bank.QuadraticForms(0, w);
    CHECK(phi[0] == 0.0);
    CHECK(phi[1] == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("random PSD matches the triple product; own class is exactly 0") {
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(3, trial);
      const int dim = 2 + static_cast<int>(rng.Below(6));
      const int c = 2 + static_cast<int>(rng.Below(6));
      Matrix omega = RandomPsd(dim, rng, 1.0);
      const int y = static_cast<int>(rng.Below(c));
      CovarianceBank bank(c, dim);
      bank.set_stats(y, testing::StatsWith(omega, y));
      Matrix w = testing::RandomMatrix(c, dim, rng);
      Vector phi = bank.QuadraticForms(y, w);
      CHECK(phi[y] == 0.0);
      for (int j = 0; j < c; ++j) {
        Vector dw = (w.row(j) - w.row(y)).transpose();
        CHECK(std::abs(phi[j] - oracle::TripleProduct(dw, omega, dw)) <= 1e-10);
        CHECK(phi[j] >= -1e-9 * dw.squaredNorm() * omega.trace() / dim);
      }
      // Shifting every row by the same vector leaves the differences alone.
      Matrix shifted = w.rowwise() + RandomVector(dim, rng).transpose();
      Vector phi2 = bank.QuadraticForms(y, shifted);
      CHECK((phi2 - phi).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + phi.norm()));
    }
  }
  SUBCASE("diagonal mode") {
    CovarianceBank bank(2, 3, CovarianceMode::kDiagonal);
    Matrix d(3, 1);
    d << 0.5, 2.0, 0.25;
    bank.set_stats(0, ClassStats::FromParts(0, CovarianceMode::kDiagonal, 5,
                                            Vector::Zero(3), d));
    Matrix w(2, 3);
    w << 0.0, 0.0, 0.0, 1.0, -2.0, 4.0;
    CHECK(bank.QuadraticForms(0, w)[1] ==
          doctest::Approx(0.5 + 2.0 * 4.0 + 0.25 * 16.0).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    CovarianceBank bank(2, 3);
    CHECK_THROWS_AS(bank.QuadraticForms(0, Matrix::Zero(2, 4)), Error);
  }
}

TEST_CASE("sampler factor") {
  SUBCASE("zero covariance gives a near-zero factor") {
    Matrix l = SamplerFactor(Matrix::Zero(3, 3), 1.0);
    Matrix llt = l * l.transpose();
    CHECK((llt - 1e-9 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-20);
  }
  SUBCASE("scaled identity") {
    Matrix l = SamplerFactor(Matrix::Identity(4, 4), 4.0);
    CHECK((l - 2.0 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("random PSD reconstructs") {
    for (int trial = 0; trial < 30; ++trial) {
      Rng rng(5, trial);
      const int dim = 1 + static_cast<int>(rng.Below(8));
      Matrix omega = RandomPsd(dim, rng, 2.0);
      const double lambda = 3.0 * rng.Uniform();
      Matrix l = SamplerFactor(omega, lambda);
      const double eps = SamplerJitter(lambda * omega);
      CHECK(eps == 1e-9 * std::max(1.0, (lambda * omega).trace() / dim));
      Matrix target = lambda * omega + eps * Matrix::Identity(dim, dim);
      CHECK((l * l.transpose() - target).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((l * l.transpose() - lambda * omega).cwiseAbs().maxCoeff() <=
            eps * dim + 1e-12);
    }
  }
  SUBCASE("rank-deficient covariance still factors") {
    Vector u(3);
    u << 1.0, 2.0, -1.0;
    Matrix omega = u * u.transpose();
    CHECK_NOTHROW(SamplerFactor(omega, 1.0));
  }
  SUBCASE("non-symmetric input and negative lambda are rejected") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = 0.5;
    CHECK_THROWS_AS(SamplerFactor(m, 1.0), Error);
    CHECK_THROWS_AS(SamplerFactor(Matrix::Identity(2, 2), -1.0), Error);
  }
}

TEST_CASE("bank snapshot round-trips bit-exactly") {
  for (CovarianceMode mode : {CovarianceMode::kFull, CovarianceMode::kDiagonal}) {
    Rng rng(11);
    CovarianceBank bank(4, 3, mode);
    for (int i = 0; i < 40; ++i)
      bank.Update(RandomVector(3, rng), static_cast<int>(rng.Below(3)));
    std::string dir = testing::TempDir("bank");
    std::string path = dir + "/bank.csv";
    bank.Write(path);
    CovarianceBank back = CovarianceBank::Read(path);
    REQUIRE(back.num_classes() == 4);
    REQUIRE(back.mode() == mode);
    for (int c = 0; c < 4; ++c) {
      CHECK(back.stats(c).count() == bank.stats(c).count());
      CHECK(back.stats(c).mean() == bank.stats(c).mean());
      CHECK(back.stats(c).cov_storage() == bank.stats(c).cov_storage());
    }
    std::string again = dir + "/again.csv";
    back.Write(again);
    CHECK(testing::Slurp(path) == testing::Slurp(again));
  }
}

TEST_CASE("bank reader rejects malformed files") {
  std::string dir = testing::TempDir("bank_bad");
  testing::Spit(dir + "/a.csv", "bank,2,2,full\n0,1,0.5\n");
  CHECK_THROWS_AS(CovarianceBank::Read(dir + "/a.csv"), Error);
  CHECK_THROWS_AS(CovarianceBank::Read(dir + "/missing.csv"), Error);
}

}  // namespace
}  // namespace dasa
