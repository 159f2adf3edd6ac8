/* Copyright 2026 The nvtx Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <limits>

#include "doctest.h"
#include "nvtx/errors.hpp"
#include "nvtx/numeric.hpp"
#include "oracles.hpp"

using namespace nvtx;

TEST_SUITE("numeric") {

TEST_CASE("matmul by identity returns the operand") {
  oracle::Gen g(1);
  const Matrix a = g.matrix(3, 4);
  CHECK(matmul(Matrix::identity(3), a) == a);
}

TEST_CASE("matmul hand-checked 2x2 by 2x1") {
  const Matrix c = matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{0}, {1}});
  CHECK(c == Matrix{{2}, {4}});
}

TEST_CASE("matmul matches the triple-loop oracle") {
  oracle::Gen g(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = g.matrix(7, 5), b = g.matrix(5, 3);
    const Matrix c = matmul(a, b);
    REQUIRE(c.rows() == 7);
    REQUIRE(c.cols() == 3);
    CHECK(oracle::max_abs(c, oracle::naive_matmul(a, b)) <= 1e-12);
    CHECK(oracle::max_abs(matmul_transposed(a, b.transposed()), c) <= 1e-12);
  }
}

TEST_CASE("matmul shape mismatch is a dimension error") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>(3)), DimensionError);
}

TEST_CASE("matmul is associative on random triples") {
  oracle::Gen g(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t p = g.pick(1, 6), q = g.pick(1, 6), r = g.pick(1, 6), s = g.pick(1, 6);
    const Matrix a = g.matrix(p, q), b = g.matrix(q, r), c = g.matrix(r, s);
    const Matrix left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
    double scale = 0;
    for (double v : left.data()) scale = std::max(scale, std::abs(v));
    CHECK(max_abs_diff(left, right) <= 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("softmax of a constant row is uniform") {
  const Matrix s = softmax_rows(Matrix{{0, 0, 0}});
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax survives a 1000 spread") {
  const Matrix s = softmax_rows(Matrix{{1000, 0}});
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == 0.0);
}

TEST_CASE("softmax matches extended-precision exp/sum") {
  const Matrix s = softmax_rows(Matrix{{1, 2, 3}});
  const auto ref = oracle::softmax_ld({1, 2, 3});
  for (int i = 0; i < 3; ++i) CHECK(std::abs(s(0, i) - static_cast<double>(ref[i])) <= 1e-12);
}

TEST_CASE("softmax rows sum to one for wide-spread inputs") {
  oracle::Gen g(4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = g.pick(1, 12);
    Matrix a(3, n);
    for (double& v : a.data()) v = g.uniform(-2000, 2000);
    const Matrix s = softmax_rows(a);
    for (std::size_t r = 0; r < 3; ++r) {
      double sum = 0;
      for (double v : s.row(r)) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    CHECK(all_finite(s));
  }
}

TEST_CASE("log_sum_exp edge cases") {
  CHECK(log_sum_exp(std::vector<double>{}) == -std::numeric_limits<double>::infinity());
  CHECK(log_sum_exp(std::vector<double>{800, 800}) == doctest::Approx(800 + std::log(2.0)));
}

TEST_CASE("rng is reproducible") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(0.7) == b.gamma(0.7));
  }
}

TEST_CASE("gamma moments match shape for small and large shapes") {
  for (double shape : {0.3, 1.0, 4.5}) {
    Rng rng(11);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(shape);
      s += x;
      s2 += x * x;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    // Gamma(k, 1): mean k, variance k; 4 standard errors.
    CHECK(std::abs(mean - shape) <= 4 * std::sqrt(shape / n));
    CHECK(std::abs(var - shape) / shape <= 0.05);
  }
}

TEST_CASE("dirichlet concentrates for huge alpha") {
  Rng rng(5);
  const Vector pi = sample_dirichlet(rng, Vector{1e9, 1e9});
  CHECK(std::abs(pi[0] - 0.5) <= 1e-3);
  CHECK(std::abs(pi[1] - 0.5) <= 1e-3);
}

TEST_CASE("dirichlet with one component is the point mass") {
  Rng rng(5);
  CHECK(sample_dirichlet(rng, Vector{3.7}) == Vector{1.0});
}

TEST_CASE("dirichlet Monte-Carlo mean matches alpha over alpha0") {
  Rng rng(6);
  const Vector alpha{2, 3, 5};
  const int n = 100000;
  Vector mean(3, 0);
  for (int i = 0; i < n; ++i) {
    const Vector pi = sample_dirichlet(rng, alpha);
    for (int k = 0; k < 3; ++k) mean[k] += pi[k] / n;
  }
  const double a0 = 10;
  for (int k = 0; k < 3; ++k) {
    const double m = alpha[k] / a0;
    const double se = std::sqrt(m * (1 - m) / (a0 + 1) / n);
    CHECK(std::abs(mean[k] - m) <= 5e-3);
    CHECK(std::abs(mean[k] - m) <= 3 * se);
  }
}

TEST_CASE("dirichlet samples lie on the simplex") {
  Rng rng(7);
  oracle::Gen g(7);
  for (int t = 0; t < 500; ++t) {
    Vector alpha(g.pick(1, 9));
    for (double& a : alpha) a = std::exp(g.uniform(-4, 6));
    const Vector pi = sample_dirichlet(rng, alpha);
    double s = 0;
    for (double p : pi) {
      CHECK(p >= 0.0);
      s += p;
    }
    CHECK(std::abs(s - 1) <= 1e-9);
  }
}

TEST_CASE("dirichlet rejects nonpositive concentrations") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_dirichlet(rng, Vector{1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(sample_dirichlet(rng, Vector{-1.0}), DomainError);
}

TEST_CASE("log-space dirichlet stays finite far beyond double range") {
  Rng rng(8);
  const Vector lp = sample_dirichlet_log(rng, Vector{700, 700, -700});
  for (double v : lp) CHECK(std::isfinite(v));
  CHECK(std::abs(std::exp(lp[0]) - 0.5) <= 1e-6);
  CHECK(std::exp(lp[2]) < 1e-300);
}

TEST_CASE("gaussian with zero sigma returns mu exactly") {
  Rng rng(1);
  oracle::Gen g(1);
  const Matrix mu = g.matrix(4, 3);
  CHECK(sample_gaussian(rng, mu, Matrix(4, 3, 0.0)) == mu);
}

TEST_CASE("gaussian variance matches sigma squared") {
  Rng rng(2);
  const int n = 100000;
  const Matrix s = sample_gaussian(rng, Matrix(n, 1, 1.5), Matrix(n, 1, 2.0));
  double m = 0, v = 0;
  for (double x : s.data()) m += x / n;
  for (double x : s.data()) v += (x - m) * (x - m) / (n - 1);
  CHECK(std::abs(v - 4.0) / 4.0 <= 0.02);
}

TEST_CASE("gaussian sampling is deterministic and rejects negative sigma") {
  Rng a(3), b(3);
  const Matrix mu(5, 2, 0.0), sd(5, 2, 1.0);
  CHECK(sample_gaussian(a, mu, sd) == sample_gaussian(b, mu, sd));
  CHECK_THROWS_AS(sample_gaussian(a, mu, Matrix(5, 2, -1.0)), DomainError);
}

}  // TEST_SUITE
