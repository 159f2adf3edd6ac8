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

#include "doctest.h"
#include "nvtx/attention.hpp"
#include "nvtx/errors.hpp"
#include "oracles.hpp"

using namespace nvtx;

namespace {

AttentionParams identity_params(std::size_t d) {
  AttentionParams p;
  p.wq = p.wk = p.wv = Matrix::identity(d);
  p.bq = p.bk = p.bv = Vector(d, 0.0);
  p.heads = 1;
  return p;
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("a single key returns its value projection") {
  oracle::Gen g(1);
  const AttentionParams p = g.params(8, 2, 0.5, 0.3);
  const Matrix z = g.matrix(1, 8);
  Matrix expected = matmul(z, p.wv);
  add_row_vector(expected, p.bv);
  const Matrix out = attention(g.matrix(3, 8), z, p);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(out(r, c) - expected(0, c)) <= 1e-12);
}

TEST_CASE("orthogonal query over equal-norm keys averages the keys") {
  const Matrix z{{1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  const Matrix u{{0, 0, 2}};
  const Matrix out = attention(u, z, identity_params(3));
  CHECK(out(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(out(0, 1) == doctest::Approx(0.0));
  CHECK(out(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("multi-head attention matches the slow per-head reference") {
  oracle::Gen g(2);
  for (int t = 0; t < 50; ++t) {
    const AttentionParams p = g.params(8, 2, 0.7, 0.3);
    const Matrix u = g.matrix(3, 8), z = g.matrix(4, 8);
    CHECK(oracle::max_abs(attention(u, z, p), oracle::slow_attention(u, z, p)) <= 1e-12);
  }
}

TEST_CASE("masked attention matches the reference on visible keys") {
  oracle::Gen g(3);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = g.pick(2, 6);
    const AttentionParams p = g.params(8, 4, 0.7, 0.3);
    const Matrix z = g.matrix(n, 8);
    const Matrix causal = attention(z, z, p, AttentionMask::causal());
    CHECK(oracle::max_abs(causal, oracle::slow_attention(z, z, p, [](auto q, auto k) {
            return k <= q;
          })) <= 1e-12);
    std::vector<unsigned char> vis(3 * n);
    for (std::size_t i = 0; i < vis.size(); ++i) vis[i] = (i % 3 != 1) || (i % n == 0);
    for (std::size_t q = 0; q < 3; ++q) vis[q * n] = 1;
    const Matrix u = g.matrix(3, 8);
    const Matrix custom = attention(u, z, p, AttentionMask::custom(3, n, vis));
    CHECK(oracle::max_abs(custom, oracle::slow_attention(u, z, p, [&](auto q, auto k) {
            return vis[q * n + k] != 0;
          })) <= 1e-12);
  }
}

TEST_CASE("masked weights are exactly zero") {
  oracle::Gen g(4);
  const AttentionParams p = g.params(4, 2, 1.0, 0.1);
  const Matrix z = g.matrix(5, 4);
  for (const Matrix& w : attention_weights(z, z, p, AttentionMask::causal()))
    for (std::size_t q = 0; q < 5; ++q)
      for (std::size_t k = q + 1; k < 5; ++k) CHECK(w(q, k) == 0.0);
}

TEST_CASE("causal output is invariant to later rows") {
  oracle::Gen g(5);
  const AttentionParams p = g.params(8, 2, 0.8, 0.2);
  Matrix z = g.matrix(6, 8);
  const Matrix before = attention(z, z, p, AttentionMask::causal());
  for (std::size_t r = 4; r < 6; ++r)
    for (std::size_t c = 0; c < 8; ++c) z(r, c) += g.normal(5.0);
  const Matrix after = attention(z, z, p, AttentionMask::causal());
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(before(r, c) == after(r, c));
}

TEST_CASE("key bias only shifts scores per query and cancels") {
  oracle::Gen g(6);
  for (int t = 0; t < 20; ++t) {
    AttentionParams p = g.params(8, 2, 0.7, 0.0);
    const Matrix u = g.matrix(3, 8), z = g.matrix(5, 8);
    const Matrix plain = attention(u, z, p);
    p.bk = g.vector(8, 2.0);
    CHECK(oracle::max_abs(attention(u, z, p), plain) <= 1e-12);
  }
}

TEST_CASE("fully masked rows and bad shapes are rejected") {
  oracle::Gen g(7);
  const AttentionParams p = g.params(4, 2, 1.0, 0.0);
  const Matrix u = g.matrix(2, 4), z = g.matrix(3, 4);
  std::vector<unsigned char> vis{1, 1, 1, 0, 0, 0};
  CHECK_THROWS_AS(attention(u, z, p, AttentionMask::custom(2, 3, vis)), ContractError);
  CHECK_THROWS_AS(attention(u, z, p, AttentionMask::causal()), DimensionError);
  AttentionParams bad = p;
  bad.heads = 3;
  CHECK_THROWS_AS(attention(u, z, bad), DimensionError);
  CHECK_THROWS_AS(attention(g.matrix(2, 5), z, p), DimensionError);
}

TEST_CASE("attn_core saturates to the aligned key") {
  const Matrix z{{1, 0}, {0, 1}, {-1, 0}};
  const Matrix out = attn_core(Matrix{{1e4, 0}}, z, std::sqrt(2.0));
  CHECK(out(0, 0) == doctest::Approx(1.0));
  CHECK(out(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("attn_core over one row returns that row") {
  oracle::Gen g(8);
  const Matrix z = g.matrix(1, 5);
  const Matrix out = attn_core(g.matrix(4, 5), z, 2.0);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(out(r, c) - z(0, c)) <= 1e-15);
}

TEST_CASE("regrouping: attention equals attn_core of projected query") {
  oracle::Gen g(9);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = g.pick(1, 8);
    AttentionParams p = g.params(d, 1, 0.8, 0.0);
    const Matrix u = g.matrix(g.pick(1, 5), d), z = g.matrix(g.pick(1, 6), d);
    const Matrix lhs = attention(u, z, p);
    const Matrix rhs = matmul(attn_core(matmul_transposed(matmul(u, p.wq), p.wk), z,
                                        std::sqrt(static_cast<double>(d))),
                              p.wv);
    CHECK(oracle::max_abs(lhs, rhs) <= 1e-12);
  }
}

}  // TEST_SUITE
