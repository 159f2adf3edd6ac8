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

// Standard scaled dot-product attention and its regrouped core form.

#pragma once

#include <cstddef>
#include <vector>

#include "nvtx/numeric.hpp"

namespace nvtx {

/// Query/key/value projections of one attention site. Head i owns columns
/// [i*d/h, (i+1)*d/h) of each projection; heads are combined by placing each
/// head's value output in its own column slice, which equals summing
/// zero-padded per-head value projections.
struct AttentionParams {
  Matrix wq, wk, wv;
  Vector bq, bk, bv;
  std::size_t heads = 1;

  std::size_t model_dim() const noexcept { return wq.rows(); }
  std::size_t head_dim() const noexcept { return model_dim() / heads; }
  /// sqrt(d/h), the per-head score scale.
  double scale() const;

  /// Throws DimensionError on inconsistent shapes or d % h != 0.
  void validate() const;
};

class AttentionMask {
 public:
  enum class Kind { kNone, kCausal, kCustom };

  AttentionMask() = default;
  static AttentionMask none() { return {}; }
  static AttentionMask causal();
  /// `visible` is row-major m x n, nonzero = visible.
  static AttentionMask custom(std::size_t rows, std::size_t cols,
                              std::vector<unsigned char> visible);

  Kind kind() const noexcept { return kind_; }
  /// Shape of a custom mask; zero otherwise.
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool visible(std::size_t query, std::size_t key) const;

  /// Throws DimensionError when the mask cannot apply to an m x n score
  /// matrix (causal requires m == n).
  void check_compatible(std::size_t m, std::size_t n) const;

 private:
  Kind kind_ = Kind::kNone;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<unsigned char> visible_;
};

/// Multi-head attention of queries `u_prime` (m x d) over `z` (n x d).
/// Throws ContractError if a query row has no visible key.
Matrix attention(const Matrix& u_prime, const Matrix& z,
                 const AttentionParams& params,
                 const AttentionMask& mask = AttentionMask::none());

/// Per-head attention probabilities (h matrices of m x n) for the same call.
std::vector<Matrix> attention_weights(const Matrix& u_prime, const Matrix& z,
                                      const AttentionParams& params,
                                      const AttentionMask& mask = AttentionMask::none());

/// softmax(u z^T / scale) z.
Matrix attn_core(const Matrix& u, const Matrix& z, double scale);

}  // namespace nvtx
