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

#include "nvtx/attention.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nvtx/errors.hpp"

namespace nvtx {

double AttentionParams::scale() const {
  return std::sqrt(static_cast<double>(model_dim()) / static_cast<double>(heads));
}

void AttentionParams::validate() const {
  const std::size_t d = wq.rows();
  if (d == 0) throw DimensionError("attention model dimension is zero");
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("model dimension " + std::to_string(d) +
                         " not divisible by heads " + std::to_string(heads));
  }
  for (const Matrix* w : {&wq, &wk, &wv}) {
    if (w->rows() != d || w->cols() != d) {
      throw DimensionError("attention projection must be d x d");
    }
  }
  for (const Vector* b : {&bq, &bk, &bv}) {
    if (b->size() != d) throw DimensionError("attention bias must have length d");
  }
}

AttentionMask AttentionMask::causal() {
  AttentionMask m;
  m.kind_ = Kind::kCausal;
  return m;
}

AttentionMask AttentionMask::custom(std::size_t rows, std::size_t cols,
                                    std::vector<unsigned char> visible) {
  if (visible.size() != rows * cols) {
    throw DimensionError("custom mask size does not match its shape");
  }
  AttentionMask m;
  m.kind_ = Kind::kCustom;
  m.rows_ = rows;
  m.cols_ = cols;
  m.visible_ = std::move(visible);
  return m;
}

bool AttentionMask::visible(std::size_t query, std::size_t key) const {
  switch (kind_) {
    case Kind::kNone:
      return true;
    case Kind::kCausal:
      return key <= query;
    case Kind::kCustom:
      return visible_[query * cols_ + key] != 0;
  }
  return true;
}

void AttentionMask::check_compatible(std::size_t m, std::size_t n) const {
  if (kind_ == Kind::kCausal && m != n) {
    throw DimensionError("causal mask requires as many queries as keys");
  }
  if (kind_ == Kind::kCustom && (rows_ != m || cols_ != n)) {
    throw DimensionError("custom mask shape does not match scores");
  }
}

namespace {

void check_inputs(const Matrix& u_prime, const Matrix& z,
                  const AttentionParams& params, const AttentionMask& mask) {
  params.validate();
  const std::size_t d = params.model_dim();
  if (u_prime.cols() != d || z.cols() != d) {
    throw DimensionError("attention inputs must have d columns");
  }
  if (z.rows() == 0) throw ContractError("attention over an empty key set");
  mask.check_compatible(u_prime.rows(), z.rows());
}

// Masked positions get the most negative finite score; after max
// subtraction they underflow to exactly zero.
void apply_mask_and_softmax(Matrix& scores, const AttentionMask& mask) {
  constexpr double kMasked = -std::numeric_limits<double>::max();
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    bool any = false;
    for (std::size_t k = 0; k < scores.cols(); ++k) {
      if (mask.visible(q, k)) {
        any = true;
      } else {
        scores(q, k) = kMasked;
      }
    }
    if (!any) {
      throw ContractError("query row " + std::to_string(q) + " has no visible key");
    }
    auto row = scores.row(q);
    double mx = kMasked;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (mask.visible(q, k)) mx = std::max(mx, row[k]);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] = mask.visible(q, k) ? std::exp(row[k] - mx) : 0.0;
      s += row[k];
    }
    for (double& v : row) v /= s;
  }
}

struct HeadProjections {
  Matrix q, k, v;  // full width, head i in its column slice
};

HeadProjections project_qkv(const Matrix& u_prime, const Matrix& z,
                            const AttentionParams& p) {
  HeadProjections out{matmul(u_prime, p.wq), matmul(z, p.wk), matmul(z, p.wv)};
  add_row_vector(out.q, p.bq);
  add_row_vector(out.k, p.bk);
  add_row_vector(out.v, p.bv);
  return out;
}

}  // namespace

std::vector<Matrix> attention_weights(const Matrix& u_prime, const Matrix& z,
                                      const AttentionParams& params,
                                      const AttentionMask& mask) {
  check_inputs(u_prime, z, params, mask);
  const auto proj = project_qkv(u_prime, z, params);
  const std::size_t dh = params.head_dim();
  const double scale = params.scale();
  std::vector<Matrix> weights;
  weights.reserve(params.heads);
  for (std::size_t h = 0; h < params.heads; ++h) {
    Matrix scores =
        matmul_transposed(proj.q.col_slice(h * dh, dh), proj.k.col_slice(h * dh, dh));
    for (double& s : scores.data()) s /= scale;
    apply_mask_and_softmax(scores, mask);
    weights.push_back(std::move(scores));
  }
  return weights;
}

Matrix attention(const Matrix& u_prime, const Matrix& z,
                 const AttentionParams& params, const AttentionMask& mask) {
  const auto weights = attention_weights(u_prime, z, params, mask);
  Matrix v = matmul(z, params.wv);
  add_row_vector(v, params.bv);
  const std::size_t dh = params.head_dim();
  Matrix out(u_prime.rows(), params.model_dim());
  for (std::size_t h = 0; h < params.heads; ++h) {
    const Matrix head_out = matmul(weights[h], v.col_slice(h * dh, dh));
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < dh; ++c) out(r, h * dh + c) = head_out(r, c);
  }
  return out;
}

Matrix attn_core(const Matrix& u, const Matrix& z, double scale) {
  if (u.cols() != z.cols()) throw DimensionError("attn_core column mismatch");
  Matrix scores = matmul_transposed(u, z);
  for (double& s : scores.data()) s /= scale;
  return matmul(softmax_rows(scores), z);
}

}  // namespace nvtx
