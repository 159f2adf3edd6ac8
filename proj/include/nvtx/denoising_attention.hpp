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

// Multi-head denoising attention over a DP posterior (n token components
// plus the prior component, which is always last and never masked).
//
// Per head i, with s = sqrt(d/h), Q = U' W^Q + b^Q, U_i = Q_i (W^K_i)^T and
// sigma_r^2 = s + sigma^2:
//
//   A_i = U_i (mu / sigma_r^2)^T + Q_i (b^K_i)^T / s
//   c   = log(alpha / alpha_0) - 1/2 |mu / sigma_r|^2 - sum_d log sigma_r
//   W   = softmax(A_i + c + mask)
//   out = ((W sigma^2/sigma_r^2) o U_i + W (s/sigma_r^2 o mu)) W^V_i + b^V_i
//
// The published bias omits the query-dependent term -1/2 sum_d U_i^2 /
// sigma_r^2. It is constant across components only when every component
// shares the same variance, so with mixed variances the published form is not
// the exact Gaussian posterior. QueryNormTerm::kIncluded adds it back and then
// matches gaussian_responsibilities() exactly.

#pragma once

#include <functional>
#include <vector>

#include "nvtx/attention.hpp"
#include "nvtx/nvib.hpp"

namespace nvtx {

enum class QueryNormTerm { kOmitted, kIncluded };

struct DenoisingAttentionInputs {
  const Matrix& queries_pre;  // m x d, before the query projection
  const DpPosterior& dp;      // (n + 1) components, prior last
  const AttentionParams& params;
  /// m x n over token components; the prior column is always visible. A
  /// custom m x (n + 1) mask is accepted too, but hiding the prior in any row
  /// raises ContractError.
  AttentionMask mask = AttentionMask::none();
};

struct DenoisingOptions {
  QueryNormTerm query_norm = QueryNormTerm::kOmitted;
  /// When set, receives one m x (n + 1) softmax matrix per head.
  std::vector<Matrix>* head_weights = nullptr;
};

/// Evaluation-time denoising attention (no sampling).
Matrix eval_dattn_multihead(const DenoisingAttentionInputs& inp,
                            const DenoisingOptions& opts = {});

/// Training-time denoising attention: one draw pi ~ Dir(alpha) and
/// Z ~ N(mu, sigma) over all n + 1 components, then standard attention with
/// key bias log(pi) - |Z|^2 / (2 s).
Matrix train_dattn_multihead(const DenoisingAttentionInputs& inp, Rng& rng,
                             std::vector<Matrix>* head_weights = nullptr);

/// Denoising self-attention: queries come from the pre-NVIB vectors.
Matrix nv_self_attention(const Matrix& z_prev, const NvibProjection& proj,
                         const EmpiricalPrior& prior,
                         const AttentionParams& params,
                         const AttentionMask& mask = AttentionMask::none(),
                         const DenoisingOptions& opts = {});

/// Denoising causal self-attention. Token keys are causally masked; the
/// prior key is visible from every position.
Matrix nv_causal_attention(const Matrix& z_prev, const NvibProjection& proj,
                           const EmpiricalPrior& prior,
                           const AttentionParams& params,
                           const DenoisingOptions& opts = {});

/// Denoising cross-attention from `queries_pre` into the projected `memory`.
Matrix nv_cross_attention(const Matrix& queries_pre, const Matrix& memory,
                          const NvibProjection& proj,
                          const EmpiricalPrior& prior,
                          const AttentionParams& params,
                          const DenoisingOptions& opts = {});

/// Mean over heads of per-head attention matrices.
Matrix head_average(const std::vector<Matrix>& per_head);

}  // namespace nvtx
