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

#include "nvtx/denoising_attention.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nvtx/errors.hpp"

namespace nvtx {

namespace {

void check_inputs(const DenoisingAttentionInputs& inp) {
  inp.params.validate();
  const std::size_t d = inp.params.model_dim();
  const DpPosterior& dp = inp.dp;
  if (dp.components() == 0) throw ContractError("DP posterior has no prior component");
  if (dp.mu.rows() != dp.components() || dp.sigma.rows() != dp.components()) {
    throw DimensionError("DP posterior rows disagree");
  }
  if (dp.mu.cols() != d || dp.sigma.cols() != d || inp.queries_pre.cols() != d) {
    throw DimensionError("denoising attention inputs must have d columns");
  }
  const std::size_t m = inp.queries_pre.rows();
  const std::size_t n = dp.components() - 1;
  if (inp.mask.kind() == AttentionMask::Kind::kCustom && inp.mask.cols() == n + 1) {
    if (inp.mask.rows() != m) throw DimensionError("custom mask shape does not match scores");
    for (std::size_t q = 0; q < m; ++q) {
      if (!inp.mask.visible(q, n)) throw ContractError("the prior component must never be masked");
    }
    return;
  }
  inp.mask.check_compatible(m, n);
}

Matrix project_queries(const Matrix& queries_pre, const AttentionParams& p) {
  Matrix q = matmul(queries_pre, p.wq);
  add_row_vector(q, p.bq);
  return q;
}

void masked_softmax(Matrix& scores, const AttentionMask& mask) {
  const std::size_t prior = scores.cols() - 1;
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    auto row = scores.row(q);
    double mx = row[prior];
    for (std::size_t j = 0; j < prior; ++j) {
      if (mask.visible(q, j)) mx = std::max(mx, row[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j <= prior; ++j) {
      row[j] = (j == prior || mask.visible(q, j)) ? std::exp(row[j] - mx) : 0.0;
      s += row[j];
    }
    for (double& v : row) v /= s;
  }
}

void write_head(Matrix& out, const Matrix& head_out, std::size_t head,
                std::size_t dh) {
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < dh; ++c) out(r, head * dh + c) = head_out(r, c);
}

}  // namespace

Matrix eval_dattn_multihead(const DenoisingAttentionInputs& inp,
                            const DenoisingOptions& opts) {
  check_inputs(inp);
  const AttentionParams& p = inp.params;
  const DpPosterior& dp = inp.dp;
  const std::size_t d = p.model_dim();
  const std::size_t dh = p.head_dim();
  const std::size_t m = inp.queries_pre.rows();
  const std::size_t comps = dp.components();
  const double s = p.scale();

  // Component-side terms shared by every head and query.
  Matrix var_r(comps, d);       // sigma_r^2
  Matrix key(comps, d);         // mu / sigma_r^2
  Matrix query_share(comps, d); // sigma^2 / sigma_r^2
  Matrix value(comps, d);       // s / sigma_r^2 o mu
  Vector bias(comps);
  const double log_alpha0 = log_sum_exp(dp.log_alpha);
  for (std::size_t j = 0; j < comps; ++j) {
    double norm = 0.0;
    double log_det = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double var = dp.sigma(j, k) * dp.sigma(j, k);
      const double vr = s + var;
      var_r(j, k) = vr;
      key(j, k) = dp.mu(j, k) / vr;
      query_share(j, k) = var / vr;
      value(j, k) = s / vr * dp.mu(j, k);
      norm += dp.mu(j, k) * dp.mu(j, k) / vr;
      log_det += 0.5 * std::log(vr);
    }
    bias[j] = (dp.log_alpha[j] - log_alpha0) - 0.5 * norm - log_det;
  }

  const Matrix q = project_queries(inp.queries_pre, p);
  Matrix out(m, d);
  if (opts.head_weights) opts.head_weights->clear();
  for (std::size_t h = 0; h < p.heads; ++h) {
    const Matrix q_h = q.col_slice(h * dh, dh);
    const Matrix wk_h = p.wk.col_slice(h * dh, dh);
    const Matrix u_h = matmul_transposed(q_h, wk_h);  // m x d
    const Vector bk_h(p.bk.begin() + h * dh, p.bk.begin() + (h + 1) * dh);

    Matrix scores = matmul_transposed(u_h, key);
    for (std::size_t r = 0; r < m; ++r) {
      const double query_bias = dot(q_h.row(r), bk_h) / s;
      for (std::size_t j = 0; j < comps; ++j) {
        double extra = 0.0;
        if (opts.query_norm == QueryNormTerm::kIncluded) {
          for (std::size_t k = 0; k < d; ++k) {
            extra -= 0.5 * u_h(r, k) * u_h(r, k) / var_r(j, k);
          }
        }
        scores(r, j) += query_bias + bias[j] + extra;
      }
    }
    masked_softmax(scores, inp.mask);

    Matrix interp = matmul(scores, query_share);
    for (std::size_t i = 0; i < interp.size(); ++i) interp.data()[i] *= u_h.data()[i];
    const Matrix from_values = matmul(scores, value);
    for (std::size_t i = 0; i < interp.size(); ++i) interp.data()[i] += from_values.data()[i];

    Matrix head_out = matmul(interp, p.wv.col_slice(h * dh, dh));
    add_row_vector(head_out, std::span<const double>(p.bv).subspan(h * dh, dh));
    write_head(out, head_out, h, dh);
    if (opts.head_weights) opts.head_weights->push_back(std::move(scores));
  }
  return out;
}

Matrix train_dattn_multihead(const DenoisingAttentionInputs& inp, Rng& rng,
                             std::vector<Matrix>* head_weights) {
  check_inputs(inp);
  const AttentionParams& p = inp.params;
  const DpPosterior& dp = inp.dp;
  const std::size_t d = p.model_dim();
  const std::size_t dh = p.head_dim();
  const std::size_t m = inp.queries_pre.rows();
  const std::size_t comps = dp.components();
  const double s = p.scale();

  const Vector log_pi = sample_dirichlet_log(rng, dp.log_alpha);
  const Matrix z = sample_gaussian(rng, dp.mu, dp.sigma);
  Vector bias(comps);
  for (std::size_t j = 0; j < comps; ++j) {
    bias[j] = log_pi[j] - squared_norm(z.row(j)) / (2.0 * s);
  }

  Matrix keys = matmul(z, p.wk);
  add_row_vector(keys, p.bk);
  Matrix values = matmul(z, p.wv);
  add_row_vector(values, p.bv);
  const Matrix q = project_queries(inp.queries_pre, p);

  Matrix out(m, d);
  if (head_weights) head_weights->clear();
  for (std::size_t h = 0; h < p.heads; ++h) {
    Matrix scores = matmul_transposed(q.col_slice(h * dh, dh), keys.col_slice(h * dh, dh));
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < comps; ++j) scores(r, j) = scores(r, j) / s + bias[j];
    masked_softmax(scores, inp.mask);
    write_head(out, matmul(scores, values.col_slice(h * dh, dh)), h, dh);
    if (head_weights) head_weights->push_back(std::move(scores));
  }
  return out;
}

Matrix nv_self_attention(const Matrix& z_prev, const NvibProjection& proj,
                         const EmpiricalPrior& prior,
                         const AttentionParams& params,
                         const AttentionMask& mask,
                         const DenoisingOptions& opts) {
  const DpPosterior dp = project(z_prev, proj, prior);
  return eval_dattn_multihead({z_prev, dp, params, mask}, opts);
}

Matrix nv_causal_attention(const Matrix& z_prev, const NvibProjection& proj,
                           const EmpiricalPrior& prior,
                           const AttentionParams& params,
                           const DenoisingOptions& opts) {
  return nv_self_attention(z_prev, proj, prior, params, AttentionMask::causal(), opts);
}

Matrix nv_cross_attention(const Matrix& queries_pre, const Matrix& memory,
                          const NvibProjection& proj,
                          const EmpiricalPrior& prior,
                          const AttentionParams& params,
                          const DenoisingOptions& opts) {
  const DpPosterior dp = project(memory, proj, prior);
  return eval_dattn_multihead({queries_pre, dp, params, AttentionMask::none()}, opts);
}

Matrix head_average(const std::vector<Matrix>& per_head) {
  if (per_head.empty()) throw ContractError("no attention heads to average");
  Matrix avg(per_head.front().rows(), per_head.front().cols());
  for (const Matrix& w : per_head) {
    for (std::size_t i = 0; i < avg.size(); ++i) avg.data()[i] += w.data()[i];
  }
  for (double& v : avg.data()) v /= static_cast<double>(per_head.size());
  return avg;
}

}  // namespace nvtx
