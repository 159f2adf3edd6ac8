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

// Toy pre-norm encoder-decoder Transformer that runs either with standard
// attention or with every attention site replaced by its denoising variant.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nvtx/attention.hpp"
#include "nvtx/denoising_attention.hpp"
#include "nvtx/nvib.hpp"

namespace nvtx {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

inline constexpr Token kPadToken = 0;
inline constexpr Token kBosToken = 1;
inline constexpr Token kEosToken = 2;
/// First id that is neither padding nor a control token.
inline constexpr Token kFirstContentToken = 3;

struct ModelConfig {
  std::uint32_t vocab = 64;
  std::uint32_t d = 16;
  std::uint32_t h = 2;
  std::uint32_t layers_enc = 2;
  std::uint32_t layers_dec = 2;
  std::uint32_t ffn_dim = 32;
  std::uint32_t max_len = 32;

  /// Throws ConfigError.
  void validate() const;
  std::size_t sites() const noexcept { return layers_enc + 2 * layers_dec; }
  double scale() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Applies "key = value" lines (keys named as the fields above, '#' starts a
/// comment) on top of `config`. Throws ConfigError on unknown keys or
/// malformed values.
ModelConfig apply_config_text(const std::string& text, ModelConfig config);

struct LayerNormParams {
  Vector gamma, beta;
};

/// Attention plus the output projection that follows it.
struct AttentionBlock {
  AttentionParams attn;
  Matrix wo;
  Vector bo;
};

struct FeedForward {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

struct EncoderLayer {
  LayerNormParams ln_attn;
  AttentionBlock self_attn;
  LayerNormParams ln_ffn;
  FeedForward ffn;
};

struct DecoderLayer {
  LayerNormParams ln_self;
  AttentionBlock self_attn;
  LayerNormParams ln_cross;
  AttentionBlock cross_attn;
  LayerNormParams ln_ffn;
  FeedForward ffn;
};

struct ModelWeights {
  ModelConfig config;
  Matrix tok_emb;  // vocab x d
  Matrix pos_enc;  // max_len x d, sinusoidal
  std::vector<EncoderLayer> enc;
  LayerNormParams enc_final;
  std::vector<DecoderLayer> dec;
  LayerNormParams dec_final;
  Matrix out_w;  // d x vocab
  Vector out_b;

  /// Learnable parameter count (positional encodings excluded).
  std::size_t parameter_count() const;
};

/// Deterministic toy weights for `config` drawn from `seed`.
ModelWeights init_model(const ModelConfig& config, std::uint64_t seed);

Matrix sinusoidal_positions(std::size_t max_len, std::size_t d);

/// Attention sites: encoder layers first, then cross sites, then causal
/// decoder sites, each in layer order.
struct SiteId {
  LayerGroup group;
  std::size_t layer;
};
std::size_t site_index(const ModelConfig& config, SiteId site);
SiteId site_at(const ModelConfig& config, std::size_t index);

struct NvModel {
  std::shared_ptr<const ModelWeights> base;
  std::vector<EmpiricalPrior> priors;  // one per site, site order
  TauConfig taus;
  std::vector<NvibProjection> projections;  // one per site, site order
  QueryNormTerm query_norm = QueryNormTerm::kOmitted;
};

/// Builds identity-initialised projections for every site from its prior and
/// the site group's tau. Base weights are shared, never modified.
NvModel reinterpret(std::shared_ptr<const ModelWeights> base,
                    std::vector<EmpiricalPrior> priors, const TauConfig& taus);

struct ForwardHooks {
  /// Latent vectors Z read by each attention site.
  std::function<void(std::size_t site, const Matrix& z)> on_latent;
  /// Head-averaged attention weights per site; NV maps carry the prior as the
  /// last column.
  std::function<void(SiteId site, const Matrix& weights)> on_attention;
};

/// Logits (|tgt| x vocab). `tgt` is the decoder input and starts with BOS.
Matrix forward_standard(const ModelWeights& w, const TokenSeq& src,
                        const TokenSeq& tgt, const ForwardHooks& hooks = {});

Matrix forward_nv(const NvModel& m, const TokenSeq& src, const TokenSeq& tgt,
                  const ForwardHooks& hooks = {});

/// Argmax decoding from BOS until EOS (included) or `max_steps` tokens.
/// Ties go to the lowest id. The returned sequence excludes BOS.
TokenSeq greedy_decode(const ModelWeights& w, const TokenSeq& src,
                       std::size_t max_steps);
TokenSeq greedy_decode(const NvModel& m, const TokenSeq& src,
                       std::size_t max_steps);

/// Throws InputError on out-of-vocabulary ids or over-length sequences.
void check_tokens(const ModelConfig& config, const TokenSeq& seq,
                  const char* what);

Matrix layer_norm(const Matrix& x, const LayerNormParams& ln);

}  // namespace nvtx
