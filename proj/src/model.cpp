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

#include "nvtx/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "nvtx/errors.hpp"

namespace nvtx {

namespace {

constexpr double kLayerNormEps = 1e-5;

// Layer-norm gains are log-normal so that latent norms vary across tokens;
// the pseudo-count spread of the reinterpreted model depends on it.
constexpr double kHighGainLog = 1.5;
constexpr double kGainJitter = 0.2;
constexpr double kShiftStd = 0.5;
constexpr double kAttnStd = 0.6;
constexpr double kBiasStd = 0.1;

Vector random_vector(Rng& rng, std::size_t n, double stddev) {
  Vector v(n);
  for (double& x : v) x = stddev * rng.normal();
  return v;
}

LayerNormParams init_layer_norm(Rng& rng, std::size_t d) {
  LayerNormParams ln{Vector(d), random_vector(rng, d, kShiftStd)};
  // A random quarter of the channels gets a high gain, the rest a low one.
  const std::size_t high = std::max<std::size_t>(1, d / 4);
  for (std::size_t k = 0; k < d; ++k) {
    const double base = k < high ? kHighGainLog : -kHighGainLog / 2.0;
    ln.gamma[k] = std::exp(base + kGainJitter * rng.normal());
  }
  for (std::size_t k = d; k > 1; --k) std::swap(ln.gamma[k - 1], ln.gamma[rng.below(k)]);
  return ln;
}

AttentionBlock init_attention(Rng& rng, std::size_t d, std::size_t h) {
  const double w_std = kAttnStd / std::sqrt(static_cast<double>(d));
  AttentionBlock b;
  b.attn.wq = random_normal(rng, d, d, w_std);
  b.attn.wk = random_normal(rng, d, d, w_std);
  b.attn.wv = random_normal(rng, d, d, 1.0 / std::sqrt(static_cast<double>(d)));
  b.attn.bq = random_vector(rng, d, kBiasStd);
  b.attn.bk = random_vector(rng, d, kBiasStd);
  b.attn.bv = random_vector(rng, d, kBiasStd);
  b.attn.heads = h;
  b.wo = random_normal(rng, d, d, 1.0 / std::sqrt(static_cast<double>(d)));
  b.bo = random_vector(rng, d, kBiasStd);
  return b;
}

FeedForward init_ffn(Rng& rng, std::size_t d, std::size_t f) {
  return {random_normal(rng, d, f, 1.0 / std::sqrt(static_cast<double>(d))),
          random_vector(rng, f, kBiasStd),
          random_normal(rng, f, d, 1.0 / std::sqrt(static_cast<double>(f))),
          random_vector(rng, d, kBiasStd)};
}

Matrix linear(const Matrix& x, const Matrix& w, const Vector& b) {
  Matrix y = matmul(x, w);
  add_row_vector(y, b);
  return y;
}

void add_inplace(Matrix& x, const Matrix& delta) {
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += delta.data()[i];
}

Matrix feed_forward(const Matrix& x, const FeedForward& f) {
  Matrix hidden = linear(x, f.w1, f.b1);
  for (double& v : hidden.data()) v = std::max(v, 0.0);
  return linear(hidden, f.w2, f.b2);
}

Matrix embed(const ModelWeights& w, const TokenSeq& seq) {
  const std::size_t d = w.config.d;
  Matrix x(seq.size(), d);
  for (std::size_t t = 0; t < seq.size(); ++t)
    for (std::size_t k = 0; k < d; ++k)
      x(t, k) = w.tok_emb(static_cast<std::size_t>(seq[t]), k) + w.pos_enc(t, k);
  return x;
}

using SiteRunner = std::function<Matrix(SiteId, const Matrix& queries_pre,
                                        const Matrix& z, const AttentionParams&,
                                        bool causal)>;

Matrix run_forward(const ModelWeights& w, const TokenSeq& src,
                   const TokenSeq& tgt, const SiteRunner& run,
                   const ForwardHooks& hooks) {
  const ModelConfig& cfg = w.config;
  check_tokens(cfg, src, "source");
  check_tokens(cfg, tgt, "target");
  if (src.empty()) throw InputError("source sequence is empty");
  if (tgt.empty()) throw InputError("target sequence is empty");

  Matrix x = embed(w, src);
  for (std::size_t l = 0; l < w.enc.size(); ++l) {
    const EncoderLayer& layer = w.enc[l];
    const SiteId site{LayerGroup::kEncoder, l};
    const Matrix z = layer_norm(x, layer.ln_attn);
    if (hooks.on_latent) hooks.on_latent(site_index(cfg, site), z);
    const Matrix a = run(site, z, z, layer.self_attn.attn, false);
    add_inplace(x, linear(a, layer.self_attn.wo, layer.self_attn.bo));
    add_inplace(x, feed_forward(layer_norm(x, layer.ln_ffn), layer.ffn));
  }
  const Matrix memory = layer_norm(x, w.enc_final);

  Matrix y = embed(w, tgt);
  for (std::size_t l = 0; l < w.dec.size(); ++l) {
    const DecoderLayer& layer = w.dec[l];
    const SiteId causal_site{LayerGroup::kDecoder, l};
    const Matrix z = layer_norm(y, layer.ln_self);
    if (hooks.on_latent) hooks.on_latent(site_index(cfg, causal_site), z);
    const Matrix a = run(causal_site, z, z, layer.self_attn.attn, true);
    add_inplace(y, linear(a, layer.self_attn.wo, layer.self_attn.bo));

    const SiteId cross_site{LayerGroup::kCross, l};
    const Matrix q = layer_norm(y, layer.ln_cross);
    if (hooks.on_latent) hooks.on_latent(site_index(cfg, cross_site), memory);
    const Matrix c = run(cross_site, q, memory, layer.cross_attn.attn, false);
    add_inplace(y, linear(c, layer.cross_attn.wo, layer.cross_attn.bo));

    add_inplace(y, feed_forward(layer_norm(y, layer.ln_ffn), layer.ffn));
  }
  return linear(layer_norm(y, w.dec_final), w.out_w, w.out_b);
}

std::size_t argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

template <class Forward>
TokenSeq greedy(const ModelConfig& cfg, const TokenSeq& src, std::size_t max_steps,
                Forward&& forward) {
  check_tokens(cfg, src, "source");
  TokenSeq prefix{kBosToken};
  TokenSeq out;
  while (out.size() < max_steps) {
    const Matrix logits = forward(prefix);
    const auto next = static_cast<Token>(argmax_lowest(logits.row(logits.rows() - 1)));
    out.push_back(next);
    if (next == kEosToken || prefix.size() == cfg.max_len) break;
    prefix.push_back(next);
  }
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab < 4) throw ConfigError("vocab must be at least 4");
  if (d == 0 || h == 0 || layers_enc == 0 || layers_dec == 0 || ffn_dim == 0 ||
      max_len == 0) {
    throw ConfigError("all model dimensions must be at least 1");
  }
  if (d % h != 0) {
    throw ConfigError("d (" + std::to_string(d) + ") is not divisible by h (" +
                      std::to_string(h) + ")");
  }
}

ModelConfig apply_config_text(const std::string& text, ModelConfig config) {
  const std::pair<const char*, std::uint32_t ModelConfig::*> fields[] = {
      {"vocab", &ModelConfig::vocab},           {"d", &ModelConfig::d},
      {"h", &ModelConfig::h},                   {"layers_enc", &ModelConfig::layers_enc},
      {"layers_dec", &ModelConfig::layers_dec}, {"ffn_dim", &ModelConfig::ffn_dim},
      {"max_len", &ModelConfig::max_len}};
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = std::find_if(std::begin(fields), std::end(fields),
                           [&](const auto& f) { return key == f.first; });
    if (it == std::end(fields)) throw ConfigError(where + ": unknown key '" + key + "'");
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size() || v > UINT32_MAX) {
      throw ConfigError(where + ": bad value '" + value + "' for " + key);
    }
    config.*(it->second) = static_cast<std::uint32_t>(v);
  }
  return config;
}

double ModelConfig::scale() const {
  return std::sqrt(static_cast<double>(d) / static_cast<double>(h));
}

std::size_t ModelWeights::parameter_count() const {
  auto ln = [](const LayerNormParams& p) { return p.gamma.size() + p.beta.size(); };
  auto attn = [](const AttentionBlock& b) {
    return b.attn.wq.size() + b.attn.wk.size() + b.attn.wv.size() + b.attn.bq.size() +
           b.attn.bk.size() + b.attn.bv.size() + b.wo.size() + b.bo.size();
  };
  auto ffn = [](const FeedForward& f) {
    return f.w1.size() + f.b1.size() + f.w2.size() + f.b2.size();
  };
  std::size_t n = tok_emb.size() + ln(enc_final) + ln(dec_final) + out_w.size() + out_b.size();
  for (const auto& l : enc) n += ln(l.ln_attn) + attn(l.self_attn) + ln(l.ln_ffn) + ffn(l.ffn);
  for (const auto& l : dec) {
    n += ln(l.ln_self) + attn(l.self_attn) + ln(l.ln_cross) + attn(l.cross_attn) +
         ln(l.ln_ffn) + ffn(l.ffn);
  }
  return n;
}

Matrix sinusoidal_positions(std::size_t max_len, std::size_t d) {
  Matrix pe(max_len, d);
  for (std::size_t t = 0; t < max_len; ++t) {
    for (std::size_t k = 0; k < d; ++k) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(2 * (k / 2)) / static_cast<double>(d));
      const double angle = static_cast<double>(t) * freq;
      pe(t, k) = k % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

ModelWeights init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.d;
  ModelWeights w;
  w.config = config;
  w.tok_emb = random_normal(rng, config.vocab, d, 1.0);
  w.pos_enc = sinusoidal_positions(config.max_len, d);
  for (std::uint32_t l = 0; l < config.layers_enc; ++l) {
    EncoderLayer layer;
    layer.ln_attn = init_layer_norm(rng, d);
    layer.self_attn = init_attention(rng, d, config.h);
    layer.ln_ffn = init_layer_norm(rng, d);
    layer.ffn = init_ffn(rng, d, config.ffn_dim);
    w.enc.push_back(std::move(layer));
  }
  w.enc_final = init_layer_norm(rng, d);
  for (std::uint32_t l = 0; l < config.layers_dec; ++l) {
    DecoderLayer layer;
    layer.ln_self = init_layer_norm(rng, d);
    layer.self_attn = init_attention(rng, d, config.h);
    layer.ln_cross = init_layer_norm(rng, d);
    layer.cross_attn = init_attention(rng, d, config.h);
    layer.ln_ffn = init_layer_norm(rng, d);
    layer.ffn = init_ffn(rng, d, config.ffn_dim);
    w.dec.push_back(std::move(layer));
  }
  w.dec_final = init_layer_norm(rng, d);
  w.out_w = random_normal(rng, d, config.vocab, 1.0 / std::sqrt(static_cast<double>(d)));
  w.out_b = random_vector(rng, config.vocab, kBiasStd);
  return w;
}

std::size_t site_index(const ModelConfig& config, SiteId site) {
  const std::size_t per_group =
      site.group == LayerGroup::kEncoder ? config.layers_enc : config.layers_dec;
  if (site.layer >= per_group) {
    throw ConfigError("layer " + std::to_string(site.layer) + " out of range for group " +
                      std::string(to_string(site.group)));
  }
  switch (site.group) {
    case LayerGroup::kEncoder:
      return site.layer;
    case LayerGroup::kCross:
      return config.layers_enc + site.layer;
    case LayerGroup::kDecoder:
      return config.layers_enc + config.layers_dec + site.layer;
  }
  return 0;
}

SiteId site_at(const ModelConfig& config, std::size_t index) {
  if (index < config.layers_enc) return {LayerGroup::kEncoder, index};
  index -= config.layers_enc;
  if (index < config.layers_dec) return {LayerGroup::kCross, index};
  index -= config.layers_dec;
  if (index < config.layers_dec) return {LayerGroup::kDecoder, index};
  throw ConfigError("site index out of range");
}

NvModel reinterpret(std::shared_ptr<const ModelWeights> base,
                    std::vector<EmpiricalPrior> priors, const TauConfig& taus) {
  if (!base) throw ConfigError("reinterpret needs base weights");
  taus.validate();
  const ModelConfig& cfg = base->config;
  if (priors.size() != cfg.sites()) {
    throw ConfigError("expected " + std::to_string(cfg.sites()) + " priors, got " +
                      std::to_string(priors.size()));
  }
  NvModel m;
  m.taus = taus;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const SiteId site = site_at(cfg, i);
    const EmpiricalPrior& p = priors[i];
    if (p.layer_group != site.group || p.layer_id != site.layer) {
      throw ConfigError("missing prior for " + std::string(to_string(site.group)) +
                        " layer " + std::to_string(site.layer));
    }
    m.projections.push_back(identity_init(p, taus.tau_alpha(site.group),
                                          taus.tau_sigma(site.group), cfg.d, cfg.h));
  }
  m.priors = std::move(priors);
  m.base = std::move(base);
  return m;
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& ln) {
  Matrix y(x.rows(), x.cols());
  const double d = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t k = 0; k < x.cols(); ++k) {
      y(r, k) = ln.gamma[k] * (row[k] - mean) * inv + ln.beta[k];
    }
  }
  return y;
}

void check_tokens(const ModelConfig& config, const TokenSeq& seq, const char* what) {
  if (seq.size() > config.max_len) {
    throw InputError(std::string(what) + " sequence longer than max_len " +
                     std::to_string(config.max_len));
  }
  for (Token t : seq) {
    if (t < 0 || static_cast<std::uint32_t>(t) >= config.vocab) {
      throw InputError(std::string(what) + " token " + std::to_string(t) +
                       " outside vocabulary of " + std::to_string(config.vocab));
    }
  }
}

Matrix forward_standard(const ModelWeights& w, const TokenSeq& src,
                        const TokenSeq& tgt, const ForwardHooks& hooks) {
  const SiteRunner run = [&](SiteId site, const Matrix& q, const Matrix& z,
                             const AttentionParams& p, bool causal) {
    const AttentionMask mask = causal ? AttentionMask::causal() : AttentionMask::none();
    if (hooks.on_attention) hooks.on_attention(site, head_average(attention_weights(q, z, p, mask)));
    return attention(q, z, p, mask);
  };
  return run_forward(w, src, tgt, run, hooks);
}

Matrix forward_nv(const NvModel& m, const TokenSeq& src, const TokenSeq& tgt,
                  const ForwardHooks& hooks) {
  if (!m.base) throw ConfigError("NV model has no base weights");
  const ModelConfig& cfg = m.base->config;
  if (m.projections.size() != cfg.sites() || m.priors.size() != cfg.sites()) {
    throw ConfigError("NV model does not cover every attention site");
  }
  const SiteRunner run = [&](SiteId site, const Matrix& q, const Matrix& z,
                             const AttentionParams& p, bool causal) {
    const std::size_t i = site_index(cfg, site);
    std::vector<Matrix> heads;
    DenoisingOptions opts{m.query_norm, hooks.on_attention ? &heads : nullptr};
    const DpPosterior dp = project(z, m.projections[i], m.priors[i]);
    const AttentionMask mask = causal ? AttentionMask::causal() : AttentionMask::none();
    Matrix out = eval_dattn_multihead({q, dp, p, mask}, opts);
    if (hooks.on_attention) hooks.on_attention(site, head_average(heads));
    return out;
  };
  return run_forward(*m.base, src, tgt, run, hooks);
}

TokenSeq greedy_decode(const ModelWeights& w, const TokenSeq& src,
                       std::size_t max_steps) {
  return greedy(w.config, src, max_steps,
                [&](const TokenSeq& prefix) { return forward_standard(w, src, prefix); });
}

TokenSeq greedy_decode(const NvModel& m, const TokenSeq& src, std::size_t max_steps) {
  if (!m.base) throw ConfigError("NV model has no base weights");
  return greedy(m.base->config, src, max_steps,
                [&](const TokenSeq& prefix) { return forward_nv(m, src, prefix); });
}

}  // namespace nvtx
