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

#include "nvtx/nvtx.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvtx/errors.hpp"
#include "nvtx/experiments.hpp"
#include "nvtx/model.hpp"
#include "nvtx/prior_estimator.hpp"
#include "nvtx/serialize.hpp"

struct nvtx_model {
  std::shared_ptr<const nvtx::ModelWeights> weights;
};

struct nvtx_priors {
  nvtx::ModelConfig config;
  std::vector<nvtx::EmpiricalPrior> priors;
};

namespace {

thread_local std::string g_last_error;

class BadArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <class F>
nvtx_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return NVTX_OK;
  } catch (const nvtx::Error& e) {
    g_last_error = e.what();
    return static_cast<nvtx_status>(e.kind());
  } catch (const BadArgument& e) {
    g_last_error = e.what();
    return NVTX_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NVTX_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NVTX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NVTX_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw BadArgument(std::string(name) + " must not be null");
}

nvtx::ModelConfig to_cpp(const nvtx_config& c) {
  return {c.vocab, c.d, c.h, c.layers_enc, c.layers_dec, c.ffn_dim, c.max_len};
}

nvtx_config to_c(const nvtx::ModelConfig& c) {
  return {c.vocab, c.d, c.h, c.layers_enc, c.layers_dec, c.ffn_dim, c.max_len};
}

nvtx::TauConfig to_cpp(const nvtx_tau& t) {
  return {t.tau_alpha_e, t.tau_alpha_c, t.tau_alpha_d,
          t.tau_sigma_e, t.tau_sigma_c, t.tau_sigma_d};
}

nvtx::TokenSeq tokens(const int32_t* p, size_t n, const char* name) {
  if (n > 0) require(p, name);
  return nvtx::TokenSeq(p, p + n);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check_pair(const nvtx_model* model, const nvtx_priors* priors) {
  require(model, "model");
  require(priors, "priors");
  if (!(priors->config == model->weights->config)) {
    throw nvtx::ConfigError("priors were estimated for a different model configuration");
  }
}

nvtx::NvModel build_nv(const nvtx_model* model, const nvtx_priors* priors,
                       const nvtx_tau* tau) {
  check_pair(model, priors);
  const nvtx::TauConfig taus = tau ? to_cpp(*tau) : nvtx::TauConfig::identity();
  return nvtx::reinterpret(model->weights, priors->priors, taus);
}

}  // namespace

extern "C" {

const char* nvtx_version(void) { return "1.0.0"; }

const char* nvtx_status_name(nvtx_status status) {
  switch (status) {
    case NVTX_OK: return "ok";
    case NVTX_ERR_DIMENSION: return "dimension error";
    case NVTX_ERR_DOMAIN: return "domain error";
    case NVTX_ERR_CONTRACT: return "contract violation";
    case NVTX_ERR_CONFIG: return "config error";
    case NVTX_ERR_FORMAT: return "format error";
    case NVTX_ERR_INPUT: return "input error";
    case NVTX_ERR_STATISTICS: return "statistics error";
    case NVTX_ERR_IO: return "io error";
    case NVTX_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NVTX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* nvtx_last_error(void) { return g_last_error.c_str(); }

void nvtx_string_free(char* s) { delete[] s; }

void nvtx_config_default(nvtx_config* out) {
  if (out) *out = to_c(nvtx::ModelConfig{});
}

nvtx_status nvtx_config_load(const char* path, nvtx_config* cfg) {
  return guarded([&] {
    require(path, "path");
    require(cfg, "cfg");
    *cfg = to_c(nvtx::apply_config_text(nvtx::read_file(path), to_cpp(*cfg)));
  });
}

nvtx_status nvtx_config_validate(const nvtx_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_cpp(*cfg).validate();
  });
}

void nvtx_tau_identity(nvtx_tau* out) {
  if (!out) return;
  const nvtx::TauConfig t = nvtx::TauConfig::identity();
  *out = {t.tau_alpha_e, t.tau_alpha_c, t.tau_alpha_d,
          t.tau_sigma_e, t.tau_sigma_c, t.tau_sigma_d};
}

void nvtx_sweep_bounds_default(nvtx_sweep_bounds* out) {
  if (!out) return;
  const nvtx::SweepBounds b;
  *out = {b.tau_alpha_min, b.tau_alpha_max, b.tau_sigma_min, b.tau_sigma_max};
}

nvtx_status nvtx_model_create(const nvtx_config* cfg, uint64_t seed, nvtx_model** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = nullptr;
    auto w = std::make_shared<const nvtx::ModelWeights>(nvtx::init_model(to_cpp(*cfg), seed));
    *out = new nvtx_model{std::move(w)};
  });
}

nvtx_status nvtx_model_load(const char* path, nvtx_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto w = std::make_shared<const nvtx::ModelWeights>(nvtx::load_weights(path));
    *out = new nvtx_model{std::move(w)};
  });
}

nvtx_status nvtx_model_save(const nvtx_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    nvtx::save_weights(*model->weights, path);
  });
}

void nvtx_model_free(nvtx_model* model) { delete model; }

nvtx_status nvtx_model_get_config(const nvtx_model* model, nvtx_config* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = to_c(model->weights->config);
  });
}

size_t nvtx_model_parameter_count(const nvtx_model* model) {
  return model ? model->weights->parameter_count() : 0;
}

nvtx_status nvtx_estimate_priors(const nvtx_model* model, const char* corpus_path,
                                 double fraction, uint64_t seed, size_t shards,
                                 nvtx_priors** out) {
  return guarded([&] {
    require(model, "model");
    require(corpus_path, "corpus_path");
    require(out, "out");
    *out = nullptr;
    const nvtx::ModelConfig& cfg = model->weights->config;
    const auto corpus = nvtx::read_corpus_file(corpus_path, cfg);
    auto priors = nvtx::estimate_priors(*model->weights, corpus, fraction, seed,
                                        shards == 0 ? 1 : shards);
    *out = new nvtx_priors{cfg, std::move(priors)};
  });
}

nvtx_status nvtx_priors_load(const char* path, nvtx_priors** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    nvtx::NvtxContents c = nvtx::decode_nvtx(nvtx::read_file(path));
    if (c.priors.empty()) throw nvtx::FormatError(std::string(path) + " carries no priors");
    *out = new nvtx_priors{c.config, std::move(c.priors)};
  });
}

nvtx_status nvtx_priors_save(const nvtx_priors* priors, const char* path) {
  return guarded([&] {
    require(priors, "priors");
    require(path, "path");
    nvtx::save_priors(priors->config, priors->priors, path);
  });
}

void nvtx_priors_free(nvtx_priors* priors) { delete priors; }

size_t nvtx_priors_count(const nvtx_priors* priors) {
  return priors ? priors->priors.size() : 0;
}

nvtx_status nvtx_priors_report_csv(const nvtx_priors* priors, char** out_csv) {
  return guarded([&] {
    require(priors, "priors");
    require(out_csv, "out_csv");
    *out_csv = dup_string(nvtx::prior_report(priors->priors));
  });
}

nvtx_status nvtx_nv_model_save(const nvtx_model* model, const nvtx_priors* priors,
                               const nvtx_tau* tau, const char* path) {
  return guarded([&] {
    require(path, "path");
    nvtx::save_nv_model(build_nv(model, priors, tau), path);
  });
}

nvtx_status nvtx_certify(const nvtx_model* model, const nvtx_priors* priors,
                         const nvtx_tau* tau, size_t trials, uint64_t seed, double tol,
                         nvtx_certify_result* out) {
  return guarded([&] {
    check_pair(model, priors);
    require(tau, "tau");
    require(out, "out");
    const nvtx::CertifyResult r =
        nvtx::certify(model->weights, priors->priors, to_cpp(*tau), trials, seed, tol);
    *out = {r.max_abs_diff, r.overlap_pct, r.passed ? 1 : 0};
  });
}

nvtx_status nvtx_sweep(const nvtx_model* model, const nvtx_priors* priors, const char* grid,
                       const nvtx_sweep_bounds* bounds, size_t trials, uint64_t seed,
                       char** out_csv) {
  return guarded([&] {
    check_pair(model, priors);
    require(grid, "grid");
    require(out_csv, "out_csv");
    nvtx::SweepBounds b;
    if (bounds) {
      b = {bounds->tau_alpha_min, bounds->tau_alpha_max, bounds->tau_sigma_min,
           bounds->tau_sigma_max};
    }
    const auto points = nvtx::parse_grid(grid, b, seed);
    const auto rows = nvtx::run_sweep(model->weights, priors->priors, points, trials, seed);
    *out_csv = dup_string(nvtx::sweep_csv(rows));
  });
}

nvtx_status nvtx_attention_map(const nvtx_model* model, const nvtx_priors* priors,
                               const nvtx_tau* tau, const int32_t* src, size_t src_len,
                               const int32_t* tgt, size_t tgt_len, const char* group,
                               size_t layer, char** out_csv) {
  return guarded([&] {
    require(group, "group");
    require(out_csv, "out_csv");
    const nvtx::NvModel m = build_nv(model, priors, tau);
    const nvtx::SiteId site{nvtx::parse_layer_group(group), layer};
    nvtx::site_index(m.base->config, site);  // range check
    const nvtx::Matrix map = nvtx::attention_map(m, tokens(src, src_len, "src"),
                                                 tokens(tgt, tgt_len, "tgt"), site);
    *out_csv = dup_string(nvtx::attention_map_csv(map));
  });
}

nvtx_status nvtx_forward(const nvtx_model* model, const nvtx_priors* priors,
                         const nvtx_tau* tau, const int32_t* src, size_t src_len,
                         const int32_t* tgt, size_t tgt_len, double* logits,
                         size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(logits, "logits");
    const auto s = tokens(src, src_len, "src");
    const auto t = tokens(tgt, tgt_len, "tgt");
    const std::size_t need = tgt_len * model->weights->config.vocab;
    if (capacity < need) {
      throw BadArgument("logits buffer holds " + std::to_string(capacity) + " values, need " +
                        std::to_string(need));
    }
    const nvtx::Matrix out = priors ? nvtx::forward_nv(build_nv(model, priors, tau), s, t)
                                    : nvtx::forward_standard(*model->weights, s, t);
    std::memcpy(logits, out.data().data(), out.size() * sizeof(double));
  });
}

nvtx_status nvtx_greedy_decode(const nvtx_model* model, const nvtx_priors* priors,
                               const nvtx_tau* tau, const int32_t* src, size_t src_len,
                               size_t max_steps, int32_t* out, size_t capacity,
                               size_t* out_len) {
  return guarded([&] {
    require(model, "model");
    require(out_len, "out_len");
    if (capacity > 0) require(out, "out");
    const auto s = tokens(src, src_len, "src");
    const nvtx::TokenSeq seq = priors
                                   ? nvtx::greedy_decode(build_nv(model, priors, tau), s, max_steps)
                                   : nvtx::greedy_decode(*model->weights, s, max_steps);
    *out_len = seq.size();
    if (seq.size() > capacity) {
      throw BadArgument("output buffer holds " + std::to_string(capacity) + " tokens, need " +
                        std::to_string(seq.size()));
    }
    std::copy(seq.begin(), seq.end(), out);
  });
}

}  // extern "C"
