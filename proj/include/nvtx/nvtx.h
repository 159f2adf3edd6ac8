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

/* C interface to the nvtx library. All handles are opaque; every fallible
 * call returns an nvtx_status and leaves a message for nvtx_last_error() on
 * the calling thread. Strings returned through char** are owned by the
 * caller and released with nvtx_string_free(). */

#ifndef NVTX_NVTX_H_
#define NVTX_NVTX_H_

#include <stddef.h>
#include <stdint.h>

#if defined(NVTX_BUILDING_LIBRARY)
#define NVTX_API __attribute__((visibility("default")))
#else
#define NVTX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nvtx_status {
  NVTX_OK = 0,
  NVTX_ERR_DIMENSION = 1,
  NVTX_ERR_DOMAIN = 2,
  NVTX_ERR_CONTRACT = 3,
  NVTX_ERR_CONFIG = 4,
  NVTX_ERR_FORMAT = 5,
  NVTX_ERR_INPUT = 6,
  NVTX_ERR_STATISTICS = 7,
  NVTX_ERR_IO = 8,
  NVTX_ERR_INVALID_ARGUMENT = 9,
  NVTX_ERR_INTERNAL = 10
} nvtx_status;

typedef struct nvtx_model nvtx_model;   /* base Transformer weights */
typedef struct nvtx_priors nvtx_priors; /* one empirical prior per site */

typedef struct nvtx_config {
  uint32_t vocab;
  uint32_t d;
  uint32_t h;
  uint32_t layers_enc;
  uint32_t layers_dec;
  uint32_t ffn_dim;
  uint32_t max_len;
} nvtx_config;

/* Group-level temperatures: e = encoder self, c = cross, d = decoder causal. */
typedef struct nvtx_tau {
  double tau_alpha_e, tau_alpha_c, tau_alpha_d;
  double tau_sigma_e, tau_sigma_c, tau_sigma_d;
} nvtx_tau;

typedef struct nvtx_sweep_bounds {
  double tau_alpha_min, tau_alpha_max;
  double tau_sigma_min, tau_sigma_max;
} nvtx_sweep_bounds;

typedef struct nvtx_certify_result {
  double max_abs_diff;
  double overlap_pct;
  int passed;
} nvtx_certify_result;

NVTX_API const char* nvtx_version(void);
NVTX_API const char* nvtx_status_name(nvtx_status status);
/* Message of the last failed call on this thread; "" if none. */
NVTX_API const char* nvtx_last_error(void);
NVTX_API void nvtx_string_free(char* s);

NVTX_API void nvtx_config_default(nvtx_config* out);
/* Overlays key=value lines from `path` onto *cfg. */
NVTX_API nvtx_status nvtx_config_load(const char* path, nvtx_config* cfg);
NVTX_API nvtx_status nvtx_config_validate(const nvtx_config* cfg);

/* tau_alpha = 10, tau_sigma = 1e-38 for every group. */
NVTX_API void nvtx_tau_identity(nvtx_tau* out);
NVTX_API void nvtx_sweep_bounds_default(nvtx_sweep_bounds* out);

NVTX_API nvtx_status nvtx_model_create(const nvtx_config* cfg, uint64_t seed,
                                       nvtx_model** out);
NVTX_API nvtx_status nvtx_model_load(const char* path, nvtx_model** out);
NVTX_API nvtx_status nvtx_model_save(const nvtx_model* model, const char* path);
NVTX_API void nvtx_model_free(nvtx_model* model);
NVTX_API nvtx_status nvtx_model_get_config(const nvtx_model* model, nvtx_config* out);
NVTX_API size_t nvtx_model_parameter_count(const nvtx_model* model);

/* Corpus: one sequence per line, "src ids" or "src ids | tgt ids". */
NVTX_API nvtx_status nvtx_estimate_priors(const nvtx_model* model, const char* corpus_path,
                                          double fraction, uint64_t seed, size_t shards,
                                          nvtx_priors** out);
/* Accepts a priors file or a saved NV model. */
NVTX_API nvtx_status nvtx_priors_load(const char* path, nvtx_priors** out);
NVTX_API nvtx_status nvtx_priors_save(const nvtx_priors* priors, const char* path);
NVTX_API void nvtx_priors_free(nvtx_priors* priors);
NVTX_API size_t nvtx_priors_count(const nvtx_priors* priors);
NVTX_API nvtx_status nvtx_priors_report_csv(const nvtx_priors* priors, char** out_csv);

/* Writes base weights, priors and taus as one NV model file. */
NVTX_API nvtx_status nvtx_nv_model_save(const nvtx_model* model, const nvtx_priors* priors,
                                        const nvtx_tau* tau, const char* path);

NVTX_API nvtx_status nvtx_certify(const nvtx_model* model, const nvtx_priors* priors,
                                  const nvtx_tau* tau, size_t trials, uint64_t seed,
                                  double tol, nvtx_certify_result* out);

/* Grid: "identity", "linear:N", "random:N" or "point:ae,ac,ad,se,sc,sd".
 * `bounds` may be NULL for the defaults. */
NVTX_API nvtx_status nvtx_sweep(const nvtx_model* model, const nvtx_priors* priors,
                                const char* grid, const nvtx_sweep_bounds* bounds,
                                size_t trials, uint64_t seed, char** out_csv);

/* Head-averaged attention map (prior column last) at one site as CSV.
 * `group` is "encoder", "cross" or "decoder" (or e/c/d). With tgt_len == 0
 * the decoder input is BOS plus the standard model's greedy decode. */
NVTX_API nvtx_status nvtx_attention_map(const nvtx_model* model, const nvtx_priors* priors,
                                        const nvtx_tau* tau, const int32_t* src,
                                        size_t src_len, const int32_t* tgt, size_t tgt_len,
                                        const char* group, size_t layer, char** out_csv);

/* Logits, tgt_len x vocab row-major, into `logits` (capacity in doubles).
 * With priors == NULL the standard model runs; otherwise the NV model built
 * from priors and tau. */
NVTX_API nvtx_status nvtx_forward(const nvtx_model* model, const nvtx_priors* priors,
                                  const nvtx_tau* tau, const int32_t* src, size_t src_len,
                                  const int32_t* tgt, size_t tgt_len, double* logits,
                                  size_t capacity);

NVTX_API nvtx_status nvtx_greedy_decode(const nvtx_model* model, const nvtx_priors* priors,
                                        const nvtx_tau* tau, const int32_t* src,
                                        size_t src_len, size_t max_steps, int32_t* out,
                                        size_t capacity, size_t* out_len);

#ifdef __cplusplus
}
#endif

#endif /* NVTX_NVTX_H_ */
