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

// NVTX container, little-endian throughout:
//
//   "NVTX" | u32 version
//   config: u32 vocab, d, h, layers_enc, layers_dec, ffn_dim, max_len
//   u32 tensor count, then per tensor:
//     u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 payload
//   u64 trailer length | JSON text {"priors": [...], "taus": {...}}
//
// A weights file carries every tensor and an empty JSON object. A priors file
// carries the config, zero tensors and the priors. An NV model file carries
// both plus the taus.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nvtx/model.hpp"

namespace nvtx {

inline constexpr std::uint32_t kFormatVersion = 1;

struct NvtxContents {
  ModelConfig config;
  std::optional<ModelWeights> weights;  // present when the file has tensors
  std::vector<EmpiricalPrior> priors;
  std::optional<TauConfig> taus;
};

std::string encode_nvtx(const ModelConfig& config, const ModelWeights* weights,
                        const std::vector<EmpiricalPrior>& priors,
                        const TauConfig* taus);
/// Throws FormatError on bad magic, version, shapes or truncation.
NvtxContents decode_nvtx(const std::string& bytes);

void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

void save_priors(const ModelConfig& config, const std::vector<EmpiricalPrior>& priors,
                 const std::string& path);
/// Priors from either a priors file or an NV model file.
std::vector<EmpiricalPrior> load_priors(const std::string& path);

void save_nv_model(const NvModel& m, const std::string& path);
NvModel load_nv_model(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace nvtx
