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

// Shared toy models, corpora and priors for the model-level suites.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "nvtx/experiments.hpp"
#include "nvtx/model.hpp"
#include "nvtx/prior_estimator.hpp"

namespace fixture {

inline nvtx::ModelConfig golden_config() {
  nvtx::ModelConfig c;
  c.vocab = 32;
  c.d = 16;
  c.h = 2;
  c.layers_enc = 2;
  c.layers_dec = 2;
  c.ffn_dim = 32;
  c.max_len = 16;
  return c;
}

inline constexpr std::uint64_t kGoldenSeed = 20260;
inline const nvtx::TokenSeq kGoldenSrc{5, 9, 3, 17, 30, 12, 8};
inline const nvtx::TokenSeq kGoldenTgt{nvtx::kBosToken, 4, 22, 9, 6};

/// Random corpus of `count` examples with lengths in [min_len, max_len].
inline std::vector<nvtx::Example> corpus(const nvtx::ModelConfig& config, std::size_t count,
                                         std::uint64_t seed, std::size_t min_len = 4,
                                         std::size_t max_len = 0) {
  if (max_len == 0) max_len = config.max_len - 1;
  nvtx::Rng rng(seed);
  std::vector<nvtx::Example> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = min_len + rng.below(max_len - min_len + 1);
    nvtx::Example ex;
    ex.src = nvtx::random_sequence(rng, config, n);
    ex.tgt = {nvtx::kBosToken};
    const nvtx::TokenSeq body = nvtx::random_sequence(rng, config, n);
    ex.tgt.insert(ex.tgt.end(), body.begin(), body.end());
    out.push_back(std::move(ex));
  }
  return out;
}

struct Toy {
  std::shared_ptr<const nvtx::ModelWeights> w;
  std::vector<nvtx::EmpiricalPrior> priors;
};

inline Toy toy(std::uint64_t seed, nvtx::ModelConfig config = {}) {
  Toy t;
  t.w = std::make_shared<const nvtx::ModelWeights>(nvtx::init_model(config, seed));
  t.priors = nvtx::estimate_priors(*t.w, corpus(config, 200, seed + 1), 1.0, seed);
  return t;
}

}  // namespace fixture
