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

// Equivalence certification, tau sweeps and attention-map dumps over a base
// model and its per-site priors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nvtx/model.hpp"

namespace nvtx {

/// Random content-token sequence of the given length.
TokenSeq random_sequence(Rng& rng, const ModelConfig& config, std::size_t length);

/// Percentage of aligned positions where two decodes agree, over the longer
/// length; two empty decodes agree fully.
double decode_overlap(const TokenSeq& a, const TokenSeq& b);

/// Reusable random workload: sources for decoding, source/target pairs for
/// logit comparisons.
struct Workload {
  std::vector<TokenSeq> sources;
  std::vector<TokenSeq> targets;  // BOS-prefixed decoder inputs
  std::size_t max_steps = 12;
};
Workload make_workload(const ModelConfig& config, std::size_t trials,
                       std::uint64_t seed);

/// Standard-model reference outputs for a workload, computed once.
struct Baseline {
  std::vector<Matrix> logits;
  std::vector<TokenSeq> decodes;
};
Baseline compute_baseline(const ModelWeights& w, const Workload& work);

struct PointMetrics {
  double logit_max_diff = 0.0;
  double overlap_pct = 0.0;
  double prior_mass_e = 0.0;  // mean [P] attention weight per group
  double prior_mass_c = 0.0;
  double prior_mass_d = 0.0;
  double mean_decode_len = 0.0;
  bool finite = true;
};
PointMetrics evaluate_point(const NvModel& m, const Workload& work,
                            const Baseline& baseline);

struct CertifyResult {
  double max_abs_diff = 0.0;
  double overlap_pct = 0.0;
  bool passed = false;
};
/// Throws ConfigError when trials == 0.
CertifyResult certify(std::shared_ptr<const ModelWeights> w,
                      const std::vector<EmpiricalPrior>& priors,
                      const TauConfig& taus, std::size_t trials,
                      std::uint64_t seed, double tol);

struct SweepBounds {
  double tau_alpha_min = -15.0;
  double tau_alpha_max = 10.0;
  double tau_sigma_min = 1e-38;
  double tau_sigma_max = 0.5;
};

/// Grid specs:
///   identity          the equivalence corner
///   linear:N          N points from (alpha_max, sigma_min) to
///                     (alpha_min, sigma_max), all groups together
///   random:N          N independent uniform draws per tau
///   point:ae,ac,ad,se,sc,sd
/// Throws ConfigError on anything else.
std::vector<TauConfig> parse_grid(const std::string& spec, const SweepBounds& bounds,
                                  std::uint64_t seed);

struct SweepRow {
  TauConfig taus;
  PointMetrics metrics;
};
/// Evaluates points concurrently; rows keep grid order.
std::vector<SweepRow> run_sweep(std::shared_ptr<const ModelWeights> w,
                                const std::vector<EmpiricalPrior>& priors,
                                const std::vector<TauConfig>& points,
                                std::size_t trials, std::uint64_t seed);

/// Header: point,tau_alpha_e,tau_alpha_c,tau_alpha_d,tau_sigma_e,tau_sigma_c,
/// tau_sigma_d,logit_max_diff,overlap_pct,prior_mass_e,prior_mass_c,
/// prior_mass_d,mean_decode_len
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Head-averaged NV attention map at one site: m x (n + 1), prior last.
/// Cross and decoder sites run on `tgt`; when `tgt` is empty it defaults to
/// BOS plus the standard model's greedy decode of `src`.
Matrix attention_map(const NvModel& m, const TokenSeq& src, TokenSeq tgt,
                     SiteId site);

/// Header: query,k0,...,k{n-1},[P]
std::string attention_map_csv(const Matrix& map);

}  // namespace nvtx
