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

// Empirical prior statistics per attention site, gathered from standard
// forward passes over a corpus.
//
// For the N latent vectors Z_i seen at a site, with s = sqrt(d/h):
//   mu_p          = mean of Z_i
//   sigma_p^2     = per-dimension sample variance (N - 1), floored at 1e-12
//   log alpha0_p  = mean of |Z_i|^2 / (2 s)
//   epsilon_alpha = sample std (N - 1) of |Z_i|^2 / (2 s)

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nvtx/model.hpp"

namespace nvtx {

inline constexpr double kPriorVarianceFloor = 1e-12;

/// One corpus line. `tgt` is the teacher-forced decoder input (BOS first).
struct Example {
  TokenSeq src;
  TokenSeq tgt;
};

/// Parses one example per non-blank line: "src ids" or "src ids | tgt ids".
/// Without a target the decoder input is BOS followed by the source,
/// truncated to max_len. Throws InputError on malformed lines.
std::vector<Example> read_corpus(std::istream& in, const ModelConfig& config);
std::vector<Example> read_corpus_file(const std::string& path,
                                      const ModelConfig& config);

/// Welford accumulator for one site. Merging uses the exact pairwise update,
/// so the result does not depend on how the stream was split.
class SiteAccumulator {
 public:
  SiteAccumulator() = default;
  SiteAccumulator(std::size_t d, double scale) : mean_(d, 0.0), m2_(d, 0.0), scale_(scale) {}

  void add(std::span<const double> z);
  void merge(const SiteAccumulator& other);

  std::size_t count() const noexcept { return n_; }
  const Vector& mean() const noexcept { return mean_; }
  /// Throws StatisticsError when fewer than two vectors were seen.
  EmpiricalPrior finalize(SiteId site) const;

 private:
  std::size_t n_ = 0;
  Vector mean_;
  Vector m2_;
  double norm_mean_ = 0.0;
  double norm_m2_ = 0.0;
  double scale_ = 1.0;
};

/// Runs standard forward passes over `examples` and accumulates every site.
std::vector<SiteAccumulator> accumulate_sites(const ModelWeights& w,
                                              const std::vector<Example>& examples);

/// Seeded reservoir sample of round(fraction * size) sequence indices (at
/// least one), returned in ascending order. Throws ConfigError unless
/// 0 < fraction <= 1.
std::vector<std::size_t> subsample_indices(std::size_t size, double fraction,
                                           std::uint64_t seed);

/// Priors for every site in site order. `shards` > 1 splits the selected
/// sequences into contiguous shards processed concurrently and merged.
std::vector<EmpiricalPrior> estimate_priors(const ModelWeights& w,
                                            const std::vector<Example>& corpus,
                                            double fraction, std::uint64_t seed,
                                            std::size_t shards = 1);

/// CSV: layer,group,mu_mean,sigma2_mean,log_alpha0,epsilon_alpha, rows
/// ordered encoder, cross, decoder and by layer within each group.
std::string prior_report(const std::vector<EmpiricalPrior>& priors);

}  // namespace nvtx
