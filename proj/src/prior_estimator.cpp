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

#include "nvtx/prior_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>

#include "nvtx/errors.hpp"

namespace nvtx {

namespace {

TokenSeq parse_ids(const std::string& text, std::size_t line_no) {
  std::istringstream in(text);
  TokenSeq ids;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v < std::numeric_limits<Token>::min() ||
        v > std::numeric_limits<Token>::max()) {
      throw InputError("corpus line " + std::to_string(line_no) + ": bad token '" + tok + "'");
    }
    ids.push_back(static_cast<Token>(v));
  }
  return ids;
}

int group_rank(LayerGroup g) {
  switch (g) {
    case LayerGroup::kEncoder:
      return 0;
    case LayerGroup::kCross:
      return 1;
    case LayerGroup::kDecoder:
      return 2;
  }
  return 0;
}

}  // namespace

std::vector<Example> read_corpus(std::istream& in, const ModelConfig& config) {
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example ex;
    const auto bar = line.find('|');
    ex.src = parse_ids(line.substr(0, bar), line_no);
    if (ex.src.empty()) {
      throw InputError("corpus line " + std::to_string(line_no) + ": empty source");
    }
    ex.tgt = {kBosToken};
    const TokenSeq tgt_body =
        bar == std::string::npos ? ex.src : parse_ids(line.substr(bar + 1), line_no);
    ex.tgt.insert(ex.tgt.end(), tgt_body.begin(), tgt_body.end());
    if (bar == std::string::npos && ex.tgt.size() > config.max_len) {
      ex.tgt.resize(config.max_len);
    }
    const std::string where = "corpus line " + std::to_string(line_no);
    check_tokens(config, ex.src, (where + " source").c_str());
    check_tokens(config, ex.tgt, (where + " target").c_str());
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> read_corpus_file(const std::string& path,
                                      const ModelConfig& config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path + "'");
  return read_corpus(in, config);
}

void SiteAccumulator::add(std::span<const double> z) {
  if (z.size() != mean_.size()) throw DimensionError("latent width mismatch");
  ++n_;
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double delta = z[k] - mean_[k];
    mean_[k] += delta * inv_n;
    m2_[k] += delta * (z[k] - mean_[k]);
  }
  const double norm = squared_norm(z) / (2.0 * scale_);
  const double delta = norm - norm_mean_;
  norm_mean_ += delta * inv_n;
  norm_m2_ += delta * (norm - norm_mean_);
}

void SiteAccumulator::merge(const SiteAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  if (other.mean_.size() != mean_.size()) throw DimensionError("accumulator width mismatch");
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double delta = other.mean_[k] - mean_[k];
    mean_[k] += delta * nb / n;
    m2_[k] += other.m2_[k] + delta * delta * na * nb / n;
  }
  const double delta = other.norm_mean_ - norm_mean_;
  norm_mean_ += delta * nb / n;
  norm_m2_ += other.norm_m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

EmpiricalPrior SiteAccumulator::finalize(SiteId site) const {
  if (n_ < 2) {
    throw StatisticsError("site " + std::string(to_string(site.group)) + " layer " +
                          std::to_string(site.layer) + " saw " + std::to_string(n_) +
                          " latent vectors; need at least 2");
  }
  const double denom = static_cast<double>(n_ - 1);
  EmpiricalPrior p;
  p.mu_p = mean_;
  p.sigma_p.resize(mean_.size());
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    p.sigma_p[k] = std::sqrt(std::max(m2_[k] / denom, kPriorVarianceFloor));
  }
  p.log_alpha0_p = norm_mean_;
  p.epsilon_alpha = std::sqrt(std::max(norm_m2_ / denom, 0.0));
  p.layer_group = site.group;
  p.layer_id = site.layer;
  return p;
}

std::vector<SiteAccumulator> accumulate_sites(const ModelWeights& w,
                                              const std::vector<Example>& examples) {
  const ModelConfig& cfg = w.config;
  std::vector<SiteAccumulator> acc(cfg.sites(), SiteAccumulator(cfg.d, cfg.scale()));
  ForwardHooks hooks;
  // Cross sites all read the same final encoder states; count them once per
  // example and copy afterwards.
  hooks.on_latent = [&](std::size_t site, const Matrix& z) {
    const SiteId id = site_at(cfg, site);
    if (id.group == LayerGroup::kCross && id.layer != 0) return;
    for (std::size_t r = 0; r < z.rows(); ++r) acc[site].add(z.row(r));
  };
  for (const Example& ex : examples) forward_standard(w, ex.src, ex.tgt, hooks);
  for (std::size_t l = 1; l < cfg.layers_dec; ++l) {
    acc[site_index(cfg, {LayerGroup::kCross, l})] =
        acc[site_index(cfg, {LayerGroup::kCross, 0})];
  }
  return acc;
}

std::vector<std::size_t> subsample_indices(std::size_t size, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ConfigError("fraction must lie in (0, 1]");
  }
  if (size == 0) return {};
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(size))), 1, size);
  std::vector<std::size_t> reservoir(k);
  for (std::size_t i = 0; i < k; ++i) reservoir[i] = i;
  Rng rng(seed);
  for (std::size_t i = k; i < size; ++i) {
    const std::size_t j = rng.below(i + 1);
    if (j < k) reservoir[j] = i;
  }
  std::sort(reservoir.begin(), reservoir.end());
  return reservoir;
}

std::vector<EmpiricalPrior> estimate_priors(const ModelWeights& w,
                                            const std::vector<Example>& corpus,
                                            double fraction, std::uint64_t seed,
                                            std::size_t shards) {
  const auto picked = subsample_indices(corpus.size(), fraction, seed);
  if (picked.empty()) throw InputError("corpus is empty");
  std::vector<Example> selected;
  selected.reserve(picked.size());
  for (std::size_t i : picked) selected.push_back(corpus[i]);

  shards = std::clamp<std::size_t>(shards, 1, selected.size());
  std::vector<std::future<std::vector<SiteAccumulator>>> parts;
  const std::size_t per = (selected.size() + shards - 1) / shards;
  for (std::size_t begin = 0; begin < selected.size(); begin += per) {
    const std::size_t end = std::min(selected.size(), begin + per);
    parts.push_back(std::async(std::launch::async, [&w, &selected, begin, end] {
      const std::vector<Example> shard(selected.begin() + begin, selected.begin() + end);
      return accumulate_sites(w, shard);
    }));
  }
  std::vector<SiteAccumulator> total;
  for (auto& part : parts) {
    auto acc = part.get();
    if (total.empty()) {
      total = std::move(acc);
    } else {
      for (std::size_t s = 0; s < total.size(); ++s) total[s].merge(acc[s]);
    }
  }
  std::vector<EmpiricalPrior> priors;
  for (std::size_t s = 0; s < total.size(); ++s) {
    priors.push_back(total[s].finalize(site_at(w.config, s)));
  }
  return priors;
}

std::string prior_report(const std::vector<EmpiricalPrior>& priors) {
  std::vector<const EmpiricalPrior*> rows;
  for (const auto& p : priors) rows.push_back(&p);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    if (group_rank(a->layer_group) != group_rank(b->layer_group)) {
      return group_rank(a->layer_group) < group_rank(b->layer_group);
    }
    return a->layer_id < b->layer_id;
  });
  std::ostringstream out;
  out << std::setprecision(17);
  out << "layer,group,mu_mean,sigma2_mean,log_alpha0,epsilon_alpha\n";
  for (const auto* p : rows) {
    double mu_mean = 0.0;
    double var_mean = 0.0;
    for (double v : p->mu_p) mu_mean += v;
    for (double s : p->sigma_p) var_mean += s * s;
    const double d = static_cast<double>(std::max<std::size_t>(p->mu_p.size(), 1));
    out << p->layer_id << ',' << to_string(p->layer_group) << ',' << mu_mean / d << ','
        << var_mean / d << ',' << p->log_alpha0_p << ',' << p->epsilon_alpha << '\n';
  }
  return out.str();
}

}  // namespace nvtx
