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

#include "nvtx/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "nvtx/errors.hpp"

namespace nvtx {

namespace {

std::size_t parse_count(const std::string& text, const std::string& spec) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v <= 0) throw ConfigError("malformed grid spec '" + spec + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

TokenSeq random_sequence(Rng& rng, const ModelConfig& config, std::size_t length) {
  TokenSeq seq(length);
  const std::uint64_t span = config.vocab - static_cast<std::uint32_t>(kFirstContentToken);
  for (Token& t : seq) t = kFirstContentToken + static_cast<Token>(rng.below(span));
  return seq;
}

double decode_overlap(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 100.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) same += a[i] == b[i];
  return 100.0 * static_cast<double>(same) / static_cast<double>(longest);
}

Workload make_workload(const ModelConfig& config, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  Workload w;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t src_len = 1 + rng.below(config.max_len);
    const std::size_t tgt_len = 1 + rng.below(config.max_len);
    w.sources.push_back(random_sequence(rng, config, src_len));
    TokenSeq tgt{kBosToken};
    const TokenSeq body = random_sequence(rng, config, tgt_len - 1);
    tgt.insert(tgt.end(), body.begin(), body.end());
    w.targets.push_back(std::move(tgt));
  }
  w.max_steps = std::min<std::size_t>(12, config.max_len);
  return w;
}

Baseline compute_baseline(const ModelWeights& w, const Workload& work) {
  Baseline b;
  for (std::size_t t = 0; t < work.sources.size(); ++t) {
    b.logits.push_back(forward_standard(w, work.sources[t], work.targets[t]));
    b.decodes.push_back(greedy_decode(w, work.sources[t], work.max_steps));
  }
  return b;
}

PointMetrics evaluate_point(const NvModel& m, const Workload& work,
                            const Baseline& baseline) {
  PointMetrics pm;
  double mass[3] = {0.0, 0.0, 0.0};
  std::size_t rows[3] = {0, 0, 0};
  ForwardHooks hooks;
  hooks.on_attention = [&](SiteId site, const Matrix& weights) {
    const auto g = static_cast<std::size_t>(site.group);
    for (std::size_t r = 0; r < weights.rows(); ++r) mass[g] += weights(r, weights.cols() - 1);
    rows[g] += weights.rows();
  };
  std::size_t same_tokens = 0;
  std::size_t longest_total = 0;
  std::size_t decoded_total = 0;
  for (std::size_t t = 0; t < work.sources.size(); ++t) {
    const Matrix logits = forward_nv(m, work.sources[t], work.targets[t], hooks);
    pm.finite = pm.finite && all_finite(logits);
    if (pm.finite) {
      pm.logit_max_diff = std::max(pm.logit_max_diff, max_abs_diff(logits, baseline.logits[t]));
    }
    const TokenSeq decode = greedy_decode(m, work.sources[t], work.max_steps);
    const TokenSeq& ref = baseline.decodes[t];
    const std::size_t longest = std::max(decode.size(), ref.size());
    same_tokens += static_cast<std::size_t>(
        std::llround(decode_overlap(decode, ref) * static_cast<double>(longest) / 100.0));
    longest_total += longest;
    decoded_total += decode.size();
  }
  if (!pm.finite) pm.logit_max_diff = std::numeric_limits<double>::infinity();
  pm.overlap_pct = longest_total == 0 ? 100.0
                                      : 100.0 * static_cast<double>(same_tokens) /
                                            static_cast<double>(longest_total);
  auto avg = [&](std::size_t g) { return rows[g] == 0 ? 0.0 : mass[g] / static_cast<double>(rows[g]); };
  pm.prior_mass_e = avg(static_cast<std::size_t>(LayerGroup::kEncoder));
  pm.prior_mass_c = avg(static_cast<std::size_t>(LayerGroup::kCross));
  pm.prior_mass_d = avg(static_cast<std::size_t>(LayerGroup::kDecoder));
  pm.mean_decode_len = work.sources.empty()
                           ? 0.0
                           : static_cast<double>(decoded_total) /
                                 static_cast<double>(work.sources.size());
  return pm;
}

CertifyResult certify(std::shared_ptr<const ModelWeights> w,
                      const std::vector<EmpiricalPrior>& priors,
                      const TauConfig& taus, std::size_t trials,
                      std::uint64_t seed, double tol) {
  if (trials == 0) throw ConfigError("certification needs at least one trial");
  const Workload work = make_workload(w->config, trials, seed);
  const Baseline base = compute_baseline(*w, work);
  const NvModel m = reinterpret(w, priors, taus);
  const PointMetrics pm = evaluate_point(m, work, base);
  CertifyResult r;
  r.max_abs_diff = pm.logit_max_diff;
  r.overlap_pct = pm.overlap_pct;
  r.passed = pm.finite && pm.logit_max_diff <= tol && pm.overlap_pct == 100.0;
  return r;
}

std::vector<TauConfig> parse_grid(const std::string& spec, const SweepBounds& bounds,
                                  std::uint64_t seed) {
  if (!(bounds.tau_alpha_min <= bounds.tau_alpha_max) ||
      !(bounds.tau_sigma_min <= bounds.tau_sigma_max) || bounds.tau_sigma_min < 1e-38) {
    throw ConfigError("invalid sweep bounds");
  }
  if (spec == "identity") return {TauConfig::identity()};
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("malformed grid spec '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  std::vector<TauConfig> points;
  if (kind == "linear") {
    const std::size_t n = parse_count(arg, spec);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      const double a = (1.0 - t) * bounds.tau_alpha_max + t * bounds.tau_alpha_min;
      const double s = (1.0 - t) * bounds.tau_sigma_min + t * bounds.tau_sigma_max;
      points.push_back(TauConfig::uniform(a, std::max(s, bounds.tau_sigma_min)));
    }
  } else if (kind == "random") {
    const std::size_t n = parse_count(arg, spec);
    Rng rng(seed);
    auto alpha = [&] {
      return bounds.tau_alpha_min + (bounds.tau_alpha_max - bounds.tau_alpha_min) * rng.uniform();
    };
    auto sigma = [&] {
      return std::max(bounds.tau_sigma_min,
                      bounds.tau_sigma_min + (bounds.tau_sigma_max - bounds.tau_sigma_min) * rng.uniform());
    };
    for (std::size_t i = 0; i < n; ++i) {
      TauConfig c;
      c.tau_alpha_e = alpha();
      c.tau_alpha_c = alpha();
      c.tau_alpha_d = alpha();
      c.tau_sigma_e = sigma();
      c.tau_sigma_c = sigma();
      c.tau_sigma_d = sigma();
      points.push_back(c);
    }
  } else if (kind == "point") {
    std::vector<double> v;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size() || item.empty()) throw ConfigError("malformed grid spec '" + spec + "'");
      v.push_back(x);
    }
    if (v.size() != 6) throw ConfigError("point grid needs six values");
    points.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  } else {
    throw ConfigError("malformed grid spec '" + spec + "'");
  }
  for (const auto& p : points) p.validate();
  return points;
}

std::vector<SweepRow> run_sweep(std::shared_ptr<const ModelWeights> w,
                                const std::vector<EmpiricalPrior>& priors,
                                const std::vector<TauConfig>& points,
                                std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ConfigError("sweep needs at least one trial");
  const Workload work = make_workload(w->config, trials, seed);
  const Baseline base = compute_baseline(*w, work);
  std::vector<SweepRow> rows(points.size());
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t begin = 0; begin < points.size(); begin += workers) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = begin; i < std::min(points.size(), begin + workers); ++i) {
      batch.push_back(std::async(std::launch::async, [&, i] {
        const NvModel m = reinterpret(w, priors, points[i]);
        rows[i] = {points[i], evaluate_point(m, work, base)};
      }));
    }
    for (auto& f : batch) f.get();
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "point,tau_alpha_e,tau_alpha_c,tau_alpha_d,tau_sigma_e,tau_sigma_c,tau_sigma_d,"
         "logit_max_diff,overlap_pct,prior_mass_e,prior_mass_c,prior_mass_d,mean_decode_len\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& t = rows[i].taus;
    const auto& m = rows[i].metrics;
    out << i << ',' << t.tau_alpha_e << ',' << t.tau_alpha_c << ',' << t.tau_alpha_d << ','
        << t.tau_sigma_e << ',' << t.tau_sigma_c << ',' << t.tau_sigma_d << ','
        << m.logit_max_diff << ',' << m.overlap_pct << ',' << m.prior_mass_e << ','
        << m.prior_mass_c << ',' << m.prior_mass_d << ',' << m.mean_decode_len << '\n';
  }
  return out.str();
}

Matrix attention_map(const NvModel& m, const TokenSeq& src, TokenSeq tgt, SiteId site) {
  if (!m.base) throw ConfigError("NV model has no base weights");
  const std::size_t wanted = site_index(m.base->config, site);
  if (tgt.empty()) {
    tgt = {kBosToken};
    TokenSeq decoded = greedy_decode(*m.base, src, m.base->config.max_len - 1);
    if (!decoded.empty() && decoded.back() == kEosToken) decoded.pop_back();
    tgt.insert(tgt.end(), decoded.begin(), decoded.end());
  }
  Matrix map;
  ForwardHooks hooks;
  hooks.on_attention = [&](SiteId s, const Matrix& weights) {
    if (site_index(m.base->config, s) == wanted) map = weights;
  };
  forward_nv(m, src, tgt, hooks);
  return map;
}

std::string attention_map_csv(const Matrix& map) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "query";
  for (std::size_t k = 0; k + 1 < map.cols(); ++k) out << ",k" << k;
  out << ",[P]\n";
  for (std::size_t r = 0; r < map.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < map.cols(); ++c) out << ',' << map(r, c);
    out << '\n';
  }
  return out.str();
}

}  // namespace nvtx
