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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "nvtx/errors.hpp"
#include "oracles.hpp"

using namespace nvtx;

namespace {

// Every latent vector each site reads, collected with a plain forward pass.
std::vector<std::vector<Vector>> collect_latents(const ModelWeights& w,
                                                 const std::vector<Example>& corpus) {
  std::vector<std::vector<Vector>> out(w.config.sites());
  ForwardHooks hooks;
  hooks.on_latent = [&](std::size_t site, const Matrix& z) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const auto row = z.row(r);
      out[site].emplace_back(row.begin(), row.end());
    }
  };
  for (const Example& ex : corpus) forward_standard(w, ex.src, ex.tgt, hooks);
  return out;
}

void check_against_two_pass(const EmpiricalPrior& p, const std::vector<Vector>& z, double scale,
                            double tol) {
  const oracle::TwoPass o = oracle::two_pass(z, scale);
  for (std::size_t k = 0; k < p.mu_p.size(); ++k) {
    CHECK(std::abs(p.mu_p[k] - o.mean[k]) <= tol);
    CHECK(std::abs(p.sigma_p[k] * p.sigma_p[k] - std::max(o.var[k], kPriorVarianceFloor)) <= tol);
  }
  CHECK(std::abs(p.log_alpha0_p - o.norm_mean) <= tol);
  CHECK(std::abs(p.epsilon_alpha - o.norm_std) <= tol);
}

double max_prior_diff(const std::vector<EmpiricalPrior>& a, const std::vector<EmpiricalPrior>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].mu_p.size(); ++k) {
      worst = std::max(worst, std::abs(a[i].mu_p[k] - b[i].mu_p[k]));
      worst = std::max(worst, std::abs(a[i].sigma_p[k] - b[i].sigma_p[k]));
    }
    worst = std::max(worst, std::abs(a[i].log_alpha0_p - b[i].log_alpha0_p));
    worst = std::max(worst, std::abs(a[i].epsilon_alpha - b[i].epsilon_alpha));
  }
  return worst;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("prior") {

TEST_CASE("constant stream") {
  const Vector v{0.5, -1.25, 2.0, 0.0};
  SiteAccumulator acc(4, 2.0);
  for (int i = 0; i < 37; ++i) acc.add(v);
  const EmpiricalPrior p = acc.finalize({LayerGroup::kEncoder, 0});
  CHECK(p.mu_p == v);
  for (double s : p.sigma_p) CHECK(s * s == doctest::Approx(kPriorVarianceFloor).epsilon(1e-12));
  CHECK(p.log_alpha0_p == doctest::Approx((0.25 + 1.5625 + 4.0) / 4.0).epsilon(1e-14));
  CHECK(p.epsilon_alpha == 0.0);
}

TEST_CASE("two opposite unit vectors") {
  const std::vector<Vector> z{{1.0, 0.0}, {-1.0, 0.0}};
  const double scale = std::sqrt(2.0);
  SiteAccumulator acc(2, scale);
  for (const Vector& v : z) acc.add(v);
  const EmpiricalPrior p = acc.finalize({LayerGroup::kDecoder, 3});
  check_against_two_pass(p, z, scale, 1e-15);
  CHECK(p.layer_group == LayerGroup::kDecoder);
  CHECK(p.layer_id == 3);
}

TEST_CASE("streaming matches the two-pass oracle on random streams") {
  oracle::Gen g(41);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = g.pick(1, 16), n = g.pick(2, 200);
    const double scale = g.uniform(0.5, 4.0), offset = g.uniform(-50, 50);
    std::vector<Vector> z;
    SiteAccumulator acc(d, scale);
    for (std::size_t i = 0; i < n; ++i) {
      Vector v = g.vector(d, g.uniform(0.1, 5.0));
      for (double& x : v) x += offset;
      acc.add(v);
      z.push_back(v);
    }
    check_against_two_pass(acc.finalize({LayerGroup::kEncoder, 0}), z, scale, 1e-9);
  }
}

TEST_CASE("merging is split invariant") {
  oracle::Gen g(42);
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = g.pick(1, 8), n = g.pick(2, 120);
    std::vector<Vector> z;
    for (std::size_t i = 0; i < n; ++i) z.push_back(g.vector(d, 3.0));
    SiteAccumulator whole(d, 1.5);
    for (const Vector& v : z) whole.add(v);
    SiteAccumulator merged(d, 1.5), part(d, 1.5);
    for (std::size_t i = 0; i < n; ++i) {
      part.add(z[i]);
      if (g.uniform(0, 1) < 0.2 || i + 1 == n) {
        merged.merge(part);
        part = SiteAccumulator(d, 1.5);
      }
    }
    CHECK(merged.count() == n);
    const SiteId site{LayerGroup::kCross, 0};
    CHECK(max_prior_diff({whole.finalize(site)}, {merged.finalize(site)}) <= 1e-9);
  }
}

TEST_CASE("fewer than two vectors is a statistics error") {
  SiteAccumulator acc(3, 1.0);
  CHECK_THROWS_AS(acc.finalize({LayerGroup::kEncoder, 0}), StatisticsError);
  acc.add(Vector{1, 2, 3});
  CHECK_THROWS_AS(acc.finalize({LayerGroup::kEncoder, 0}), StatisticsError);
  CHECK_THROWS_AS(acc.add(Vector{1, 2}), DimensionError);
}

TEST_CASE("model priors match the brute-force oracle") {
  const ModelWeights w = init_model({}, 9);
  const std::vector<Example> corpus = fixture::corpus(w.config, 30, 90, 1, 20);
  const auto priors = estimate_priors(w, corpus, 1.0, 0);
  const auto latents = collect_latents(w, corpus);
  REQUIRE(priors.size() == w.config.sites());
  for (std::size_t s = 0; s < priors.size(); ++s) {
    const SiteId site = site_at(w.config, s);
    CHECK(priors[s].layer_group == site.group);
    CHECK(priors[s].layer_id == site.layer);
    check_against_two_pass(priors[s], latents[s], w.config.scale(), 1e-9);
  }
}

TEST_CASE("shard count does not change the priors") {
  const ModelWeights w = init_model({}, 10);
  const std::vector<Example> corpus = fixture::corpus(w.config, 60, 100);
  const auto single = estimate_priors(w, corpus, 1.0, 0, 1);
  for (std::size_t shards : {2, 3, 7, 60, 500}) {
    CHECK(max_prior_diff(single, estimate_priors(w, corpus, 1.0, 0, shards)) <= 1e-9);
  }
}

TEST_CASE("subsampling") {
  CHECK(subsample_indices(1000, 0.01, 5) == subsample_indices(1000, 0.01, 5));
  CHECK(subsample_indices(1000, 0.01, 5) != subsample_indices(1000, 0.01, 6));
  CHECK(subsample_indices(1000, 0.01, 5).size() == 10);
  CHECK(subsample_indices(1000, 1e-9, 5).size() == 1);
  CHECK(subsample_indices(7, 1.0, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
  const auto idx = subsample_indices(500, 0.3, 2);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  CHECK(idx.back() < 500);
  for (double bad : {0.0, -0.5, 1.5, std::nan("")})
    CHECK_THROWS_AS(subsample_indices(10, bad, 1), ConfigError);

  const ModelWeights w = init_model({}, 11);
  const std::vector<Example> corpus = fixture::corpus(w.config, 100, 110);
  CHECK(estimate_priors(w, corpus, 0.2, 3) == estimate_priors(w, corpus, 0.2, 3));
  CHECK(estimate_priors(w, corpus, 0.2, 3) != estimate_priors(w, corpus, 0.2, 4));
  CHECK_THROWS_AS(estimate_priors(w, corpus, 0.0, 3), ConfigError);
  CHECK_THROWS_AS(estimate_priors(w, {}, 1.0, 3), InputError);
}

TEST_CASE("a one-token corpus cannot be estimated") {
  const ModelWeights w = init_model({}, 11);
  CHECK_THROWS_AS(estimate_priors(w, {Example{{4}, {kBosToken}}}, 1.0, 0), StatisticsError);
}

TEST_CASE("corpus parsing") {
  const ModelConfig c;
  std::istringstream in("4 5 6\n\n  7 8 | 9 10 11  \n3\n");
  const auto ex = read_corpus(in, c);
  REQUIRE(ex.size() == 3);
  CHECK(ex[0].src == TokenSeq{4, 5, 6});
  CHECK(ex[0].tgt == TokenSeq{kBosToken, 4, 5, 6});
  CHECK(ex[1].src == TokenSeq{7, 8});
  CHECK(ex[1].tgt == TokenSeq{kBosToken, 9, 10, 11});
  CHECK(ex[2].tgt == TokenSeq{kBosToken, 3});

  std::string full;
  for (int i = 0; i < 32; ++i) full += "5 ";
  std::istringstream long_in(full);
  CHECK(read_corpus(long_in, c)[0].tgt.size() == c.max_len);

  for (const char* bad : {"4 x 5\n", "| 4\n", "4 64\n", "4 5 | 99\n", "4.5\n", "99999999999\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(read_corpus(b, c), InputError);
  }
  std::istringstream empty("\n  \n");
  CHECK(read_corpus(empty, c).empty());
  CHECK_THROWS_AS(read_corpus_file("/nonexistent/corpus.txt", c), IoError);
}

TEST_CASE("report") {
  const fixture::Toy toy = fixture::toy(4);
  const auto rows = parse_csv(prior_report(toy.priors));
  REQUIRE(rows.size() == toy.priors.size() + 1);
  CHECK(rows[0] == std::vector<std::string>{"layer", "group", "mu_mean", "sigma2_mean",
                                            "log_alpha0", "epsilon_alpha"});
  for (const auto& r : rows) CHECK(r.size() == 6);
  CHECK(rows[1][1] == "encoder");
  CHECK(rows[2][1] == "encoder");
  CHECK(rows[3][1] == "cross");
  CHECK(rows[5][1] == "decoder");
  CHECK(rows[1][0] == "0");
  CHECK(rows[2][0] == "1");
  CHECK(std::stod(rows[1][4]) == toy.priors[0].log_alpha0_p);

  std::vector<EmpiricalPrior> shuffled{toy.priors[5], toy.priors[0], toy.priors[3], toy.priors[1]};
  const auto ordered = parse_csv(prior_report(shuffled));
  CHECK(ordered[1][1] == "encoder");
  CHECK(ordered[2][1] == "encoder");
  CHECK(ordered[2][0] == "1");
  CHECK(ordered[3][1] == "cross");
  CHECK(ordered[4][1] == "decoder");

  CHECK(parse_csv(prior_report({toy.priors[0]})).size() == 2);
}

}  // TEST_SUITE

TEST_SUITE("prior_subsample") {

// 0.1% of a 10^4-sequence corpus against the full corpus, every report
// statistic at every site within 5% relative.
TEST_CASE("a 0.1% subsample reproduces the full-corpus report") {
  const ModelWeights w = init_model({}, 1);
  const std::vector<Example> corpus = fixture::corpus(w.config, 10000, 101, 31, 31);
  const auto full = parse_csv(prior_report(estimate_priors(w, corpus, 1.0, 1, 8)));
  const auto sub = parse_csv(prior_report(estimate_priors(w, corpus, 0.001, 1, 1)));
  REQUIRE(full.size() == sub.size());
  for (std::size_t r = 1; r < full.size(); ++r) {
    for (std::size_t c = 2; c < 6; ++c) {
      const double a = std::stod(full[r][c]), b = std::stod(sub[r][c]);
      const double rel = std::abs(b - a) / std::abs(a);
      INFO(full[r][1] << " layer " << full[r][0] << " " << full[0][c] << ": full " << a
                      << ", subsample " << b);
      CHECK(rel <= 0.05);
    }
  }
}

}  // TEST_SUITE
