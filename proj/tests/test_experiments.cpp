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

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("decode overlap") {
  CHECK(decode_overlap({}, {}) == 100.0);
  CHECK(decode_overlap({4, 5}, {4, 5}) == 100.0);
  CHECK(decode_overlap({4, 5, 6, 7}, {4, 9, 6}) == 50.0);
  CHECK(decode_overlap({4}, {}) == 0.0);
}

TEST_CASE("grid specs") {
  const SweepBounds b;
  const auto id = parse_grid("identity", b, 0);
  REQUIRE(id.size() == 1);
  CHECK(id[0] == TauConfig::identity());

  const auto lin = parse_grid("linear:10", b, 0);
  REQUIRE(lin.size() == 10);
  CHECK(lin.front() == TauConfig::uniform(10.0, 1e-38));
  CHECK(lin.back() == TauConfig::uniform(-15.0, 0.5));
  for (std::size_t i = 1; i < lin.size(); ++i) {
    CHECK(lin[i].tau_alpha_e < lin[i - 1].tau_alpha_e);
    CHECK(lin[i].tau_sigma_d > lin[i - 1].tau_sigma_d);
  }
  CHECK(parse_grid("linear:1", b, 0).front() == TauConfig::identity());

  const auto r = parse_grid("random:5", b, 3);
  REQUIRE(r.size() == 5);
  CHECK(r == parse_grid("random:5", b, 3));
  CHECK(r != parse_grid("random:5", b, 4));
  for (const auto& t : r) {
    for (double a : {t.tau_alpha_e, t.tau_alpha_c, t.tau_alpha_d}) CHECK((a >= -15.0 && a <= 10.0));
    for (double s : {t.tau_sigma_e, t.tau_sigma_c, t.tau_sigma_d}) CHECK((s >= 1e-38 && s <= 0.5));
  }

  const auto p = parse_grid("point:1,2,3,0.1,0.2,0.3", b, 0);
  CHECK(p.front() == TauConfig{1, 2, 3, 0.1, 0.2, 0.3});

  for (const char* bad : {"", "identity:1", "linear", "linear:", "linear:x", "linear:-2",
                          "linear:0", "random:2.5", "grid:3", "point:1,2,3", "point:1,2,3,0.1,0.2,0",
                          "point:1,2,3,0.1,0.2,x", "point:1,2,,3,0.1,0.2"}) {
    INFO(bad);
    CHECK_THROWS_AS(parse_grid(bad, b, 0), ConfigError);
  }
  SweepBounds inverted;
  inverted.tau_alpha_min = 20.0;
  CHECK_THROWS_AS(parse_grid("identity", inverted, 0), ConfigError);
}

TEST_CASE("workloads are reproducible and in range") {
  const ModelConfig c;
  const Workload a = make_workload(c, 15, 8), b = make_workload(c, 15, 8);
  CHECK(a.sources == b.sources);
  CHECK(a.targets == b.targets);
  for (std::size_t i = 0; i < a.sources.size(); ++i) {
    CHECK_NOTHROW(check_tokens(c, a.sources[i], "source"));
    CHECK(a.targets[i].front() == kBosToken);
    CHECK(a.targets[i].size() <= c.max_len);
  }
}

TEST_CASE("certification") {
  const fixture::Toy toy = fixture::toy(21);
  const CertifyResult pass = certify(toy.w, toy.priors, TauConfig::identity(), 20, 1, 1e-5);
  CHECK(pass.passed);
  CHECK(pass.overlap_pct == 100.0);
  CHECK(pass.max_abs_diff <= 1e-5);
  const CertifyResult fail = certify(toy.w, toy.priors, TauConfig::uniform(10.0, 0.5), 20, 1, 1e-5);
  CHECK_FALSE(fail.passed);
  CHECK(fail.max_abs_diff > 1e-5);
  CHECK_THROWS_AS(certify(toy.w, toy.priors, TauConfig::identity(), 0, 1, 1e-5), ConfigError);
}

TEST_CASE("sweep rows keep grid order and are reproducible") {
  const fixture::Toy toy = fixture::toy(22);
  const auto points = parse_grid("random:5", {}, 9);
  const auto rows = run_sweep(toy.w, toy.priors, points, 4, 2);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].taus == points[i]);
  const std::string csv = sweep_csv(rows);
  CHECK(csv == sweep_csv(run_sweep(toy.w, toy.priors, points, 4, 2)));
  const auto ls = lines(csv);
  REQUIRE(ls.size() == 6);
  CHECK(ls[0] ==
        "point,tau_alpha_e,tau_alpha_c,tau_alpha_d,tau_sigma_e,tau_sigma_c,tau_sigma_d,"
        "logit_max_diff,overlap_pct,prior_mass_e,prior_mass_c,prior_mass_d,mean_decode_len");
  for (const auto& l : ls) CHECK(std::count(l.begin(), l.end(), ',') == 12);
  CHECK_THROWS_AS(run_sweep(toy.w, toy.priors, points, 0, 2), ConfigError);
}

TEST_CASE("identity sweep point") {
  const fixture::Toy toy = fixture::toy(23);
  const auto rows = run_sweep(toy.w, toy.priors, parse_grid("identity", {}, 0), 10, 5);
  CHECK(rows[0].metrics.overlap_pct == 100.0);
  CHECK(rows[0].metrics.logit_max_diff <= 1e-5);
  CHECK(rows[0].metrics.prior_mass_e < 1e-6);
  CHECK(rows[0].metrics.finite);
}

TEST_CASE("linear sweep loses overlap as regularisation grows") {
  const fixture::Toy toy = fixture::toy(24);
  const auto rows = run_sweep(toy.w, toy.priors, parse_grid("linear:10", {}, 0), 10, 5);
  std::vector<double> t, overlap;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].metrics.finite);
    t.push_back(static_cast<double>(i));
    overlap.push_back(rows[i].metrics.overlap_pct);
  }
  CHECK(overlap.front() == 100.0);
  CHECK(oracle::spearman(t, overlap) < 0.0);
}

TEST_CASE("attention maps") {
  const fixture::Toy toy = fixture::toy(25);
  const TokenSeq src{4, 9, 12, 30, 7, 8, 5};
  const NvModel id = reinterpret(toy.w, toy.priors, TauConfig::identity());
  const NvModel collapse = reinterpret(toy.w, toy.priors, TauConfig::uniform(-30.0, 1e-38));
  for (std::size_t i = 0; i < toy.w->config.sites(); ++i) {
    const SiteId site = site_at(toy.w->config, i);
    const Matrix a = attention_map(id, src, {}, site);
    const Matrix b = attention_map(collapse, src, {}, site);
    REQUIRE(a.rows() > 0);
    CHECK(a.cols() == (site.group == LayerGroup::kEncoder || site.group == LayerGroup::kCross
                           ? src.size() + 1
                           : a.rows() + 1));
    for (std::size_t r = 0; r < a.rows(); ++r) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) {
        sa += a(r, c);
        sb += b(r, c);
      }
      CHECK(std::abs(sa - 1.0) <= 1e-9);
      CHECK(std::abs(sb - 1.0) <= 1e-9);
      CHECK(a(r, a.cols() - 1) < 1e-6);
      CHECK(b(r, b.cols() - 1) > 0.99);
    }
  }
  const Matrix explicit_tgt = attention_map(id, src, {kBosToken, 5, 6}, {LayerGroup::kDecoder, 1});
  CHECK(explicit_tgt.rows() == 3);
  CHECK_THROWS_AS(attention_map(id, src, {}, {LayerGroup::kEncoder, 2}), ConfigError);
}

TEST_CASE("attention map CSV") {
  const Matrix m{{0.25, 0.75, 0.0}, {0.5, 0.25, 0.25}};
  const auto ls = lines(attention_map_csv(m));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "query,k0,k1,[P]");
  CHECK(ls[1] == "0,0.25,0.75,0");
  CHECK(ls[2] == "1,0.5,0.25,0.25");
}

}  // TEST_SUITE
