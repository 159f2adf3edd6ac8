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

// nvtx-cli: model creation, prior estimation, equivalence certification,
// tau sweeps and attention-map dumps over the C API.
//
// Exit codes: 0 success, 1 certification failure, 2 usage error, 3 data error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nvtx/nvtx.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct CliFailure {
  int code;
};

int exit_code(nvtx_status s) {
  switch (s) {
    case NVTX_OK:
      return kExitOk;
    case NVTX_ERR_DIMENSION:
    case NVTX_ERR_DOMAIN:
    case NVTX_ERR_CONTRACT:
    case NVTX_ERR_CONFIG:
    case NVTX_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    default:
      return kExitData;
  }
}

void check(nvtx_status s) {
  if (s == NVTX_OK) return;
  std::cerr << "error: " << nvtx_status_name(s) << ": " << nvtx_last_error() << '\n';
  throw CliFailure{exit_code(s)};
}

[[noreturn]] void fail(int code, const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  throw CliFailure{code};
}

using ModelPtr = std::unique_ptr<nvtx_model, decltype(&nvtx_model_free)>;
using PriorsPtr = std::unique_ptr<nvtx_priors, decltype(&nvtx_priors_free)>;
using StringPtr = std::unique_ptr<char, decltype(&nvtx_string_free)>;

ModelPtr load_model(const std::string& path) {
  nvtx_model* m = nullptr;
  check(nvtx_model_load(path.c_str(), &m));
  return {m, &nvtx_model_free};
}

PriorsPtr load_priors(const std::string& path) {
  nvtx_priors* p = nullptr;
  check(nvtx_priors_load(path.c_str(), &p));
  return {p, &nvtx_priors_free};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) fail(kExitData, "cannot write " + path);
}

std::vector<int32_t> parse_ids(const std::string& text, const char* what) {
  std::vector<int32_t> ids;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size() || v < INT32_MIN || v > INT32_MAX) throw std::invalid_argument(tok);
      ids.push_back(static_cast<int32_t>(v));
    } catch (const std::exception&) {
      fail(kExitUsage, std::string("malformed token id '") + tok + "' in " + what);
    }
  }
  return ids;
}

// Uniform --tau-alpha / --tau-sigma with optional per-group overrides.
struct TauFlags {
  double alpha = 10.0;
  double sigma = 1e-38;
  std::optional<double> alpha_e, alpha_c, alpha_d, sigma_e, sigma_c, sigma_d;

  void add(CLI::App* cmd) {
    cmd->add_option("--tau-alpha", alpha, "tau_alpha for every group")->capture_default_str();
    cmd->add_option("--tau-sigma", sigma, "tau_sigma for every group")->capture_default_str();
    cmd->add_option("--tau-alpha-e", alpha_e, "encoder tau_alpha override");
    cmd->add_option("--tau-alpha-c", alpha_c, "cross tau_alpha override");
    cmd->add_option("--tau-alpha-d", alpha_d, "decoder tau_alpha override");
    cmd->add_option("--tau-sigma-e", sigma_e, "encoder tau_sigma override");
    cmd->add_option("--tau-sigma-c", sigma_c, "cross tau_sigma override");
    cmd->add_option("--tau-sigma-d", sigma_d, "decoder tau_sigma override");
  }

  nvtx_tau get() const {
    return {alpha_e.value_or(alpha), alpha_c.value_or(alpha), alpha_d.value_or(alpha),
            sigma_e.value_or(sigma), sigma_c.value_or(sigma), sigma_d.value_or(sigma)};
  }
};

struct InitArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::uint32_t> vocab, d, h, layers_enc, layers_dec, ffn_dim, max_len;
};

int run_init(const InitArgs& a) {
  nvtx_config cfg;
  nvtx_config_default(&cfg);
  if (!a.config_path.empty()) check(nvtx_config_load(a.config_path.c_str(), &cfg));
  if (a.vocab) cfg.vocab = *a.vocab;
  if (a.d) cfg.d = *a.d;
  if (a.h) cfg.h = *a.h;
  if (a.layers_enc) cfg.layers_enc = *a.layers_enc;
  if (a.layers_dec) cfg.layers_dec = *a.layers_dec;
  if (a.ffn_dim) cfg.ffn_dim = *a.ffn_dim;
  if (a.max_len) cfg.max_len = *a.max_len;
  check(nvtx_config_validate(&cfg));
  nvtx_model* raw = nullptr;
  check(nvtx_model_create(&cfg, a.seed, &raw));
  ModelPtr model(raw, &nvtx_model_free);
  check(nvtx_model_save(model.get(), a.out.c_str()));
  std::cout << "parameters: " << nvtx_model_parameter_count(model.get()) << '\n';
  return kExitOk;
}

struct EstimateArgs {
  std::string model, corpus, out, report;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t shards = 1;
};

int run_estimate(const EstimateArgs& a) {
  ModelPtr model = load_model(a.model);
  nvtx_priors* raw = nullptr;
  check(nvtx_estimate_priors(model.get(), a.corpus.c_str(), a.fraction, a.seed, a.shards, &raw));
  PriorsPtr priors(raw, &nvtx_priors_free);
  check(nvtx_priors_save(priors.get(), a.out.c_str()));
  char* csv = nullptr;
  check(nvtx_priors_report_csv(priors.get(), &csv));
  StringPtr text(csv, &nvtx_string_free);
  if (a.report.empty()) {
    std::cout << text.get();
  } else {
    write_text(a.report, text.get());
  }
  return kExitOk;
}

struct CertifyArgs {
  std::string model, priors;
  TauFlags tau;
  std::size_t trials = 20;
  double tol = 1e-5;
  std::uint64_t seed = 0;
};

int run_certify(const CertifyArgs& a) {
  ModelPtr model = load_model(a.model);
  PriorsPtr priors = load_priors(a.priors);
  const nvtx_tau tau = a.tau.get();
  nvtx_certify_result r{};
  check(nvtx_certify(model.get(), priors.get(), &tau, a.trials, a.seed, a.tol, &r));
  std::printf("max_abs_logit_diff %.6e\noverlap_pct %.4f\n%s\n", r.max_abs_diff, r.overlap_pct,
              r.passed ? "PASS" : "FAIL");
  return r.passed ? kExitOk : kExitFail;
}

struct SweepArgs {
  std::string model, priors, grid, out;
  std::uint64_t seed = 0;
  std::size_t trials = 10;
  nvtx_sweep_bounds bounds{};
};

int run_sweep(const SweepArgs& a) {
  ModelPtr model = load_model(a.model);
  PriorsPtr priors = load_priors(a.priors);
  char* csv = nullptr;
  check(nvtx_sweep(model.get(), priors.get(), a.grid.c_str(), &a.bounds, a.trials, a.seed, &csv));
  StringPtr text(csv, &nvtx_string_free);
  if (a.out.empty()) {
    std::cout << text.get();
  } else {
    write_text(a.out, text.get());
  }
  return kExitOk;
}

struct DumpArgs {
  std::string model, priors, input, target, group, out;
  TauFlags tau;
  std::size_t layer = 0;
};

int run_dump(const DumpArgs& a) {
  const std::vector<int32_t> src = parse_ids(a.input, "--input");
  const std::vector<int32_t> tgt = parse_ids(a.target, "--target");
  ModelPtr model = load_model(a.model);
  PriorsPtr priors = load_priors(a.priors);
  const nvtx_tau tau = a.tau.get();
  char* csv = nullptr;
  check(nvtx_attention_map(model.get(), priors.get(), &tau, src.data(), src.size(), tgt.data(),
                           tgt.size(), a.group.c_str(), a.layer, &csv));
  StringPtr text(csv, &nvtx_string_free);
  if (a.out.empty()) {
    std::cout << text.get();
  } else {
    write_text(a.out, text.get());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinterpret a toy Transformer with denoising attention"};
  app.set_version_flag("--version", nvtx_version());
  app.require_subcommand(1);

  InitArgs init;
  auto* c_init = app.add_subcommand("init-model", "create and save seeded toy weights");
  c_init->add_option("--config", init.config_path, "key=value model config file");
  c_init->add_option("--seed", init.seed, "weight seed")->capture_default_str();
  c_init->add_option("--out", init.out, "output weights file")->required();
  c_init->add_option("--vocab", init.vocab);
  c_init->add_option("--d", init.d);
  c_init->add_option("--heads", init.h);
  c_init->add_option("--layers-enc", init.layers_enc);
  c_init->add_option("--layers-dec", init.layers_dec);
  c_init->add_option("--ffn-dim", init.ffn_dim);
  c_init->add_option("--max-len", init.max_len);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate-prior", "estimate per-site empirical priors");
  c_est->add_option("--model", est.model, "weights file")->required();
  c_est->add_option("--corpus", est.corpus, "token corpus, one sequence per line")->required();
  c_est->add_option("--fraction", est.fraction, "sequence subsample fraction")->capture_default_str();
  c_est->add_option("--seed", est.seed, "subsample seed")->capture_default_str();
  c_est->add_option("--shards", est.shards, "parallel shards")->capture_default_str();
  c_est->add_option("--out", est.out, "output priors file")->required();
  c_est->add_option("--report", est.report, "CSV report path (stdout if omitted)");

  CertifyArgs cert;
  auto* c_cert = app.add_subcommand("certify", "check NV model equivalence against the base model");
  c_cert->add_option("--model", cert.model, "weights file")->required();
  c_cert->add_option("--priors", cert.priors, "priors file")->required();
  cert.tau.add(c_cert);
  c_cert->add_option("--trials", cert.trials, "random inputs")->capture_default_str();
  c_cert->add_option("--tol", cert.tol, "max-abs logit tolerance")->capture_default_str();
  c_cert->add_option("--seed", cert.seed, "input seed")->capture_default_str();

  SweepArgs sw;
  nvtx_sweep_bounds_default(&sw.bounds);
  auto* c_sweep = app.add_subcommand("sweep", "evaluate a tau grid, one CSV row per point");
  c_sweep->add_option("--model", sw.model, "weights file")->required();
  c_sweep->add_option("--priors", sw.priors, "priors file")->required();
  c_sweep->add_option("--grid", sw.grid,
                      "identity | linear:N | random:N | point:ae,ac,ad,se,sc,sd")
      ->required();
  c_sweep->add_option("--seed", sw.seed, "grid and input seed")->capture_default_str();
  c_sweep->add_option("--trials", sw.trials, "random inputs per point")->capture_default_str();
  c_sweep->add_option("--out", sw.out, "CSV path (stdout if omitted)");
  c_sweep->add_option("--tau-alpha-min", sw.bounds.tau_alpha_min)->capture_default_str();
  c_sweep->add_option("--tau-alpha-max", sw.bounds.tau_alpha_max)->capture_default_str();
  c_sweep->add_option("--tau-sigma-min", sw.bounds.tau_sigma_min)->capture_default_str();
  c_sweep->add_option("--tau-sigma-max", sw.bounds.tau_sigma_max)->capture_default_str();

  DumpArgs dump;
  auto* c_dump = app.add_subcommand("attn-dump", "write a head-averaged attention map");
  c_dump->add_option("--model", dump.model, "weights file")->required();
  c_dump->add_option("--priors", dump.priors, "priors file")->required();
  dump.tau.add(c_dump);
  c_dump->add_option("--input", dump.input, "source token ids, whitespace separated")->required();
  c_dump->add_option("--target", dump.target,
                     "decoder input ids starting with BOS (default: greedy decode)");
  c_dump->add_option("--layer", dump.layer, "layer index within the group")->required();
  c_dump->add_option("--group", dump.group, "encoder | cross | decoder")->required();
  c_dump->add_option("--out", dump.out, "CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c_init) return run_init(init);
    if (*c_est) return run_estimate(est);
    if (*c_cert) return run_certify(cert);
    if (*c_sweep) return run_sweep(sw);
    if (*c_dump) return run_dump(dump);
  } catch (const CliFailure& f) {
    return f.code;
  }
  return kExitUsage;
}
