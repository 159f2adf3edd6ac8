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

#include "nvtx/nvib.hpp"

#include <algorithm>
#include <cmath>

#include "nvtx/errors.hpp"

namespace nvtx {

std::string_view to_string(LayerGroup g) {
  switch (g) {
    case LayerGroup::kEncoder:
      return "encoder";
    case LayerGroup::kCross:
      return "cross";
    case LayerGroup::kDecoder:
      return "decoder";
  }
  return "encoder";
}

LayerGroup parse_layer_group(std::string_view s) {
  if (s == "encoder" || s == "e") return LayerGroup::kEncoder;
  if (s == "cross" || s == "c") return LayerGroup::kCross;
  if (s == "decoder" || s == "d") return LayerGroup::kDecoder;
  throw ConfigError("unknown layer group '" + std::string(s) + "'");
}

TauConfig TauConfig::uniform(double tau_alpha, double tau_sigma) {
  return {tau_alpha, tau_alpha, tau_alpha, tau_sigma, tau_sigma, tau_sigma};
}

double TauConfig::tau_alpha(LayerGroup g) const {
  switch (g) {
    case LayerGroup::kEncoder:
      return tau_alpha_e;
    case LayerGroup::kCross:
      return tau_alpha_c;
    case LayerGroup::kDecoder:
      return tau_alpha_d;
  }
  return tau_alpha_e;
}

double TauConfig::tau_sigma(LayerGroup g) const {
  switch (g) {
    case LayerGroup::kEncoder:
      return tau_sigma_e;
    case LayerGroup::kCross:
      return tau_sigma_c;
    case LayerGroup::kDecoder:
      return tau_sigma_d;
  }
  return tau_sigma_e;
}

void TauConfig::validate() const {
  for (double a : {tau_alpha_e, tau_alpha_c, tau_alpha_d}) {
    if (!std::isfinite(a)) throw ConfigError("tau_alpha must be finite");
  }
  for (double s : {tau_sigma_e, tau_sigma_c, tau_sigma_d}) {
    if (!std::isfinite(s) || s < kTauSigmaFloor) {
      throw ConfigError("tau_sigma must be finite and at least 1e-38");
    }
  }
}

NvibProjection identity_init(const EmpiricalPrior& prior, double tau_alpha,
                             double tau_sigma, std::size_t d, std::size_t h) {
  if (!std::isfinite(tau_sigma) || tau_sigma < kTauSigmaFloor) {
    throw ConfigError("tau_sigma below the 1e-38 floor");
  }
  if (!std::isfinite(tau_alpha)) throw ConfigError("tau_alpha must be finite");
  if (h == 0 || d % h != 0) throw ConfigError("d must be divisible by h");
  if (prior.sigma_p.size() != d || prior.mu_p.size() != d) {
    throw DimensionError("prior dimension does not match d");
  }
  const double scale = std::sqrt(static_cast<double>(d) / static_cast<double>(h));
  NvibProjection p;
  p.w_mu = Matrix::identity(d);
  p.b_mu = Vector(d, 0.0);
  p.w_sigma = Matrix(d, d);
  p.b_sigma = Vector(d);
  for (std::size_t k = 0; k < d; ++k) {
    // log((sigma_p tau)^2) = 2 (log sigma_p + log tau), no underflow.
    p.b_sigma[k] = 2.0 * (std::log(prior.sigma_p[k]) + std::log(tau_sigma));
  }
  p.w_alpha1 = Vector(d, 1.0 / (2.0 * scale));
  p.w_alpha2 = Vector(d, 0.0);
  p.b_alpha = prior.epsilon_alpha * tau_alpha;
  return p;
}

DpPosterior project(const Matrix& z, const NvibProjection& proj,
                    const EmpiricalPrior& prior) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  if (proj.w_mu.rows() != d || prior.mu_p.size() != d) {
    throw DimensionError("projection dimension does not match latent width");
  }
  DpPosterior dp;
  dp.mu = Matrix(n + 1, d);
  dp.sigma = Matrix(n + 1, d);
  dp.log_alpha = Vector(n + 1);

  const Matrix mu = matmul(z, proj.w_mu);
  const Matrix log_var = matmul(z, proj.w_sigma);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      dp.mu(j, k) = mu(j, k) + proj.b_mu[k];
      const double var = std::max(std::exp(log_var(j, k) + proj.b_sigma[k]), kVarianceFloor);
      dp.sigma(j, k) = std::sqrt(var);
    }
    double la = proj.b_alpha;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = z(j, k);
      la += v * v * proj.w_alpha1[k] + v * proj.w_alpha2[k];
    }
    if (std::abs(la) > kLogAlphaClamp || std::isnan(la)) {
      ++dp.clamped;
      la = std::isnan(la) ? -kLogAlphaClamp : std::clamp(la, -kLogAlphaClamp, kLogAlphaClamp);
    }
    dp.log_alpha[j] = la;
  }
  for (std::size_t k = 0; k < d; ++k) {
    dp.mu(n, k) = prior.mu_p[k];
    dp.sigma(n, k) = prior.sigma_p[k];
  }
  dp.log_alpha[n] = prior.log_alpha0_p;
  return dp;
}

GaussianMixtureRepr to_gaussian_mixture(const DpPosterior& dp) {
  Vector w = dp.log_alpha;
  softmax_inplace(w);
  return {dp.mu, dp.sigma, std::move(w)};
}

}  // namespace nvtx
