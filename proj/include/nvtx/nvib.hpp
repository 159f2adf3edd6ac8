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

// NVIB projection: latent vectors -> Dirichlet-process posterior parameters
// (mu, sigma, alpha), with the empirical prior appended as the last
// component.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "nvtx/mixture_oracle.hpp"
#include "nvtx/numeric.hpp"

namespace nvtx {

/// Smallest admissible tau_sigma (float32 denormal-free floor).
inline constexpr double kTauSigmaFloor = 1e-38;
/// Lower clamp on every projected variance; the square of kTauSigmaFloor.
inline constexpr double kVarianceFloor = 1e-76;
/// |log alpha| clamp.
inline constexpr double kLogAlphaClamp = 700.0;

enum class LayerGroup { kEncoder, kCross, kDecoder };

std::string_view to_string(LayerGroup g);
/// Accepts "encoder"/"e", "cross"/"c", "decoder"/"d". Throws ConfigError.
LayerGroup parse_layer_group(std::string_view s);

struct EmpiricalPrior {
  Vector mu_p;
  Vector sigma_p;  // standard deviations
  double log_alpha0_p = 0.0;
  double epsilon_alpha = 0.0;
  LayerGroup layer_group = LayerGroup::kEncoder;
  std::size_t layer_id = 0;

  bool operator==(const EmpiricalPrior&) const = default;
};

struct TauConfig {
  double tau_alpha_e = 10.0, tau_alpha_c = 10.0, tau_alpha_d = 10.0;
  double tau_sigma_e = kTauSigmaFloor, tau_sigma_c = kTauSigmaFloor,
         tau_sigma_d = kTauSigmaFloor;

  /// Equivalence corner: tau_alpha = 10, tau_sigma = 1e-38 everywhere.
  static TauConfig identity() { return {}; }
  static TauConfig uniform(double tau_alpha, double tau_sigma);

  double tau_alpha(LayerGroup g) const;
  double tau_sigma(LayerGroup g) const;

  /// Throws ConfigError when any tau_sigma is below the floor or any value is
  /// not finite.
  void validate() const;

  bool operator==(const TauConfig&) const = default;
};

struct NvibProjection {
  Matrix w_mu;
  Vector b_mu;
  Matrix w_sigma;
  Vector b_sigma;  // log-variance bias
  Vector w_alpha1;
  Vector w_alpha2;
  double b_alpha = 0.0;
};

/// DP posterior over n tokens plus the prior as row n. Pseudo-counts are held
/// as log alpha.
struct DpPosterior {
  Matrix mu;
  Matrix sigma;
  Vector log_alpha;
  /// How many log alpha values hit the clamp.
  std::size_t clamped = 0;

  std::size_t components() const noexcept { return log_alpha.size(); }
  std::size_t prior_index() const noexcept { return components() - 1; }
};

/// Weights that make denoising attention reproduce standard attention as
/// tau_alpha grows and tau_sigma -> 0:
///   W_mu = I, b_mu = 0, W_sigma = 0, b_sigma = log((sigma_p tau_sigma)^2),
///   w_alpha1 = 1 / (2 sqrt(d/h)), w_alpha2 = 0, b_alpha = eps_alpha tau_alpha.
NvibProjection identity_init(const EmpiricalPrior& prior, double tau_alpha,
                             double tau_sigma, std::size_t d, std::size_t h);

DpPosterior project(const Matrix& z, const NvibProjection& proj,
                    const EmpiricalPrior& prior);

/// Mixture weights alpha / alpha_0, with alpha_0 summing over the prior too.
GaussianMixtureRepr to_gaussian_mixture(const DpPosterior& dp);

}  // namespace nvtx
