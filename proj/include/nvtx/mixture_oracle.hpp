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

// Slow reference implementations of denoising attention by explicit
// enumeration of mixture components. Everything here works on Gaussian
// log-densities with all normalising constants kept, so components with
// different variances are compared correctly.

#pragma once

#include "nvtx/numeric.hpp"

namespace nvtx {

/// Discrete mixture of point masses at the rows of `locations`.
struct MixtureOfImpulses {
  Matrix locations;
  Vector weights;
};

/// Weighted diagonal-Gaussian components; `sigma` holds standard deviations.
struct GaussianMixtureRepr {
  Matrix mu;
  Matrix sigma;
  Vector weights;
};

/// Impulses at the rows of z, weighted by exp(|z_i|^2 / (2 scale)).
MixtureOfImpulses build_f_z(const Matrix& z, double scale);

/// Posterior mean of a query observed with N(0, scale I) noise under an
/// impulse-mixture prior.
Matrix dattn_impulses(const Matrix& u, const MixtureOfImpulses& f, double scale);

/// Posterior responsibilities (m x k) of each Gaussian component given each
/// query, using the marginal N(mu_i, (scale + sigma_i^2) I).
Matrix gaussian_responsibilities(const Matrix& u, const GaussianMixtureRepr& g,
                                 double scale);

/// Posterior mean of the query under a Gaussian-mixture prior: each component
/// contributes (sigma^2 u + scale mu) / (scale + sigma^2), weighted by its
/// responsibility.
Matrix dattn_gaussians_oracle(const Matrix& u, const GaussianMixtureRepr& g,
                              double scale);

/// log N(x; mean, diag(var)) with all constants.
double diag_gaussian_log_density(std::span<const double> x,
                                 std::span<const double> mean,
                                 std::span<const double> var);

}  // namespace nvtx
