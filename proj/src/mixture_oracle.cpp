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

#include "nvtx/mixture_oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "nvtx/errors.hpp"

namespace nvtx {

double diag_gaussian_log_density(std::span<const double> x,
                                 std::span<const double> mean,
                                 std::span<const double> var) {
  double lp = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - mean[k];
    lp += -0.5 * std::log(2.0 * std::numbers::pi * var[k]) -
          0.5 * diff * diff / var[k];
  }
  return lp;
}

MixtureOfImpulses build_f_z(const Matrix& z, double scale) {
  if (!(scale > 0.0)) throw DomainError("scale must be positive");
  Vector logw(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    logw[i] = squared_norm(z.row(i)) / (2.0 * scale);
  }
  const double lse = log_sum_exp(logw);
  for (double& v : logw) v = std::exp(v - lse);
  return {z, std::move(logw)};
}

Matrix dattn_impulses(const Matrix& u, const MixtureOfImpulses& f, double scale) {
  const Matrix& z = f.locations;
  if (u.cols() != z.cols()) throw DimensionError("dattn_impulses column mismatch");
  const std::size_t d = z.cols();
  const Vector var(d, scale);
  Matrix out(u.rows(), d);
  Vector logpost(z.rows());
  for (std::size_t q = 0; q < u.rows(); ++q) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
      logpost[i] = f.weights[i] > 0.0
                       ? std::log(f.weights[i]) +
                             diag_gaussian_log_density(u.row(q), z.row(i), var)
                       : -std::numeric_limits<double>::infinity();
    }
    softmax_inplace(logpost);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t k = 0; k < d; ++k) out(q, k) += logpost[i] * z(i, k);
  }
  return out;
}

Matrix gaussian_responsibilities(const Matrix& u, const GaussianMixtureRepr& g,
                                 double scale) {
  if (u.cols() != g.mu.cols()) throw DimensionError("responsibility column mismatch");
  const std::size_t k_count = g.mu.rows();
  const std::size_t d = g.mu.cols();
  Matrix resp(u.rows(), k_count);
  Vector var(d);
  for (std::size_t q = 0; q < u.rows(); ++q) {
    for (std::size_t i = 0; i < k_count; ++i) {
      for (std::size_t k = 0; k < d; ++k) var[k] = scale + g.sigma(i, k) * g.sigma(i, k);
      resp(q, i) = g.weights[i] > 0.0
                       ? std::log(g.weights[i]) +
                             diag_gaussian_log_density(u.row(q), g.mu.row(i), var)
                       : -std::numeric_limits<double>::infinity();
    }
    softmax_inplace(resp.row(q));
  }
  return resp;
}

Matrix dattn_gaussians_oracle(const Matrix& u, const GaussianMixtureRepr& g,
                              double scale) {
  const Matrix resp = gaussian_responsibilities(u, g, scale);
  const std::size_t d = g.mu.cols();
  Matrix out(u.rows(), d);
  for (std::size_t q = 0; q < u.rows(); ++q) {
    for (std::size_t i = 0; i < g.mu.rows(); ++i) {
      const double r = resp(q, i);
      if (r == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const double s2 = g.sigma(i, k) * g.sigma(i, k);
        const double post_mean = (s2 * u(q, k) + scale * g.mu(i, k)) / (scale + s2);
        out(q, k) += r * post_mean;
      }
    }
  }
  return out;
}

}  // namespace nvtx
