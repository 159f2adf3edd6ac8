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

#include "nvtx/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nvtx/errors.hpp"

namespace nvtx {

namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

// log of a Gamma(exp(log_shape), 1) draw.
double log_gamma_draw(Rng& rng, double log_shape) {
  const double shape = std::exp(log_shape);
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a + 1) * U^(1/a).
    return log_gamma_draw(rng, std::log1p(shape)) +
           std::log(rng.uniform_open()) / shape;
  }
  // Marsaglia-Tsang in log space so that huge shapes stay finite.
  const double d = shape - 1.0 / 3.0;
  const double log_d = shape > 1e15 ? log_shape : std::log(d);
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    const double log_v = 3.0 * std::log(v);
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return log_d + log_v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - std::exp(log_v) + log_v)) {
      return log_d + log_v;
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::col_slice(std::size_t begin, std::size_t count) const {
  if (begin + count > cols_) throw DimensionError("column slice out of range");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, begin + c);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch " + shape_str(a) + " x " +
                         shape_str(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_transposed shape mismatch " + shape_str(a) +
                         " x " + shape_str(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

void add_row_vector(Matrix& a, std::span<const double> bias) {
  if (bias.size() != a.cols()) throw DimensionError("bias length mismatch");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) row[c] += bias[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double log_sum_exp(std::span<const double> x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

void softmax_inplace(std::span<double> row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : row) mx = std::max(mx, v);
  double s = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : row) v /= s;
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("max_abs_diff shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double v) { return std::isfinite(v); });
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  double u = 0.0;
  do {
    u = uniform();
  } while (u == 0.0);
  return u;
}

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
  return std::exp(log_gamma_draw(*this, std::log(shape)));
}

std::uint64_t Rng::below(std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

Vector sample_dirichlet(Rng& rng, std::span<const double> alpha) {
  Vector log_alpha(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!(alpha[j] > 0.0)) {
      throw DomainError("dirichlet concentration must be positive");
    }
    log_alpha[j] = std::log(alpha[j]);
  }
  Vector pi = sample_dirichlet_log(rng, log_alpha);
  for (double& p : pi) p = std::exp(p);
  return pi;
}

Vector sample_dirichlet_log(Rng& rng, std::span<const double> log_alpha) {
  Vector log_g(log_alpha.size());
  for (std::size_t j = 0; j < log_alpha.size(); ++j) {
    if (std::isnan(log_alpha[j]) || log_alpha[j] == -std::numeric_limits<double>::infinity()) {
      throw DomainError("dirichlet concentration must be positive");
    }
    log_g[j] = log_gamma_draw(rng, log_alpha[j]);
  }
  const double lse = log_sum_exp(log_g);
  for (double& v : log_g) v -= lse;
  return log_g;
}

Matrix sample_gaussian(Rng& rng, const Matrix& mu, const Matrix& sigma) {
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols()) {
    throw DimensionError("sample_gaussian shape mismatch");
  }
  Matrix out(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = sigma.data()[i];
    if (s < 0.0) throw DomainError("negative standard deviation");
    const double eps = rng.normal();
    out.data()[i] = s == 0.0 ? mu.data()[i] : mu.data()[i] + s * eps;
  }
  return out;
}

Matrix random_normal(Rng& rng, std::size_t rows, std::size_t cols,
                     double stddev) {
  Matrix out(rows, cols);
  for (double& v : out.data()) v = stddev * rng.normal();
  return out;
}

}  // namespace nvtx
