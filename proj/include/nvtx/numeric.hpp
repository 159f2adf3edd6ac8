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

// Dense row-major linear algebra, stable softmax and seeded sampling.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace nvtx {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  Matrix transposed() const;

  /// Columns [begin, begin + count) as a new matrix.
  Matrix col_slice(std::size_t begin, std::size_t count) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

/// a * b^T without materialising the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// Adds `bias` to every row.
void add_row_vector(Matrix& a, std::span<const double> bias);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// log(sum(exp(x))) with max subtraction. Returns -inf for an empty or
/// all -inf input.
double log_sum_exp(std::span<const double> x);

/// In-place stable softmax over a single row.
void softmax_inplace(std::span<double> row);

Matrix softmax_rows(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

/// Seeded pseudo-random source. Single owner; never share across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform in [0, 1) with 53 bits of randomness.
  double uniform();
  /// Uniform in (0, 1).
  double uniform_open();
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
  /// Gamma(shape + 1) * U^(1/shape).
  double gamma(double shape);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Vector sample_dirichlet(Rng& rng, std::span<const double> alpha);

/// Dirichlet draw parameterised by log concentrations; the returned vector is
/// log(pi). Stays finite for concentrations far outside double range.
Vector sample_dirichlet_log(Rng& rng, std::span<const double> log_alpha);

/// mu + sigma * eps elementwise, eps standard normal.
Matrix sample_gaussian(Rng& rng, const Matrix& mu, const Matrix& sigma);

Matrix random_normal(Rng& rng, std::size_t rows, std::size_t cols,
                     double stddev = 1.0);

}  // namespace nvtx
