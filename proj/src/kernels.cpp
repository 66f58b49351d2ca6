/* Copyright 2026 The artta Authors. All Rights Reserved.

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

#include "artta/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace artta::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 15;

void check_dense(const Tensor2D& x, const Tensor2D& weight, std::span<const double> bias) {
  if (x.cols() != weight.rows() || bias.size() != weight.cols()) {
    throw ConfigError("dense_forward: shape mismatch");
  }
}

void check_columns(const Tensor2D& x, std::span<const double> mean, std::span<const double> var,
                   std::span<const double> scale, std::span<const double> shift) {
  const auto c = x.cols();
  if (mean.size() != c || var.size() != c || scale.size() != c || shift.size() != c) {
    throw ConfigError("affine_normalize: channel count mismatch");
  }
}

}  // namespace

namespace serial {

Tensor2D dense_forward(const Tensor2D& x, const Tensor2D& weight, std::span<const double> bias) {
  check_dense(x, weight, bias);
  const std::size_t n = x.rows(), in = x.cols(), out = weight.cols();
  Tensor2D y(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out; ++j) {
      double acc = bias[j];
      for (std::size_t k = 0; k < in; ++k) acc += x(i, k) * weight(k, j);
      y(i, j) = acc;
    }
  }
  return y;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
  if (a.rows() != b.rows()) throw ConfigError("matmul_tn: shape mismatch");
  const std::size_t n = a.rows(), p = a.cols(), q = b.cols();
  Tensor2D y(p, q);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < q; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += a(i, r) * b(i, c);
      y(r, c) = acc;
    }
  }
  return y;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.cols()) throw ConfigError("matmul_nt: shape mismatch");
  const std::size_t n = a.rows(), q = a.cols(), p = b.rows();
  Tensor2D y(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < q; ++k) acc += a(i, k) * b(j, k);
      y(i, j) = acc;
    }
  }
  return y;
}

std::vector<double> column_sums(const Tensor2D& x) {
  std::vector<double> s(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) acc += x(i, c);
    s[c] = acc;
  }
  return s;
}

ColumnMoments column_moments(const Tensor2D& x) {
  const std::size_t n = x.rows(), cols = x.cols();
  ColumnMoments m{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
  if (n == 0) return m;
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x(i, c);
    const double mean = acc / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x(i, c) - mean;
      sq += d * d;
    }
    m.mean[c] = mean;
    m.var[c] = sq / static_cast<double>(n);
  }
  return m;
}

Tensor2D affine_normalize(const Tensor2D& x, std::span<const double> mean,
                          std::span<const double> var, std::span<const double> scale,
                          std::span<const double> shift, double eps) {
  check_columns(x, mean, var, scale, shift);
  Tensor2D y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double inv = 1.0 / std::sqrt(var[c] + eps);
      y(i, c) = scale[c] * ((x(i, c) - mean[c]) * inv) + shift[c];
    }
  }
  return y;
}

}  // namespace serial

namespace parallel {

Tensor2D dense_forward(const Tensor2D& x, const Tensor2D& weight, std::span<const double> bias) {
  check_dense(x, weight, bias);
  const auto n = static_cast<std::int64_t>(x.rows());
  const auto in = static_cast<std::int64_t>(x.cols());
  const auto out = static_cast<std::int64_t>(weight.cols());
  Tensor2D y(x.rows(), weight.cols());
  const double* xs = x.data();
  const double* ws = weight.data();
  double* ys = y.data();
#pragma omp parallel for collapse(2) schedule(static) if (n * in * out >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < out; ++j) {
      double acc = bias[j];
      for (std::int64_t k = 0; k < in; ++k) acc += xs[i * in + k] * ws[k * out + j];
      ys[i * out + j] = acc;
    }
  }
  return y;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
  if (a.rows() != b.rows()) throw ConfigError("matmul_tn: shape mismatch");
  const auto n = static_cast<std::int64_t>(a.rows());
  const auto p = static_cast<std::int64_t>(a.cols());
  const auto q = static_cast<std::int64_t>(b.cols());
  Tensor2D y(a.cols(), b.cols());
  const double* as = a.data();
  const double* bs = b.data();
  double* ys = y.data();
#pragma omp parallel for collapse(2) schedule(static) if (n * p * q >= kParallelWork)
  for (std::int64_t r = 0; r < p; ++r) {
    for (std::int64_t c = 0; c < q; ++c) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < n; ++i) acc += as[i * p + r] * bs[i * q + c];
      ys[r * q + c] = acc;
    }
  }
  return y;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.cols()) throw ConfigError("matmul_nt: shape mismatch");
  const auto n = static_cast<std::int64_t>(a.rows());
  const auto q = static_cast<std::int64_t>(a.cols());
  const auto p = static_cast<std::int64_t>(b.rows());
  Tensor2D y(a.rows(), b.rows());
  const double* as = a.data();
  const double* bs = b.data();
  double* ys = y.data();
#pragma omp parallel for collapse(2) schedule(static) if (n * p * q >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < q; ++k) acc += as[i * q + k] * bs[j * q + k];
      ys[i * p + j] = acc;
    }
  }
  return y;
}

std::vector<double> column_sums(const Tensor2D& x) {
  const auto n = static_cast<std::int64_t>(x.rows());
  const auto cols = static_cast<std::int64_t>(x.cols());
  std::vector<double> s(x.cols(), 0.0);
  const double* xs = x.data();
#pragma omp parallel for schedule(static) if (n * cols >= kParallelWork)
  for (std::int64_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += xs[i * cols + c];
    s[c] = acc;
  }
  return s;
}

ColumnMoments column_moments(const Tensor2D& x) {
  const auto n = static_cast<std::int64_t>(x.rows());
  const auto cols = static_cast<std::int64_t>(x.cols());
  ColumnMoments m{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 0.0)};
  if (n == 0) return m;
  const double* xs = x.data();
#pragma omp parallel for schedule(static) if (n * cols >= kParallelWork)
  for (std::int64_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += xs[i * cols + c];
    const double mean = acc / static_cast<double>(n);
    double sq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = xs[i * cols + c] - mean;
      sq += d * d;
    }
    m.mean[c] = mean;
    m.var[c] = sq / static_cast<double>(n);
  }
  return m;
}

Tensor2D affine_normalize(const Tensor2D& x, std::span<const double> mean,
                          std::span<const double> var, std::span<const double> scale,
                          std::span<const double> shift, double eps) {
  check_columns(x, mean, var, scale, shift);
  const auto n = static_cast<std::int64_t>(x.rows());
  const auto cols = static_cast<std::int64_t>(x.cols());
  Tensor2D y(x.rows(), x.cols());
  const double* xs = x.data();
  double* ys = y.data();
#pragma omp parallel for schedule(static) if (n * cols >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < cols; ++c) {
      const double inv = 1.0 / std::sqrt(var[c] + eps);
      ys[i * cols + c] = scale[c] * ((xs[i * cols + c] - mean[c]) * inv) + shift[c];
    }
  }
  return y;
}

}  // namespace parallel
}  // namespace artta::kernels
