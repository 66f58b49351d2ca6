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

#pragma once

#include <span>
#include <vector>

#include "artta/tensor.hpp"

// Dense linear-algebra kernels used by the network and the BN layers.
//
// Every kernel has a serial reference and an OpenMP version. The parallel
// versions split work over independent output elements only and keep the
// per-element accumulation order of the serial code, so both produce
// bitwise-identical results for any thread count.
namespace artta::kernels {

struct ColumnMoments {
  std::vector<double> mean;
  std::vector<double> var;  // population variance
};

namespace serial {
// out = x * weight + bias (bias broadcast over rows).
Tensor2D dense_forward(const Tensor2D& x, const Tensor2D& weight, std::span<const double> bias);
// a^T * b, a is n x p, b is n x q.
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);
// a * b^T, a is n x q, b is p x q.
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);
std::vector<double> column_sums(const Tensor2D& x);
ColumnMoments column_moments(const Tensor2D& x);
// y = scale * (x - mean) / sqrt(var + eps) + shift, per column.
Tensor2D affine_normalize(const Tensor2D& x, std::span<const double> mean,
                          std::span<const double> var, std::span<const double> scale,
                          std::span<const double> shift, double eps);
}  // namespace serial

namespace parallel {
Tensor2D dense_forward(const Tensor2D& x, const Tensor2D& weight, std::span<const double> bias);
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);
std::vector<double> column_sums(const Tensor2D& x);
ColumnMoments column_moments(const Tensor2D& x);
Tensor2D affine_normalize(const Tensor2D& x, std::span<const double> mean,
                          std::span<const double> var, std::span<const double> scale,
                          std::span<const double> shift, double eps);
}  // namespace parallel

using parallel::affine_normalize;
using parallel::column_moments;
using parallel::column_sums;
using parallel::dense_forward;
using parallel::matmul_nt;
using parallel::matmul_tn;

}  // namespace artta::kernels
