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

// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>

#include <random>

#include "artta/kernels.hpp"

namespace {

using artta::Tensor2D;
namespace kernels = artta::kernels;

Tensor2D random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor2D t(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Args: batch rows, fan in, fan out.
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({10, 16, 128})->Args({10, 128, 128})->Args({256, 128, 128})->Args({1024, 256, 256});
}

template <Tensor2D (*F)(const Tensor2D&, const Tensor2D&, std::span<const double>)>
void BM_DenseForward(benchmark::State& state) {
  const auto x = random_tensor(state.range(0), state.range(1), 1);
  const auto w = random_tensor(state.range(1), state.range(2), 2);
  const std::vector<double> bias(state.range(2), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(F(x, w, bias));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <Tensor2D (*F)(const Tensor2D&, const Tensor2D&)>
void BM_MatmulTn(benchmark::State& state) {
  const auto a = random_tensor(state.range(0), state.range(1), 3);
  const auto d = random_tensor(state.range(0), state.range(2), 4);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, d));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <Tensor2D (*F)(const Tensor2D&, const Tensor2D&)>
void BM_MatmulNt(benchmark::State& state) {
  const auto d = random_tensor(state.range(0), state.range(2), 5);
  const auto w = random_tensor(state.range(1), state.range(2), 6);
  for (auto _ : state) benchmark::DoNotOptimize(F(d, w));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <kernels::ColumnMoments (*F)(const Tensor2D&)>
void BM_ColumnMoments(benchmark::State& state) {
  const auto x = random_tensor(state.range(0), state.range(2), 7);
  for (auto _ : state) benchmark::DoNotOptimize(F(x));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(2));
}

template <Tensor2D (*F)(const Tensor2D&, std::span<const double>, std::span<const double>, std::span<const double>,
                        std::span<const double>, double)>
void BM_AffineNormalize(benchmark::State& state) {
  const auto x = random_tensor(state.range(0), state.range(2), 8);
  const std::vector<double> mean(state.range(2), 0.1), var(state.range(2), 0.9), scale(state.range(2), 1.2),
      shift(state.range(2), -0.3);
  for (auto _ : state) benchmark::DoNotOptimize(F(x, mean, var, scale, shift, 1e-5));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(2));
}

BENCHMARK(BM_DenseForward<kernels::serial::dense_forward>)->Name("dense_forward/serial")->Apply(shapes);
BENCHMARK(BM_DenseForward<kernels::parallel::dense_forward>)->Name("dense_forward/parallel")->Apply(shapes);
BENCHMARK(BM_MatmulTn<kernels::serial::matmul_tn>)->Name("matmul_tn/serial")->Apply(shapes);
BENCHMARK(BM_MatmulTn<kernels::parallel::matmul_tn>)->Name("matmul_tn/parallel")->Apply(shapes);
BENCHMARK(BM_MatmulNt<kernels::serial::matmul_nt>)->Name("matmul_nt/serial")->Apply(shapes);
BENCHMARK(BM_MatmulNt<kernels::parallel::matmul_nt>)->Name("matmul_nt/parallel")->Apply(shapes);
BENCHMARK(BM_ColumnMoments<kernels::serial::column_moments>)->Name("column_moments/serial")->Apply(shapes);
BENCHMARK(BM_ColumnMoments<kernels::parallel::column_moments>)->Name("column_moments/parallel")->Apply(shapes);
BENCHMARK(BM_AffineNormalize<kernels::serial::affine_normalize>)->Name("affine_normalize/serial")->Apply(shapes);
BENCHMARK(BM_AffineNormalize<kernels::parallel::affine_normalize>)->Name("affine_normalize/parallel")->Apply(shapes);

}  // namespace

BENCHMARK_MAIN();
