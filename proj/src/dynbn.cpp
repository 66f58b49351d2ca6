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

#include "artta/dynbn.hpp"

#include <algorithm>
#include <cmath>

#include "artta/kernels.hpp"

namespace artta {

BNStats::BNStats(std::vector<double> m, std::vector<double> v) : mean(std::move(m)), var(std::move(v)) {
  if (mean.size() != var.size()) throw ConfigError("BNStats: mean/var channel counts differ");
}

BNStats BNStats::standard(std::size_t channels) {
  return BNStats(std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0));
}

DynBNState::DynBNState(BNStats source, DynBNConfig config)
    : source_(std::move(source)), last_(source_), beta_ema_(config.beta_init), config_(config) {
  if (!(config_.beta_init >= 0.0 && config_.beta_init <= 1.0)) {
    throw ConfigError("dynbn: beta_init must lie in [0,1]");
  }
  if (!(config_.alpha >= 0.0 && config_.alpha <= 1.0)) {
    throw ConfigError("dynbn: alpha must lie in [0,1]");
  }
  if (!(config_.gamma >= 0.0)) throw ConfigError("dynbn: gamma must be nonnegative");
  if (!(config_.eps >= 0.0)) throw ConfigError("dynbn: eps must be nonnegative");
  for (double v : source_.var) {
    if (!(v >= 0.0)) throw ConfigError("dynbn: source variance must be nonnegative");
  }
}

void DynBNState::set_beta_ema(double b) { beta_ema_ = std::clamp(b, 0.0, 1.0); }

void DynBNState::set_last_stats(BNStats s) {
  if (s.channels() != channels()) throw ConfigError("dynbn: channel count mismatch");
  last_ = std::move(s);
}

BNStats batch_stats(const Tensor2D& x, Warnings* warn) {
  if (x.rows() == 0) throw ConfigError("batch_stats: empty batch");
  auto m = kernels::column_moments(x);
  if (x.rows() == 1) {
    std::fill(m.var.begin(), m.var.end(), 0.0);
    if (warn) ++warn->degenerate_batch;
  }
  return BNStats(std::move(m.mean), std::move(m.var));
}

double gaussian_kl(double mean1, double var1, double mean2, double var2) {
  // KL(N(m1, v1) || N(m2, v2)) = ln(s2/s1) + (v1 + (m1-m2)^2) / (2 v2) - 1/2
  const double d = mean1 - mean2;
  return 0.5 * std::log(var2 / var1) + (var1 + d * d) / (2.0 * var2) - 0.5;
}

double symmetric_kl(const BNStats& a, const BNStats& b, double eps, Warnings* warn) {
  if (a.channels() != b.channels()) throw ConfigError("symmetric_kl: channel count mismatch");
  if (a.channels() == 0) return 0.0;
  auto floor_var = [&](double v) {
    if (v <= 0.0 && warn) ++warn->var_clamped;
    return std::max(v, eps);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < a.channels(); ++i) {
    const double va = floor_var(a.var[i]);
    const double vb = floor_var(b.var[i]);
    total += gaussian_kl(a.mean[i], va, b.mean[i], vb) + gaussian_kl(b.mean[i], vb, a.mean[i], va);
  }
  // Rounding can leave a tiny negative residue for identical inputs.
  return std::max(0.0, total / static_cast<double>(a.channels()));
}

BetaUpdate beta_step(DynBNState& state, const BNStats& current, Warnings* warn) {
  const auto& cfg = state.config();
  BetaUpdate u;
  u.distance = symmetric_kl(state.last_stats(), current, cfg.eps, warn);
  u.beta_t = 1.0 - std::exp(-cfg.gamma * u.distance);
  u.beta_ema = (1.0 - cfg.alpha) * state.beta_ema() + cfg.alpha * u.beta_t;
  state.set_beta_ema(u.beta_ema);
  return u;
}

BNStats blend(const BNStats& source, const BNStats& current, double beta) {
  if (source.channels() != current.channels()) throw ConfigError("interpolate: channel count mismatch");
  if (beta == 0.0) return source;
  if (beta == 1.0) return current;
  BNStats out = source;
  for (std::size_t i = 0; i < out.channels(); ++i) {
    out.mean[i] = (1.0 - beta) * source.mean[i] + beta * current.mean[i];
    out.var[i] = (1.0 - beta) * source.var[i] + beta * current.var[i];
  }
  return out;
}

BNStats interpolate(DynBNState& state, const BNStats& current) {
  BNStats out = blend(state.source_stats(), current, state.beta_ema());
  state.set_last_stats(out);
  return out;
}

Tensor2D normalize(const Tensor2D& x, const BNStats& stats, std::span<const double> scale,
                   std::span<const double> shift, double eps) {
  return kernels::affine_normalize(x, stats.mean, stats.var, scale, shift, eps);
}

}  // namespace artta
