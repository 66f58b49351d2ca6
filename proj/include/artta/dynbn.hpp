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

#include "artta/errors.hpp"
#include "artta/tensor.hpp"

namespace artta {

/// Per-channel normalization statistics. `var` holds variances, not
/// standard deviations, everywhere in this library.
struct BNStats {
  std::vector<double> mean;
  std::vector<double> var;

  BNStats() = default;
  BNStats(std::vector<double> m, std::vector<double> v);
  static BNStats standard(std::size_t channels);  // mean 0, var 1

  std::size_t channels() const { return mean.size(); }
  bool operator==(const BNStats&) const = default;
};

struct DynBNConfig {
  double gamma = 10.0;      // scale of the drift distance
  double alpha = 0.2;       // EMA weight of the newest beta
  double beta_init = 0.1;   // beta_ema before the first batch
  double eps = 1e-5;        // variance floor

  bool operator==(const DynBNConfig&) const = default;
};

/// One batch worth of drift bookkeeping for a single BN layer.
struct BetaUpdate {
  double distance = 0.0;  // symmetric KL between last and current stats
  double beta_t = 0.0;
  double beta_ema = 0.0;
};

/// State of one dynamically normalized layer. The source statistics are
/// fixed at construction; only `last_stats` and `beta_ema` evolve.
class DynBNState {
 public:
  DynBNState(BNStats source, DynBNConfig config = {});

  const BNStats& source_stats() const { return source_; }
  const BNStats& last_stats() const { return last_; }
  double beta_ema() const { return beta_ema_; }
  const DynBNConfig& config() const { return config_; }
  std::size_t channels() const { return source_.channels(); }

  // Mutators used by beta_step / interpolate.
  void set_beta_ema(double b);
  void set_last_stats(BNStats s);

 private:
  BNStats source_;
  BNStats last_;
  double beta_ema_;
  DynBNConfig config_;
};

/// Per-channel mean and population variance of a batch. A single-row
/// batch has no variance estimate: var is set to 0 and the degenerate
/// counter in `warn` is bumped.
BNStats batch_stats(const Tensor2D& x, Warnings* warn = nullptr);

double gaussian_kl(double mean1, double var1, double mean2, double var2);

/// Channel-averaged two-way Gaussian KL divergence. Variances below `eps`
/// are floored at `eps`; nonpositive ones are counted in `warn`.
double symmetric_kl(const BNStats& a, const BNStats& b, double eps = 1e-5,
                    Warnings* warn = nullptr);

/// beta_t = 1 - exp(-gamma * D(last, current));
/// beta_ema <- (1 - alpha) * beta_ema + alpha * beta_t.
BetaUpdate beta_step(DynBNState& state, const BNStats& current, Warnings* warn = nullptr);

/// (1 - beta_ema) * source + beta_ema * current on mean and var. The result
/// becomes the state's last_stats.
BNStats interpolate(DynBNState& state, const BNStats& current);

/// Stateless blend used by interpolate.
BNStats blend(const BNStats& source, const BNStats& current, double beta);

/// y = scale * (x - mean) / sqrt(var + eps) + shift per channel.
Tensor2D normalize(const Tensor2D& x, const BNStats& stats, std::span<const double> scale,
                   std::span<const double> shift, double eps);

}  // namespace artta
