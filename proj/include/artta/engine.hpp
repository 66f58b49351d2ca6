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

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "artta/dynbn.hpp"
#include "artta/micronet.hpp"
#include "artta/replay.hpp"
#include "artta/rng.hpp"

namespace artta {

enum class Method { ar_tta, ar_tta_no_replay, source_frozen, bn_stats_adapt, entropy_min };

Method parse_method(const std::string& s);
std::string to_string(Method m);

// Statistics the AR-TTA teacher and student normalize with. `dynamic` is
// the method proper; the other two exist for component ablations.
enum class BnStatsMode { dynamic, batch, source };
BnStatsMode parse_bn_stats_mode(const std::string& s);
std::string to_string(BnStatsMode m);

// How exemplars enter the student batch: interpolated with the test batch
// (mixup) or appended to it as extra rows (concat).
enum class ReplayMode { mixup, concat };
ReplayMode parse_replay_mode(const std::string& s);
std::string to_string(ReplayMode m);

struct EngineConfig {
  double lr = 0.001;
  double momentum = 0.9;
  double teacher_alpha = 0.999;
  TrainScope scope = TrainScope::whole_model();
  DynBNConfig dynbn;
  MixupParams mixup;
  bool per_sample_lambda = false;
  BnStatsMode bn_stats = BnStatsMode::dynamic;
  ReplayMode replay = ReplayMode::mixup;

  void validate() const;
  bool operator==(const EngineConfig&) const = default;
};

/// Pretrained weights plus the BN statistics recorded on clean data.
struct SourceModel {
  ModelParams params;
  std::vector<BNStats> stats;  // one per BN layer
};

enum class StepPhase { statistics, predict, replay, student_update, teacher_update };

struct StepResult {
  std::vector<std::size_t> predictions;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();  // mean lambda when drawn per row
  std::vector<double> beta_ema;                               // per BN layer, dynamic stats only
  std::vector<BetaUpdate> drift;
};

struct AdaptationState {
  Method method = Method::ar_tta;
  EngineConfig config;
  ModelParams student;
  ModelParams teacher;
  SgdState sgd;
  std::vector<DynBNState> bn_layers;
  ExemplarBuffer buffer;
  Rng exemplar_rng;
  Rng lambda_rng;
  Warnings warnings;
  // Called at each phase boundary of a step, in order.
  std::function<void(StepPhase)> observer;

  void notify(StepPhase p) const {
    if (observer) observer(p);
  }
};

/// Fresh state: student = teacher = source weights, BN layers seeded with
/// the source statistics, and exemplar / lambda streams derived from `seed`.
AdaptationState make_state(Method method, const EngineConfig& config, const SourceModel& source,
                           ExemplarBuffer buffer, std::uint64_t seed);

/// teacher <- alpha * teacher + (1 - alpha) * student, elementwise.
void teacher_ema(ModelParams& teacher, const ModelParams& student, double alpha);

/// One AR-TTA iteration on a test batch. Predictions come from the teacher
/// before any update made during this step.
StepResult adapt_step(AdaptationState& state, const Tensor2D& x);

/// One step of a comparison method (anything but the AR-TTA variants).
StepResult baseline_step(AdaptationState& state, const Tensor2D& x);

/// Dispatches on state.method.
StepResult step(AdaptationState& state, const Tensor2D& x);

}  // namespace artta
