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

#include "artta/engine.hpp"

#include <algorithm>

namespace artta {
namespace {

Tensor2D stack_rows(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.cols()) throw ConfigError("stack_rows: column mismatch");
  Tensor2D out(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<long>(a.size()));
  return out;
}

std::vector<double> beta_snapshot(const std::vector<DynBNState>& layers) {
  std::vector<double> out;
  out.reserve(layers.size());
  for (const auto& s : layers) out.push_back(s.beta_ema());
  return out;
}

}  // namespace

Method parse_method(const std::string& s) {
  if (s == "ar_tta") return Method::ar_tta;
  if (s == "ar_tta_no_replay") return Method::ar_tta_no_replay;
  if (s == "source_frozen") return Method::source_frozen;
  if (s == "bn_stats_adapt") return Method::bn_stats_adapt;
  if (s == "entropy_min") return Method::entropy_min;
  throw ConfigError("unknown method '" + s + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ar_tta: return "ar_tta";
    case Method::ar_tta_no_replay: return "ar_tta_no_replay";
    case Method::source_frozen: return "source_frozen";
    case Method::bn_stats_adapt: return "bn_stats_adapt";
    case Method::entropy_min: return "entropy_min";
  }
  return "?";
}

BnStatsMode parse_bn_stats_mode(const std::string& s) {
  if (s == "dynamic") return BnStatsMode::dynamic;
  if (s == "batch") return BnStatsMode::batch;
  if (s == "source") return BnStatsMode::source;
  throw ConfigError("unknown bn stats mode '" + s + "'");
}

std::string to_string(BnStatsMode m) {
  switch (m) {
    case BnStatsMode::dynamic: return "dynamic";
    case BnStatsMode::batch: return "batch";
    case BnStatsMode::source: return "source";
  }
  return "?";
}

ReplayMode parse_replay_mode(const std::string& s) {
  if (s == "mixup") return ReplayMode::mixup;
  if (s == "concat") return ReplayMode::concat;
  throw ConfigError("unknown replay mode '" + s + "'");
}

std::string to_string(ReplayMode m) { return m == ReplayMode::mixup ? "mixup" : "concat"; }

void EngineConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("adapt.lr must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("adapt.momentum must lie in [0,1)");
  if (!(teacher_alpha >= 0.0 && teacher_alpha <= 1.0)) throw ConfigError("adapt.teacher_alpha must lie in [0,1]");
  mixup.validate();
}

AdaptationState make_state(Method method, const EngineConfig& config, const SourceModel& source,
                           ExemplarBuffer buffer, std::uint64_t seed) {
  config.validate();
  if (source.stats.size() != source.params.spec.bn_count()) {
    throw ConfigError("source model: need one statistics entry per BN layer");
  }
  AdaptationState s;
  s.method = method;
  s.config = config;
  s.student = source.params;
  s.teacher = source.params;
  s.sgd = SgdState(source.params, config.lr, config.momentum);
  for (const auto& st : source.stats) s.bn_layers.emplace_back(st, config.dynbn);
  if (!buffer.empty() && buffer.feature_count() != source.params.spec.input_size()) {
    throw ConfigError("exemplar buffer feature count does not match the network input");
  }
  s.buffer = std::move(buffer);
  s.exemplar_rng = make_rng(seed, streams::kExemplars);
  s.lambda_rng = make_rng(seed, streams::kLambda);
  return s;
}

void teacher_ema(ModelParams& teacher, const ModelParams& student, double alpha) {
  if (!teacher.same_shape(student)) throw ConfigError("teacher_ema: shape mismatch");
  if (alpha == 1.0) return;
  if (alpha == 0.0) {
    teacher = student;
    return;
  }
  auto t = teacher.arrays();
  const auto s = student.arrays();
  for (std::size_t a = 0; a < t.size(); ++a) {
    for (std::size_t i = 0; i < t[a].size(); ++i) t[a][i] = alpha * t[a][i] + (1.0 - alpha) * s[a][i];
  }
}

StepResult adapt_step(AdaptationState& state, const Tensor2D& x) {
  if (state.method != Method::ar_tta && state.method != Method::ar_tta_no_replay) {
    throw UsageError("adapt_step called for a baseline method");
  }
  const auto& cfg = state.config;
  StepResult r;

  // (1)+(2): statistics and teacher pseudo-labels on the raw test batch.
  state.notify(StepPhase::statistics);
  ForwardResult teacher_out;
  switch (cfg.bn_stats) {
    case BnStatsMode::dynamic:
      teacher_out = forward_dynamic(state.teacher, state.bn_layers, x, Mode::eval, &state.warnings);
      r.beta_ema = beta_snapshot(state.bn_layers);
      r.drift = teacher_out.drift;
      break;
    case BnStatsMode::batch:
      teacher_out = forward(state.teacher, state.bn_layers, x, Mode::eval, {StatsSource::batch}, &state.warnings);
      break;
    case BnStatsMode::source:
      teacher_out = forward(state.teacher, state.bn_layers, x, Mode::eval, {StatsSource::source}, &state.warnings);
      break;
  }
  r.predictions = argmax_rows(teacher_out.probs);
  state.notify(StepPhase::predict);

  // (3) replay.
  Tensor2D x_train = x;
  Tensor2D y_train = teacher_out.probs;
  if (state.method == Method::ar_tta) {
    if (auto ex = sample_exemplars(state.buffer, x.rows(), state.exemplar_rng)) {
      if (cfg.replay == ReplayMode::concat) {
        x_train = stack_rows(x, ex->x);
        y_train = stack_rows(teacher_out.probs, ex->y);
      } else if (cfg.per_sample_lambda) {
        std::vector<double> lambdas(x.rows());
        double sum = 0.0;
        for (auto& l : lambdas) {
          l = sample_lambda(cfg.mixup, state.lambda_rng);
          sum += l;
        }
        auto mixed = mixup_rows(x, teacher_out.probs, ex->x, ex->y, lambdas);
        x_train = std::move(mixed.x);
        y_train = std::move(mixed.y);
        r.lambda = sum / static_cast<double>(lambdas.size());
      } else {
        r.lambda = sample_lambda(cfg.mixup, state.lambda_rng);
        auto mixed = mixup(x, teacher_out.probs, ex->x, ex->y, r.lambda);
        x_train = std::move(mixed.x);
        y_train = std::move(mixed.y);
      }
    }
  }
  state.notify(StepPhase::replay);

  // (4) student update with the statistics chosen in (1).
  StatsPlan plan;
  if (cfg.bn_stats == BnStatsMode::batch) {
    plan.source = StatsSource::batch;
  } else {
    plan.source = StatsSource::fixed;
    plan.fixed = teacher_out.used_stats;
  }
  auto student_out = forward(state.student, state.bn_layers, x_train, Mode::adapt, plan, &state.warnings);
  r.loss = soft_cross_entropy(student_out.probs, y_train, &state.warnings).value;
  const auto grads = backward(student_out.cache, y_train);
  sgd_step(state.student, grads, state.sgd, cfg.scope);
  state.notify(StepPhase::student_update);

  // (5) teacher follows the student.
  teacher_ema(state.teacher, state.student, cfg.teacher_alpha);
  state.notify(StepPhase::teacher_update);
  return r;
}

StepResult baseline_step(AdaptationState& state, const Tensor2D& x) {
  StepResult r;
  state.notify(StepPhase::statistics);
  switch (state.method) {
    case Method::source_frozen: {
      auto out = forward(state.teacher, state.bn_layers, x, Mode::eval, {StatsSource::source}, &state.warnings);
      r.predictions = argmax_rows(out.probs);
      state.notify(StepPhase::predict);
      break;
    }
    case Method::bn_stats_adapt: {
      auto out = forward(state.teacher, state.bn_layers, x, Mode::eval, {StatsSource::batch}, &state.warnings);
      r.predictions = argmax_rows(out.probs);
      state.notify(StepPhase::predict);
      break;
    }
    case Method::entropy_min: {
      auto out = forward(state.student, state.bn_layers, x, Mode::adapt, {StatsSource::batch}, &state.warnings);
      r.predictions = argmax_rows(out.probs);
      state.notify(StepPhase::predict);
      r.loss = mean_entropy(out.probs);
      const auto grads = backward_logits(out.cache, entropy_logit_grad(out.probs));
      sgd_step(state.student, grads, state.sgd, TrainScope::bn_affine_only());
      state.notify(StepPhase::student_update);
      break;
    }
    case Method::ar_tta:
    case Method::ar_tta_no_replay:
      throw UsageError("baseline_step called for an AR-TTA method");
  }
  return r;
}

StepResult step(AdaptationState& state, const Tensor2D& x) {
  if (state.method == Method::ar_tta || state.method == Method::ar_tta_no_replay) return adapt_step(state, x);
  return baseline_step(state, x);
}

}  // namespace artta
