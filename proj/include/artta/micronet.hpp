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
#include <string>
#include <vector>

#include "artta/container.hpp"
#include "artta/dynbn.hpp"
#include "artta/errors.hpp"
#include "artta/rng.hpp"
#include "artta/tensor.hpp"

// Minimal MLP: [dense -> (BN) -> ReLU]* -> dense -> softmax, with exact
// manual backpropagation and SGD with momentum.
namespace artta {

struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
  std::vector<bool> bn_after;            // one flag per hidden layer

  void validate() const;
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
  std::size_t dense_count() const { return layer_sizes.size() - 1; }
  std::size_t bn_count() const;
  // BN ordinal following dense layer `layer`, or -1.
  int bn_slot(std::size_t layer) const;

  bool operator==(const NetworkSpec&) const = default;
};

struct DenseParams {
  Tensor2D weight;  // fan_in x fan_out
  std::vector<double> bias;
  bool operator==(const DenseParams&) const = default;
};

struct BnAffine {
  std::vector<double> scale;
  std::vector<double> shift;
  bool operator==(const BnAffine&) const = default;
};

enum class ParamKind { weight, bias, bn_scale, bn_shift };

struct ParamSlot {
  ParamKind kind;
  std::size_t layer;  // owning dense layer; BN affine belongs to the layer it follows
};

/// Trainable parameters. Also used, shape for shape, for gradients and
/// momentum buffers.
struct ModelParams {
  NetworkSpec spec;
  std::vector<DenseParams> dense;
  std::vector<BnAffine> bn;  // one per BN layer, network order

  // All-zero parameters (including BN scale).
  static ModelParams zeros(const NetworkSpec& spec);
  // He-normal weights, zero biases, unit BN scale, zero BN shift.
  static ModelParams initialize(const NetworkSpec& spec, Rng& rng);

  // Canonical parameter order: per layer weight, bias, then BN scale/shift.
  std::vector<ParamSlot> layout() const;
  std::vector<std::span<double>> arrays();
  std::vector<std::span<const double>> arrays() const;
  std::size_t parameter_count() const;
  bool same_shape(const ModelParams& other) const;

  bool operator==(const ModelParams&) const = default;
};

std::string param_name(const ParamSlot& slot);

/// Which parameters an optimizer step may touch.
struct TrainScope {
  enum class Kind { whole_model, bn_affine_only, layer_subset };

  Kind kind = Kind::whole_model;
  std::vector<std::size_t> layers;  // layer_subset only
  bool affine_only = false;         // layer_subset: only BN affine of those layers

  static TrainScope whole_model() { return {}; }
  static TrainScope bn_affine_only() { return {Kind::bn_affine_only, {}, true}; }
  static TrainScope layer_subset(std::vector<std::size_t> layers, bool affine_only = false) {
    return {Kind::layer_subset, std::move(layers), affine_only};
  }

  bool contains(const ParamSlot& slot) const;

  // "whole_model", "bn_affine_only", "layers:0,2", "bn_affine_layers:0,2"
  std::string to_string() const;
  static TrainScope parse(const std::string& text);

  bool operator==(const TrainScope&) const = default;
};

struct SgdState {
  double learning_rate = 0.001;
  double momentum = 0.9;
  ModelParams velocity;

  SgdState() = default;
  SgdState(const ModelParams& like, double lr, double momentum);
};

enum class Mode { adapt, eval };

/// Where a BN layer takes its normalization statistics from.
enum class StatsSource {
  source,  // frozen source statistics
  batch,   // statistics of the incoming batch (falls back to source for 1-row batches)
  fixed,   // caller-supplied per-layer statistics
};

struct StatsPlan {
  StatsSource source = StatsSource::source;
  std::span<const BNStats> fixed = {};
};

struct LayerCache {
  Tensor2D input;    // dense layer input
  Tensor2D pre_bn;   // input * W + b
  Tensor2D pre_act;  // after BN (if any), before ReLU
  BNStats batch;     // moments of pre_bn
  BNStats used;      // statistics the BN layer normalized with
  double batch_weight = 0.0;  // d(used)/d(batch): 0 fixed, 1 batch, beta for dynamic
  double eps = 0.0;
};

/// Activations recorded by an adapt-mode forward. Holds its own copy of the
/// parameters so backward has no lifetime coupling to the caller.
struct ForwardCache {
  Mode mode = Mode::eval;
  ModelParams params;
  std::vector<LayerCache> layers;
  Tensor2D probs;
};

struct ForwardResult {
  Tensor2D probs;
  ForwardCache cache;                 // populated only in adapt mode
  std::vector<BNStats> used_stats;    // per BN layer
  std::vector<BetaUpdate> drift;      // per BN layer, dynamic forward only
};

Tensor2D softmax(const Tensor2D& logits);

/// Forward pass with statistics chosen by `plan`. `bn` supplies source
/// statistics and eps for every BN layer and is not modified.
ForwardResult forward(const ModelParams& params, std::span<const DynBNState> bn, const Tensor2D& x,
                      Mode mode, const StatsPlan& plan = {}, Warnings* warn = nullptr);

/// Forward pass where each BN layer measures drift on its incoming
/// activations, updates beta_ema and normalizes with the interpolated
/// statistics. Mutates `bn`.
ForwardResult forward_dynamic(const ModelParams& params, std::span<DynBNState> bn, const Tensor2D& x,
                              Mode mode, Warnings* warn = nullptr);

struct LossValue {
  double value = 0.0;
  std::size_t clamped = 0;
};

/// -(1/N) sum_rows sum_c target_c * log(max(prob_c, 1e-12)).
LossValue soft_cross_entropy(const Tensor2D& probs, const Tensor2D& targets, Warnings* warn = nullptr);

/// Mean over rows of -sum_c p_c log p_c.
double mean_entropy(const Tensor2D& probs);

/// d(mean_entropy)/d(logits).
Tensor2D entropy_logit_grad(const Tensor2D& probs);

/// Gradient of soft_cross_entropy(cache.probs, targets) w.r.t. every parameter.
ModelParams backward(const ForwardCache& cache, const Tensor2D& targets);

/// Backpropagates an arbitrary upstream gradient on the logits.
ModelParams backward_logits(const ForwardCache& cache, const Tensor2D& dlogits);

/// v <- momentum * v + g; p <- p - lr * v, for parameters in scope only.
void sgd_step(ModelParams& params, const ModelParams& grads, SgdState& state, const TrainScope& scope);

std::vector<std::size_t> argmax_rows(const Tensor2D& probs);

Container params_to_container(const ModelParams& params);
ModelParams params_from_container(const Container& c);

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

}  // namespace artta
