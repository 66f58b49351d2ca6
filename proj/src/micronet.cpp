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

#include "artta/micronet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "artta/kernels.hpp"

namespace artta {
namespace {

constexpr double kLogFloor = 1e-12;

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw ConfigError("");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad layer index '" + item + "'");
    }
  }
  return out;
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

void relu_inplace(Tensor2D& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

void check_bn(const ModelParams& params, std::span<const DynBNState> bn) {
  if (bn.size() != params.spec.bn_count()) {
    throw ConfigError("forward: expected " + std::to_string(params.spec.bn_count()) +
                      " BN states, got " + std::to_string(bn.size()));
  }
  for (std::size_t l = 0, k = 0; l + 1 < params.spec.dense_count(); ++l) {
    if (params.spec.bn_slot(l) < 0) continue;
    if (bn[k].channels() != params.spec.layer_sizes[l + 1]) {
      throw ConfigError("forward: BN state channel count mismatch");
    }
    ++k;
  }
}

struct Resolved {
  BNStats stats;
  double batch_weight;
};

// Shared forward body. `resolve(bn_index, batch_stats, degenerate)` picks
// the statistics each BN layer normalizes with.
template <class Resolve>
ForwardResult run_forward(const ModelParams& params, std::span<const double> bn_eps, const Tensor2D& x,
                          Mode mode, Warnings* warn, Resolve&& resolve) {
  const auto& spec = params.spec;
  if (x.cols() != spec.input_size()) {
    throw ConfigError("forward: input has " + std::to_string(x.cols()) + " features, network expects " +
                      std::to_string(spec.input_size()));
  }
  if (x.rows() == 0) throw ConfigError("forward: empty batch");

  ForwardResult result;
  result.cache.mode = mode;
  if (mode == Mode::adapt) {
    result.cache.params = params;
    result.cache.layers.resize(spec.dense_count());
  }

  Tensor2D act = x;
  const std::size_t last = spec.dense_count() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    const auto& layer = params.dense[l];
    Tensor2D z = kernels::dense_forward(act, layer.weight, layer.bias);
    if (l == last) {
      if (mode == Mode::adapt) result.cache.layers[l].input = std::move(act);
      act = std::move(z);
      break;
    }
    Tensor2D pre_act;
    const int slot = spec.bn_slot(l);
    BNStats moments;
    Resolved chosen{{}, 0.0};
    if (slot >= 0) {
      const auto k = static_cast<std::size_t>(slot);
      Warnings local;
      moments = batch_stats(z, &local);
      const bool degenerate = local.degenerate_batch > 0;
      if (warn) *warn += local;
      chosen = resolve(k, moments, degenerate);
      pre_act = normalize(z, chosen.stats, params.bn[k].scale, params.bn[k].shift, bn_eps[k]);
      result.used_stats.push_back(chosen.stats);
    } else {
      pre_act = z;
    }
    Tensor2D out = pre_act;
    relu_inplace(out);
    if (mode == Mode::adapt) {
      auto& c = result.cache.layers[l];
      c.input = std::move(act);
      c.pre_bn = std::move(z);
      c.pre_act = std::move(pre_act);
      if (slot >= 0) {
        c.batch = std::move(moments);
        c.used = std::move(chosen.stats);
        c.batch_weight = chosen.batch_weight;
        c.eps = bn_eps[static_cast<std::size_t>(slot)];
      }
    }
    act = std::move(out);
  }
  result.probs = softmax(act);
  if (mode == Mode::adapt) result.cache.probs = result.probs;
  return result;
}

std::vector<double> eps_of(std::span<const DynBNState> bn) {
  std::vector<double> eps;
  eps.reserve(bn.size());
  for (const auto& s : bn) eps.push_back(s.config().eps);
  return eps;
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkSpec / ModelParams

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 3) throw ConfigError("network: need input, >=1 hidden and output sizes");
  for (auto s : layer_sizes) {
    if (s == 0) throw ConfigError("network: layer sizes must be positive");
  }
  if (bn_after.size() != layer_sizes.size() - 2) {
    throw ConfigError("network: bn_after needs one flag per hidden layer");
  }
}

std::size_t NetworkSpec::bn_count() const {
  return static_cast<std::size_t>(std::count(bn_after.begin(), bn_after.end(), true));
}

int NetworkSpec::bn_slot(std::size_t layer) const {
  if (layer >= bn_after.size() || !bn_after[layer]) return -1;
  return static_cast<int>(std::count(bn_after.begin(), bn_after.begin() + static_cast<long>(layer), true));
}

ModelParams ModelParams::zeros(const NetworkSpec& spec) {
  spec.validate();
  ModelParams p;
  p.spec = spec;
  for (std::size_t l = 0; l < spec.dense_count(); ++l) {
    const auto in = spec.layer_sizes[l], out = spec.layer_sizes[l + 1];
    p.dense.push_back({Tensor2D(in, out), std::vector<double>(out, 0.0)});
    if (spec.bn_slot(l) >= 0) {
      p.bn.push_back({std::vector<double>(out, 0.0), std::vector<double>(out, 0.0)});
    }
  }
  return p;
}

ModelParams ModelParams::initialize(const NetworkSpec& spec, Rng& rng) {
  ModelParams p = zeros(spec);
  for (std::size_t l = 0; l < spec.dense_count(); ++l) {
    const double fan_in = static_cast<double>(spec.layer_sizes[l]);
    const bool output = l + 1 == spec.dense_count();
    std::normal_distribution<double> dist(0.0, std::sqrt((output ? 1.0 : 2.0) / fan_in));
    for (double& w : p.dense[l].weight.values()) w = dist(rng);
  }
  for (auto& a : p.bn) std::fill(a.scale.begin(), a.scale.end(), 1.0);
  return p;
}

std::vector<ParamSlot> ModelParams::layout() const {
  std::vector<ParamSlot> slots;
  for (std::size_t l = 0; l < dense.size(); ++l) {
    slots.push_back({ParamKind::weight, l});
    slots.push_back({ParamKind::bias, l});
    if (spec.bn_slot(l) >= 0) {
      slots.push_back({ParamKind::bn_scale, l});
      slots.push_back({ParamKind::bn_shift, l});
    }
  }
  return slots;
}

std::vector<std::span<double>> ModelParams::arrays() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < dense.size(); ++l) {
    out.emplace_back(dense[l].weight.values());
    out.emplace_back(dense[l].bias);
    const int k = spec.bn_slot(l);
    if (k >= 0) {
      out.emplace_back(bn[static_cast<std::size_t>(k)].scale);
      out.emplace_back(bn[static_cast<std::size_t>(k)].shift);
    }
  }
  return out;
}

std::vector<std::span<const double>> ModelParams::arrays() const {
  auto mut = const_cast<ModelParams*>(this)->arrays();
  return {mut.begin(), mut.end()};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (auto a : arrays()) n += a.size();
  return n;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  if (spec != other.spec) return false;
  const auto a = arrays(), b = other.arrays();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
  }
  return true;
}

std::string param_name(const ParamSlot& slot) {
  const std::string prefix = "layer" + std::to_string(slot.layer) + ".";
  switch (slot.kind) {
    case ParamKind::weight: return prefix + "weight";
    case ParamKind::bias: return prefix + "bias";
    case ParamKind::bn_scale: return prefix + "bn_scale";
    case ParamKind::bn_shift: return prefix + "bn_shift";
  }
  return prefix;
}

// ---------------------------------------------------------------------------
// TrainScope / SGD

bool TrainScope::contains(const ParamSlot& slot) const {
  const bool affine = slot.kind == ParamKind::bn_scale || slot.kind == ParamKind::bn_shift;
  switch (kind) {
    case Kind::whole_model: return true;
    case Kind::bn_affine_only: return affine;
    case Kind::layer_subset:
      if (affine_only && !affine) return false;
      return std::find(layers.begin(), layers.end(), slot.layer) != layers.end();
  }
  return false;
}

std::string TrainScope::to_string() const {
  switch (kind) {
    case Kind::whole_model: return "whole_model";
    case Kind::bn_affine_only: return "bn_affine_only";
    case Kind::layer_subset: return (affine_only ? "bn_affine_layers:" : "layers:") + join_indices(layers);
  }
  return "";
}

TrainScope TrainScope::parse(const std::string& text) {
  if (text == "whole_model") return whole_model();
  if (text == "bn_affine_only") return bn_affine_only();
  for (const auto& [prefix, affine] : {std::pair{"layers:", false}, std::pair{"bn_affine_layers:", true}}) {
    const std::string p = prefix;
    if (text.rfind(p, 0) == 0) {
      auto layers = parse_index_list(text.substr(p.size()));
      if (layers.empty()) throw ConfigError("scope '" + text + "' lists no layers");
      return layer_subset(std::move(layers), affine);
    }
  }
  throw ConfigError("unknown train scope '" + text + "'");
}

SgdState::SgdState(const ModelParams& like, double lr, double m)
    : learning_rate(lr), momentum(m), velocity(ModelParams::zeros(like.spec)) {
  if (!(lr >= 0.0)) throw ConfigError("sgd: learning rate must be nonnegative");
  if (!(m >= 0.0 && m < 1.0)) throw ConfigError("sgd: momentum must lie in [0,1)");
}

void sgd_step(ModelParams& params, const ModelParams& grads, SgdState& state, const TrainScope& scope) {
  if (!params.same_shape(grads) || !params.same_shape(state.velocity)) {
    throw ConfigError("sgd_step: shape mismatch");
  }
  const auto slots = params.layout();
  auto p = params.arrays();
  auto v = state.velocity.arrays();
  const auto g = grads.arrays();
  for (std::size_t a = 0; a < slots.size(); ++a) {
    if (!scope.contains(slots[a])) continue;
    for (std::size_t i = 0; i < p[a].size(); ++i) {
      v[a][i] = state.momentum * v[a][i] + g[a][i];
      p[a][i] -= state.learning_rate * v[a][i];
    }
  }
}

// ---------------------------------------------------------------------------
// Forward

Tensor2D softmax(const Tensor2D& logits) {
  Tensor2D out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    auto dst = out.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      dst[c] = std::exp(row[c] - mx);
      sum += dst[c];
    }
    for (double& v : dst) v /= sum;
  }
  return out;
}

ForwardResult forward(const ModelParams& params, std::span<const DynBNState> bn, const Tensor2D& x,
                      Mode mode, const StatsPlan& plan, Warnings* warn) {
  check_bn(params, bn);
  if (plan.source == StatsSource::fixed && plan.fixed.size() != bn.size()) {
    throw ConfigError("forward: fixed statistics need one entry per BN layer");
  }
  const auto eps = eps_of(bn);
  return run_forward(params, eps, x, mode, warn,
                     [&](std::size_t k, const BNStats& moments, bool degenerate) -> Resolved {
                       switch (plan.source) {
                         case StatsSource::source: return {bn[k].source_stats(), 0.0};
                         case StatsSource::batch:
                           if (degenerate) return {bn[k].source_stats(), 0.0};
                           return {moments, 1.0};
                         case StatsSource::fixed:
                           if (plan.fixed[k].channels() != bn[k].channels()) {
                             throw ConfigError("forward: fixed statistics channel mismatch");
                           }
                           return {plan.fixed[k], 0.0};
                       }
                       return {bn[k].source_stats(), 0.0};
                     });
}

ForwardResult forward_dynamic(const ModelParams& params, std::span<DynBNState> bn, const Tensor2D& x,
                              Mode mode, Warnings* warn) {
  check_bn(params, bn);
  const auto eps = eps_of(bn);
  std::vector<BetaUpdate> drift(bn.size());
  auto result = run_forward(params, eps, x, mode, warn,
                            [&](std::size_t k, const BNStats& moments, bool degenerate) -> Resolved {
                              auto& state = bn[k];
                              if (degenerate) {
                                // No usable batch estimate: normalize with source stats, keep state.
                                drift[k] = {0.0, 0.0, state.beta_ema()};
                                return {state.source_stats(), 0.0};
                              }
                              drift[k] = beta_step(state, moments, warn);
                              return {interpolate(state, moments), state.beta_ema()};
                            });
  result.drift = std::move(drift);
  return result;
}

// ---------------------------------------------------------------------------
// Losses

LossValue soft_cross_entropy(const Tensor2D& probs, const Tensor2D& targets, Warnings* warn) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols()) {
    throw ConfigError("soft_cross_entropy: shape mismatch");
  }
  if (probs.rows() == 0) throw ConfigError("soft_cross_entropy: empty batch");
  LossValue loss;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      const double t = targets(i, c);
      if (t == 0.0) continue;
      double p = probs(i, c);
      if (p < kLogFloor) {
        p = kLogFloor;
        ++loss.clamped;
      }
      total -= t * std::log(p);
    }
  }
  loss.value = total / static_cast<double>(probs.rows());
  if (warn) warn->prob_clamped += loss.clamped;
  return loss;
}

double mean_entropy(const Tensor2D& probs) {
  double total = 0.0;
  for (double p : probs.values()) {
    if (p > 0.0) total -= p * std::log(p);
  }
  return total / static_cast<double>(probs.rows());
}

Tensor2D entropy_logit_grad(const Tensor2D& probs) {
  // dH/dz_j = -p_j (log p_j + H) for one row; averaged over rows.
  const double n = static_cast<double>(probs.rows());
  Tensor2D g(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    double h = 0.0;
    for (double p : row) {
      if (p > 0.0) h -= p * std::log(p);
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double p = row[c];
      g(i, c) = p > 0.0 ? -p * (std::log(p) + h) / n : 0.0;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Backward

ModelParams backward(const ForwardCache& cache, const Tensor2D& targets) {
  if (cache.mode != Mode::adapt) throw UsageError("backward: cache comes from an eval-mode forward");
  const auto& probs = cache.probs;
  if (targets.rows() != probs.rows() || targets.cols() != probs.cols()) {
    throw ConfigError("backward: target shape mismatch");
  }
  // d/dz_j of -sum_c t_c log softmax(z)_c = p_j * sum_c t_c - t_j.
  const double n = static_cast<double>(probs.rows());
  Tensor2D d(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double tsum = 0.0;
    for (double t : targets.row(i)) tsum += t;
    for (std::size_t c = 0; c < probs.cols(); ++c) d(i, c) = (probs(i, c) * tsum - targets(i, c)) / n;
  }
  return backward_logits(cache, d);
}

ModelParams backward_logits(const ForwardCache& cache, const Tensor2D& dlogits) {
  if (cache.mode != Mode::adapt) throw UsageError("backward: cache comes from an eval-mode forward");
  const auto& params = cache.params;
  const auto& spec = params.spec;
  if (dlogits.rows() != cache.probs.rows() || dlogits.cols() != cache.probs.cols()) {
    throw ConfigError("backward: upstream gradient shape mismatch");
  }
  ModelParams grads = ModelParams::zeros(spec);
  const std::size_t last = spec.dense_count() - 1;
  const double n = static_cast<double>(dlogits.rows());

  Tensor2D delta = dlogits;  // gradient w.r.t. current layer's dense output
  for (std::size_t l = last + 1; l-- > 0;) {
    const auto& c = cache.layers[l];
    if (l != last) {
      // delta holds d/d(relu output); go through ReLU and BN.
      Tensor2D dpre(delta.rows(), delta.cols());
      for (std::size_t i = 0; i < dpre.size(); ++i) {
        dpre.values()[i] = c.pre_act.values()[i] > 0.0 ? delta.values()[i] : 0.0;
      }
      const int slot = spec.bn_slot(l);
      if (slot < 0) {
        delta = std::move(dpre);
      } else {
        const auto k = static_cast<std::size_t>(slot);
        const auto& scale = params.bn[k].scale;
        auto& gscale = grads.bn[k].scale;
        auto& gshift = grads.bn[k].shift;
        Tensor2D dz(dpre.rows(), dpre.cols());
        const double w = c.batch_weight;
        for (std::size_t ch = 0; ch < dpre.cols(); ++ch) {
          const double mu = c.used.mean[ch];
          const double ve = c.used.var[ch] + c.eps;
          const double inv = 1.0 / std::sqrt(ve);
          double sum_g = 0.0, sum_g_centered = 0.0, sum_dpre = 0.0, sum_dpre_xhat = 0.0;
          for (std::size_t i = 0; i < dpre.rows(); ++i) {
            const double centered = c.pre_bn(i, ch) - mu;
            const double g = dpre(i, ch) * scale[ch];
            sum_dpre += dpre(i, ch);
            sum_dpre_xhat += dpre(i, ch) * centered * inv;
            sum_g += g;
            sum_g_centered += g * centered;
          }
          gshift[ch] = sum_dpre;
          gscale[ch] = sum_dpre_xhat;
          // Gradients w.r.t. the statistics actually used; they reach the
          // batch only through the batch-dependent fraction w.
          const double dmu = -inv * sum_g;
          const double dvar = -0.5 * sum_g_centered * inv / ve;
          const double bmean = c.batch.mean[ch];
          for (std::size_t i = 0; i < dpre.rows(); ++i) {
            const double g = dpre(i, ch) * scale[ch];
            double v = g * inv;
            if (w != 0.0) v += w * (dmu / n + dvar * 2.0 * (c.pre_bn(i, ch) - bmean) / n);
            dz(i, ch) = v;
          }
        }
        delta = std::move(dz);
      }
    }
    grads.dense[l].weight = kernels::matmul_tn(c.input, delta);
    grads.dense[l].bias = kernels::column_sums(delta);
    if (l > 0) delta = kernels::matmul_nt(delta, params.dense[l].weight);
  }
  return grads;
}

std::vector<std::size_t> argmax_rows(const Tensor2D& probs) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes}, {"bn_after", spec.bn_after}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  spec.bn_after = j.at("bn_after").get<std::vector<bool>>();
  spec.validate();
  return spec;
}

Container params_to_container(const ModelParams& params) {
  Container c;
  c.section = "model";
  c.meta["spec"] = spec_to_json(params.spec);
  c.meta["layer_order"] = nlohmann::json::array();
  const auto slots = params.layout();
  const auto arrays = params.arrays();
  for (std::size_t a = 0; a < slots.size(); ++a) {
    const auto name = param_name(slots[a]);
    c.meta["layer_order"].push_back(name);
    const std::size_t rows = slots[a].kind == ParamKind::weight ? params.spec.layer_sizes[slots[a].layer] : 1;
    c.add(name, Tensor2D(rows, arrays[a].size() / rows, std::vector<double>(arrays[a].begin(), arrays[a].end())));
  }
  return c;
}

ModelParams params_from_container(const Container& c) {
  if (c.section != "model") throw ConfigError("expected a 'model' container, got '" + c.section + "'");
  ModelParams p = ModelParams::zeros(spec_from_json(c.meta.at("spec")));
  const auto slots = p.layout();
  auto arrays = p.arrays();
  for (std::size_t a = 0; a < slots.size(); ++a) {
    const auto& t = c.get(param_name(slots[a]));
    if (t.size() != arrays[a].size()) throw ConfigError("model container: wrong size for " + param_name(slots[a]));
    std::copy(t.values().begin(), t.values().end(), arrays[a].begin());
  }
  return p;
}

}  // namespace artta
