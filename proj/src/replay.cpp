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

#include "artta/replay.hpp"

#include <algorithm>
#include <numeric>

namespace artta {
namespace {

void check_mixup_shapes(const Tensor2D& x_test, const Tensor2D& pseudo, const Tensor2D& x_mem,
                        const Tensor2D& y_mem) {
  if (x_test.rows() != x_mem.rows() || x_test.cols() != x_mem.cols() || pseudo.rows() != y_mem.rows() ||
      pseudo.cols() != y_mem.cols() || pseudo.rows() != x_test.rows()) {
    throw ConfigError("mixup: batch shapes differ");
  }
}

Tensor2D gather_rows(const Tensor2D& src, std::span<const std::size_t> idx) {
  Tensor2D out(idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(src.row(idx[i]).begin(), src.row(idx[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

SelectionMode parse_selection_mode(const std::string& s) {
  if (s == "balanced") return SelectionMode::balanced;
  if (s == "random") return SelectionMode::random;
  throw ConfigError("unknown memory selection mode '" + s + "'");
}

std::string to_string(SelectionMode m) { return m == SelectionMode::balanced ? "balanced" : "random"; }

ExemplarBuffer::ExemplarBuffer(Tensor2D samples, std::vector<std::size_t> labels, std::size_t class_count,
                               std::size_t capacity)
    : samples_(std::move(samples)), labels_(std::move(labels)), class_count_(class_count), capacity_(capacity) {
  if (samples_.rows() != labels_.size()) throw ConfigError("exemplar buffer: sample/label count mismatch");
  for (auto l : labels_) {
    if (l >= class_count_) throw ConfigError("exemplar buffer: label out of range");
  }
}

std::vector<std::size_t> ExemplarBuffer::class_counts() const {
  std::vector<std::size_t> counts(class_count_, 0);
  for (auto l : labels_) ++counts[l];
  return counts;
}

ExemplarBuffer build_buffer(const Tensor2D& samples, std::span<const std::size_t> labels,
                            std::size_t class_count, std::size_t capacity, SelectionMode mode, Rng& rng,
                            Warnings* warn) {
  if (samples.rows() != labels.size()) throw ConfigError("build_buffer: sample/label count mismatch");
  if (class_count == 0) throw ConfigError("build_buffer: class count must be positive");
  if (capacity > samples.rows()) throw ConfigError("build_buffer: capacity exceeds dataset size");

  std::vector<std::size_t> chosen;
  if (mode == SelectionMode::random) {
    std::vector<std::size_t> all(samples.rows());
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    chosen.assign(all.begin(), all.begin() + static_cast<long>(capacity));
  } else {
    std::vector<std::vector<std::size_t>> by_class(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= class_count) throw ConfigError("build_buffer: label out of range");
      by_class[labels[i]].push_back(i);
    }
    const std::size_t per_class = capacity / class_count;
    const std::size_t remainder = capacity % class_count;
    for (std::size_t c = 0; c < class_count; ++c) {
      auto& pool = by_class[c];
      const std::size_t want = per_class + (c < remainder ? 1 : 0);
      std::shuffle(pool.begin(), pool.end(), rng);
      if (pool.size() < want && warn) ++warn->deficient_class;
      const std::size_t take = std::min(want, pool.size());
      chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<long>(take));
    }
  }
  std::vector<std::size_t> chosen_labels;
  chosen_labels.reserve(chosen.size());
  for (auto i : chosen) chosen_labels.push_back(labels[i]);
  return ExemplarBuffer(gather_rows(samples, chosen), std::move(chosen_labels), class_count, capacity);
}

std::optional<ExemplarBatch> sample_exemplars(const ExemplarBuffer& buffer, std::size_t n, Rng& rng) {
  if (buffer.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = buffer.labels()[idx[i]];
  return ExemplarBatch{gather_rows(buffer.samples(), idx), one_hot(labels, buffer.class_count())};
}

void MixupParams::validate() const {
  if (!(psi > 0.0) || !(rho > 0.0)) throw ConfigError("mixup: psi and rho must be positive");
}

double sample_lambda(const MixupParams& params, Rng& rng) {
  params.validate();
  std::gamma_distribution<double> ga(params.psi, 1.0);
  std::gamma_distribution<double> gb(params.rho, 1.0);
  const double a = ga(rng);
  const double b = gb(rng);
  // Both gammas can underflow to 0 for tiny shapes; split evenly then.
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

MixedBatch mixup(const Tensor2D& x_test, const Tensor2D& pseudo, const Tensor2D& x_mem,
                 const Tensor2D& y_mem, double lambda) {
  check_mixup_shapes(x_test, pseudo, x_mem, y_mem);
  if (lambda == 1.0) return {x_test, pseudo};
  if (lambda == 0.0) return {x_mem, y_mem};
  MixedBatch out{Tensor2D(x_test.rows(), x_test.cols()), Tensor2D(pseudo.rows(), pseudo.cols())};
  for (std::size_t i = 0; i < x_test.size(); ++i) {
    out.x.values()[i] = lambda * x_test.values()[i] + (1.0 - lambda) * x_mem.values()[i];
  }
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    out.y.values()[i] = lambda * pseudo.values()[i] + (1.0 - lambda) * y_mem.values()[i];
  }
  return out;
}

MixedBatch mixup_rows(const Tensor2D& x_test, const Tensor2D& pseudo, const Tensor2D& x_mem,
                      const Tensor2D& y_mem, std::span<const double> lambdas) {
  check_mixup_shapes(x_test, pseudo, x_mem, y_mem);
  if (lambdas.size() != x_test.rows()) throw ConfigError("mixup: need one lambda per row");
  MixedBatch out{Tensor2D(x_test.rows(), x_test.cols()), Tensor2D(pseudo.rows(), pseudo.cols())};
  for (std::size_t r = 0; r < x_test.rows(); ++r) {
    const double l = lambdas[r];
    for (std::size_t c = 0; c < x_test.cols(); ++c) out.x(r, c) = l * x_test(r, c) + (1.0 - l) * x_mem(r, c);
    for (std::size_t c = 0; c < pseudo.cols(); ++c) out.y(r, c) = l * pseudo(r, c) + (1.0 - l) * y_mem(r, c);
  }
  return out;
}

Tensor2D one_hot(std::span<const std::size_t> labels, std::size_t class_count) {
  Tensor2D y(labels.size(), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) throw ConfigError("one_hot: label out of range");
    y(i, labels[i]) = 1.0;
  }
  return y;
}

Container buffer_to_container(const ExemplarBuffer& buffer) {
  Container c;
  c.section = "exemplars";
  c.meta["class_count"] = buffer.class_count();
  c.meta["capacity"] = buffer.capacity();
  c.add("samples", buffer.samples());
  const std::size_t n = buffer.labels().size();
  std::vector<double> labels(buffer.labels().begin(), buffer.labels().end());
  c.add("labels", Tensor2D(n, 1, std::move(labels)));
  return c;
}

ExemplarBuffer buffer_from_container(const Container& c) {
  if (c.section != "exemplars") throw ConfigError("expected an 'exemplars' container, got '" + c.section + "'");
  const auto& raw = c.get("labels");
  std::vector<std::size_t> labels;
  labels.reserve(raw.size());
  for (double v : raw.values()) labels.push_back(static_cast<std::size_t>(v));
  return ExemplarBuffer(c.get("samples"), std::move(labels), c.meta.at("class_count").get<std::size_t>(),
                        c.meta.at("capacity").get<std::size_t>());
}

}  // namespace artta
