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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "artta/container.hpp"
#include "artta/errors.hpp"
#include "artta/rng.hpp"
#include "artta/tensor.hpp"

namespace artta {

enum class SelectionMode { balanced, random };

SelectionMode parse_selection_mode(const std::string& s);
std::string to_string(SelectionMode m);

/// Labeled source exemplars kept for replay. Contents never change after
/// build_buffer returns.
class ExemplarBuffer {
 public:
  ExemplarBuffer() = default;
  ExemplarBuffer(Tensor2D samples, std::vector<std::size_t> labels, std::size_t class_count,
                 std::size_t capacity);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t feature_count() const { return samples_.cols(); }
  std::vector<std::size_t> class_counts() const;

  const Tensor2D& samples() const { return samples_; }
  const std::vector<std::size_t>& labels() const { return labels_; }

 private:
  Tensor2D samples_;
  std::vector<std::size_t> labels_;
  std::size_t class_count_ = 0;
  std::size_t capacity_ = 0;
};

/// Balanced mode takes floor(capacity / C) random samples per class and
/// hands the remainder out one each to the lowest class ids, so class counts
/// differ by at most one. A class with too few samples contributes all it
/// has and is counted in `warn`. Random mode draws `capacity` samples
/// uniformly without regard to class.
ExemplarBuffer build_buffer(const Tensor2D& samples, std::span<const std::size_t> labels,
                            std::size_t class_count, std::size_t capacity, SelectionMode mode, Rng& rng,
                            Warnings* warn = nullptr);

struct ExemplarBatch {
  Tensor2D x;
  Tensor2D y;  // one-hot
};

/// n rows drawn uniformly with replacement. std::nullopt for an empty
/// buffer, which means replay is disabled.
std::optional<ExemplarBatch> sample_exemplars(const ExemplarBuffer& buffer, std::size_t n, Rng& rng);

struct MixupParams {
  double psi = 0.4;
  double rho = 0.4;
  void validate() const;
  bool operator==(const MixupParams&) const = default;
};

/// Beta(psi, rho) draw as g1 / (g1 + g2) with g ~ Gamma(shape, 1).
double sample_lambda(const MixupParams& params, Rng& rng);

struct MixedBatch {
  Tensor2D x;
  Tensor2D y;
};

/// x = lambda * x_test + (1 - lambda) * x_mem, and the same for labels.
MixedBatch mixup(const Tensor2D& x_test, const Tensor2D& pseudo, const Tensor2D& x_mem,
                 const Tensor2D& y_mem, double lambda);

/// Per-row variant; lambdas.size() must equal the batch size.
MixedBatch mixup_rows(const Tensor2D& x_test, const Tensor2D& pseudo, const Tensor2D& x_mem,
                      const Tensor2D& y_mem, std::span<const double> lambdas);

Tensor2D one_hot(std::span<const std::size_t> labels, std::size_t class_count);

Container buffer_to_container(const ExemplarBuffer& buffer);
ExemplarBuffer buffer_from_container(const Container& c);

}  // namespace artta
