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

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "artta/container.hpp"
#include "artta/errors.hpp"
#include "artta/rng.hpp"
#include "artta/tensor.hpp"

namespace artta {

/// Labeled feature vectors, values expected in [0,1].
struct Dataset {
  Tensor2D samples;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return samples.cols(); }
  void validate() const;
  std::vector<std::size_t> class_counts() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

// CSV: header "f0,...,f{n-1},label", one sample per row.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text);
Container dataset_to_container(const Dataset& d);
Dataset dataset_from_container(const Container& c);
// Picks the format from the file content (mnet-v1 container or CSV).
Dataset load_dataset(const std::filesystem::path& path);

enum class Corruption { identity, gaussian_noise, contrast, brightness, pixel_dropout };

Corruption parse_corruption(const std::string& s);
std::string to_string(Corruption c);

/// Strength of `kind` at severity 1..5: noise std, contrast factor,
/// brightness offset or dropout probability. 0 for identity.
double severity_parameter(Corruption kind, int severity);

Tensor2D corrupt(const Tensor2D& x, Corruption kind, int severity, Rng& rng);

enum class OrderMode { shuffled, class_sorted_runs, sequential };
OrderMode parse_order_mode(const std::string& s);
std::string to_string(OrderMode m);

struct Segment {
  Corruption kind = Corruption::identity;
  int severity = 1;
  std::size_t batches = 1;
  bool operator==(const Segment&) const = default;
};

struct DomainSchedule {
  std::vector<Segment> segments;
  OrderMode order = OrderMode::shuffled;
  double mean_run_length = 20.0;  // class_sorted_runs only

  void validate() const;
  // "gaussian_noise:5:100,identity:1:50"
  std::string segments_to_string() const;
  static std::vector<Segment> parse_segments(const std::string& text);
  bool operator==(const DomainSchedule&) const = default;
};

struct DomainInfo {
  Corruption kind;
  int severity;
  std::string name() const { return to_string(kind) + "@" + std::to_string(severity); }
};

struct StreamBatch {
  Tensor2D x;
  std::vector<std::size_t> labels;
  std::size_t domain_id = 0;
  std::size_t segment_index = 0;
};

struct Stream {
  std::vector<StreamBatch> batches;
  std::vector<DomainInfo> domains;  // indexed by domain id, first-appearance order
  bool resampled = false;           // some segment drew more samples than the dataset has
};

/// Pure function of (dataset, schedule, batch_size, seed).
Stream make_stream(const Dataset& data, const DomainSchedule& schedule, std::size_t batch_size,
                   std::uint64_t seed, Warnings* warn = nullptr);

struct BatchRecord {
  double batch_accuracy = 0.0;
  double window_accuracy = 0.0;
};

struct DomainReport {
  std::size_t domain_id = 0;
  std::size_t seen = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double mean_class_accuracy = 0.0;
  std::vector<std::size_t> absent_classes;  // excluded from the class mean
};

struct Report {
  double mean_accuracy = 0.0;
  double amca = 0.0;
  std::vector<DomainReport> per_domain;  // ascending domain id
  std::vector<double> windowed;          // window accuracy after each batch
  std::size_t batches = 0;
};

/// Running tallies for one evaluation run. The accuracy window spans the
/// last `window` batches and is cleared whenever the domain changes.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(std::size_t class_count, std::size_t window = 100);

  BatchRecord record(std::span<const std::size_t> predictions, std::span<const std::size_t> truth,
                     std::size_t domain_id);
  Report finalize() const;

  std::size_t seen() const { return seen_; }
  std::size_t correct() const { return correct_; }

 private:
  struct Tally {
    std::vector<std::size_t> seen;
    std::vector<std::size_t> correct;
  };

  std::size_t class_count_;
  std::size_t window_;
  std::size_t seen_ = 0;
  std::size_t correct_ = 0;
  std::map<std::size_t, Tally> domains_;
  std::vector<std::pair<std::size_t, std::size_t>> ring_;  // (correct, seen) per batch
  std::size_t ring_next_ = 0;
  std::size_t ring_correct_ = 0;
  std::size_t ring_seen_ = 0;
  bool have_domain_ = false;
  std::size_t last_domain_ = 0;
  std::vector<double> windowed_;
};

}  // namespace artta
