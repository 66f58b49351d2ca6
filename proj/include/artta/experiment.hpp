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
#include <string>
#include <vector>

#include "json.hpp"

#include "artta/config.hpp"
#include "artta/engine.hpp"
#include "artta/streambench.hpp"

namespace artta {

// ---------------------------------------------------------------------------
// Synthetic data

struct BlobSpec {
  std::size_t samples = 2000;
  std::size_t classes = 4;
  std::size_t dims = 16;
  double spread = 0.1;   // per-feature std around each class center
  double center_low = 0.2;   // centers drawn uniformly in [center_low, center_high]^dims
  double center_high = 0.8;
  // > 0: every center coordinate is center_high with this probability and
  // center_low otherwise (sparse binary prototypes).
  double active_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// Gaussian class blobs clipped to [0,1]. Train and test share centers.
SplitDataset make_blobs(const BlobSpec& spec, std::size_t test_samples);

/// Concentric 2-D rings around (0.5, 0.5), one radius per class.
SplitDataset make_rings(std::size_t samples, std::size_t classes, double noise, std::uint64_t seed,
                        std::size_t test_samples);

// ---------------------------------------------------------------------------
// Source pretraining

struct PretrainResult {
  SourceModel model;
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  bool loss_improved = true;
};

/// Supervised SGD on clean data with per-batch BN statistics, followed by
/// one ordered pass that averages every BN layer's batch statistics into
/// the source statistics.
PretrainResult pretrain_source(const Dataset& data, const NetworkSpec& spec, const PretrainConfig& config,
                               Warnings* warn = nullptr);

/// Source statistics for `params` from one ordered pass over `data`.
std::vector<BNStats> collect_source_stats(const ModelParams& params, const Dataset& data, std::size_t batch_size);

/// Accuracy of the frozen source model (source statistics) on `data`.
double evaluate_source(const SourceModel& model, const Dataset& data);

Container source_model_to_container(const SourceModel& model);
SourceModel source_model_from_container(const Container& c);

// ---------------------------------------------------------------------------
// Runs

struct BatchRow {
  std::size_t batch_idx = 0;
  std::size_t segment_idx = 0;
  std::size_t domain_id = 0;
  double batch_acc = 0.0;
  double window_acc = 0.0;
  double loss = 0.0;            // NaN when the method computes none
  double mean_beta_ema = 0.0;   // NaN without dynamic statistics
  double lambda = 0.0;          // NaN without mixup
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Report report;
  std::vector<BatchRow> rows;
  std::vector<DomainInfo> domains;
  Warnings warnings;
};

/// Runs one seed end to end in memory: fresh engine from the source model,
/// exemplar buffer from `source_data`, stream from `stream_data`.
SeedOutcome run_seed(const RunConfig& config, const SourceModel& source, const Dataset& source_data,
                     const Dataset& stream_data, std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::vector<double> values;
};

MetricSummary summarize(const std::vector<double>& values);

struct SummaryReport {
  std::string label;
  std::string method;
  std::string schedule;
  std::vector<std::string> domain_names;
  std::vector<SeedOutcome> seeds;
  MetricSummary mean_accuracy;
  MetricSummary amca;
  std::vector<MetricSummary> per_domain;  // accuracy, by domain id
};

/// All seeds of `config` (independent, may run concurrently), aggregated.
SummaryReport run_seeds(const RunConfig& config, const SourceModel& source, const Dataset& source_data,
                        const Dataset& stream_data);

std::string metrics_csv(const std::vector<BatchRow>& rows);
nlohmann::json seed_summary_json(const SummaryReport& report, const SeedOutcome& seed);
nlohmann::json summary_json(const SummaryReport& report);

/// Loads data, loads or pretrains the source model, runs all seeds and
/// writes config.ini, per-seed metrics.csv/summary.json, summary.json and
/// manifest.json under config.out_dir.
SummaryReport run_experiment(const RunConfig& config);

/// Loads or pretrains according to `config.pretrain`.
SourceModel obtain_source_model(const RunConfig& config, const Dataset& source_data, Warnings* warn = nullptr);

// ---------------------------------------------------------------------------
// Comparison

struct ComparisonTable {
  std::vector<std::string> domains;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> cells;  // per label: per-domain accuracy, then mean, then AMCA
  std::string text;
  std::string csv;
};

/// Rows follow the given order. All reports must share a schedule.
ComparisonTable compare(const std::vector<nlohmann::json>& summaries);

std::string sha256_hex(std::string_view bytes);

}  // namespace artta
