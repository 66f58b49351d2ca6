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

#include "artta/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "artta/container.hpp"

namespace artta {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::string fmt_g(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_pct(double mean, double sd) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f±%.2f", 100.0 * mean, 100.0 * sd);
  return buf;
}

std::vector<std::size_t> batch_bounds(std::size_t n, std::size_t batch) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < n; s += batch) starts.push_back(s);
  return starts;
}

std::vector<DynBNState> placeholder_bn(const NetworkSpec& spec) {
  std::vector<DynBNState> bn;
  for (std::size_t l = 0; l + 1 < spec.dense_count(); ++l) {
    if (spec.bn_slot(l) >= 0) bn.emplace_back(BNStats::standard(spec.layer_sizes[l + 1]));
  }
  return bn;
}

void check_dataset_for(const NetworkSpec& spec, const Dataset& data) {
  data.validate();
  if (data.feature_count() != spec.input_size()) {
    throw ConfigError("dataset has " + std::to_string(data.feature_count()) + " features, network expects " +
                      std::to_string(spec.input_size()));
  }
  if (data.class_count > spec.class_count()) {
    throw ConfigError("dataset has more classes than the network outputs");
  }
}

nlohmann::json warnings_json(const Warnings& w) {
  return {{"prob_clamped", w.prob_clamped},
          {"var_clamped", w.var_clamped},
          {"degenerate_batch", w.degenerate_batch},
          {"deficient_class", w.deficient_class},
          {"resampled_stream", w.resampled_stream}};
}

nlohmann::json metric_json(const MetricSummary& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"values", m.values}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Synthetic data

SplitDataset make_blobs(const BlobSpec& spec, std::size_t test_samples) {
  if (spec.classes == 0 || spec.dims == 0) throw ConfigError("blobs: classes and dims must be positive");
  if (!(spec.center_low >= 0.0 && spec.center_low <= spec.center_high && spec.center_high <= 1.0)) {
    throw ConfigError("blobs: need 0 <= center_low <= center_high <= 1");
  }
  if (!(spec.active_fraction >= 0.0 && spec.active_fraction <= 1.0)) {
    throw ConfigError("blobs: active_fraction must lie in [0,1]");
  }
  Rng rng = make_rng(spec.seed, streams::kData);
  std::uniform_real_distribution<double> unit(spec.center_low, spec.center_high);
  std::bernoulli_distribution active(spec.active_fraction);
  std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.dims));
  for (auto& c : centers) {
    for (double& v : c) {
      if (spec.active_fraction > 0.0) {
        v = active(rng) ? spec.center_high : spec.center_low;
      } else {
        v = unit(rng);
      }
    }
  }
  std::normal_distribution<double> noise(0.0, spec.spread);
  auto draw = [&](std::size_t n) {
    Dataset d;
    d.class_count = spec.classes;
    d.samples = Tensor2D(n, spec.dims);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t label = i % spec.classes;
      d.labels.push_back(label);
      for (std::size_t f = 0; f < spec.dims; ++f) {
        d.samples(i, f) = std::clamp(centers[label][f] + noise(rng), 0.0, 1.0);
      }
    }
    return d;
  };
  SplitDataset out;
  out.train = draw(spec.samples);
  out.test = draw(test_samples);
  return out;
}

SplitDataset make_rings(std::size_t samples, std::size_t classes, double noise, std::uint64_t seed,
                        std::size_t test_samples) {
  if (classes == 0) throw ConfigError("rings: classes must be positive");
  Rng rng = make_rng(seed, streams::kData);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::normal_distribution<double> jitter(0.0, noise);
  auto draw = [&](std::size_t n) {
    Dataset d;
    d.class_count = classes;
    d.samples = Tensor2D(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t label = i % classes;
      const double radius = 0.45 * static_cast<double>(label + 1) / static_cast<double>(classes) + jitter(rng);
      const double a = angle(rng);
      d.labels.push_back(label);
      d.samples(i, 0) = std::clamp(0.5 + radius * std::cos(a), 0.0, 1.0);
      d.samples(i, 1) = std::clamp(0.5 + radius * std::sin(a), 0.0, 1.0);
    }
    return d;
  };
  SplitDataset out;
  out.train = draw(samples);
  out.test = draw(test_samples);
  return out;
}

// ---------------------------------------------------------------------------
// Pretraining

std::vector<BNStats> collect_source_stats(const ModelParams& params, const Dataset& data, std::size_t batch_size) {
  const auto bn = placeholder_bn(params.spec);
  std::vector<BNStats> sums;
  for (const auto& s : bn) sums.emplace_back(std::vector<double>(s.channels(), 0.0), std::vector<double>(s.channels(), 0.0));
  if (bn.empty()) return sums;
  const auto order = iota_indices(data.size());
  double rows_total = 0.0;
  for (std::size_t start : batch_bounds(data.size(), batch_size)) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    if (n < 2) continue;  // no variance estimate
    const Dataset batch = data.subset({order.data() + start, n});
    const auto out = forward(params, bn, batch.samples, Mode::eval, {StatsSource::batch});
    for (std::size_t k = 0; k < sums.size(); ++k) {
      for (std::size_t c = 0; c < sums[k].channels(); ++c) {
        sums[k].mean[c] += static_cast<double>(n) * out.used_stats[k].mean[c];
        sums[k].var[c] += static_cast<double>(n) * out.used_stats[k].var[c];
      }
    }
    rows_total += static_cast<double>(n);
  }
  if (rows_total == 0.0) throw ConfigError("source statistics need at least one batch of two or more samples");
  for (auto& s : sums) {
    for (auto& v : s.mean) v /= rows_total;
    for (auto& v : s.var) v /= rows_total;
  }
  return sums;
}

double evaluate_source(const SourceModel& model, const Dataset& data) {
  std::vector<DynBNState> bn;
  for (const auto& s : model.stats) bn.emplace_back(s);
  const auto out = forward(model.params, bn, data.samples, Mode::eval, {StatsSource::source});
  const auto pred = argmax_rows(out.probs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  return data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0;
}

PretrainResult pretrain_source(const Dataset& data, const NetworkSpec& spec, const PretrainConfig& config,
                               Warnings* warn) {
  spec.validate();
  check_dataset_for(spec, data);
  if (config.batch_size < 2) throw ConfigError("pretrain.batch_size must be at least 2");
  Rng rng = make_rng(config.seed, streams::kPretrain);
  PretrainResult result;
  ModelParams params = ModelParams::initialize(spec, rng);
  const auto bn = placeholder_bn(spec);
  SgdState sgd(params, config.lr, config.momentum);
  auto order = iota_indices(data.size());
  Warnings local;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double rows = 0.0;
    for (std::size_t start : batch_bounds(data.size(), config.batch_size)) {
      const std::size_t n = std::min(config.batch_size, data.size() - start);
      if (n < 2) continue;
      const Dataset batch = data.subset({order.data() + start, n});
      const Tensor2D targets = one_hot(batch.labels, spec.class_count());
      auto out = forward(params, bn, batch.samples, Mode::adapt, {StatsSource::batch}, &local);
      loss_sum += static_cast<double>(n) * soft_cross_entropy(out.probs, targets, &local).value;
      rows += static_cast<double>(n);
      sgd_step(params, backward(out.cache, targets), sgd, TrainScope::whole_model());
    }
    result.epoch_loss.push_back(rows > 0 ? loss_sum / rows : kNaN);
  }
  if (result.epoch_loss.size() >= 2) {
    result.loss_improved = result.epoch_loss.back() < result.epoch_loss.front();
  }
  result.model.stats = collect_source_stats(params, data, config.batch_size);
  result.model.params = std::move(params);
  result.train_accuracy = evaluate_source(result.model, data);
  if (warn) *warn += local;
  return result;
}

Container source_model_to_container(const SourceModel& model) {
  Container c = params_to_container(model.params);
  for (std::size_t k = 0; k < model.stats.size(); ++k) {
    const auto& s = model.stats[k];
    c.add("bn" + std::to_string(k) + ".source_mean", Tensor2D(1, s.channels(), s.mean));
    c.add("bn" + std::to_string(k) + ".source_var", Tensor2D(1, s.channels(), s.var));
    c.meta["layer_order"].push_back("bn" + std::to_string(k) + ".source_mean");
    c.meta["layer_order"].push_back("bn" + std::to_string(k) + ".source_var");
  }
  return c;
}

SourceModel source_model_from_container(const Container& c) {
  SourceModel m;
  m.params = params_from_container(c);
  for (std::size_t k = 0; k < m.params.spec.bn_count(); ++k) {
    const auto& mean = c.get("bn" + std::to_string(k) + ".source_mean");
    const auto& var = c.get("bn" + std::to_string(k) + ".source_var");
    m.stats.emplace_back(std::vector<double>(mean.values().begin(), mean.values().end()),
                         std::vector<double>(var.values().begin(), var.values().end()));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Runs

SeedOutcome run_seed(const RunConfig& config, const SourceModel& source, const Dataset& source_data,
                     const Dataset& stream_data, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    check_dataset_for(source.params.spec, stream_data);
    ExemplarBuffer buffer;
    if (config.method == Method::ar_tta && config.replay_capacity > 0) {
      check_dataset_for(source.params.spec, source_data);
      Rng buffer_rng = make_rng(seed, streams::kBuffer);
      buffer = build_buffer(source_data.samples, source_data.labels, source.params.spec.class_count(),
                            config.replay_capacity, config.selection, buffer_rng, &out.warnings);
    }
    const Stream stream = make_stream(stream_data, config.schedule, config.batch_size, seed, &out.warnings);
    out.domains = stream.domains;
    AdaptationState state = make_state(config.method, config.engine, source, std::move(buffer), seed);
    MetricsAccumulator acc(source.params.spec.class_count(), config.window);
    out.rows.reserve(stream.batches.size());
    for (std::size_t b = 0; b < stream.batches.size(); ++b) {
      const auto& batch = stream.batches[b];
      const StepResult r = step(state, batch.x);
      const BatchRecord rec = acc.record(r.predictions, batch.labels, batch.domain_id);
      BatchRow row;
      row.batch_idx = b;
      row.segment_idx = batch.segment_index;
      row.domain_id = batch.domain_id;
      row.batch_acc = rec.batch_accuracy;
      row.window_acc = rec.window_accuracy;
      row.loss = r.loss;
      row.lambda = r.lambda;
      row.mean_beta_ema = r.beta_ema.empty()
                              ? kNaN
                              : std::accumulate(r.beta_ema.begin(), r.beta_ema.end(), 0.0) /
                                    static_cast<double>(r.beta_ema.size());
      out.rows.push_back(row);
    }
    out.report = acc.finalize();
    out.warnings += state.warnings;
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary m;
  m.values = values;
  if (values.empty()) {
    m.mean = m.std = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return m;
}

SummaryReport run_seeds(const RunConfig& config, const SourceModel& source, const Dataset& source_data,
                        const Dataset& stream_data) {
  SummaryReport rep;
  rep.label = config.display_label();
  rep.method = to_string(config.method);
  rep.schedule = config.schedule.segments_to_string() + "/" + to_string(config.schedule.order);
  rep.seeds.resize(config.seeds.size());
  const auto n = static_cast<std::int64_t>(config.seeds.size());
  // Seeds share nothing mutable; each writes only its own slot.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    rep.seeds[static_cast<std::size_t>(i)] =
        run_seed(config, source, source_data, stream_data, config.seeds[static_cast<std::size_t>(i)]);
  }
  std::vector<double> acc, amca;
  std::map<std::size_t, std::vector<double>> per_domain;
  for (const auto& s : rep.seeds) {
    if (!s.ok) continue;
    if (rep.domain_names.empty()) {
      for (const auto& d : s.domains) rep.domain_names.push_back(d.name());
    }
    acc.push_back(s.report.mean_accuracy);
    amca.push_back(s.report.amca);
    for (const auto& d : s.report.per_domain) per_domain[d.domain_id].push_back(d.accuracy);
  }
  rep.mean_accuracy = summarize(acc);
  rep.amca = summarize(amca);
  for (std::size_t d = 0; d < rep.domain_names.size(); ++d) rep.per_domain.push_back(summarize(per_domain[d]));
  return rep;
}

std::string metrics_csv(const std::vector<BatchRow>& rows) {
  std::ostringstream out;
  out << "batch_idx,segment_idx,domain_id,batch_acc,window_acc,loss,mean_beta_ema,lambda\n";
  for (const auto& r : rows) {
    out << r.batch_idx << ',' << r.segment_idx << ',' << r.domain_id << ',' << fmt_g(r.batch_acc) << ','
        << fmt_g(r.window_acc) << ',' << fmt_g(r.loss) << ',' << fmt_g(r.mean_beta_ema) << ',' << fmt_g(r.lambda)
        << '\n';
  }
  return out.str();
}

nlohmann::json seed_summary_json(const SummaryReport& report, const SeedOutcome& seed) {
  nlohmann::json j;
  j["method"] = report.method;
  j["label"] = report.label;
  j["seed"] = seed.seed;
  j["ok"] = seed.ok;
  if (!seed.ok) {
    j["error"] = seed.error;
    return j;
  }
  j["schedule"] = report.schedule;
  j["mean_accuracy"] = seed.report.mean_accuracy;
  j["amca"] = seed.report.amca;
  j["batches"] = seed.report.batches;
  j["per_domain"] = nlohmann::json::array();
  for (const auto& d : seed.report.per_domain) {
    j["per_domain"].push_back({{"domain_id", d.domain_id},
                               {"domain", d.domain_id < seed.domains.size() ? seed.domains[d.domain_id].name() : ""},
                               {"samples", d.seen},
                               {"accuracy", d.accuracy},
                               {"mean_class_accuracy", d.mean_class_accuracy},
                               {"absent_classes", d.absent_classes}});
  }
  j["warnings"] = warnings_json(seed.warnings);
  return j;
}

nlohmann::json summary_json(const SummaryReport& report) {
  nlohmann::json j;
  j["label"] = report.label;
  j["method"] = report.method;
  j["schedule"] = report.schedule;
  j["domains"] = report.domain_names;
  j["seeds"] = nlohmann::json::array();
  j["failures"] = nlohmann::json::array();
  for (const auto& s : report.seeds) {
    j["seeds"].push_back(s.seed);
    if (!s.ok) j["failures"].push_back({{"seed", s.seed}, {"error", s.error}});
  }
  j["mean_accuracy"] = metric_json(report.mean_accuracy);
  j["amca"] = metric_json(report.amca);
  j["per_domain"] = nlohmann::json::array();
  for (std::size_t d = 0; d < report.per_domain.size(); ++d) {
    j["per_domain"].push_back({{"domain", report.domain_names[d]}, {"accuracy", metric_json(report.per_domain[d])}});
  }
  return j;
}

SourceModel obtain_source_model(const RunConfig& config, const Dataset& source_data, Warnings* warn) {
  if (!config.pretrain.model_path.empty()) {
    SourceModel m = source_model_from_container(read_container(config.pretrain.model_path));
    if (m.params.spec != config.network) throw ConfigError("stored model does not match network.layers/network.bn");
    return m;
  }
  return pretrain_source(source_data, config.network, config.pretrain, warn).model;
}

SummaryReport run_experiment(const RunConfig& config) {
  namespace fs = std::filesystem;
  config.validate();
  if (config.dataset_path.empty()) throw ConfigError("data.path is required");
  const Dataset source_data = load_dataset(config.dataset_path);
  const Dataset stream_data = config.stream_path.empty() ? source_data : load_dataset(config.stream_path);
  if (config.method == Method::ar_tta && config.replay_capacity > source_data.size()) {
    throw ConfigError("replay.capacity (" + std::to_string(config.replay_capacity) + ") exceeds the " +
                      std::to_string(source_data.size()) + " source samples");
  }
  const SourceModel source = obtain_source_model(config, source_data);

  const fs::path out = config.out_dir;
  fs::create_directories(out);
  std::map<std::string, std::string> written;  // relative path -> bytes
  auto emit = [&](const std::string& rel, std::string bytes) {
    const fs::path p = out / rel;
    fs::create_directories(p.parent_path());
    write_file_atomic(p, bytes);
    written[rel] = std::move(bytes);
  };
  emit("config.ini", serialize_config(config));
  if (config.pretrain.model_path.empty()) emit("source_model.mnet", encode_container(source_model_to_container(source)));

  SummaryReport rep = run_seeds(config, source, source_data, stream_data);
  for (const auto& s : rep.seeds) {
    const std::string dir = "seed_" + std::to_string(s.seed) + "/";
    if (s.ok) emit(dir + "metrics.csv", metrics_csv(s.rows));
    emit(dir + "summary.json", seed_summary_json(rep, s).dump(2) + "\n");
  }
  emit("summary.json", summary_json(rep).dump(2) + "\n");

  nlohmann::json manifest;
  manifest["files"] = nlohmann::json::array();
  for (const auto& [rel, bytes] : written) {
    manifest["files"].push_back({{"path", rel}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  return rep;
}

// ---------------------------------------------------------------------------
// Comparison

ComparisonTable compare(const std::vector<nlohmann::json>& summaries) {
  if (summaries.empty()) throw ConfigError("compare: no reports given");
  ComparisonTable t;
  const std::string schedule = summaries.front().at("schedule").get<std::string>();
  t.domains = summaries.front().at("domains").get<std::vector<std::string>>();
  std::vector<std::vector<std::string>> text_cells;
  for (const auto& s : summaries) {
    if (s.at("schedule").get<std::string>() != schedule ||
        s.at("domains").get<std::vector<std::string>>() != t.domains) {
      throw ConfigError("compare: reports use different schedules");
    }
    t.labels.push_back(s.at("label").get<std::string>());
    std::vector<double> row;
    std::vector<std::string> txt;
    for (const auto& d : s.at("per_domain")) {
      const auto& a = d.at("accuracy");
      row.push_back(a.at("mean").get<double>());
      txt.push_back(fmt_pct(a.at("mean").get<double>(), a.at("std").get<double>()));
    }
    for (const char* key : {"mean_accuracy", "amca"}) {
      const auto& m = s.at(key);
      row.push_back(m.at("mean").get<double>());
      txt.push_back(fmt_pct(m.at("mean").get<double>(), m.at("std").get<double>()));
    }
    t.cells.push_back(std::move(row));
    text_cells.push_back(std::move(txt));
  }

  std::vector<std::string> header{"method"};
  header.insert(header.end(), t.domains.begin(), t.domains.end());
  header.push_back("mean");
  header.push_back("amca");

  std::ostringstream csv;
  for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
  csv << '\n';
  for (std::size_t r = 0; r < t.labels.size(); ++r) {
    csv << t.labels[r];
    for (double v : t.cells[r]) csv << ',' << fmt_g(v);
    csv << '\n';
  }
  t.csv = csv.str();

  // Column widths count code points so the ± sign does not skew alignment.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = width(header[c]);
  for (std::size_t r = 0; r < t.labels.size(); ++r) {
    widths[0] = std::max(widths[0], width(t.labels[r]));
    for (std::size_t c = 0; c < text_cells[r].size(); ++c) widths[c + 1] = std::max(widths[c + 1], width(text_cells[r][c]));
  }
  std::ostringstream txt;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      txt << (c ? " | " : "") << cells[c] << std::string(widths[c] - width(cells[c]), ' ');
    }
    txt << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : widths) total += w;
  txt << std::string(total + 3 * (widths.size() - 1), '-') << '\n';
  for (std::size_t r = 0; r < t.labels.size(); ++r) {
    std::vector<std::string> cells{t.labels[r]};
    cells.insert(cells.end(), text_cells[r].begin(), text_cells[r].end());
    line(cells);
  }
  t.text = txt.str();
  return t;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace artta
