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

#include "artta/streambench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace artta {
namespace {

constexpr std::array<double, 5> kNoiseStd = {0.04, 0.08, 0.12, 0.18, 0.26};
constexpr std::array<double, 5> kContrast = {0.75, 0.6, 0.45, 0.3, 0.15};
constexpr std::array<double, 5> kBrightness = {0.1, 0.2, 0.3, 0.4, 0.5};
constexpr std::array<double, 5> kDropout = {0.05, 0.1, 0.2, 0.3, 0.4};

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Cycles through a shuffled index pool, reshuffling when exhausted.
class Pool {
 public:
  explicit Pool(std::vector<std::size_t> items) : items_(std::move(items)), next_(items_.size()) {}
  std::size_t draw(Rng& rng, bool& wrapped) {
    if (next_ == items_.size()) {
      if (drawn_any_) wrapped = true;
      std::shuffle(items_.begin(), items_.end(), rng);
      next_ = 0;
    }
    drawn_any_ = true;
    return items_[next_++];
  }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<std::size_t> items_;
  std::size_t next_;
  bool drawn_any_ = false;
};

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (samples.rows() != labels.size()) throw ConfigError("dataset: sample/label count mismatch");
  if (class_count == 0) throw ConfigError("dataset: class count must be positive");
  for (auto l : labels) {
    if (l >= class_count) throw ConfigError("dataset: label out of range");
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> c(class_count, 0);
  for (auto l : labels) ++c[l];
  return c;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset d;
  d.class_count = class_count;
  d.samples = Tensor2D(rows.size(), samples.cols());
  d.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(samples.row(rows[i]).begin(), samples.row(rows[i]).end(), d.samples.row(i).begin());
    d.labels.push_back(labels[rows[i]]);
  }
  return d;
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream out;
  for (std::size_t c = 0; c < d.feature_count(); ++c) out << 'f' << c << ',';
  out << "label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.samples.row(i)) out << format_double(v) << ',';
    out << d.labels[i] << '\n';
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset CSV: missing header");
  const auto header = split(line, ',');
  if (header.size() < 2 || header.back() != "label") {
    throw ConfigError("dataset CSV: header must be f0..fn,label");
  }
  const std::size_t features = header.size() - 1;
  for (std::size_t c = 0; c < features; ++c) {
    if (header[c] != "f" + std::to_string(c)) throw ConfigError("dataset CSV: unexpected column '" + header[c] + "'");
  }
  std::vector<double> values;
  Dataset d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() != features + 1) {
      throw ConfigError("dataset CSV: line " + std::to_string(lineno) + " has wrong column count");
    }
    for (std::size_t c = 0; c < features; ++c) values.push_back(parse_double(cells[c]));
    const double lab = parse_double(cells.back());
    if (lab < 0 || lab != std::floor(lab)) throw ConfigError("dataset CSV: bad label on line " + std::to_string(lineno));
    d.labels.push_back(static_cast<std::size_t>(lab));
  }
  d.samples = Tensor2D(d.labels.size(), features, std::move(values));
  d.class_count = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  d.validate();
  return d;
}

Container dataset_to_container(const Dataset& d) {
  Container c;
  c.section = "dataset";
  c.meta["class_count"] = d.class_count;
  c.add("samples", d.samples);
  std::vector<double> labels(d.labels.begin(), d.labels.end());
  c.add("labels", Tensor2D(d.labels.size(), 1, std::move(labels)));
  return c;
}

Dataset dataset_from_container(const Container& c) {
  if (c.section != "dataset") throw ConfigError("expected a 'dataset' container, got '" + c.section + "'");
  Dataset d;
  d.samples = c.get("samples");
  for (double v : c.get("labels").values()) d.labels.push_back(static_cast<std::size_t>(v));
  d.class_count = c.meta.at("class_count").get<std::size_t>();
  d.validate();
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.rfind("f0,", 0) == 0) return dataset_from_csv(bytes);
  return dataset_from_container(decode_container(bytes));
}

// ---------------------------------------------------------------------------
// Corruptions

Corruption parse_corruption(const std::string& s) {
  if (s == "identity") return Corruption::identity;
  if (s == "gaussian_noise") return Corruption::gaussian_noise;
  if (s == "contrast") return Corruption::contrast;
  if (s == "brightness") return Corruption::brightness;
  if (s == "pixel_dropout") return Corruption::pixel_dropout;
  throw ConfigError("unknown corruption '" + s + "'");
}

std::string to_string(Corruption c) {
  switch (c) {
    case Corruption::identity: return "identity";
    case Corruption::gaussian_noise: return "gaussian_noise";
    case Corruption::contrast: return "contrast";
    case Corruption::brightness: return "brightness";
    case Corruption::pixel_dropout: return "pixel_dropout";
  }
  return "?";
}

double severity_parameter(Corruption kind, int severity) {
  if (severity < 1 || severity > 5) throw ConfigError("severity must lie in 1..5");
  const auto i = static_cast<std::size_t>(severity - 1);
  switch (kind) {
    case Corruption::identity: return 0.0;
    case Corruption::gaussian_noise: return kNoiseStd[i];
    case Corruption::contrast: return kContrast[i];
    case Corruption::brightness: return kBrightness[i];
    case Corruption::pixel_dropout: return kDropout[i];
  }
  throw ConfigError("unknown corruption kind");
}

Tensor2D corrupt(const Tensor2D& x, Corruption kind, int severity, Rng& rng) {
  const double p = severity_parameter(kind, severity);
  Tensor2D y = x;
  switch (kind) {
    case Corruption::identity: break;
    case Corruption::gaussian_noise: {
      std::normal_distribution<double> noise(0.0, p);
      for (double& v : y.values()) v = clip01(v + noise(rng));
      break;
    }
    case Corruption::contrast:
      for (double& v : y.values()) v = (v - 0.5) * p + 0.5;
      break;
    case Corruption::brightness:
      for (double& v : y.values()) v = clip01(v + p);
      break;
    case Corruption::pixel_dropout: {
      std::bernoulli_distribution drop(p);
      for (double& v : y.values()) {
        if (drop(rng)) v = 0.0;
      }
      break;
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Schedules and streams

OrderMode parse_order_mode(const std::string& s) {
  if (s == "shuffled") return OrderMode::shuffled;
  if (s == "class_sorted_runs") return OrderMode::class_sorted_runs;
  if (s == "sequential") return OrderMode::sequential;
  throw ConfigError("unknown order mode '" + s + "'");
}

std::string to_string(OrderMode m) {
  switch (m) {
    case OrderMode::shuffled: return "shuffled";
    case OrderMode::class_sorted_runs: return "class_sorted_runs";
    case OrderMode::sequential: return "sequential";
  }
  return "?";
}

void DomainSchedule::validate() const {
  if (segments.empty()) throw ConfigError("schedule: need at least one segment");
  for (const auto& s : segments) {
    if (s.severity < 1 || s.severity > 5) throw ConfigError("schedule: severity must lie in 1..5");
    if (s.batches == 0) throw ConfigError("schedule: segment needs at least one batch");
  }
  if (!(mean_run_length >= 1.0)) throw ConfigError("schedule: mean run length must be >= 1");
}

std::string DomainSchedule::segments_to_string() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += ',';
    out += to_string(segments[i].kind) + ":" + std::to_string(segments[i].severity) + ":" +
           std::to_string(segments[i].batches);
  }
  return out;
}

std::vector<Segment> DomainSchedule::parse_segments(const std::string& text) {
  std::vector<Segment> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw ConfigError("schedule segment '" + item + "' is not kind:severity:batches");
    Segment s;
    s.kind = parse_corruption(parts[0]);
    const double sev = parse_double(parts[1]);
    const double batches = parse_double(parts[2]);
    if (sev != std::floor(sev) || batches != std::floor(batches) || batches < 1) {
      throw ConfigError("schedule segment '" + item + "' has non-integer fields");
    }
    s.severity = static_cast<int>(sev);
    s.batches = static_cast<std::size_t>(batches);
    out.push_back(s);
  }
  return out;
}

Stream make_stream(const Dataset& data, const DomainSchedule& schedule, std::size_t batch_size,
                   std::uint64_t seed, Warnings* warn) {
  data.validate();
  schedule.validate();
  if (batch_size == 0) throw ConfigError("stream: batch size must be positive");
  if (batch_size > data.size()) throw ConfigError("stream: batch size exceeds the available samples");

  Rng order_rng = make_rng(seed, streams::kStreamOrder);
  Rng noise_rng = make_rng(seed, streams::kCorruption);

  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  Pool shuffled_pool(all);
  std::vector<Pool> class_pools;
  std::vector<std::size_t> nonempty_classes;
  {
    std::vector<std::vector<std::size_t>> by_class(data.class_count);
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
    for (std::size_t c = 0; c < data.class_count; ++c) {
      if (!by_class[c].empty()) nonempty_classes.push_back(c);
      class_pools.emplace_back(std::move(by_class[c]));
    }
  }
  std::size_t sequential_cursor = 0;
  std::size_t run_class = data.class_count;  // none yet
  std::size_t run_left = 0;
  std::geometric_distribution<std::size_t> run_extra(1.0 / schedule.mean_run_length);

  Stream stream;
  for (std::size_t s = 0; s < schedule.segments.size(); ++s) {
    const auto& seg = schedule.segments[s];
    std::size_t domain_id = stream.domains.size();
    for (std::size_t d = 0; d < stream.domains.size(); ++d) {
      if (stream.domains[d].kind == seg.kind && stream.domains[d].severity == seg.severity) domain_id = d;
    }
    if (domain_id == stream.domains.size()) stream.domains.push_back({seg.kind, seg.severity});

    const std::size_t count = seg.batches * batch_size;
    bool wrapped = count > data.size();
    std::vector<std::size_t> order;
    order.reserve(count);
    switch (schedule.order) {
      case OrderMode::shuffled: {
        // Fresh permutation per segment.
        shuffled_pool = Pool(all);
        for (std::size_t i = 0; i < count; ++i) order.push_back(shuffled_pool.draw(order_rng, wrapped));
        break;
      }
      case OrderMode::sequential:
        for (std::size_t i = 0; i < count; ++i) {
          order.push_back(sequential_cursor);
          sequential_cursor = (sequential_cursor + 1) % data.size();
        }
        break;
      case OrderMode::class_sorted_runs:
        for (std::size_t i = 0; i < count; ++i) {
          if (run_left == 0) {
            // Next run: a different class when possible, geometric length.
            std::size_t next = run_class;
            if (nonempty_classes.size() == 1) {
              next = nonempty_classes.front();
            } else {
              std::uniform_int_distribution<std::size_t> pick(0, nonempty_classes.size() - 1);
              while (next == run_class) next = nonempty_classes[pick(order_rng)];
            }
            run_class = next;
            run_left = 1 + run_extra(order_rng);
          }
          order.push_back(class_pools[run_class].draw(order_rng, wrapped));
          --run_left;
        }
        break;
    }
    if (wrapped) {
      stream.resampled = true;
      if (warn) ++warn->resampled_stream;
    }

    for (std::size_t b = 0; b < seg.batches; ++b) {
      const std::span<const std::size_t> rows(order.data() + b * batch_size, batch_size);
      Dataset clean = data.subset(rows);
      StreamBatch batch;
      batch.x = corrupt(clean.samples, seg.kind, seg.severity, noise_rng);
      batch.labels = std::move(clean.labels);
      batch.domain_id = domain_id;
      batch.segment_index = s;
      stream.batches.push_back(std::move(batch));
    }
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Metrics

MetricsAccumulator::MetricsAccumulator(std::size_t class_count, std::size_t window)
    : class_count_(class_count), window_(window) {
  if (class_count_ == 0) throw ConfigError("metrics: class count must be positive");
  if (window_ == 0) throw ConfigError("metrics: window must be positive");
}

BatchRecord MetricsAccumulator::record(std::span<const std::size_t> predictions,
                                       std::span<const std::size_t> truth, std::size_t domain_id) {
  if (predictions.size() != truth.size()) throw ConfigError("metrics: prediction/label count mismatch");
  if (!have_domain_ || domain_id != last_domain_) {
    ring_.clear();
    ring_next_ = ring_correct_ = ring_seen_ = 0;
    have_domain_ = true;
    last_domain_ = domain_id;
  }
  auto& tally = domains_[domain_id];
  if (tally.seen.empty()) {
    tally.seen.assign(class_count_, 0);
    tally.correct.assign(class_count_, 0);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= class_count_) throw ConfigError("metrics: label out of range");
    const bool ok = predictions[i] == truth[i];
    ++tally.seen[truth[i]];
    if (ok) {
      ++tally.correct[truth[i]];
      ++correct;
    }
  }
  seen_ += truth.size();
  correct_ += correct;

  const std::pair<std::size_t, std::size_t> entry{correct, truth.size()};
  if (ring_.size() < window_) {
    ring_.push_back(entry);
  } else {
    ring_correct_ -= ring_[ring_next_].first;
    ring_seen_ -= ring_[ring_next_].second;
    ring_[ring_next_] = entry;
    ring_next_ = (ring_next_ + 1) % window_;
  }
  ring_correct_ += entry.first;
  ring_seen_ += entry.second;

  BatchRecord rec;
  rec.batch_accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  rec.window_accuracy =
      ring_seen_ == 0 ? 0.0 : static_cast<double>(ring_correct_) / static_cast<double>(ring_seen_);
  windowed_.push_back(rec.window_accuracy);
  return rec;
}

Report MetricsAccumulator::finalize() const {
  if (windowed_.empty()) throw UsageError("metrics: finalize before any batch was recorded");
  Report r;
  r.batches = windowed_.size();
  r.windowed = windowed_;
  r.mean_accuracy = seen_ == 0 ? 0.0 : static_cast<double>(correct_) / static_cast<double>(seen_);
  double amca_sum = 0.0;
  for (const auto& [id, tally] : domains_) {
    DomainReport d;
    d.domain_id = id;
    double class_sum = 0.0;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < class_count_; ++c) {
      d.seen += tally.seen[c];
      d.correct += tally.correct[c];
      if (tally.seen[c] == 0) {
        d.absent_classes.push_back(c);
        continue;
      }
      class_sum += static_cast<double>(tally.correct[c]) / static_cast<double>(tally.seen[c]);
      ++classes;
    }
    d.accuracy = d.seen == 0 ? 0.0 : static_cast<double>(d.correct) / static_cast<double>(d.seen);
    d.mean_class_accuracy = classes == 0 ? 0.0 : class_sum / static_cast<double>(classes);
    amca_sum += d.mean_class_accuracy;
    r.per_domain.push_back(std::move(d));
  }
  r.amca = r.per_domain.empty() ? 0.0 : amca_sum / static_cast<double>(r.per_domain.size());
  return r;
}

}  // namespace artta
