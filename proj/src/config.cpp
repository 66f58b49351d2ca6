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

#include "artta/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

namespace artta {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_same_v<T, bool>) {
      s += v[i] ? "1" : "0";
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Key {
  std::string section;
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  std::string dotted() const { return section + "." + name; }
};

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    auto add = [&](std::string sec, std::string name, auto get, auto set) {
      k.push_back({std::move(sec), std::move(name), get, set});
    };
    add("data", "path", [](const RunConfig& c) { return c.dataset_path; },
        [](RunConfig& c, const std::string& v) { c.dataset_path = v; });
    add("data", "stream_path", [](const RunConfig& c) { return c.stream_path; },
        [](RunConfig& c, const std::string& v) { c.stream_path = v; });

    add("network", "layers", [](const RunConfig& c) { return join(c.network.layer_sizes); },
        [](RunConfig& c, const std::string& v) {
          c.network.layer_sizes.clear();
          for (const auto& s : split_list(v)) c.network.layer_sizes.push_back(to_size("network.layers", s));
        });
    add("network", "bn", [](const RunConfig& c) { return join(c.network.bn_after); },
        [](RunConfig& c, const std::string& v) {
          c.network.bn_after.clear();
          for (const auto& s : split_list(v)) c.network.bn_after.push_back(to_bool("network.bn", s));
        });

    add("pretrain", "epochs", [](const RunConfig& c) { return std::to_string(c.pretrain.epochs); },
        [](RunConfig& c, const std::string& v) { c.pretrain.epochs = to_size("pretrain.epochs", v); });
    add("pretrain", "lr", [](const RunConfig& c) { return fmt(c.pretrain.lr); },
        [](RunConfig& c, const std::string& v) { c.pretrain.lr = to_double("pretrain.lr", v); });
    add("pretrain", "momentum", [](const RunConfig& c) { return fmt(c.pretrain.momentum); },
        [](RunConfig& c, const std::string& v) { c.pretrain.momentum = to_double("pretrain.momentum", v); });
    add("pretrain", "batch_size", [](const RunConfig& c) { return std::to_string(c.pretrain.batch_size); },
        [](RunConfig& c, const std::string& v) { c.pretrain.batch_size = to_size("pretrain.batch_size", v); });
    add("pretrain", "seed", [](const RunConfig& c) { return std::to_string(c.pretrain.seed); },
        [](RunConfig& c, const std::string& v) { c.pretrain.seed = to_u64("pretrain.seed", v); });
    add("pretrain", "model_path", [](const RunConfig& c) { return c.pretrain.model_path; },
        [](RunConfig& c, const std::string& v) { c.pretrain.model_path = v; });

    add("method", "name", [](const RunConfig& c) { return to_string(c.method); },
        [](RunConfig& c, const std::string& v) { c.method = parse_method(v); });

    add("adapt", "lr", [](const RunConfig& c) { return fmt(c.engine.lr); },
        [](RunConfig& c, const std::string& v) { c.engine.lr = to_double("adapt.lr", v); });
    add("adapt", "momentum", [](const RunConfig& c) { return fmt(c.engine.momentum); },
        [](RunConfig& c, const std::string& v) { c.engine.momentum = to_double("adapt.momentum", v); });
    add("adapt", "teacher_alpha", [](const RunConfig& c) { return fmt(c.engine.teacher_alpha); },
        [](RunConfig& c, const std::string& v) { c.engine.teacher_alpha = to_double("adapt.teacher_alpha", v); });
    add("adapt", "scope", [](const RunConfig& c) { return c.engine.scope.to_string(); },
        [](RunConfig& c, const std::string& v) { c.engine.scope = TrainScope::parse(v); });
    add("adapt", "bn_stats", [](const RunConfig& c) { return to_string(c.engine.bn_stats); },
        [](RunConfig& c, const std::string& v) { c.engine.bn_stats = parse_bn_stats_mode(v); });

    add("dynbn", "gamma", [](const RunConfig& c) { return fmt(c.engine.dynbn.gamma); },
        [](RunConfig& c, const std::string& v) { c.engine.dynbn.gamma = to_double("dynbn.gamma", v); });
    add("dynbn", "alpha", [](const RunConfig& c) { return fmt(c.engine.dynbn.alpha); },
        [](RunConfig& c, const std::string& v) { c.engine.dynbn.alpha = to_double("dynbn.alpha", v); });
    add("dynbn", "beta_init", [](const RunConfig& c) { return fmt(c.engine.dynbn.beta_init); },
        [](RunConfig& c, const std::string& v) { c.engine.dynbn.beta_init = to_double("dynbn.beta_init", v); });
    add("dynbn", "eps", [](const RunConfig& c) { return fmt(c.engine.dynbn.eps); },
        [](RunConfig& c, const std::string& v) { c.engine.dynbn.eps = to_double("dynbn.eps", v); });

    add("replay", "capacity", [](const RunConfig& c) { return std::to_string(c.replay_capacity); },
        [](RunConfig& c, const std::string& v) { c.replay_capacity = to_size("replay.capacity", v); });
    add("replay", "selection", [](const RunConfig& c) { return to_string(c.selection); },
        [](RunConfig& c, const std::string& v) { c.selection = parse_selection_mode(v); });
    add("replay", "mode", [](const RunConfig& c) { return to_string(c.engine.replay); },
        [](RunConfig& c, const std::string& v) { c.engine.replay = parse_replay_mode(v); });
    add("replay", "psi", [](const RunConfig& c) { return fmt(c.engine.mixup.psi); },
        [](RunConfig& c, const std::string& v) { c.engine.mixup.psi = to_double("replay.psi", v); });
    add("replay", "rho", [](const RunConfig& c) { return fmt(c.engine.mixup.rho); },
        [](RunConfig& c, const std::string& v) { c.engine.mixup.rho = to_double("replay.rho", v); });
    add("replay", "per_sample_lambda", [](const RunConfig& c) { return fmt(c.engine.per_sample_lambda); },
        [](RunConfig& c, const std::string& v) {
          c.engine.per_sample_lambda = to_bool("replay.per_sample_lambda", v);
        });

    add("stream", "schedule", [](const RunConfig& c) { return c.schedule.segments_to_string(); },
        [](RunConfig& c, const std::string& v) { c.schedule.segments = DomainSchedule::parse_segments(v); });
    add("stream", "order", [](const RunConfig& c) { return to_string(c.schedule.order); },
        [](RunConfig& c, const std::string& v) { c.schedule.order = parse_order_mode(v); });
    add("stream", "mean_run_length", [](const RunConfig& c) { return fmt(c.schedule.mean_run_length); },
        [](RunConfig& c, const std::string& v) {
          c.schedule.mean_run_length = to_double("stream.mean_run_length", v);
        });
    add("stream", "batch_size", [](const RunConfig& c) { return std::to_string(c.batch_size); },
        [](RunConfig& c, const std::string& v) { c.batch_size = to_size("stream.batch_size", v); });

    add("run", "seeds", [](const RunConfig& c) { return join(c.seeds); },
        [](RunConfig& c, const std::string& v) {
          c.seeds.clear();
          for (const auto& s : split_list(v)) c.seeds.push_back(to_u64("run.seeds", s));
        });
    add("run", "window", [](const RunConfig& c) { return std::to_string(c.window); },
        [](RunConfig& c, const std::string& v) { c.window = to_size("run.window", v); });
    add("run", "label", [](const RunConfig& c) { return c.label; },
        [](RunConfig& c, const std::string& v) { c.label = v; });
    add("run", "out", [](const RunConfig& c) { return c.out_dir; },
        [](RunConfig& c, const std::string& v) { c.out_dir = v; });
    return k;
  }();
  return keys;
}

const Key& find_key(const std::string& section, const std::string& name) {
  for (const auto& k : registry()) {
    if (k.section == section && k.name == name) return k;
  }
  throw ConfigError("unknown config key '" + section + "." + name + "'");
}

}  // namespace

void RunConfig::validate() const {
  network.validate();
  engine.validate();
  schedule.validate();
  if (batch_size == 0) throw ConfigError("stream.batch_size must be positive");
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  if (window == 0) throw ConfigError("run.window must be positive");
  if (pretrain.batch_size == 0) throw ConfigError("pretrain.batch_size must be positive");
  if (!(pretrain.lr >= 0.0)) throw ConfigError("pretrain.lr must be nonnegative");
  if (!(pretrain.momentum >= 0.0 && pretrain.momentum < 1.0)) throw ConfigError("pretrain.momentum must lie in [0,1)");
  DynBNState probe(BNStats::standard(1), engine.dynbn);  // range checks
  (void)probe;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const auto& key = find_key(section, trim(line.substr(0, eq)));
    key.set(c, trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : registry()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.name << " = " << k.get(config) << '\n';
  }
  return out.str();
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not section.key=value");
  const std::string dotted = trim(assignment.substr(0, eq));
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigError("override key '" + dotted + "' is not section.key");
  find_key(dotted.substr(0, dot), dotted.substr(dot + 1)).set(config, trim(assignment.substr(eq + 1)));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.dotted());
  return out;
}

}  // namespace artta
