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
#include <string>
#include <vector>

#include "artta/engine.hpp"
#include "artta/micronet.hpp"
#include "artta/replay.hpp"
#include "artta/streambench.hpp"

// Run configuration. On disk it is an INI-like text file of flat
// `key = value` lines grouped under `[section]` headers; `#` starts a
// comment. Every key has a default; unknown keys are rejected. Overrides use
// the dotted form `section.key=value`.
namespace artta {

struct PretrainConfig {
  std::size_t epochs = 40;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::string model_path;  // load instead of training when set

  bool operator==(const PretrainConfig&) const = default;
};

struct RunConfig {
  std::string dataset_path;  // source (training) data
  std::string stream_path;   // base data for the test stream; dataset_path when empty
  NetworkSpec network{{16, 32, 32, 4}, {true, true}};
  PretrainConfig pretrain;
  Method method = Method::ar_tta;
  EngineConfig engine;
  std::size_t replay_capacity = 2000;
  SelectionMode selection = SelectionMode::balanced;
  DomainSchedule schedule{{Segment{Corruption::gaussian_noise, 5, 100}}, OrderMode::shuffled, 20.0};
  std::size_t batch_size = 10;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t window = 100;
  std::string label;  // row name in comparisons; method name when empty
  std::string out_dir = "artta_run";

  void validate() const;
  std::string display_label() const { return label.empty() ? to_string(method) : label; }
  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& config);

/// Applies one `section.key=value` override.
void apply_override(RunConfig& config, const std::string& assignment);

/// Dotted names of every recognised key, in serialization order.
std::vector<std::string> config_keys();

}  // namespace artta
