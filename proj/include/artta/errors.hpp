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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace artta {

// Invalid shapes, unknown enum names, malformed config or files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API called in a state that does not support it (e.g. backward on an
// eval-mode cache).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-fatal numerical events. Every counter only ever increases.
struct Warnings {
  std::size_t prob_clamped = 0;      // log argument clamped in a loss
  std::size_t var_clamped = 0;       // nonpositive variance clamped to eps
  std::size_t degenerate_batch = 0;  // single-row batch asked for stats
  std::size_t deficient_class = 0;   // replay class with too few samples
  std::size_t resampled_stream = 0;  // stream segment drew with replacement

  Warnings& operator+=(const Warnings& o) {
    prob_clamped += o.prob_clamped;
    var_clamped += o.var_clamped;
    degenerate_batch += o.degenerate_batch;
    deficient_class += o.deficient_class;
    resampled_stream += o.resampled_stream;
    return *this;
  }
};

}  // namespace artta
