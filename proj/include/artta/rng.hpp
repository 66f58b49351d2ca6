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
#include <random>
#include <string_view>

namespace artta {

using Rng = std::mt19937_64;

// Named sub-stream names. One master seed feeds all of them independently,
// so extra draws in one component never shift another component's draws.
namespace streams {
inline constexpr std::string_view kPretrain = "pretrain";
inline constexpr std::string_view kBuffer = "buffer";
inline constexpr std::string_view kStreamOrder = "stream_order";
inline constexpr std::string_view kCorruption = "corruption";
inline constexpr std::string_view kLambda = "lambda";
inline constexpr std::string_view kExemplars = "exemplars";
inline constexpr std::string_view kData = "data";
}  // namespace streams

std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

inline Rng make_rng(std::uint64_t master, std::string_view name) {
  return Rng(derive_seed(master, name));
}

}  // namespace artta
