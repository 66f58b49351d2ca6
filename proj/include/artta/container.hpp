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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "artta/tensor.hpp"

// "mnet-v1" binary container shared by model, exemplar and dataset files.
//
// Layout:
//   u64 (little-endian)   header length H in bytes
//   H bytes               UTF-8 JSON header
//   payload               concatenated tensors, little-endian f64, row-major
//
// Header: {"version": "mnet-v1", "section": <tag>, "meta": {...},
//          "tensors": [{"name", "rows", "cols", "offset"}, ...]}
// where "offset" is the byte offset of the tensor from the payload start.
namespace artta {

inline constexpr std::string_view kContainerVersion = "mnet-v1";

struct NamedTensor {
  std::string name;
  Tensor2D value;
};

struct Container {
  std::string section;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const Tensor2D& get(std::string_view name) const;
  bool has(std::string_view name) const;
  void add(std::string name, Tensor2D value) { tensors.push_back({std::move(name), std::move(value)}); }
};

std::string encode_container(const Container& c);
Container decode_container(std::string_view bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace artta
