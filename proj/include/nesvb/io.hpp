/* Copyright 2026 The nesvb Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

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

#include "nesvb/gmm.hpp"

namespace nesvb {

/// %.9g
std::string format_real(double v);
/// Rounds to the value format_real prints.
double round_to_written(double v);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// `x1,x2,true_label`, one row per point.
std::string dataset_csv(const GmmDataset& data);
/// `x1,x2,true_label,assigned_label`.
std::string assignments_csv(const GmmDataset& data, const std::vector<int>& assigned);

}  // namespace nesvb
