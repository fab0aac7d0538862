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

#include "nesvb/params.hpp"

#include <set>

namespace nesvb {

ParamLayout::ParamLayout(std::vector<std::pair<std::string, Eigen::Index>> named_lengths) {
  std::set<std::string, std::less<>> seen;
  for (auto& [name, length] : named_lengths) {
    if (length <= 0) throw LayoutError("ParamLayout: slice '" + name + "' must have positive length");
    if (!seen.insert(name).second) throw LayoutError("ParamLayout: duplicate slice '" + name + "'");
    slices_.push_back(Slice{std::move(name), size_, length});
    size_ += length;
  }
}

const Slice& ParamLayout::slice(std::string_view name) const {
  for (const auto& s : slices_)
    if (s.name == name) return s;
  throw LayoutError("ParamLayout: no slice named '" + std::string(name) + "'");
}

bool ParamLayout::contains(std::string_view name) const {
  for (const auto& s : slices_)
    if (s.name == name) return true;
  return false;
}

void require_layout(const ParamVector& params, const ParamLayout& expected, std::string_view who) {
  if (!(params.layout() == expected))
    throw LayoutError(std::string(who) + ": parameter layout does not match the model");
}

}  // namespace nesvb
