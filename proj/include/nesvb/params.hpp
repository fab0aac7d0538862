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

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nesvb/errors.hpp"

namespace nesvb {

struct Slice {
  std::string name;
  Eigen::Index offset;
  Eigen::Index length;

  bool operator==(const Slice&) const = default;
};

/// Named, contiguous, disjoint slices covering a flat parameter vector.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<std::pair<std::string, Eigen::Index>> named_lengths);

  Eigen::Index size() const { return size_; }
  const std::vector<Slice>& slices() const { return slices_; }
  const Slice& slice(std::string_view name) const;
  bool contains(std::string_view name) const;

  bool operator==(const ParamLayout& other) const { return slices_ == other.slices_; }

 private:
  std::vector<Slice> slices_;
  Eigen::Index size_ = 0;
};

template <typename Scalar>
class BasicParamVector {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BasicParamVector(std::shared_ptr<const ParamLayout> layout)
      : layout_(std::move(layout)), values_(Vector::Zero(layout_->size())) {}

  BasicParamVector(std::shared_ptr<const ParamLayout> layout, Vector values)
      : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_->size()) throw LayoutError("ParamVector: value count does not match layout");
  }

  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const { return layout_; }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }

  auto segment(std::string_view name) const {
    const Slice& s = layout_->slice(name);
    return values_.segment(s.offset, s.length);
  }
  auto segment(std::string_view name) {
    const Slice& s = layout_->slice(name);
    return values_.segment(s.offset, s.length);
  }
  /// First entry of a slice; convenient for scalar slices.
  Scalar operator[](std::string_view name) const { return values_(layout_->slice(name).offset); }
  Scalar& operator[](std::string_view name) { return values_(layout_->slice(name).offset); }

  bool all_finite() const { return values_.allFinite(); }

  /// Same layout, new values.
  BasicParamVector with_values(Vector values) const { return BasicParamVector(layout_, std::move(values)); }

 private:
  std::shared_ptr<const ParamLayout> layout_;
  Vector values_;
};

using ParamVector = BasicParamVector<double>;

/// Throws LayoutError unless `params` uses exactly `expected`.
void require_layout(const ParamVector& params, const ParamLayout& expected, std::string_view who);

}  // namespace nesvb
