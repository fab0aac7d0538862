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

#include "nesvb/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nesvb {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double round_to_written(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string dataset_csv(const GmmDataset& data) {
  std::ostringstream out;
  out << "x1,x2,true_label\n";
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out << format_real(data.points(i, 0)) << ',' << format_real(data.points(i, 1)) << ',' << data.labels[i] << '\n';
  return out.str();
}

std::string assignments_csv(const GmmDataset& data, const std::vector<int>& assigned) {
  std::ostringstream out;
  out << "x1,x2,true_label,assigned_label\n";
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out << format_real(data.points(i, 0)) << ',' << format_real(data.points(i, 1)) << ',' << data.labels[i] << ','
        << assigned[i] << '\n';
  return out.str();
}

}  // namespace nesvb
