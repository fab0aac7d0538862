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

#include <iosfwd>
#include <string>
#include <vector>

#include "nesvb/gradcheck.hpp"

namespace nesvb::cli {

/// Exit codes: 0 ok, 1 verification failure, 2 configuration error,
/// 3 at least one seed diverged (outputs still written).
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kDiverged = 3 };

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `verify` against an explicit suite; the CLI passes the default one.
int verify(const std::vector<Check>& suite, std::ostream& out);

}  // namespace nesvb::cli
