// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INHERNET_VERIFY_H_
#define INHERNET_VERIFY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace inhernet {

enum class Suite { kSvd, kGradients, kTheory, kAll };

// "svd" | "gradients" | "theory" | "all"; RangeError otherwise.
Suite parse_suite(std::string_view s);
std::string_view to_string(Suite s);

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 2026;
  // Extra checkpoints to load and round-trip (checked in every suite).
  std::vector<std::filesystem::path> checkpoints;
};

// Runs the self-checks of the chosen suite. Never throws for a failing
// check; the failure lands in the result.
std::vector<CheckResult> run_verify(Suite suite, const VerifyOptions& options = {});

// Fixed-width pass/fail table with a totals line.
void print_table(const std::vector<CheckResult>& results, std::ostream& out);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace inhernet

#endif  // INHERNET_VERIFY_H_
