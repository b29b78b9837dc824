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

#ifndef INHERNET_CSV_H_
#define INHERNET_CSV_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "inhernet/dataset.h"

namespace inhernet {

struct CsvSchema {
  // When set, the last column holds an integer class label.
  bool classification = false;
  // Class count; 0 infers max(label) + 1.
  std::size_t num_classes = 0;
  // Regression only: the trailing columns that form the target.
  std::size_t target_columns = 1;
  char delimiter = ',';
};

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Header row first; every later row must have the header's column count.
// Throws ParseError with the 1-based line number on ragged rows,
// non-numeric cells or bad labels.
Dataset read_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Shortest round-trip formatting, so read_csv(write_csv(d)) == d.
void write_csv(const Dataset& data, std::ostream& out, const CsvSchema& schema);
void save_csv(const Dataset& data, const std::filesystem::path& path,
              const CsvSchema& schema);

}  // namespace inhernet

#endif  // INHERNET_CSV_H_
