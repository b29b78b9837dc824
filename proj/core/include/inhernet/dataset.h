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

#ifndef INHERNET_DATASET_H_
#define INHERNET_DATASET_H_

#include <cstddef>
#include <span>
#include <vector>

#include "inhernet/linalg.h"

namespace inhernet {

// Samples along rows. Regression data fills `targets`; classification data
// fills `labels` and sets num_classes > 0.
struct Dataset {
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return inputs.rows(); }
  bool is_classification() const { return num_classes > 0; }
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct Split {
  Dataset train;
  Dataset eval;
};

}  // namespace inhernet

#endif  // INHERNET_DATASET_H_
