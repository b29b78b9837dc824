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

#ifndef INHERNET_SYNTHETIC_H_
#define INHERNET_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "inhernet/dataset.h"
#include "inhernet/nn.h"

namespace inhernet {

enum class TaskKind { kTeacherMimic, kPiecewiseLinear, kClassification };

std::string_view to_string(TaskKind kind);
// "teacher-mimic" | "piecewise-linear" | "classification"
TaskKind parse_task_kind(std::string_view s);

struct SyntheticTask {
  TaskKind kind = TaskKind::kClassification;
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
  std::size_t input_dim = 16;
  // Regression target width, or the class count for kClassification.
  std::size_t output_dim = 4;

  // Additive target noise (standard deviation) for the regression kinds.
  double noise = 0.0;

  // kTeacherMimic: hidden widths of the planted ReLU teacher, the rank of
  // its planted weights and the scale of the full-rank tail.
  std::vector<std::size_t> teacher_hidden{64, 64};
  std::size_t planted_rank = 6;
  double tail_scale = 0.05;

  // kPiecewiseLinear: number of regions, each with its own affine map.
  std::size_t clusters = 2;

  // kPiecewiseLinear / kClassification: spread of the cluster centers in
  // units of the within-cluster standard deviation.
  double separation = 3.0;
  // kClassification: fraction of labels replaced by a different class.
  double label_noise = 0.0;
};

// ReLU MLP whose weights are rank-`planted_rank` products plus a
// `tail_scale` full-rank perturbation, scaled like Kaiming init.
Network make_planted_teacher(std::span<const std::size_t> widths,
                             std::size_t planted_rank, double tail_scale,
                             std::uint64_t seed);

// The teacher that labels a kTeacherMimic task.
Network mimic_teacher(const SyntheticTask& task);

// The full dataset before splitting.
Dataset generate_dataset(const SyntheticTask& task);

// Seeded 80/20 train/eval split of generate_dataset(task).
Split gen_synthetic(const SyntheticTask& task);

// Deterministic 80/20 split of any dataset by a seeded permutation.
Split split_dataset(const Dataset& data, std::uint64_t seed);

}  // namespace inhernet

#endif  // INHERNET_SYNTHETIC_H_
