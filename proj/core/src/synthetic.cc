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

#include "inhernet/synthetic.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "inhernet/errors.h"
#include "inhernet/rng.h"

namespace inhernet {
namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double scale,
                CounterRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

void check_sizes(const SyntheticTask& t) {
  if (t.samples == 0 || t.input_dim == 0 || t.output_dim == 0) {
    throw RangeError("synthetic task sizes must be positive");
  }
  if (t.kind == TaskKind::kClassification && t.output_dim < 2) {
    throw RangeError("classification needs at least two classes");
  }
  if (t.kind == TaskKind::kPiecewiseLinear && t.clusters == 0) {
    throw RangeError("piecewise-linear task needs at least one cluster");
  }
  if (t.label_noise < 0.0 || t.label_noise > 1.0) {
    throw RangeError("label noise must lie in [0, 1]");
  }
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kTeacherMimic:
      return "teacher-mimic";
    case TaskKind::kPiecewiseLinear:
      return "piecewise-linear";
    case TaskKind::kClassification:
      return "classification";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view s) {
  for (TaskKind k : {TaskKind::kTeacherMimic, TaskKind::kPiecewiseLinear,
                     TaskKind::kClassification}) {
    if (s == to_string(k)) return k;
  }
  throw RangeError("unknown task kind '" + std::string(s) + "'");
}

Network make_planted_teacher(std::span<const std::size_t> widths,
                             std::size_t planted_rank, double tail_scale,
                             std::uint64_t seed) {
  if (widths.size() < 2) throw RangeError("a teacher needs >= 2 widths");
  if (planted_rank == 0) throw RangeError("planted rank must be positive");
  CounterRng rng(seed, rng_stream::kTeacher);
  Network net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    const std::size_t k = std::min({planted_rank, in, out});
    const double he = std::sqrt(2.0 / static_cast<double>(in));
    const Matrix a = gaussian(in, k, 1.0 / std::sqrt(static_cast<double>(k)), rng);
    const Matrix b = gaussian(k, out, he, rng);
    Matrix w = matmul(a, b);
    if (tail_scale != 0.0) w += gaussian(in, out, tail_scale * he, rng);
    net.add(DenseLayer(std::move(w), std::vector<double>(out, 0.0)));
    if (i + 2 < widths.size()) net.add(ReluLayer(out));
  }
  return net;
}

Network mimic_teacher(const SyntheticTask& task) {
  std::vector<std::size_t> widths{task.input_dim};
  widths.insert(widths.end(), task.teacher_hidden.begin(),
                task.teacher_hidden.end());
  widths.push_back(task.output_dim);
  return make_planted_teacher(widths, task.planted_rank, task.tail_scale,
                              task.seed);
}

Dataset generate_dataset(const SyntheticTask& task) {
  check_sizes(task);
  CounterRng rng(task.seed, rng_stream::kData);
  const std::size_t n = task.samples, d = task.input_dim, o = task.output_dim;
  Dataset data;
  switch (task.kind) {
    case TaskKind::kTeacherMimic: {
      data.inputs = gaussian(n, d, 1.0, rng);
      data.targets = mimic_teacher(task).apply(data.inputs);
      if (task.noise != 0.0) data.targets += gaussian(n, o, task.noise, rng);
      break;
    }
    case TaskKind::kPiecewiseLinear: {
      const std::size_t k = task.clusters;
      const Matrix centers = gaussian(k, d, task.separation, rng);
      std::vector<Matrix> maps, offsets;
      for (std::size_t j = 0; j < k; ++j) {
        maps.push_back(
            gaussian(d, o, 1.0 / std::sqrt(static_cast<double>(d)), rng));
        offsets.push_back(gaussian(1, o, 1.0, rng));
      }
      data.inputs = Matrix(n, d);
      data.targets = Matrix(n, o);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.below(k);
        auto x = data.inputs.row(i);
        for (std::size_t c = 0; c < d; ++c) x[c] = centers(j, c) + rng.normal();
        for (std::size_t t = 0; t < o; ++t) {
          double y = offsets[j](0, t);
          for (std::size_t c = 0; c < d; ++c) y += x[c] * maps[j](c, t);
          data.targets(i, t) = y;
        }
      }
      if (task.noise != 0.0) data.targets += gaussian(n, o, task.noise, rng);
      break;
    }
    case TaskKind::kClassification: {
      const Matrix centers = gaussian(o, d, task.separation, rng);
      data.inputs = Matrix(n, d);
      data.num_classes = o;
      data.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = rng.below(o);
        auto x = data.inputs.row(i);
        for (std::size_t c = 0; c < d; ++c) {
          x[c] = centers(label, c) + rng.normal();
        }
        std::size_t observed = label;
        if (task.label_noise > 0.0 && rng.uniform() < task.label_noise) {
          observed = (label + 1 + rng.below(o - 1)) % o;
        }
        data.labels[i] = observed;
      }
      break;
    }
  }
  return data;
}

Split split_dataset(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  const auto order = permutation(n, seed, rng_stream::kSplit);
  const std::size_t n_train = n * 4 / 5;
  const std::span<const std::size_t> all(order);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

Split gen_synthetic(const SyntheticTask& task) {
  return split_dataset(generate_dataset(task), task.seed);
}

}  // namespace inhernet
