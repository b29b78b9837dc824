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

#ifndef INHERNET_EXPERIMENTS_H_
#define INHERNET_EXPERIMENTS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "inhernet/synthetic.h"
#include "inhernet/train.h"

namespace inhernet {

// Worker cap for seed sweeps: INHERIT_THREADS when set, otherwise the
// hardware concurrency. Throws RangeError for a malformed value.
std::size_t worker_limit();

// Runs job(0) .. job(count - 1) on at most `workers` threads and rethrows
// the first exception after all workers join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job);

struct SweepOptions {
  std::size_t seeds = 5;
  std::uint64_t base_seed = 1;
  // 0 means worker_limit().
  std::size_t workers = 0;
};

// Classification toy task shared by Insights 1 and 2: a trained MLP teacher
// is inherited at each rank and fine-tuned.
struct ClassificationStudy {
  SyntheticTask task;
  std::vector<std::size_t> teacher_hidden;
  TrainConfig teacher_train;
  TrainConfig student_train;
  // KD runs reuse student_train with these loss settings and rate.
  double kd_lr = 0.0;
  double lambda_kd = 9.0;
  double temperature = 2.0;
  double gate_init_scale = 0.5;

  static ClassificationStudy defaults();
};

struct Insight1Config {
  ClassificationStudy study = ClassificationStudy::defaults();
  std::vector<std::size_t> ranks{2, 4, 8, 16};
  std::size_t heads = 3;
  SweepOptions sweep;
};

struct Insight1Row {
  std::uint64_t seed = 0;
  std::size_t rank = 0;
  double teacher_acc = 0.0;
  double acc_ce = 0.0;
  double acc_kd = 0.0;
  // eval_loss_settled() of each fine-tuning run.
  bool settled_ce = true;
  bool settled_kd = true;
  double kd_delta() const { return acc_kd - acc_ce; }
};

struct Insight1Result {
  std::vector<Insight1Row> rows;
  // Seeds where KD strictly helps at the smallest rank, and where it does
  // not help at the largest.
  std::size_t kd_wins_smallest = 0;
  std::size_t kd_nonwins_largest = 0;
  std::size_t seeds = 0;
  std::size_t unsettled_runs = 0;
  bool regime_flip() const {
    return 2 * kd_wins_smallest > seeds && 2 * kd_nonwins_largest > seeds;
  }
};

Insight1Result run_insight1(const Insight1Config& config);
void write_csv(const Insight1Result& result, std::ostream& out);
std::string summary(const Insight1Result& result);

struct Insight2Config {
  ClassificationStudy study = ClassificationStudy::defaults();
  std::vector<std::size_t> ranks{2, 4, 8, 16};
  std::vector<std::size_t> heads{1, 2, 3, 4};
  // The rank-sweep uses this head count and the head-sweep this rank.
  std::size_t fixed_heads = 3;
  std::size_t mid_rank = 8;
  SweepOptions sweep;
};

struct Insight2Row {
  std::uint64_t seed = 0;
  std::size_t rank = 0;
  std::size_t heads = 0;
  double accuracy = 0.0;
  bool settled = true;
};

struct Insight2Result {
  std::vector<Insight2Row> rows;
  // Ranges of the seed-mean accuracy.
  double range_over_rank = 0.0;
  double range_over_heads = 0.0;
  // Seeds with accuracy(H=3) >= accuracy(H=1) at mid_rank.
  std::size_t h3_not_worse = 0;
  std::size_t seeds = 0;
  std::size_t unsettled_runs = 0;
  bool rank_dominates() const { return range_over_rank > range_over_heads; }
  bool heads_help() const { return 2 * h3_not_worse > seeds; }
};

Insight2Result run_insight2(const Insight2Config& config);
void write_csv(const Insight2Result& result, std::ostream& out);
std::string summary(const Insight2Result& result);

struct Insight3Config {
  SyntheticTask task;
  std::size_t rank = 8;
  std::size_t heads = 3;
  double gate_init_scale = 0.5;
  TrainConfig train;
  // Threshold = factor * teacher eval loss.
  double threshold_factor = 1.05;
  SweepOptions sweep;

  static Insight3Config defaults();
};

struct Insight3Row {
  std::uint64_t seed = 0;
  double teacher_eval_loss = 0.0;
  double threshold = 0.0;
  std::optional<std::size_t> svd_epochs;
  std::optional<std::size_t> nosvd_epochs;
  double svd_final_loss = 0.0;
  double nosvd_final_loss = 0.0;
  bool svd_settled = true;
  bool nosvd_settled = true;
};

struct Insight3Result {
  std::vector<Insight3Row> rows;
  std::size_t epochs = 0;
  // Medians count a run that never reaches the threshold as epochs + 1.
  double median_svd = 0.0;
  double median_nosvd = 0.0;
  std::size_t unsettled_runs = 0;
  bool svd_faster() const { return median_svd < median_nosvd; }
};

Insight3Result run_insight3(const Insight3Config& config);
void write_csv(const Insight3Result& result, std::ostream& out);
std::string summary(const Insight3Result& result);

// Constructive reproduction check: planted-rank teachers inherited at
// rank_for_energy(spectrum, epsilon) per layer.
struct ReproductionRow {
  std::uint64_t seed = 0;
  std::vector<std::size_t> ranks;
  double mse = 0.0;
  std::size_t teacher_params = 0;
  std::size_t inherited_params = 0;
};

std::vector<ReproductionRow> run_energy_rank_reproduction(
    std::size_t teachers, double epsilon, std::uint64_t base_seed = 1);

}  // namespace inhernet

#endif  // INHERNET_EXPERIMENTS_H_
