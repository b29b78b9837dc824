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

#ifndef INHERNET_TRAIN_H_
#define INHERNET_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "inhernet/dataset.h"
#include "inhernet/nn.h"

namespace inhernet {

enum class Schedule { kInverseSqrt, kConstant, kStepDecay };
enum class LossKind { kCrossEntropy, kMse, kCrossEntropyKd };

std::string_view to_string(Schedule s);
std::string_view to_string(LossKind l);
Schedule parse_schedule(std::string_view s);  // "inv-sqrt" | "constant" | "step"
LossKind parse_loss(std::string_view s);      // "ce" | "mse" | "ce+kd"

struct TrainConfig {
  double base_lr = 0.1;
  Schedule schedule = Schedule::kInverseSqrt;
  // kStepDecay: the rate is multiplied by decay_factor at each milestone
  // (optimizer steps).
  std::vector<std::size_t> milestones;
  double decay_factor = 0.1;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kCrossEntropy;
  double lambda_ce = 1.0;
  double lambda_kd = 9.0;
  double temperature = 2.0;
  // Eval-loss level for RunLog::epochs_to_threshold.
  std::optional<double> threshold;

  // Throws RangeError on a nonpositive rate, temperature, batch size or a
  // negative loss weight.
  void validate() const;
};

// Step size at optimizer step t (1-based). InverseSqrt gives eta / sqrt(t).
double learning_rate(const TrainConfig& config, std::size_t step);

// theta <- theta - eta_t * grad over every parameter block. Throws
// NumericalError naming the step when a gradient entry is not finite.
void sgd_step(std::span<const ParamRef> params, std::size_t step,
              const TrainConfig& config);

// lambda_ce * CE(student, labels)
//   + lambda_kd * tau^2 * KL(softmax(teacher / tau) || softmax(student / tau)),
// averaged over the batch; the gradient is with respect to student logits.
LossValue kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                  std::span<const std::size_t> labels,
                  const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;  // training objective on the eval split
  double eval_acc = 0.0;  // NaN for regression data
  double grad_norm_mean = 0.0;
  double grad_norm_var = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> epochs_to_threshold;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // NaN for regression data
};

// Task loss on a dataset: cross entropy for classification, MSE otherwise.
Evaluation evaluate(const Network& net, const Dataset& data);

// Minibatch SGD. Each epoch visits the training set in a permutation drawn
// from CounterRng(seed, shuffle stream + epoch). The KD loss needs a teacher;
// its logits are computed once up front. Throws NumericalError with the
// epoch and step on a non-finite loss.
RunLog train(Network& net, const Split& data, const TrainConfig& config,
             const Network* teacher = nullptr);

// True when the mean eval loss over the last `window` epochs is at most the
// mean over the first `window` (windows shrink for short runs).
bool eval_loss_settled(const RunLog& log, std::size_t window = 10);

// Columns: epoch,train_loss,eval_loss,eval_acc,grad_norm_mean,grad_norm_var,
// wall_ms. Values print in shortest round-trip form.
void write_runlog_csv(const RunLog& log, std::ostream& out,
                      bool include_wall_time = true);

struct GatingVarianceRecord {
  double adaptive_variance = 0.0;
  double uniform_variance = 0.0;
  std::size_t minibatches = 0;
};

class InherNetLayer;

// Empirical variance of per-minibatch gradients of the shared
// down-projection (and output bias) of `layer`: once with its learned gate
// and once with the gate frozen at uniform. MSE on regression targets, CE on
// labels. A measurement, not a test.
GatingVarianceRecord gating_grad_variance(const InherNetLayer& layer,
                                          const Dataset& data,
                                          const TrainConfig& config);

}  // namespace inhernet

#endif  // INHERNET_TRAIN_H_
