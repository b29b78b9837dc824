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

#include "inhernet/train.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "inhernet/csv.h"
#include "inhernet/errors.h"
#include "inhernet/inherit.h"
#include "inhernet/rng.h"

namespace inhernet {
namespace {

double squared_norm(std::span<const ParamRef> params) {
  double s = 0.0;
  for (const ParamRef& p : params) {
    for (double g : p.grad) s += g * g;
  }
  return s;
}

std::vector<std::size_t> labels_at(const Dataset& data,
                                   std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.labels.at(i));
  return out;
}

void require_task_data(const Dataset& data, LossKind loss) {
  if (loss == LossKind::kMse) {
    if (data.targets.rows() != data.size()) {
      throw StateError("MSE training needs regression targets");
    }
  } else if (!data.is_classification() || data.labels.size() != data.size()) {
    throw StateError("cross-entropy training needs class labels");
  }
}

double mean_and_var(const std::vector<double>& xs, double* var) {
  if (xs.empty()) {
    *var = 0.0;
    return 0.0;
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - mean) * (x - mean);
  *var = v / static_cast<double>(xs.size());
  return mean;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.inputs = inputs.gather_rows(indices);
  if (targets.rows() == inputs.rows() && !targets.empty()) {
    out.targets = targets.gather_rows(indices);
  }
  if (labels.size() == inputs.rows()) {
    for (std::size_t i : indices) out.labels.push_back(labels[i]);
  }
  return out;
}

std::string_view to_string(Schedule s) {
  switch (s) {
    case Schedule::kInverseSqrt:
      return "inv-sqrt";
    case Schedule::kConstant:
      return "constant";
    case Schedule::kStepDecay:
      return "step";
  }
  return "unknown";
}

std::string_view to_string(LossKind l) {
  switch (l) {
    case LossKind::kCrossEntropy:
      return "ce";
    case LossKind::kMse:
      return "mse";
    case LossKind::kCrossEntropyKd:
      return "ce+kd";
  }
  return "unknown";
}

Schedule parse_schedule(std::string_view s) {
  for (Schedule v :
       {Schedule::kInverseSqrt, Schedule::kConstant, Schedule::kStepDecay}) {
    if (s == to_string(v)) return v;
  }
  throw RangeError("unknown schedule '" + std::string(s) + "'");
}

LossKind parse_loss(std::string_view s) {
  for (LossKind v :
       {LossKind::kCrossEntropy, LossKind::kMse, LossKind::kCrossEntropyKd}) {
    if (s == to_string(v)) return v;
  }
  throw RangeError("unknown loss '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
    throw RangeError("learning rate must be positive");
  }
  if (!(temperature > 0.0)) throw RangeError("temperature must be positive");
  if (batch_size == 0) throw RangeError("batch size must be positive");
  if (lambda_ce < 0.0 || lambda_kd < 0.0) {
    throw RangeError("loss weights must be nonnegative");
  }
  if (!(decay_factor > 0.0)) throw RangeError("decay factor must be positive");
}

double learning_rate(const TrainConfig& config, std::size_t step) {
  if (step == 0) throw RangeError("optimizer steps are counted from 1");
  switch (config.schedule) {
    case Schedule::kInverseSqrt:
      return config.base_lr / std::sqrt(static_cast<double>(step));
    case Schedule::kConstant:
      return config.base_lr;
    case Schedule::kStepDecay: {
      double lr = config.base_lr;
      for (std::size_t m : config.milestones) {
        if (step >= m) lr *= config.decay_factor;
      }
      return lr;
    }
  }
  return config.base_lr;
}

void sgd_step(std::span<const ParamRef> params, std::size_t step,
              const TrainConfig& config) {
  for (const ParamRef& p : params) {
    for (double g : p.grad) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in " + p.name +
                                 " at step " + std::to_string(step),
                             g);
      }
    }
  }
  const double lr = learning_rate(config, step);
  for (const ParamRef& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.value[i] -= lr * p.grad[i];
    }
  }
}

LossValue kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                  std::span<const std::size_t> labels,
                  const TrainConfig& config) {
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols()) {
    throw ShapeError("student logits " + student_logits.shape_string() +
                     " vs teacher logits " + teacher_logits.shape_string());
  }
  const std::size_t batch = student_logits.rows();
  const std::size_t k = student_logits.cols();
  const double tau = config.temperature;
  LossValue out{0.0, Matrix(batch, k)};
  if (config.lambda_ce != 0.0) {
    LossValue ce = cross_entropy(student_logits, labels);
    out.value = config.lambda_ce * ce.value;
    out.grad = config.lambda_ce * std::move(ce.grad);
  }
  if (config.lambda_kd == 0.0 || batch == 0) return out;

  std::vector<double> s(k), t(k);
  double kl = 0.0;
  const double scale = config.lambda_kd * tau / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      s[j] = student_logits(i, j) / tau;
      t[j] = teacher_logits(i, j) / tau;
    }
    const auto ps = softmax(s);
    const auto pt = softmax(t);
    // Log-probabilities from the shifted logits to avoid log(0).
    double smax = s[0], tmax = t[0];
    for (std::size_t j = 1; j < k; ++j) {
      smax = std::max(smax, s[j]);
      tmax = std::max(tmax, t[j]);
    }
    double slse = 0.0, tlse = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      slse += std::exp(s[j] - smax);
      tlse += std::exp(t[j] - tmax);
    }
    slse = smax + std::log(slse);
    tlse = tmax + std::log(tlse);
    for (std::size_t j = 0; j < k; ++j) {
      kl += pt[j] * ((t[j] - tlse) - (s[j] - slse));
      out.grad(i, j) += scale * (ps[j] - pt[j]);
    }
  }
  out.value += config.lambda_kd * tau * tau * kl / static_cast<double>(batch);
  return out;
}

Evaluation evaluate(const Network& net, const Dataset& data) {
  Evaluation e;
  if (data.size() == 0) {
    e.loss = std::numeric_limits<double>::quiet_NaN();
    e.accuracy = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  const Matrix out = net.apply(data.inputs);
  if (data.is_classification()) {
    e.loss = cross_entropy(out, data.labels).value;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < out.rows(); ++i) {
      const auto row = out.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (best == data.labels[i]) ++correct;
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  } else {
    e.loss = mse_loss(out, data.targets).value;
    e.accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return e;
}

RunLog train(Network& net, const Split& data, const TrainConfig& config,
             const Network* teacher) {
  config.validate();
  RunLog log;
  if (config.epochs == 0) return log;
  const Dataset& tr = data.train;
  require_task_data(tr, config.loss);
  if (config.loss == LossKind::kCrossEntropyKd && teacher == nullptr) {
    throw StateError("distillation needs a teacher network");
  }
  const std::size_t n = tr.size();
  if (n == 0) throw StateError("training split is empty");
  const Dataset& ev_data = data.eval.size() ? data.eval : tr;
  Matrix teacher_logits;
  Matrix teacher_eval_logits;
  if (config.loss == LossKind::kCrossEntropyKd) {
    teacher_logits = teacher->apply(tr.inputs);
    teacher_eval_logits = teacher->apply(ev_data.inputs);
  }

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order =
        permutation(n, config.seed, rng_stream::kShuffleBase + epoch);
    double loss_sum = 0.0;
    std::vector<double> grad_norms;
    for (std::size_t first = 0; first < n; first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - first);
      const std::span<const std::size_t> idx(order.data() + first, count);
      const Matrix xb = tr.inputs.gather_rows(idx);
      ++step;
      LossValue loss;
      try {
        const Matrix out = net.forward(xb);
        switch (config.loss) {
          case LossKind::kMse:
            loss = mse_loss(out, tr.targets.gather_rows(idx));
            break;
          case LossKind::kCrossEntropy:
            loss = cross_entropy(out, labels_at(tr, idx));
            break;
          case LossKind::kCrossEntropyKd:
            loss = kd_loss(out, teacher_logits.gather_rows(idx),
                           labels_at(tr, idx), config);
            break;
        }
        if (!std::isfinite(loss.value)) {
          throw NumericalError("non-finite loss", loss.value);
        }
        net.backward(loss.grad);
        const auto params = net.params();
        grad_norms.push_back(std::sqrt(squared_norm(params)));
        sgd_step(params, step, config);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(step) + " (lr " +
                                 std::to_string(learning_rate(config, step)) +
                                 ")",
                             e.residual());
      }
      loss_sum += loss.value * static_cast<double>(count);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    const Evaluation ev = evaluate(net, ev_data);
    rec.eval_loss = ev.loss;
    if (config.loss == LossKind::kCrossEntropyKd) {
      rec.eval_loss =
          kd_loss(net.apply(ev_data.inputs), teacher_eval_logits,
                  ev_data.labels, config)
              .value;
    }
    rec.eval_acc = ev.accuracy;
    rec.grad_norm_mean = mean_and_var(grad_norms, &rec.grad_norm_var);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    log.epochs.push_back(rec);
    if (config.threshold && !log.epochs_to_threshold &&
        rec.eval_loss <= *config.threshold) {
      log.epochs_to_threshold = epoch;
    }
  }
  return log;
}

bool eval_loss_settled(const RunLog& log, std::size_t window) {
  const std::size_t n = log.epochs.size();
  const std::size_t w = std::min(window, n);
  if (w == 0) return true;
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    head += log.epochs[i].eval_loss;
    tail += log.epochs[n - w + i].eval_loss;
  }
  return tail <= head;
}

void write_runlog_csv(const RunLog& log, std::ostream& out,
                      bool include_wall_time) {
  const auto num = format_double;
  out << "epoch,train_loss,eval_loss,eval_acc,grad_norm_mean,grad_norm_var";
  if (include_wall_time) out << ",wall_ms";
  out << '\n';
  for (const EpochRecord& r : log.epochs) {
    out << r.epoch << ',' << num(r.train_loss) << ',' << num(r.eval_loss)
        << ',' << num(r.eval_acc) << ',' << num(r.grad_norm_mean) << ','
        << num(r.grad_norm_var);
    if (include_wall_time) out << ',' << num(r.wall_ms);
    out << '\n';
  }
}

GatingVarianceRecord gating_grad_variance(const InherNetLayer& layer,
                                          const Dataset& data,
                                          const TrainConfig& config) {
  config.validate();
  const bool classify = data.is_classification();
  InherNetLayer uniform = layer;
  for (double& w : uniform.gate().weight.data()) w = 0.0;
  for (double& b : uniform.gate().bias) b = 0.0;

  auto measure = [&](InherNetLayer& l) {
    const auto order =
        permutation(data.size(), config.seed, rng_stream::kShuffleBase);
    std::vector<std::vector<double>> grads;
    for (std::size_t first = 0; first + config.batch_size <= data.size();
         first += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + first,
                                             config.batch_size);
      const Matrix out = l.forward(data.inputs.gather_rows(idx));
      const LossValue loss =
          classify ? cross_entropy(out, labels_at(data, idx))
                   : mse_loss(out, data.targets.gather_rows(idx));
      l.backward(loss.grad);
      std::vector<double> g;
      for (const ParamRef& p : l.params()) {
        if (p.name != "w_down" && p.name != "bias") continue;
        g.insert(g.end(), p.grad.begin(), p.grad.end());
      }
      grads.push_back(std::move(g));
    }
    if (grads.empty()) return 0.0;
    std::vector<double> mean(grads[0].size(), 0.0);
    for (const auto& g : grads) {
      for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i];
    }
    for (double& m : mean) m /= static_cast<double>(grads.size());
    double var = 0.0;
    for (const auto& g : grads) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        var += (g[i] - mean[i]) * (g[i] - mean[i]);
      }
    }
    return var / static_cast<double>(grads.size());
  };

  InherNetLayer adaptive = layer;
  GatingVarianceRecord rec;
  rec.adaptive_variance = measure(adaptive);
  rec.uniform_variance = measure(uniform);
  rec.minibatches = data.size() / config.batch_size;
  return rec;
}

}  // namespace inhernet
