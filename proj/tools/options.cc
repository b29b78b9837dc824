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

#include "options.h"

#include <charconv>
#include <cmath>
#include <sstream>

#include "inhernet/csv.h"
#include "inhernet/errors.h"

namespace inhernet::tools {
namespace {

template <typename T>
void parse_number(const std::string& s, T& v) {
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw RangeError("cannot parse '" + s + "' as a number");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, ',')) parts.push_back(part);
  return parts;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += to_text(v[i]);
  }
  return out;
}

}  // namespace

std::string to_text(const std::string& v) { return v; }
std::string to_text(double v) { return format_double(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }
std::string to_text(const std::vector<std::uint64_t>& v) { return join(v); }
std::string to_text(const std::vector<double>& v) { return join(v); }
std::string to_text(const std::optional<double>& v) {
  return v ? to_text(*v) : "none";
}

void from_text(const std::string& s, std::string& v) { v = s; }
void from_text(const std::string& s, double& v) { parse_number(s, v); }
void from_text(const std::string& s, std::uint64_t& v) { parse_number(s, v); }
void from_text(const std::string& s, bool& v) {
  if (s != "true" && s != "false") {
    throw RangeError("cannot parse '" + s + "' as a boolean");
  }
  v = s == "true";
}
void from_text(const std::string& s, std::vector<std::uint64_t>& v) {
  v.clear();
  for (const std::string& p : split_commas(s)) from_text(p, v.emplace_back());
}
void from_text(const std::string& s, std::vector<double>& v) {
  v.clear();
  for (const std::string& p : split_commas(s)) from_text(p, v.emplace_back());
}
void from_text(const std::string& s, std::optional<double>& v) {
  if (s == "none") {
    v.reset();
    return;
  }
  double d = 0.0;
  from_text(s, d);
  v = d;
}

void FieldGroup::merge_from(const std::map<std::string, std::string>& config) {
  for (const Field& f : fields_) {
    if (f.option->count() > 0) continue;
    const auto it = config.find(prefix_ + "." + f.name);
    if (it != config.end()) f.set(it->second);
  }
}

void FieldGroup::store(std::map<std::string, std::string>& config) const {
  for (const Field& f : fields_) config[prefix_ + "." + f.name] = f.get();
}

void FieldGroup::print(std::ostream& out) const {
  for (const Field& f : fields_) {
    out << prefix_ << '.' << f.name << " = " << f.get() << '\n';
  }
}

void DataFlags::bind(CLI::App* app, FieldGroup& g) {
  g.add(app, "task", task, "Synthetic task")
      ->check(CLI::IsMember(
          {"teacher-mimic", "piecewise-linear", "classification"}));
  g.add(app, "samples", samples, "Synthetic sample count");
  g.add(app, "input-dim", input_dim, "Input width");
  g.add(app, "output-dim", output_dim, "Target width or class count");
  g.add(app, "noise", noise, "Target noise standard deviation");
  g.add(app, "mimic-hidden", mimic_hidden, "Hidden widths of the planted teacher");
  g.add(app, "planted-rank", planted_rank, "Rank of the planted teacher weights");
  g.add(app, "tail-scale", tail_scale, "Scale of the planted full-rank tail");
  g.add(app, "clusters", clusters, "Regions of the piecewise-linear task");
  g.add(app, "separation", separation, "Cluster spread in standard deviations");
  g.add(app, "label-noise", label_noise, "Fraction of flipped labels");
  g.add(app, "data-seed", data_seed, "Seed of the data generator and split");
  g.add(app, "csv", csv, "Read data from this CSV file instead");
  g.add(app, "csv-labels", csv_labels, "The last CSV column is a class label");
  g.add(app, "csv-targets", csv_targets, "Trailing CSV target columns");
}

SyntheticTask DataFlags::synthetic() const {
  SyntheticTask t;
  t.kind = parse_task_kind(task);
  t.seed = data_seed;
  t.samples = samples;
  t.input_dim = input_dim;
  t.output_dim = output_dim;
  t.noise = noise;
  t.teacher_hidden.assign(mimic_hidden.begin(), mimic_hidden.end());
  t.planted_rank = planted_rank;
  t.tail_scale = tail_scale;
  t.clusters = clusters;
  t.separation = separation;
  t.label_noise = label_noise;
  return t;
}

Split DataFlags::load() const {
  if (csv.empty()) return gen_synthetic(synthetic());
  CsvSchema schema;
  schema.classification = csv_labels;
  schema.target_columns = csv_targets;
  return split_dataset(load_csv(csv, schema), data_seed);
}

void TrainFlags::bind(CLI::App* app, FieldGroup& g, bool distill) {
  g.add(app, "lr", lr, "Base learning rate");
  g.add(app, "schedule", schedule, "Learning-rate schedule")
      ->check(CLI::IsMember({"inv-sqrt", "constant", "step"}));
  g.add(app, "milestones", milestones, "Step-decay milestones (optimizer steps)");
  g.add(app, "decay", decay, "Step-decay factor");
  g.add(app, "epochs", epochs, "Training epochs");
  g.add(app, "batch", batch, "Minibatch size");
  g.add(app, "seed", seed, "Shuffle seed");
  g.add(app, "threshold", threshold, "Eval-loss level for epochs_to_threshold");
  if (distill) {
    loss = "ce+kd";
    g.add(app, "lambda-ce", lambda_ce, "Weight of the label cross-entropy");
    g.add(app, "lambda-kd", lambda_kd, "Weight of the distillation term");
    g.add(app, "tau", tau, "Distillation temperature");
  } else {
    g.add(app, "loss", loss, "Loss function")
        ->check(CLI::IsMember({"auto", "ce", "mse"}));
  }
}

TrainConfig TrainFlags::config(const Dataset& data) const {
  TrainConfig c;
  c.base_lr = lr;
  c.schedule = parse_schedule(schedule);
  c.milestones.assign(milestones.begin(), milestones.end());
  c.decay_factor = decay;
  c.epochs = epochs;
  c.batch_size = batch;
  c.seed = seed;
  c.loss = loss == "auto" ? (data.is_classification() ? LossKind::kCrossEntropy
                                                      : LossKind::kMse)
                          : parse_loss(loss);
  c.lambda_ce = lambda_ce;
  c.lambda_kd = lambda_kd;
  c.temperature = tau;
  c.threshold = threshold;
  c.validate();
  return c;
}

}  // namespace inhernet::tools
