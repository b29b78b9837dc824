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

#ifndef INHERNET_TOOLS_OPTIONS_H_
#define INHERNET_TOOLS_OPTIONS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "inhernet/dataset.h"
#include "inhernet/synthetic.h"
#include "inhernet/train.h"

namespace inhernet::tools {

// Text form of option values, shared by the resolved-config printout and the
// checkpoint config map.
std::string to_text(const std::string& v);
std::string to_text(double v);
std::string to_text(std::uint64_t v);
std::string to_text(bool v);
std::string to_text(const std::vector<std::uint64_t>& v);
std::string to_text(const std::vector<double>& v);
std::string to_text(const std::optional<double>& v);

// Throw ParseError when the text does not parse completely.
void from_text(const std::string& s, std::string& v);
void from_text(const std::string& s, double& v);
void from_text(const std::string& s, std::uint64_t& v);
void from_text(const std::string& s, bool& v);
void from_text(const std::string& s, std::vector<std::uint64_t>& v);
void from_text(const std::string& s, std::vector<double>& v);
void from_text(const std::string& s, std::optional<double>& v);

// Named options of one group ("data", "train", ...) bound to variables. The
// group prefixes the keys in checkpoint config maps.
class FieldGroup {
 public:
  explicit FieldGroup(std::string prefix) : prefix_(std::move(prefix)) {}

  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& var,
                   const std::string& help) {
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>) {
      opt = app->add_flag("--" + name, var, help);
    } else {
      opt = app->add_option("--" + name, var, help)->capture_default_str();
      if constexpr (std::is_same_v<T, std::vector<std::uint64_t>> ||
                    std::is_same_v<T, std::vector<double>>) {
        opt->delimiter(',');
      }
    }
    fields_.push_back({name, opt, [&var] { return to_text(var); },
                       [&var](const std::string& s) { from_text(s, var); }});
    return opt;
  }

  // Fills every option not given on the command line from `config`.
  void merge_from(const std::map<std::string, std::string>& config);
  void store(std::map<std::string, std::string>& config) const;
  void print(std::ostream& out) const;

 private:
  struct Field {
    std::string name;
    CLI::Option* option;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
  };
  std::string prefix_;
  std::vector<Field> fields_;
};

// Synthetic task or CSV file the data-consuming commands train on.
struct DataFlags {
  std::string task = "classification";
  std::uint64_t samples = 1000;
  std::uint64_t input_dim = 16;
  std::uint64_t output_dim = 4;
  double noise = 0.0;
  std::vector<std::uint64_t> mimic_hidden{64, 64};
  std::uint64_t planted_rank = 6;
  double tail_scale = 0.05;
  std::uint64_t clusters = 2;
  double separation = 3.0;
  double label_noise = 0.0;
  std::uint64_t data_seed = 0;
  std::string csv;
  bool csv_labels = false;
  std::uint64_t csv_targets = 1;

  void bind(CLI::App* app, FieldGroup& group);
  SyntheticTask synthetic() const;
  Split load() const;
};

struct TrainFlags {
  double lr = 0.1;
  std::string schedule = "inv-sqrt";
  std::vector<std::uint64_t> milestones;
  double decay = 0.1;
  std::uint64_t epochs = 10;
  std::uint64_t batch = 32;
  std::uint64_t seed = 0;
  std::string loss = "auto";
  std::optional<double> threshold;
  double lambda_ce = 1.0;
  double lambda_kd = 9.0;
  double tau = 2.0;

  void bind(CLI::App* app, FieldGroup& group, bool distill);
  // "auto" picks cross-entropy for labelled data and MSE otherwise.
  TrainConfig config(const Dataset& data) const;
};

}  // namespace inhernet::tools

#endif  // INHERNET_TOOLS_OPTIONS_H_
