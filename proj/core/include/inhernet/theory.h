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

#ifndef INHERNET_THEORY_H_
#define INHERNET_THEORY_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inhernet/dataset.h"
#include "inhernet/inherit.h"
#include "inhernet/nn.h"
#include "inhernet/train.h"

namespace inhernet {

// m n / (H r (m + n) + H (r + 1)). The denominator counts one down-projection
// per head, as in the closed-form parameter bound.
double compression_ratio_paper(std::size_t m, std::size_t n, std::size_t r,
                               std::size_t h);
// H r (m + n) + H (r + 1).
std::size_t param_count_paper(std::size_t m, std::size_t n, std::size_t r,
                              std::size_t h);

struct LayerShape {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t rank = 0;
  std::size_t heads = 1;
  GateInput gate_input = GateInput::kCode;
  bool gated = true;
  bool with_bias = false;
};

// Exact enumeration for the shared-down layer: m r + H r n, plus r H + H
// (code gate) or m H + H (input gate) when gated, plus n for an output bias.
std::size_t param_count_actual(const LayerShape& shape);
std::size_t param_count_actual(const InherNetLayer& layer);

// sum_{i<=r} sigma_i^2 / sum_i sigma_i^2. Throws DegenerateInputError for an
// all-zero spectrum, RangeError for r outside [0, len].
double spectral_energy(std::span<const double> spectrum, std::size_t r);
// Smallest r with spectral_energy >= 1 - eps, for 0 < eps < 1.
std::size_t rank_for_energy(std::span<const double> spectrum, double eps);
// sqrt(sum_{i>r} sigma_i^2): the optimal rank-r Frobenius error.
double eckart_young_error(std::span<const double> spectrum, std::size_t r);

// Per-layer output influence weights, normalized to sum to 1.
struct LayerInfluence {
  std::vector<double> alpha;

  static LayerInfluence uniform(std::size_t layers);
  // Throws RangeError for negative weights or a zero sum.
  static LayerInfluence normalized(std::vector<double> weights);
};

// 1 - sum_l alpha_l (1 - spectral_energy(spectrum_l, r_l)). Throws
// ShapeError when the three lengths disagree.
double preservation_bound(const LayerInfluence& influence,
                          std::span<const std::vector<double>> spectra,
                          std::span<const std::size_t> ranks);

struct LayerTheory {
  std::size_t index = 0;
  std::string kind;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t rank = 0;
  std::size_t heads = 0;
  std::size_t param_count_teacher = 0;
  std::size_t param_count_actual = 0;
  std::size_t param_count_paper = 0;
  double rho_paper = 0.0;
  double rho_actual = 0.0;
  double spectral_energy_ratio = 0.0;
  double epsilon = 0.0;
  double eckart_young_error = 0.0;
  double kappa_teacher = 0.0;
  double kappa_down = 0.0;
  double kappa_heads = 0.0;
  double alpha = 0.0;
};

struct TheoryReport {
  // Counted with one down-projection per head (closed form).
  double rho_paper = 0.0;
  // Enumerated parameters of the inherited network (shared down).
  std::size_t param_count_actual = 0;
  std::size_t param_count_teacher = 0;
  double rho_actual = 0.0;
  double spectral_energy_ratio = 0.0;
  double eckart_young_error = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double preservation_lower_bound = 0.0;
  // Cosine similarity of teacher and inherited outputs on probe inputs. A
  // diagnostic only; it is not the similarity the lower bound refers to.
  std::optional<double> output_cosine_similarity;
  std::vector<LayerTheory> per_layer_breakdown;
};

// Layer-by-layer comparison of a teacher and a network built from it by
// inherit_network (same layer positions). Influence defaults to uniform.
TheoryReport analyze(const Network& teacher, const Network& inherited,
                     const std::optional<LayerInfluence>& influence = {},
                     const Matrix* probe_inputs = nullptr);

std::string to_json(const TheoryReport& report, int indent = 2);

double output_cosine_similarity(const Network& a, const Network& b,
                                const Matrix& x);

struct HeadError {
  std::size_t heads = 0;
  double error = 0.0;
};

struct MarginalGainReport {
  std::vector<HeadError> errors;   // E(r, H) for H = 1..h_max
  std::vector<double> gains;       // E(r, H) - E(r, H + 1)
  bool gains_nonincreasing = false;
};

// Fine-tunes an inherited copy of `teacher` for each H in 1..h_max on the
// regression task (MSE) with identical config and seed, and reports the
// eval error per H. The trend flag is a check, not a bound.
MarginalGainReport head_marginal_gains(const DenseLayer& teacher,
                                       std::size_t rank, std::size_t h_max,
                                       const Split& task,
                                       const TrainConfig& config,
                                       const InheritOptions& base = {});

}  // namespace inhernet

#endif  // INHERNET_THEORY_H_
