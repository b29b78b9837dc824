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

#include "inhernet/theory.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "inhernet/conv.h"
#include "inhernet/errors.h"

namespace inhernet {
namespace {

double total_energy(std::span<const double> spectrum) {
  double s = 0.0;
  for (double v : spectrum) s += v * v;
  return s;
}

double tail_energy(std::span<const double> spectrum, std::size_t r) {
  double s = 0.0;
  for (std::size_t i = spectrum.size(); i > r; --i) {
    s += spectrum[i - 1] * spectrum[i - 1];
  }
  return s;
}

double kappa_or_nan(const Matrix& w) {
  try {
    return condition_number(w);
  } catch (const DegenerateInputError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double max_kappa(std::span<const Matrix> ws) {
  double k = 0.0;
  for (const Matrix& w : ws) k = std::max(k, kappa_or_nan(w));
  return k;
}

Matrix head_as_matrix(const Tensor4D& t) {
  const auto& d = t.dims();
  return Matrix(d[0], d[1], std::vector<double>(t.data().begin(), t.data().end()));
}

// Rank, head count and the conditioning of the factors of an inherited layer.
struct FactorInfo {
  std::size_t rank = 0;
  std::size_t heads = 0;
  double kappa_down = 0.0;
  double kappa_heads = 0.0;
};

std::optional<FactorInfo> factor_info(const Layer& layer) {
  if (const auto* l = dynamic_cast<const InherNetLayer*>(&layer)) {
    return FactorInfo{l->rank(), l->num_heads(), kappa_or_nan(l->w_down()),
                      max_kappa(l->heads())};
  }
  if (const auto* l = dynamic_cast<const InverseLayer*>(&layer)) {
    return FactorInfo{l->rank(), l->num_heads(), max_kappa(l->downs()),
                      kappa_or_nan(l->w_up())};
  }
  if (const auto* l = dynamic_cast<const SymmetricLayer*>(&layer)) {
    return FactorInfo{l->rank(), l->num_branches(), max_kappa(l->downs()),
                      max_kappa(l->ups())};
  }
  if (const auto* l = dynamic_cast<const InherConvLayer*>(&layer)) {
    std::vector<Matrix> heads;
    for (const Tensor4D& h : l->heads()) heads.push_back(head_as_matrix(h));
    return FactorInfo{l->rank(), l->num_heads(),
                      kappa_or_nan(l->spatial().kernel().flatten()),
                      max_kappa(heads)};
  }
  return std::nullopt;
}

nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

double compression_ratio_paper(std::size_t m, std::size_t n, std::size_t r,
                               std::size_t h) {
  if (m == 0 || n == 0 || r == 0 || h == 0) {
    throw RangeError("compression ratio needs positive m, n, r, H");
  }
  return static_cast<double>(m * n) /
         static_cast<double>(param_count_paper(m, n, r, h));
}

std::size_t param_count_paper(std::size_t m, std::size_t n, std::size_t r,
                              std::size_t h) {
  return h * r * (m + n) + h * (r + 1);
}

std::size_t param_count_actual(const LayerShape& s) {
  std::size_t count = s.m * s.rank + s.heads * s.rank * s.n;
  if (s.gated) {
    const std::size_t gate_dim = s.gate_input == GateInput::kCode ? s.rank : s.m;
    count += gate_dim * s.heads + s.heads;
  }
  if (s.with_bias) count += s.n;
  return count;
}

std::size_t param_count_actual(const InherNetLayer& layer) {
  LayerShape s;
  s.m = layer.input_width();
  s.n = layer.output_width();
  s.rank = layer.rank();
  s.heads = layer.num_heads();
  s.gate_input = layer.gate_input();
  s.gated = layer.gate().trainable;
  s.with_bias = layer.bias().has_value();
  std::size_t count = param_count_actual(s);
  if (layer.head_biases()) count += s.heads * s.n;
  return count;
}

double spectral_energy(std::span<const double> spectrum, std::size_t r) {
  if (r > spectrum.size()) {
    throw RangeError("rank " + std::to_string(r) + " exceeds spectrum length " +
                     std::to_string(spectrum.size()));
  }
  const double total = total_energy(spectrum);
  if (total == 0.0) throw DegenerateInputError("all-zero spectrum");
  return 1.0 - tail_energy(spectrum, r) / total;
}

std::size_t rank_for_energy(std::span<const double> spectrum, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw RangeError("energy tolerance must lie in (0, 1)");
  }
  const double total = total_energy(spectrum);
  if (total == 0.0) throw DegenerateInputError("all-zero spectrum");
  for (std::size_t r = 1; r <= spectrum.size(); ++r) {
    if (tail_energy(spectrum, r) <= eps * total) return r;
  }
  return spectrum.size();
}

double eckart_young_error(std::span<const double> spectrum, std::size_t r) {
  if (r > spectrum.size()) {
    throw RangeError("rank " + std::to_string(r) + " exceeds spectrum length " +
                     std::to_string(spectrum.size()));
  }
  return std::sqrt(tail_energy(spectrum, r));
}

LayerInfluence LayerInfluence::uniform(std::size_t layers) {
  if (layers == 0) throw RangeError("influence over zero layers");
  return {std::vector<double>(layers, 1.0 / static_cast<double>(layers))};
}

LayerInfluence LayerInfluence::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw RangeError("influence weights must be nonnegative");
    sum += w;
  }
  if (sum == 0.0) throw RangeError("influence weights sum to zero");
  for (double& w : weights) w /= sum;
  return {std::move(weights)};
}

double preservation_bound(const LayerInfluence& influence,
                          std::span<const std::vector<double>> spectra,
                          std::span<const std::size_t> ranks) {
  if (influence.alpha.size() != spectra.size() ||
      spectra.size() != ranks.size()) {
    throw ShapeError("preservation bound needs one influence, spectrum and "
                     "rank per layer (got " +
                     std::to_string(influence.alpha.size()) + ", " +
                     std::to_string(spectra.size()) + ", " +
                     std::to_string(ranks.size()) + ")");
  }
  double loss = 0.0;
  for (std::size_t l = 0; l < spectra.size(); ++l) {
    loss += influence.alpha[l] * (1.0 - spectral_energy(spectra[l], ranks[l]));
  }
  return 1.0 - loss;
}

TheoryReport analyze(const Network& teacher, const Network& inherited,
                     const std::optional<LayerInfluence>& influence,
                     const Matrix* probe_inputs) {
  if (teacher.size() != inherited.size()) {
    throw ShapeError("teacher has " + std::to_string(teacher.size()) +
                     " layers, inherited network " +
                     std::to_string(inherited.size()));
  }
  TheoryReport report;
  std::vector<std::vector<double>> spectra;
  std::vector<std::size_t> ranks;
  std::size_t teacher_counted = 0, paper_counted = 0;
  double kept = 0.0, total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    const Layer& t = teacher.layer(i);
    Matrix w;
    if (const auto* d = dynamic_cast<const DenseLayer*>(&t)) {
      w = d->weight();
    } else if (const auto* c = dynamic_cast<const Conv2DLayer*>(&t)) {
      w = c->kernel().flatten().transposed();
    } else {
      continue;
    }
    const auto info = factor_info(inherited.layer(i));
    if (!info) continue;
    LayerTheory lt;
    lt.index = i;
    lt.kind = std::string(to_string(inherited.layer(i).kind()));
    lt.m = w.rows();
    lt.n = w.cols();
    lt.rank = info->rank;
    lt.heads = info->heads;
    lt.param_count_teacher = t.parameter_count();
    lt.param_count_actual = inherited.layer(i).parameter_count();
    lt.param_count_paper = param_count_paper(lt.m, lt.n, lt.rank, lt.heads);
    lt.rho_paper = compression_ratio_paper(lt.m, lt.n, lt.rank, lt.heads);
    lt.rho_actual = static_cast<double>(lt.param_count_teacher) /
                    static_cast<double>(lt.param_count_actual);
    std::vector<double> spectrum = singular_values(w);
    lt.spectral_energy_ratio = spectral_energy(spectrum, lt.rank);
    lt.epsilon = 1.0 - lt.spectral_energy_ratio;
    lt.eckart_young_error = eckart_young_error(spectrum, lt.rank);
    lt.kappa_teacher = condition_number_from_spectrum(spectrum);
    lt.kappa_down = info->kappa_down;
    lt.kappa_heads = info->kappa_heads;

    teacher_counted += lt.m * lt.n;
    paper_counted += lt.param_count_paper;
    const double e = total_energy(spectrum);
    total += e;
    tail += tail_energy(spectrum, lt.rank);
    kept += e - tail_energy(spectrum, lt.rank);
    report.epsilon = std::max(report.epsilon, lt.epsilon);
    report.kappa = std::max(report.kappa, lt.kappa_teacher);
    spectra.push_back(std::move(spectrum));
    ranks.push_back(lt.rank);
    report.per_layer_breakdown.push_back(std::move(lt));
  }
  if (report.per_layer_breakdown.empty()) {
    throw StateError("no inherited layers to analyze");
  }
  const LayerInfluence alpha =
      influence ? *influence : LayerInfluence::uniform(spectra.size());
  report.preservation_lower_bound = preservation_bound(alpha, spectra, ranks);
  for (std::size_t l = 0; l < report.per_layer_breakdown.size(); ++l) {
    report.per_layer_breakdown[l].alpha = alpha.alpha[l];
  }
  report.rho_paper = static_cast<double>(teacher_counted) /
                     static_cast<double>(paper_counted);
  report.param_count_teacher = teacher.parameter_count();
  report.param_count_actual = inherited.parameter_count();
  report.rho_actual = static_cast<double>(report.param_count_teacher) /
                      static_cast<double>(report.param_count_actual);
  report.spectral_energy_ratio = kept / total;
  report.eckart_young_error = std::sqrt(tail);
  if (probe_inputs) {
    report.output_cosine_similarity =
        output_cosine_similarity(teacher, inherited, *probe_inputs);
  }
  return report;
}

std::string to_json(const TheoryReport& r, int indent) {
  nlohmann::ordered_json j;
  j["rho_paper"] = number(r.rho_paper);
  j["rho_paper_counting"] = "one down-projection per head";
  j["param_count_actual"] = r.param_count_actual;
  j["param_count_actual_counting"] = "shared down-projection, enumerated";
  j["param_count_teacher"] = r.param_count_teacher;
  j["rho_actual"] = number(r.rho_actual);
  j["spectral_energy_ratio"] = number(r.spectral_energy_ratio);
  j["eckart_young_error"] = number(r.eckart_young_error);
  j["epsilon"] = number(r.epsilon);
  j["kappa"] = number(r.kappa);
  j["preservation_lower_bound"] = number(r.preservation_lower_bound);
  j["output_cosine_similarity"] =
      r.output_cosine_similarity
          ? number(*r.output_cosine_similarity)
          : nlohmann::ordered_json(nullptr);
  j["output_cosine_similarity_note"] =
      "empirical diagnostic, not the bounded similarity";
  auto& layers = j["per_layer_breakdown"] = nlohmann::ordered_json::array();
  for (const LayerTheory& l : r.per_layer_breakdown) {
    nlohmann::ordered_json e;
    e["index"] = l.index;
    e["kind"] = l.kind;
    e["m"] = l.m;
    e["n"] = l.n;
    e["rank"] = l.rank;
    e["heads"] = l.heads;
    e["param_count_teacher"] = l.param_count_teacher;
    e["param_count_actual"] = l.param_count_actual;
    e["param_count_paper"] = l.param_count_paper;
    e["rho_paper"] = number(l.rho_paper);
    e["rho_actual"] = number(l.rho_actual);
    e["spectral_energy_ratio"] = number(l.spectral_energy_ratio);
    e["epsilon"] = number(l.epsilon);
    e["eckart_young_error"] = number(l.eckart_young_error);
    e["kappa_teacher"] = number(l.kappa_teacher);
    e["kappa_down"] = number(l.kappa_down);
    e["kappa_heads"] = number(l.kappa_heads);
    e["alpha"] = number(l.alpha);
    layers.push_back(std::move(e));
  }
  return j.dump(indent);
}

double output_cosine_similarity(const Network& a, const Network& b,
                                const Matrix& x) {
  const Matrix ya = a.apply(x);
  const Matrix yb = b.apply(x);
  if (ya.rows() != yb.rows() || ya.cols() != yb.cols()) {
    throw ShapeError("outputs " + ya.shape_string() + " and " +
                     yb.shape_string() + " differ");
  }
  const double na = frobenius_norm(ya), nb = frobenius_norm(yb);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("zero output");
  return dot(ya.data(), yb.data()) / (na * nb);
}

MarginalGainReport head_marginal_gains(const DenseLayer& teacher,
                                       std::size_t rank, std::size_t h_max,
                                       const Split& task,
                                       const TrainConfig& config,
                                       const InheritOptions& base) {
  if (h_max < 2) throw RangeError("head sweep needs h_max >= 2");
  TrainConfig cfg = config;
  cfg.loss = LossKind::kMse;
  MarginalGainReport report;
  for (std::size_t h = 1; h <= h_max; ++h) {
    InheritOptions opts = base;
    opts.rank = rank;
    opts.heads = h;
    Network net;
    net.add(inherit_dense(teacher, opts));
    train(net, task, cfg);
    report.errors.push_back({h, evaluate(net, task.eval).loss});
  }
  for (std::size_t i = 0; i + 1 < report.errors.size(); ++i) {
    report.gains.push_back(report.errors[i].error - report.errors[i + 1].error);
  }
  report.gains_nonincreasing = true;
  for (std::size_t i = 0; i + 1 < report.gains.size(); ++i) {
    if (report.gains[i + 1] > report.gains[i]) report.gains_nonincreasing = false;
  }
  return report;
}

}  // namespace inhernet
