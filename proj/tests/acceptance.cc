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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "inhernet/checkpoint.h"
#include "inhernet/conv.h"
#include "inhernet/experiments.h"
#include "inhernet/inherit.h"
#include "inhernet/linalg.h"
#include "inhernet/nn.h"
#include "inhernet/rng.h"
#include "inhernet/synthetic.h"
#include "inhernet/theory.h"
#include "inhernet/train.h"
#include "oracles.h"

namespace inhernet {
namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

// Best rank-r approximation built from the Gram eigenvectors: W V_r V_r^T.
Matrix gram_truncation(const Matrix& w, std::size_t r) {
  const oracle::SymmetricEigen e =
      oracle::jacobi_eigen(oracle::triple_loop_matmul(w.transposed(), w));
  Matrix vr(w.cols(), r);
  for (std::size_t i = 0; i < w.cols(); ++i) {
    for (std::size_t j = 0; j < r; ++j) vr(i, j) = e.vectors(i, j);
  }
  return oracle::triple_loop_matmul(w, oracle::projector(vr));
}

Matrix normal_inputs(std::size_t rows, std::size_t cols, CounterRng& rng) {
  Matrix x(rows, cols);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

// ---- 1 ----
Outcome eckart_young() {
  CounterRng rng(101);
  double worst_rel = 0.0;
  std::size_t losses = 0, comparisons = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 2 + rng.below(63), n = 2 + rng.below(95);
    const Matrix w = oracle::random_matrix(m, n, rng);
    const std::vector<double> sigma = oracle::singular_values_via_gram(w);
    for (std::size_t r = 1; r <= std::min<std::size_t>(8, std::min(m, n)); ++r) {
      const SvdFactorization f = truncated_svd(w, r);
      const double err = frobenius_norm(w - f.reconstruct());
      long double tail = 0.0L;
      for (std::size_t i = r; i < sigma.size(); ++i) {
        tail += static_cast<long double>(sigma[i]) * sigma[i];
      }
      const double expected = std::sqrt(static_cast<double>(tail));
      if (expected > 0.0) {
        worst_rel = std::max(worst_rel, std::abs(err - expected) / expected);
      } else {
        worst_rel = std::max(worst_rel, err);
      }
      // Half unstructured factor pairs, half perturbations of the optimum.
      const Matrix a0 = matmul(f.u, Matrix::diagonal(f.sigma));
      for (int k = 0; k < 100; ++k) {
        Matrix a = oracle::random_matrix(m, r, rng);
        Matrix b = oracle::random_matrix(r, n, rng);
        if (k % 2) {
          const double scale = 1e-3 * (1 + k);
          a = a0 + oracle::random_matrix(m, r, rng, scale);
          b = f.v.transposed() + oracle::random_matrix(r, n, rng, scale);
        }
        ++comparisons;
        if (!(err < frobenius_norm(w - matmul(a, b)))) ++losses;
      }
    }
  }
  return {worst_rel <= 1e-8 && losses == 0,
          "max relative error vs sqrt(tail) " + fmt(worst_rel) + "; optimum " +
              "beaten in " + std::to_string(losses) + "/" +
              std::to_string(comparisons) + " random factorizations"};
}

// ---- 2 ----
Outcome init_fidelity() {
  CounterRng rng(202);
  double dense_gap = 0.0, dense_exact_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 3 + rng.below(30), n = 3 + rng.below(30);
    const std::size_t r = 1 + rng.below(std::min(m, n));
    InheritOptions o;
    o.rank = r;
    o.heads = 1 + rng.below(4);
    o.gate_input = t % 2 ? GateInput::kInput : GateInput::kCode;
    o.gate_init_scale = 1.0;
    o.seed = static_cast<std::uint64_t>(t);
    const Matrix x = normal_inputs(50, m, rng);

    const Matrix w = oracle::random_matrix(m, n, rng);
    const InherNetLayer layer = inherit_dense(w, o);
    dense_gap = std::max(
        dense_gap, max_abs(layer.apply(x),
                           oracle::triple_loop_matmul(x, gram_truncation(w, r))));

    const Matrix exact = oracle::random_low_rank(m, n, r, rng);
    const InherNetLayer exact_layer = inherit_dense(exact, o);
    dense_exact_gap =
        std::max(dense_exact_gap, max_abs(exact_layer.apply(x),
                                          oracle::triple_loop_matmul(x, exact)));
  }

  double conv_gap = 0.0, conv_exact_gap = 0.0;
  for (int t = 0; t < 6; ++t) {
    const std::size_t out_ch = 4 + rng.below(5), in_ch = 2 + rng.below(3);
    const std::size_t k = t % 2 ? 3 : 1;
    const std::size_t r = 1 + rng.below(std::min(out_ch, in_ch * k * k));
    const ConvGeometry g{in_ch, 6, 6, 1, k / 2};
    const Tensor4D::Dims dims{out_ch, in_ch, k, k};
    InheritOptions o;
    o.rank = r;
    o.heads = 2 + rng.below(2);
    o.gate_init_scale = 1.0;
    o.seed = static_cast<std::uint64_t>(t);

    const Matrix flat = oracle::random_matrix(out_ch, in_ch * k * k, rng);
    const Matrix flat_exact = oracle::random_low_rank(out_ch, in_ch * k * k, r, rng);
    const Tensor4D kernel = Tensor4D::from_matrix(flat, dims);
    const Tensor4D kernel_r =
        Tensor4D::from_matrix(gram_truncation(flat, r), dims);
    const Tensor4D kernel_exact = Tensor4D::from_matrix(flat_exact, dims);
    const InherConvLayer layer = inherit_conv(kernel, g, o);
    const InherConvLayer exact_layer = inherit_conv(kernel_exact, g, o);
    const Matrix x = normal_inputs(50, g.input_size(), rng);
    const Matrix y = layer.apply(x);
    const Matrix y_exact = exact_layer.apply(x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto ref = oracle::nested_loop_conv(x.row(i), kernel_r, g);
      const auto ref_exact = oracle::nested_loop_conv(x.row(i), kernel_exact, g);
      for (std::size_t j = 0; j < ref.size(); ++j) {
        conv_gap = std::max(conv_gap, std::abs(y(i, j) - ref[j]));
        conv_exact_gap =
            std::max(conv_exact_gap, std::abs(y_exact(i, j) - ref_exact[j]));
      }
    }
  }
  const bool ok = dense_gap <= 1e-6 && conv_gap <= 1e-6 &&
                  dense_exact_gap <= 1e-10 && conv_exact_gap <= 1e-10;
  return {ok, "dense " + fmt(dense_gap) + " (exact rank " +
                  fmt(dense_exact_gap) + "), conv " + fmt(conv_gap) +
                  " (exact rank " + fmt(conv_exact_gap) + ")"};
}

// ---- 3 ----
Outcome gradient_decomposition() {
  double worst_assembly = 0.0, worst_fd = 0.0;
  for (int t = 0; t < 20; ++t) {
    CounterRng rng(3000 + t);
    const std::size_t m = 3 + rng.below(8), n = 2 + rng.below(8);
    InheritOptions o;
    o.rank = 1 + rng.below(std::min(m, n));
    o.heads = 1 + rng.below(4);
    o.gate_input = t % 2 ? GateInput::kInput : GateInput::kCode;
    o.gate_init_scale = 1.0;
    o.seed = static_cast<std::uint64_t>(t);
    InherNetLayer layer = inherit_dense(oracle::random_matrix(m, n, rng), o);
    for (Matrix& h : layer.heads()) {
      for (double& v : h.data()) v += rng.uniform(-0.5, 0.5);
    }
    if (t % 3 == 0) layer.set_bias(std::vector<double>(n, 0.3));
    const Matrix x = oracle::random_matrix(6, m, rng);
    const Matrix y = oracle::random_matrix(6, n, rng);
    const LossFn loss = [&](const Matrix& out) { return mse_loss(out, y); };
    worst_assembly =
        std::max(worst_assembly, gradient_decomposition_check(layer, x, loss));
    Network net;
    net.add(layer);
    net.backward(loss(net.forward(x)).grad);
    worst_fd = std::max(
        worst_fd, max_relative_deviation(
                      net.gradients(), finite_difference_grad(net, loss, x, 1e-5)));
  }
  return {worst_assembly <= 1e-8 && worst_fd <= 1e-4,
          "term assembly vs backward " + fmt(worst_assembly) +
              ", backward vs finite differences " + fmt(worst_fd) + " relative"};
}

// ---- 4 ----
Outcome compression_arithmetic() {
  const double rho = compression_ratio_paper(100, 100, 5, 3);
  LayerShape shape;
  shape.m = 100;
  shape.n = 100;
  shape.rank = 5;
  shape.heads = 3;
  const std::size_t actual = param_count_actual(shape);
  // Enumerate a built layer: shared down 100x5, three 5x100 heads, code gate.
  CounterRng rng(404);
  InheritOptions o;
  o.rank = 5;
  o.heads = 3;
  InherNetLayer layer = inherit_dense(oracle::random_matrix(100, 100, rng), o);
  std::size_t enumerated = 0;
  for (const ParamRef& p : layer.params()) enumerated += p.value.size();
  const std::size_t per_head = param_count_paper(100, 100, 5, 3);
  const bool ok = rho == 10000.0 / 3018.0 && actual == 2018 &&
                  enumerated == 2018 && per_head != actual &&
                  per_head - actual == 2 * 500;
  return {ok, "rho_paper " + std::to_string(rho) + ", actual " +
                  std::to_string(actual) + ", enumerated " +
                  std::to_string(enumerated) + ", per-head count " +
                  std::to_string(per_head)};
}

// ---- 5 ----
Outcome energy_chain() {
  CounterRng rng(505);
  std::size_t violations = 0;
  double worst_slack_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t len = 1 + rng.below(60);
    std::vector<double> s(len);
    for (double& v : s) v = std::exp(rng.uniform(-8.0, 3.0));
    std::sort(s.rbegin(), s.rend());
    const double eps = std::pow(10.0, rng.uniform(-8.0, -0.3));
    const std::size_t r = rank_for_energy(s, eps);
    const double err = eckart_young_error(s, r);
    long double total = 0.0L, tail = 0.0L;
    for (std::size_t i = 0; i < len; ++i) {
      total += static_cast<long double>(s[i]) * s[i];
      if (i >= r) tail += static_cast<long double>(s[i]) * s[i];
    }
    const long double budget = static_cast<long double>(eps) * total;
    if (static_cast<long double>(err) * err > budget) ++violations;
    // Slack budget - err^2 must equal budget - residual energy.
    const long double slack = budget - static_cast<long double>(err) * err;
    worst_slack_gap = std::max(
        worst_slack_gap,
        static_cast<double>(std::abs(slack - (budget - tail)) / total));
    // Minimality: one rank fewer exceeds the budget.
    if (r > 0) {
      const long double prev = tail + static_cast<long double>(s[r - 1]) * s[r - 1];
      if (prev <= budget) ++violations;
    }
  }
  return {violations == 0 && worst_slack_gap <= 1e-12,
          std::to_string(violations) + " violations over 100 spectra, slack " +
              "deviation " + fmt(worst_slack_gap) + " of total energy"};
}

// ---- 6 ----
Outcome insight3() {
  const Insight3Result r = run_insight3(Insight3Config::defaults());
  return {r.svd_faster() && r.unsettled_runs == 0,
          summary(r) + "; unsettled runs " + std::to_string(r.unsettled_runs)};
}

// ---- 7 ----
Outcome insight1() {
  const Insight1Result r = run_insight1(Insight1Config{});
  return {r.regime_flip() && r.unsettled_runs == 0,
          summary(r) + "; unsettled runs " + std::to_string(r.unsettled_runs)};
}

// ---- 8 ----
Outcome insight2() {
  const Insight2Result r = run_insight2(Insight2Config{});
  return {r.rank_dominates() && r.heads_help() && r.unsettled_runs == 0,
          summary(r) + "; unsettled runs " + std::to_string(r.unsettled_runs)};
}

// ---- 9 ----
Matrix straight_line_network(const Network& net, const Matrix& x) {
  Matrix cur = x;
  for (std::size_t l = 0; l < net.size(); ++l) {
    const Layer& layer = net.layer(l);
    if (const auto* d = dynamic_cast<const InherNetLayer*>(&layer)) {
      cur = oracle::straight_line_inhernet(*d, cur);
    } else if (layer.kind() == LayerKind::kRelu) {
      for (double& v : cur.data()) v = std::max(v, 0.0);
    } else {
      Network single;
      single.add(layer.clone());
      cur = oracle::straight_line_eval(single, cur);
    }
  }
  return cur;
}

Outcome constructive_proxy() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {901u, 902u, 903u}) {
    const std::size_t widths[] = {32, 64, 64, 8};
    const Network teacher = make_planted_teacher(widths, 4, 1e-5, seed);
    std::vector<std::size_t> ranks;
    for (std::size_t l = 0; l < teacher.size(); ++l) {
      const auto* d = dynamic_cast<const DenseLayer*>(&teacher.layer(l));
      if (d == nullptr) continue;
      const std::size_t r = rank_for_energy(singular_values(d->weight()), 1e-6);
      if (r != rank_for_energy(oracle::singular_values_via_gram(d->weight()),
                               1e-6)) {
        ok = false;
      }
      ranks.push_back(r);
    }
    NetworkInheritOptions o;
    o.ranks = ranks;
    o.seed = seed;
    const Network student = inherit_network(teacher, o);
    CounterRng rng(seed, rng_stream::kVerify + 1);
    const Matrix x = normal_inputs(500, widths[0], rng);
    const Matrix yt = oracle::straight_line_eval(teacher, x);
    const Matrix ys = straight_line_network(student, x);
    double mse = 0.0;
    for (std::size_t i = 0; i < yt.size(); ++i) {
      const double d = yt.data()[i] - ys.data()[i];
      mse += d * d;
    }
    mse /= static_cast<double>(yt.size());
    const std::size_t tp = teacher.parameter_count();
    const std::size_t sp = student.parameter_count();
    ok = ok && mse <= 1e-4 && sp < tp;
    std::string rs;
    for (std::size_t r : ranks) rs += (rs.empty() ? "" : ",") + std::to_string(r);
    detail += (detail.empty() ? "" : "; ") + std::string("ranks {") + rs +
              "} mse " + fmt(mse) + " params " + std::to_string(sp) + "/" +
              std::to_string(tp);
  }
  return {ok, detail};
}

// ---- 10 ----
std::string runlog_text(std::uint64_t seed, bool kd) {
  SyntheticTask task;
  task.kind = TaskKind::kClassification;
  task.samples = 300;
  task.input_dim = 8;
  task.output_dim = 3;
  task.seed = seed;
  const Split data = gen_synthetic(task);
  CounterRng rng(seed, rng_stream::kInit);
  const std::vector<std::size_t> widths{8, 16, 3};
  Network teacher = make_mlp(widths, rng);
  TrainConfig c;
  c.epochs = 3;
  c.seed = seed;
  train(teacher, data, c);
  NetworkInheritOptions o;
  o.ranks = {2};
  o.heads = 3;
  o.gate_init_scale = 0.5;
  o.seed = seed;
  Network student = inherit_network(teacher, o);
  c.base_lr = 0.01;
  if (kd) c.loss = LossKind::kCrossEntropyKd;
  const RunLog log = train(student, data, c, &teacher);
  std::ostringstream s;
  write_runlog_csv(log, s, false);
  return s.str();
}

std::vector<std::uint64_t> param_bits(Network net) {
  std::vector<std::uint64_t> bits;
  for (const ParamRef& p : net.params()) {
    for (double v : p.value) bits.push_back(std::bit_cast<std::uint64_t>(v));
  }
  return bits;
}

Outcome determinism() {
  bool runlogs_equal = true;
  for (bool kd : {false, true}) {
    runlogs_equal = runlogs_equal && runlog_text(7, kd) == runlog_text(7, kd);
  }
  const bool seeds_differ = runlog_text(7, false) != runlog_text(8, false);

  CounterRng rng(1010);
  const std::vector<std::size_t> widths{7, 9, 6, 4};
  const Network base = make_mlp(widths, rng);
  std::size_t cases = 0, exact = 0;
  for (Variant v : {Variant::kStandard, Variant::kNoSvd, Variant::kNoGate,
                    Variant::kSymmetric, Variant::kInverse}) {
    for (Combiner c : {Combiner::kConvexExact, Combiner::kPaperLiteral}) {
      for (GateInput g : {GateInput::kCode, GateInput::kInput}) {
        NetworkInheritOptions o;
        o.variant = v;
        o.ranks = {3, 2, 2};
        o.heads = 3;
        o.combiner = c;
        o.gate_input = g;
        o.gate_init_scale = 0.7;
        o.seed = 5;
        const Network net = inherit_network(base, o);
        std::stringstream first;
        write_checkpoint(net, first, {5, {{"variant", std::string(to_string(v))}}});
        const std::string bytes = first.str();
        const Network loaded = read_checkpoint(first);
        std::stringstream second;
        write_checkpoint(loaded, second, {5, {{"variant", std::string(to_string(v))}}});
        ++cases;
        if (second.str() == bytes && param_bits(net) == param_bits(loaded)) {
          ++exact;
        }
      }
    }
  }
  return {runlogs_equal && seeds_differ && exact == cases,
          std::string("RunLogs ") + (runlogs_equal ? "identical" : "differ") +
              " for equal seeds and " + (seeds_differ ? "differ" : "match") +
              " across seeds; " + std::to_string(exact) + "/" +
              std::to_string(cases) + " variant checkpoints bit-exact"};
}

}  // namespace
}  // namespace inhernet

int main() {
  using namespace inhernet;
  const std::vector<Criterion> criteria = {
      {1, "Eckart-Young optimality", 30, eckart_young},
      {2, "initialization fidelity", 10, init_fidelity},
      {3, "gradient decomposition", 60, gradient_decomposition},
      {4, "compression arithmetic", 1, compression_arithmetic},
      {5, "spectral-energy chain", 1, energy_chain},
      {6, "faster convergence from SVD init", 600, insight3},
      {7, "distillation regime flip", 900, insight1},
      {8, "rank vs head trends", 900, insight2},
      {9, "energy-rank inheritance", 120, constructive_proxy},
      {10, "determinism and persistence", 60, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (secs > c.budget_seconds) {
      o.passed = false;
      o.detail += "; over the " + fmt(c.budget_seconds) + " s budget";
    }
    failures += !o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << c.id << " ("
              << c.title << ", " << fmt(secs) << " s): " << o.detail
              << std::endl;
  }
  std::cout << (10 - failures) << "/10 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
