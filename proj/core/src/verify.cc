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

#include "inhernet/verify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "inhernet/checkpoint.h"
#include "inhernet/conv.h"
#include "inhernet/errors.h"
#include "inhernet/experiments.h"
#include "inhernet/inherit.h"
#include "inhernet/linalg.h"
#include "inhernet/nn.h"
#include "inhernet/rng.h"
#include "inhernet/theory.h"
#include "inhernet/train.h"

namespace inhernet {
namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << v;
  return s.str();
}

Outcome bound_check(double value, double limit, const std::string& what) {
  return {value <= limit, what + " " + sci(value) + " (limit " + sci(limit) + ")"};
}

Matrix random_matrix(std::size_t m, std::size_t n, CounterRng& rng) {
  Matrix w(m, n);
  for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return w;
}

Matrix random_low_rank(std::size_t m, std::size_t n, std::size_t r,
                       CounterRng& rng) {
  return matmul(random_matrix(m, r, rng), random_matrix(r, n, rng));
}

double tail_energy(std::span<const double> s, std::size_t r) {
  double t = 0.0;
  for (std::size_t i = r; i < s.size(); ++i) t += s[i] * s[i];
  return t;
}

Outcome svd_reconstruction(CounterRng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const std::size_t m = 1 + rng.below(40), n = 1 + rng.below(40);
    const Matrix w = random_matrix(m, n, rng);
    const SvdFactorization f = full_svd(w);
    const double scale = std::max(1.0, frobenius_norm(w));
    worst = std::max(worst, max_abs_diff(f.reconstruct(), w) / scale);
    const std::size_t k = f.rank();
    worst = std::max(worst, max_abs_diff(matmul_tn(f.u, f.u), Matrix::identity(k)));
    worst = std::max(worst, max_abs_diff(matmul_tn(f.v, f.v), Matrix::identity(k)));
    for (std::size_t i = 1; i < k; ++i) {
      if (f.sigma[i] > f.sigma[i - 1] || f.sigma[i] < 0.0) {
        return {false, "singular values out of order"};
      }
    }
  }
  return bound_check(worst, 1e-10, "max reconstruction/orthogonality error");
}

Outcome eckart_young(CounterRng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + rng.below(30), n = 2 + rng.below(30);
    const Matrix w = random_matrix(m, n, rng);
    const auto spectrum = singular_values(w);
    const std::size_t k = std::min(m, n);
    for (std::size_t r = 1; r <= std::min<std::size_t>(8, k); ++r) {
      const double err = frobenius_norm(w - truncated_svd(w, r).reconstruct());
      if (r == k) {
        // Zero tail: compare against the matrix scale instead.
        worst = std::max(worst, err / frobenius_norm(w));
        continue;
      }
      const double expected = std::sqrt(tail_energy(spectrum, r));
      worst = std::max(worst, std::abs(err - expected) / expected);
      for (int k = 0; k < 20; ++k) {
        const double other =
            frobenius_norm(w - random_low_rank(m, n, r, rng));
        if (other < err) return {false, "a random factorization beat the SVD"};
      }
    }
  }
  return bound_check(worst, 1e-8, "max relative error vs sqrt(tail energy)");
}

Outcome sign_convention(CounterRng& rng) {
  for (int t = 0; t < 20; ++t) {
    const Matrix w = random_matrix(3 + rng.below(10), 3 + rng.below(10), rng);
    const SvdFactorization f = full_svd(w);
    for (std::size_t j = 0; j < f.rank(); ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < f.u.rows(); ++i) {
        if (std::abs(f.u(i, j)) > std::abs(f.u(best, j))) best = i;
      }
      if (f.u(best, j) < 0.0) return {false, "negative dominant entry"};
    }
  }
  return {true, "dominant entry of every left vector nonnegative"};
}

Outcome condition_numbers(CounterRng&) {
  const double values[] = {10.0, 2.0, 0.5};
  const double k = condition_number(Matrix::diagonal(values));
  const double zero_tail[] = {4.0, 1.0, 0.0};
  const double k0 = condition_number(Matrix::diagonal(zero_tail));
  const bool ok = std::abs(k - 20.0) <= 1e-12 && std::abs(k0 - 4.0) <= 1e-12;
  return {ok, "kappa(diag(10,2,0.5)) = " + sci(k) + ", zero singular value ignored"};
}

LossFn mse_to(const Matrix& y) {
  return [y](const Matrix& out) { return mse_loss(out, y); };
}

double fd_deviation(Network& net, const Matrix& x, CounterRng& rng) {
  const Matrix y = random_matrix(x.rows(), net.output_width(), rng);
  const LossFn loss = mse_to(y);
  net.backward(loss(net.forward(x)).grad);
  return max_relative_deviation(net.gradients(),
                                finite_difference_grad(net, loss, x, 1e-5));
}

InheritOptions gated(std::size_t rank, std::size_t heads, std::uint64_t seed,
                     GateInput gate = GateInput::kCode) {
  InheritOptions o;
  o.rank = rank;
  o.heads = heads;
  o.gate_input = gate;
  o.gate_init_scale = 1.0;
  o.seed = seed;
  return o;
}

Outcome dense_fd(CounterRng& rng) {
  const std::size_t widths[] = {5, 7, 6, 3};
  Network net = make_mlp(widths, rng);
  // Nonzero biases keep pre-activations off the ReLU kink.
  for (std::size_t l = 0; l < net.size(); l += 2) {
    for (double& b : dynamic_cast<DenseLayer&>(net.layer(l)).bias()) {
      b = rng.uniform(0.1, 0.5);
    }
  }
  return bound_check(fd_deviation(net, random_matrix(4, 5, rng), rng), 1e-4,
                     "max relative deviation");
}

Outcome inhernet_fd(CounterRng& rng) {
  double worst = 0.0;
  for (GateInput g : {GateInput::kCode, GateInput::kInput}) {
    InherNetLayer layer =
        inherit_dense(random_matrix(6, 5, rng), gated(3, 3, rng.next_u64(), g),
                      std::vector<double>(5, 0.1));
    for (Matrix& h : layer.heads()) {
      for (double& v : h.data()) v += rng.uniform(-0.3, 0.3);
    }
    std::vector<std::vector<double>> hb(3, std::vector<double>(5));
    for (auto& b : hb) {
      for (double& v : b) v = rng.uniform(-1, 1);
    }
    layer.set_head_biases(hb);
    Network net;
    net.add(layer);
    worst = std::max(worst, fd_deviation(net, random_matrix(5, 6, rng), rng));
  }
  return bound_check(worst, 1e-4, "max relative deviation");
}

Outcome decomposition(CounterRng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 3 + rng.below(8), n = 2 + rng.below(8);
    const std::size_t r = 1 + rng.below(std::min(m, n));
    const std::size_t h = 1 + rng.below(4);
    InherNetLayer layer = inherit_dense(
        random_matrix(m, n, rng),
        gated(r, h, rng.next_u64(), t % 2 ? GateInput::kInput : GateInput::kCode));
    for (Matrix& head : layer.heads()) {
      for (double& v : head.data()) v += rng.uniform(-0.5, 0.5);
    }
    if (t % 5 == 4) layer.set_gate_trainable(false);
    const Matrix x = random_matrix(6, m, rng);
    worst = std::max(worst, gradient_decomposition_check(
                                layer, x, mse_to(random_matrix(6, n, rng))));
  }
  return bound_check(worst, 1e-8, "max assembly deviation over 20 layers");
}

Outcome conv_fd(CounterRng& rng) {
  Tensor4D k({4, 2, 3, 3});
  for (double& v : k.data()) v = rng.uniform(-1, 1);
  const ConvGeometry g{2, 5, 5, 1, 1};
  Network plain;
  plain.add(Conv2DLayer(k, g, std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  Network inherited;
  inherited.add(inherit_conv(k, g, gated(2, 3, rng.next_u64()),
                             std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  const Matrix x = random_matrix(3, g.input_size(), rng);
  const double worst =
      std::max(fd_deviation(plain, x, rng), fd_deviation(inherited, x, rng));
  return bound_check(worst, 1e-4, "max relative deviation");
}

Outcome variant_fd(CounterRng& rng) {
  double worst = 0.0;
  const DenseLayer teacher(random_matrix(6, 5, rng), std::vector<double>(5, 0.2));
  for (Variant v : {Variant::kInverse, Variant::kSymmetric, Variant::kNoSvd}) {
    Network net;
    net.add(make_variant(teacher, v, gated(2, 3, rng.next_u64())));
    worst = std::max(worst, fd_deviation(net, random_matrix(5, 6, rng), rng));
  }
  return bound_check(worst, 1e-4, "max relative deviation");
}

Outcome kd_gradient(CounterRng& rng) {
  Matrix s = random_matrix(5, 4, rng);
  const Matrix t = random_matrix(5, 4, rng);
  const std::vector<std::size_t> labels{0, 1, 2, 3, 0};
  TrainConfig c;
  c.loss = LossKind::kCrossEntropyKd;
  const LossValue v = kd_loss(s, t, labels, c);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double saved = s.data()[i];
    s.data()[i] = saved + 1e-6;
    const double up = kd_loss(s, t, labels, c).value;
    s.data()[i] = saved - 1e-6;
    const double down = kd_loss(s, t, labels, c).value;
    s.data()[i] = saved;
    const double fd = (up - down) / 2e-6;
    const double g = v.grad.data()[i];
    worst = std::max(worst, std::abs(fd - g) /
                                std::max({std::abs(fd), std::abs(g), 1e-6}));
  }
  return bound_check(worst, 1e-4, "max relative deviation");
}

Outcome compression_arithmetic(CounterRng&) {
  const bool ratio = compression_ratio_paper(100, 100, 5, 3) == 10000.0 / 3018.0;
  const bool count = param_count_actual(LayerShape{100, 100, 5, 3}) == 2018;
  bool differ = true;
  for (std::size_t h = 2; h <= 6; ++h) {
    differ = differ && param_count_actual(LayerShape{100, 100, 5, h}) <
                           param_count_paper(100, 100, 5, h);
  }
  return {ratio && count && differ,
          "rho(100,100,5,3) = 10000/3018, shared-down count 2018, per-head "
          "count larger for H > 1"};
}

Outcome energy_chain(CounterRng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(1 + rng.below(40));
    for (double& v : s) v = rng.uniform() * std::pow(10.0, rng.uniform(-3, 1));
    std::sort(s.begin(), s.end(), std::greater<>());
    const double eps = std::pow(10.0, rng.uniform(-8, -0.1));
    const std::size_t r = rank_for_energy(s, eps);
    const double total = tail_energy(s, 0);
    const double err = eckart_young_error(s, r);
    if (err * err > eps * total * (1 + 1e-12)) {
      return {false, "error^2 exceeds eps * total energy"};
    }
    worst = std::max(worst, std::abs(err * err - tail_energy(s, r)) / total);
  }
  return bound_check(worst, 1e-12, "max slack deviation from residual energy");
}

Outcome preservation(CounterRng& rng) {
  const std::vector<std::vector<double>> one{{3, 2, 1}};
  const std::vector<std::size_t> r2{2}, r3{3};
  const double b2 = preservation_bound(LayerInfluence::uniform(1), one, r2);
  const double b3 = preservation_bound(LayerInfluence::uniform(1), one, r3);
  bool monotone = true;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(2 + rng.below(10));
    for (double& v : s) v = rng.uniform();
    std::sort(s.begin(), s.end(), std::greater<>());
    const std::vector<std::vector<double>> spectra{s};
    double last = -1e300;
    for (std::size_t r = 0; r <= s.size(); ++r) {
      const std::vector<std::size_t> rr{r};
      const double b = preservation_bound(LayerInfluence::uniform(1), spectra, rr);
      monotone = monotone && b >= last && b <= 1.0;
      last = b;
    }
  }
  const bool ok = std::abs(b2 - 13.0 / 14.0) < 1e-15 && b3 == 1.0 && monotone;
  return {ok, "bound(3,2,1; r=2) = " + sci(b2) + ", monotone in rank"};
}

Outcome init_equivalence(CounterRng& rng) {
  double worst = 0.0, exact = 0.0;
  for (int t = 0; t < 10; ++t) {
    const std::size_t m = 3 + rng.below(30), n = 3 + rng.below(30);
    const std::size_t r = 1 + rng.below(std::min(m, n));
    const Matrix w = random_matrix(m, n, rng);
    const InherNetLayer layer = inherit_dense(w, gated(r, 1 + rng.below(4), t));
    Matrix x = random_matrix(50, m, rng);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double norm = 0.0;
      for (double v : x.row(i)) norm += v * v;
      for (double& v : x.row(i)) v *= 10.0 * rng.uniform() / std::sqrt(norm);
    }
    worst = std::max(worst, max_abs_diff(layer.apply(x),
                                         matmul(x, truncated_svd(w, r).reconstruct())));
    const Matrix low = random_low_rank(m, n, r, rng);
    exact = std::max(exact, max_abs_diff(inherit_dense(low, gated(r, 3, t)).apply(x),
                                         matmul(x, low)));
  }
  return {worst <= 1e-6 && exact <= 1e-10,
          "truncation " + sci(worst) + " (limit 1e-6), exact rank " + sci(exact) +
              " (limit 1e-10)"};
}

Outcome energy_reproduction(CounterRng&) {
  double worst = 0.0;
  for (const ReproductionRow& row : run_energy_rank_reproduction(3, 1e-6)) {
    if (row.inherited_params >= row.teacher_params) {
      return {false, "inherited network is not smaller than its teacher"};
    }
    worst = std::max(worst, row.mse);
  }
  return bound_check(worst, 1e-4, "max output MSE vs teacher over 3 teachers");
}

Outcome schedule(CounterRng&) {
  TrainConfig c;
  c.base_lr = 0.3;
  double worst = 0.0;
  for (std::size_t t = 1; t <= 100000; t += 7) {
    worst = std::max(worst, std::abs(learning_rate(c, t) *
                                         std::sqrt(static_cast<double>(t)) -
                                     0.3));
  }
  return bound_check(worst, 2 * (std::nextafter(0.3, 1.0) - 0.3),
                     "max |eta_t sqrt(t) - eta|");
}

std::string serialize(const Network& net) {
  std::ostringstream out;
  write_checkpoint(net, out);
  return out.str();
}

Outcome checkpoint_roundtrip(CounterRng& rng) {
  const std::size_t widths[] = {7, 9, 5, 3};
  const Network teacher = make_mlp(widths, rng);
  for (Variant v : {Variant::kStandard, Variant::kNoSvd, Variant::kNoGate,
                    Variant::kSymmetric, Variant::kInverse}) {
    NetworkInheritOptions o;
    o.variant = v;
    o.ranks = {3, 2, 2};
    o.heads = 3;
    o.gate_init_scale = 0.5;
    const std::string bytes = serialize(inherit_network(teacher, o));
    std::istringstream in(bytes);
    if (serialize(read_checkpoint(in)) != bytes) {
      return {false, std::string(to_string(v)) + " round trip differs"};
    }
  }
  return {true, "all five variants bit-exact"};
}

Outcome user_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {false, "cannot open " + path.string()};
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  std::istringstream stream(bytes);
  CheckpointInfo info;
  const Network net = read_checkpoint(stream, &info);
  std::ostringstream out;
  write_checkpoint(net, out, info);
  if (out.str() != bytes) return {false, "re-serialized bytes differ"};
  return {true, std::to_string(net.size()) + " layers, " +
                    std::to_string(net.parameter_count()) + " parameters"};
}

struct Check {
  Suite suite;
  const char* name;
  std::function<Outcome(CounterRng&)> run;
};

const std::vector<Check>& registry() {
  static const std::vector<Check> checks{
      {Suite::kSvd, "svd-reconstruction", svd_reconstruction},
      {Suite::kSvd, "eckart-young", eckart_young},
      {Suite::kSvd, "sign-convention", sign_convention},
      {Suite::kSvd, "condition-number", condition_numbers},
      {Suite::kGradients, "dense-finite-difference", dense_fd},
      {Suite::kGradients, "inhernet-finite-difference", inhernet_fd},
      {Suite::kGradients, "gradient-decomposition", decomposition},
      {Suite::kGradients, "conv-finite-difference", conv_fd},
      {Suite::kGradients, "variant-finite-difference", variant_fd},
      {Suite::kGradients, "kd-gradient", kd_gradient},
      {Suite::kTheory, "compression-arithmetic", compression_arithmetic},
      {Suite::kTheory, "energy-chain", energy_chain},
      {Suite::kTheory, "preservation-bound", preservation},
      {Suite::kTheory, "init-equivalence", init_equivalence},
      {Suite::kTheory, "energy-rank-reproduction", energy_reproduction},
      {Suite::kTheory, "inverse-sqrt-schedule", schedule},
      {Suite::kAll, "checkpoint-roundtrip", checkpoint_roundtrip},
  };
  return checks;
}

CheckResult timed(std::string suite, std::string name,
                  const std::function<Outcome()>& body) {
  CheckResult r;
  r.suite = std::move(suite);
  r.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  try {
    const Outcome o = body();
    r.passed = o.passed;
    r.detail = o.detail;
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
  return r;
}

}  // namespace

Suite parse_suite(std::string_view s) {
  if (s == "svd") return Suite::kSvd;
  if (s == "gradients") return Suite::kGradients;
  if (s == "theory") return Suite::kTheory;
  if (s == "all") return Suite::kAll;
  throw RangeError("unknown suite '" + std::string(s) +
                   "' (expected svd, gradients, theory or all)");
}

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::kSvd:
      return "svd";
    case Suite::kGradients:
      return "gradients";
    case Suite::kTheory:
      return "theory";
    case Suite::kAll:
      return "all";
  }
  return "?";
}

std::vector<CheckResult> run_verify(Suite suite, const VerifyOptions& options) {
  std::vector<CheckResult> results;
  std::uint64_t index = 0;
  for (const Check& c : registry()) {
    ++index;
    // Suite-independent checks run everywhere.
    if (suite != Suite::kAll && c.suite != suite && c.suite != Suite::kAll) continue;
    CounterRng rng(options.seed, rng_stream::kVerify + index);
    results.push_back(timed(std::string(to_string(c.suite == Suite::kAll ? Suite::kAll
                                                                          : c.suite)),
                            c.name, [&] { return c.run(rng); }));
  }
  for (const auto& path : options.checkpoints) {
    results.push_back(timed("io", "checkpoint:" + path.filename().string(),
                            [&] { return user_checkpoint(path); }));
  }
  return results;
}

void print_table(const std::vector<CheckResult>& results, std::ostream& out) {
  std::size_t width = 5;
  for (const CheckResult& r : results) {
    width = std::max(width, r.suite.size() + 1 + r.name.size());
  }
  std::size_t passed = 0;
  for (const CheckResult& r : results) {
    const std::string label = r.suite + "/" + r.name;
    out << (r.passed ? "PASS  " : "FAIL  ") << std::left
        << std::setw(static_cast<int>(width) + 2) << label << std::right
        << std::fixed << std::setprecision(2) << std::setw(7) << r.seconds
        << "s  " << r.detail << '\n';
    passed += r.passed;
  }
  out << passed << '/' << results.size() << " checks passed\n";
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

}  // namespace inhernet
