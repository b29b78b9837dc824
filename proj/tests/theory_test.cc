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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "inhernet/errors.h"
#include "inhernet/inherit.h"
#include "inhernet/synthetic.h"
#include "inhernet/theory.h"
#include "oracles.h"

namespace inhernet {
namespace {

std::vector<double> random_spectrum(CounterRng& rng, std::size_t len) {
  std::vector<double> s(len);
  for (double& v : s) v = rng.uniform() * std::pow(10.0, rng.uniform(-3, 1));
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

double tail(std::span<const double> s, std::size_t r) {
  double t = 0.0;
  for (std::size_t i = r; i < s.size(); ++i) t += s[i] * s[i];
  return t;
}

TEST(CompressionRatioTest, ClosedFormValues) {
  EXPECT_EQ(compression_ratio_paper(100, 100, 5, 3), 10000.0 / 3018.0);
  EXPECT_NEAR(compression_ratio_paper(100, 100, 5, 3), 3.3135, 1e-4);
  EXPECT_EQ(compression_ratio_paper(4, 4, 4, 1), 16.0 / 37.0);
  EXPECT_LT(compression_ratio_paper(4, 4, 4, 1), 1.0);
  EXPECT_EQ(compression_ratio_paper(1000, 1000, 1, 1), 1e6 / 2002.0);
  EXPECT_EQ(param_count_paper(100, 100, 5, 3), 3018u);
}

TEST(ParamCountTest, SharedDownEnumeration) {
  LayerShape s{100, 100, 5, 3};
  EXPECT_EQ(param_count_actual(s), 2018u);
  s.gate_input = GateInput::kInput;
  EXPECT_EQ(param_count_actual(s), 500u + 1500 + 300 + 3);
  s = {100, 100, 5, 3};
  s.with_bias = true;
  EXPECT_EQ(param_count_actual(s), 2118u);
  const LayerShape two_factor{30, 20, 4, 1, GateInput::kCode, false, false};
  EXPECT_EQ(param_count_actual(two_factor), 30u * 4 + 4 * 20);
}

TEST(ParamCountTest, PerHeadAndSharedCountsDifferForSeveralHeads) {
  for (std::size_t h = 1; h <= 5; ++h) {
    const std::size_t shared = param_count_actual(LayerShape{100, 100, 5, h});
    const std::size_t per_head = param_count_paper(100, 100, 5, h);
    if (h == 1) {
      EXPECT_EQ(shared, per_head);
    } else {
      EXPECT_LT(shared, per_head);
      EXPECT_EQ(per_head - shared, (h - 1) * 100 * 5);
    }
  }
}

TEST(ParamCountTest, LayerCountMatchesEnumeration) {
  CounterRng rng(1);
  for (GateInput gi : {GateInput::kCode, GateInput::kInput}) {
    InheritOptions o;
    o.rank = 3;
    o.heads = 4;
    o.gate_input = gi;
    DenseLayer teacher(oracle::random_matrix(9, 7, rng), std::vector<double>(7, 1.0));
    InherNetLayer layer = inherit_dense(teacher, o);
    std::size_t enumerated = 0;
    for (const ParamRef& p : layer.params()) enumerated += p.value.size();
    EXPECT_EQ(param_count_actual(layer), enumerated);
    LayerShape s{9, 7, 3, 4, gi, true, true};
    EXPECT_EQ(param_count_actual(layer), param_count_actual(s));
  }
  DenseLayer teacher(oracle::random_matrix(9, 7, rng), std::nullopt);
  InheritOptions o;
  o.rank = 3;
  auto no_gate = make_variant(teacher, Variant::kNoGate, o);
  EXPECT_EQ(param_count_actual(dynamic_cast<const InherNetLayer&>(*no_gate)),
            9u * 3 + 3 * 7);
}

TEST(ParamCountTest, CompressionConditionIsExact) {
  CounterRng rng(2);
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 1 + rng.below(200), n = 1 + rng.below(200);
    const std::size_t r = 1 + rng.below(std::min(m, n));
    const std::size_t h = 1 + rng.below(6);
    const LayerShape s{m, n, r, h};
    const std::size_t gate = r * h + h;
    EXPECT_EQ(param_count_actual(s) < m * n, r * (m + h * n) + gate < m * n);
  }
}

TEST(SpectralEnergyTest, HandValues) {
  const std::vector<double> s{3, 2, 1};
  EXPECT_NEAR(spectral_energy(s, 2), 13.0 / 14.0, 1e-15);
  EXPECT_EQ(spectral_energy(s, 3), 1.0);
  EXPECT_EQ(spectral_energy(s, 0), 0.0);
  EXPECT_EQ(rank_for_energy(s, 0.1), 2u);
  EXPECT_EQ(rank_for_energy(std::vector<double>{1, 1}, 0.6), 1u);
}

TEST(SpectralEnergyTest, Errors) {
  const std::vector<double> zero{0, 0};
  EXPECT_THROW(spectral_energy(zero, 1), DegenerateInputError);
  EXPECT_THROW(rank_for_energy(zero, 0.1), DegenerateInputError);
  const std::vector<double> s{3, 2, 1};
  EXPECT_THROW(spectral_energy(s, 4), RangeError);
  EXPECT_THROW(rank_for_energy(s, 0.0), RangeError);
  EXPECT_THROW(rank_for_energy(s, 1.0), RangeError);
}

TEST(SpectralEnergyTest, EnergyChainHoldsWithResidualSlack) {
  CounterRng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto s = random_spectrum(rng, 1 + rng.below(40));
    const double eps = std::pow(10.0, rng.uniform(-8, -0.1));
    const std::size_t r = rank_for_energy(s, eps);
    const double total = tail(s, 0);
    const double err = eckart_young_error(s, r);
    EXPECT_LE(err * err, eps * total + 1e-12 * total);
    EXPECT_NEAR(err * err, tail(s, r), 1e-12 * total);
    // Minimality: one fewer component breaks the bound.
    if (r > 1) EXPECT_GT(tail(s, r - 1), eps * total);
  }
}

TEST(EckartYoungTest, HandValues) {
  const std::vector<double> s{3, 2, 1};
  EXPECT_EQ(eckart_young_error(s, 3), 0.0);
  EXPECT_NEAR(eckart_young_error(s, 1), std::sqrt(5.0), 1e-15);
}

TEST(EckartYoungTest, MatchesReconstructionError) {
  CounterRng rng(4);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + rng.below(30), n = 2 + rng.below(30);
    const Matrix w = oracle::random_matrix(m, n, rng);
    const SvdFactorization f = full_svd(w);
    for (std::size_t r = 1; r <= std::min(m, n); r += 3) {
      const double direct = frobenius_norm(w - truncated_svd(w, r).reconstruct());
      EXPECT_NEAR(eckart_young_error(f.full_spectrum, r), direct, 1e-8);
      EXPECT_NEAR(direct, oracle::truncation_error_via_gram(w, r), 1e-8);
    }
  }
}

TEST(PreservationBoundTest, Values) {
  const std::vector<std::vector<double>> one{{3, 2, 1}};
  const std::vector<std::size_t> r2{2};
  EXPECT_NEAR(preservation_bound(LayerInfluence::uniform(1), one, r2), 13.0 / 14.0, 1e-15);
  const std::vector<std::vector<double>> two{{3, 2, 1}, {1, 1}};
  const std::vector<std::size_t> full{3, 2};
  EXPECT_EQ(preservation_bound(LayerInfluence::uniform(2), two, full), 1.0);
  const std::vector<std::size_t> partial{3, 1};
  EXPECT_LT(preservation_bound(LayerInfluence::uniform(2), two, partial), 1.0);
  EXPECT_THROW(preservation_bound(LayerInfluence::uniform(1), two, full), ShapeError);
}

TEST(PreservationBoundTest, MonotoneInEachRank) {
  CounterRng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t layers = 1 + rng.below(4);
    std::vector<std::vector<double>> spectra;
    std::vector<std::size_t> ranks;
    std::vector<double> weights;
    for (std::size_t l = 0; l < layers; ++l) {
      spectra.push_back(random_spectrum(rng, 1 + rng.below(10)));
      ranks.push_back(rng.below(spectra.back().size() + 1));
      weights.push_back(rng.uniform());
    }
    const auto alpha = LayerInfluence::normalized(weights);
    const double base = preservation_bound(alpha, spectra, ranks);
    EXPECT_LE(base, 1.0);
    for (std::size_t l = 0; l < layers; ++l) {
      if (ranks[l] == spectra[l].size()) continue;
      auto more = ranks;
      ++more[l];
      EXPECT_GE(preservation_bound(alpha, spectra, more), base);
    }
  }
}

TEST(LayerInfluenceTest, Normalization) {
  const auto a = LayerInfluence::normalized({1, 2, 3, 4});
  EXPECT_NEAR(std::accumulate(a.alpha.begin(), a.alpha.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(a.alpha[0], 0.1);
  EXPECT_THROW(LayerInfluence::normalized({1, -1}), RangeError);
  EXPECT_THROW(LayerInfluence::normalized({0, 0}), RangeError);
}

TEST(AnalyzeTest, ReportFieldsAreConsistent) {
  CounterRng rng(6);
  const std::size_t widths[] = {12, 20, 16, 4};
  const Network teacher = make_mlp(widths, rng);
  NetworkInheritOptions o;
  o.ranks = {3, 4, 2};
  o.heads = 3;
  const Network student = inherit_network(teacher, o);
  const Matrix probe = oracle::random_matrix(30, 12, rng);
  const TheoryReport r = analyze(teacher, student, std::nullopt, &probe);
  ASSERT_EQ(r.per_layer_breakdown.size(), 3u);
  EXPECT_EQ(r.param_count_teacher, teacher.parameter_count());
  EXPECT_EQ(r.param_count_actual, student.parameter_count());
  EXPECT_DOUBLE_EQ(r.rho_actual, static_cast<double>(teacher.parameter_count()) /
                                     static_cast<double>(student.parameter_count()));
  EXPECT_GT(r.rho_paper, 0.0);
  EXPECT_GE(r.spectral_energy_ratio, 0.0);
  EXPECT_LE(r.spectral_energy_ratio, 1.0);
  EXPECT_LE(r.preservation_lower_bound, 1.0);
  ASSERT_TRUE(r.output_cosine_similarity.has_value());
  EXPECT_NEAR(*r.output_cosine_similarity,
              output_cosine_similarity(teacher, student, probe), 1e-15);

  double max_eps = 0.0, tails = 0.0;
  std::vector<std::vector<double>> spectra;
  std::vector<std::size_t> ranks;
  for (std::size_t l = 0; l < 3; ++l) {
    const LayerTheory& lt = r.per_layer_breakdown[l];
    const Matrix& w = dynamic_cast<const DenseLayer&>(teacher.layer(2 * l)).weight();
    const auto s = singular_values(w);
    EXPECT_EQ(lt.rank, o.ranks[l]);
    EXPECT_EQ(lt.m, w.rows());
    EXPECT_EQ(lt.n, w.cols());
    EXPECT_NEAR(lt.spectral_energy_ratio, spectral_energy(s, lt.rank), 1e-12);
    EXPECT_NEAR(lt.epsilon, 1.0 - lt.spectral_energy_ratio, 1e-12);
    EXPECT_NEAR(lt.eckart_young_error, eckart_young_error(s, lt.rank), 1e-10);
    EXPECT_NEAR(lt.kappa_teacher, condition_number(w), 1e-8 * lt.kappa_teacher);
    EXPECT_NEAR(lt.alpha, 1.0 / 3.0, 1e-15);
    max_eps = std::max(max_eps, lt.epsilon);
    tails += lt.eckart_young_error * lt.eckart_young_error;
    spectra.push_back(s);
    ranks.push_back(lt.rank);
  }
  EXPECT_DOUBLE_EQ(r.epsilon, max_eps);
  EXPECT_NEAR(r.eckart_young_error, std::sqrt(tails), 1e-12);
  EXPECT_NEAR(r.preservation_lower_bound,
              preservation_bound(LayerInfluence::uniform(3), spectra, ranks), 1e-12);

  const auto j = nlohmann::json::parse(to_json(r));
  for (const char* key : {"rho_paper", "param_count_actual", "param_count_teacher",
                          "rho_actual", "spectral_energy_ratio", "eckart_young_error",
                          "epsilon", "kappa", "preservation_lower_bound",
                          "per_layer_breakdown"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["per_layer_breakdown"].size(), 3u);
}

TEST(AnalyzeTest, MissingProbeSerializesAsNull) {
  CounterRng rng(7);
  const std::size_t widths[] = {6, 5};
  const Network teacher = make_mlp(widths, rng);
  NetworkInheritOptions o;
  o.ranks = {2};
  const TheoryReport r = analyze(teacher, inherit_network(teacher, o));
  EXPECT_FALSE(r.output_cosine_similarity.has_value());
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_TRUE(j["output_cosine_similarity"].is_null());
}

TEST(ConstructiveProxyTest, EnergyRanksReproduceTeacher) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const std::size_t widths[] = {32, 64, 64, 8};
    const Network teacher = make_planted_teacher(widths, 4, 1e-5, seed);
    NetworkInheritOptions o;
    o.energy_epsilon = 1e-6;
    o.heads = 1;
    const Network student = inherit_network(teacher, o);
    CounterRng rng(seed, 99);
    const Matrix x = oracle::random_matrix(200, 32, rng);
    const double mse = mse_loss(student.apply(x), teacher.apply(x)).value;
    EXPECT_LE(mse, 1e-4) << "seed " << seed;
    EXPECT_LT(student.parameter_count(), teacher.parameter_count());
  }
}

TEST(HeadMarginalGainsTest, LinearTargetTiesAcrossHeads) {
  CounterRng rng(8);
  const Matrix w = oracle::random_matrix(6, 3, rng);
  Dataset d;
  d.inputs = oracle::random_matrix(300, 6, rng);
  d.targets = matmul(d.inputs, w);
  const Split split = split_dataset(d, 8);
  DenseLayer teacher(w, std::nullopt);
  TrainConfig c;
  c.epochs = 10;
  c.base_lr = 0.05;
  InheritOptions base;
  base.gate_init_scale = 0.5;
  const MarginalGainReport rep = head_marginal_gains(teacher, 3, 4, split, c, base);
  ASSERT_EQ(rep.errors.size(), 4u);
  ASSERT_EQ(rep.gains.size(), 3u);
  for (std::size_t h = 0; h < 4; ++h) {
    EXPECT_EQ(rep.errors[h].heads, h + 1);
    EXPECT_LT(rep.errors[h].error, 1e-6);
  }
  bool nonincreasing = true;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rep.gains[i], rep.errors[i].error - rep.errors[i + 1].error);
    if (i > 0 && rep.gains[i] > rep.gains[i - 1]) nonincreasing = false;
  }
  EXPECT_EQ(rep.gains_nonincreasing, nonincreasing);
}

TEST(HeadMarginalGainsTest, RejectsSingleHeadSweep) {
  DenseLayer teacher(Matrix(3, 2, 1.0), std::nullopt);
  EXPECT_THROW(head_marginal_gains(teacher, 1, 1, Split{}, TrainConfig{}), RangeError);
}

}  // namespace
}  // namespace inhernet
