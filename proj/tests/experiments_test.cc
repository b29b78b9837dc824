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

#include "inhernet/experiments.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "inhernet/errors.h"

namespace inhernet {
namespace {

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value) {
      setenv(name, value, 1);
    } else {
      unsetenv(name);
    }
  }
  ~ScopedEnv() {
    if (old_.empty()) {
      unsetenv(name_);
    } else {
      setenv(name_, old_.c_str(), 1);
    }
  }

 private:
  const char* name_;
  std::string old_;
};

ClassificationStudy small_study() {
  ClassificationStudy s = ClassificationStudy::defaults();
  s.task.samples = 300;
  s.task.input_dim = 8;
  s.task.output_dim = 3;
  s.teacher_hidden = {16, 16};
  s.teacher_train.epochs = 2;
  s.student_train.epochs = 3;
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TEST(WorkerLimitTest, ReadsEnvironment) {
  {
    ScopedEnv env("INHERIT_THREADS", "3");
    EXPECT_EQ(worker_limit(), 3u);
  }
  {
    ScopedEnv env("INHERIT_THREADS", nullptr);
    EXPECT_GE(worker_limit(), 1u);
  }
}

TEST(WorkerLimitTest, RejectsMalformedValues) {
  for (const char* bad : {"0", "-2", "four", "3x"}) {
    ScopedEnv env("INHERIT_THREADS", bad);
    EXPECT_THROW(worker_limit(), RangeError) << bad;
  }
}

TEST(ParallelForTest, RunsEveryJobOnce) {
  for (std::size_t workers : {1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelForTest, RethrowsAfterJoining) {
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(20, 4,
                            [&](std::size_t i) {
                              ++done;
                              if (i == 7) throw std::runtime_error("job 7");
                            }),
               std::runtime_error);
  EXPECT_GE(done.load(), 8);
}

TEST(Insight1Test, SmallSweepShapeAndDeterminism) {
  Insight1Config c;
  c.study = small_study();
  c.ranks = {1, 2};
  c.sweep.seeds = 2;
  c.sweep.workers = 1;
  const Insight1Result a = run_insight1(c);
  c.sweep.workers = 3;
  const Insight1Result b = run_insight1(c);
  ASSERT_EQ(a.rows.size(), 4u);
  EXPECT_EQ(a.seeds, 2u);
  std::ostringstream ca, cb;
  write_csv(a, ca);
  write_csv(b, cb);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(ca.str().rfind(
                "seed,rank,teacher_acc,acc_ce,acc_kd,kd_delta,settled_ce,"
                "settled_kd\n",
                0),
            0u);
  std::size_t wins = 0, nonwins = 0;
  for (const Insight1Row& r : a.rows) {
    EXPECT_DOUBLE_EQ(r.kd_delta(), r.acc_kd - r.acc_ce);
    if (r.rank == 1 && r.kd_delta() > 0) ++wins;
    if (r.rank == 2 && r.kd_delta() <= 0) ++nonwins;
  }
  EXPECT_EQ(a.kd_wins_smallest, wins);
  EXPECT_EQ(a.kd_nonwins_largest, nonwins);
  EXPECT_FALSE(summary(a).empty());
}

TEST(Insight2Test, GridAndRanges) {
  Insight2Config c;
  c.study = small_study();
  c.ranks = {1, 2, 4};
  c.heads = {1, 2, 3};
  c.mid_rank = 2;
  c.sweep.seeds = 2;
  const Insight2Result r = run_insight2(c);
  // Rank sweep at H=3 plus the head sweep at r=2, sharing (2, 3).
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (const Insight2Row& row : r.rows) cells.emplace(row.rank, row.heads);
  EXPECT_EQ(cells.size(), 5u);
  EXPECT_EQ(r.rows.size(), 10u);

  auto mean = [&](std::size_t rank, std::size_t heads) {
    double s = 0;
    int k = 0;
    for (const Insight2Row& row : r.rows) {
      if (row.rank == rank && row.heads == heads) {
        s += row.accuracy;
        ++k;
      }
    }
    return s / k;
  };
  std::vector<double> by_rank{mean(1, 3), mean(2, 3), mean(4, 3)};
  std::vector<double> by_heads{mean(2, 1), mean(2, 2), mean(2, 3)};
  auto range = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) -
           *std::min_element(v.begin(), v.end());
  };
  EXPECT_NEAR(r.range_over_rank, range(by_rank), 1e-15);
  EXPECT_NEAR(r.range_over_heads, range(by_heads), 1e-15);
  std::size_t not_worse = 0;
  for (std::uint64_t seed : {1u, 2u}) {
    double h1 = 0, h3 = 0;
    for (const Insight2Row& row : r.rows) {
      if (row.seed != seed || row.rank != 2) continue;
      if (row.heads == 1) h1 = row.accuracy;
      if (row.heads == 3) h3 = row.accuracy;
    }
    not_worse += h3 >= h1;
  }
  EXPECT_EQ(r.h3_not_worse, not_worse);
}

TEST(Insight3Test, MediansCountMissesAsEpochsPlusOne) {
  Insight3Config c = Insight3Config::defaults();
  c.task.samples = 400;
  c.train.epochs = 4;
  c.sweep.seeds = 3;
  const Insight3Result r = run_insight3(c);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.epochs, 4u);
  std::vector<double> svd, nosvd;
  for (const Insight3Row& row : r.rows) {
    EXPECT_GT(row.threshold, 0.0);
    EXPECT_DOUBLE_EQ(row.threshold, c.threshold_factor * row.teacher_eval_loss);
    svd.push_back(row.svd_epochs ? *row.svd_epochs : 5.0);
    nosvd.push_back(row.nosvd_epochs ? *row.nosvd_epochs : 5.0);
  }
  EXPECT_DOUBLE_EQ(r.median_svd, median_of(svd));
  EXPECT_DOUBLE_EQ(r.median_nosvd, median_of(nosvd));
  EXPECT_NE(summary(r).find("median"), std::string::npos);
}

TEST(ReproductionTest, EnergyRanksKeepOutputsAndCompress) {
  const auto rows = run_energy_rank_reproduction(2, 1e-6, 11);
  ASSERT_EQ(rows.size(), 2u);
  for (const ReproductionRow& r : rows) {
    EXPECT_LE(r.mse, 1e-4);
    EXPECT_LT(r.inherited_params, r.teacher_params);
    for (std::size_t rank : r.ranks) EXPECT_GE(rank, 1u);
  }
}

}  // namespace
}  // namespace inhernet
