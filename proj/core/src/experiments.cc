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
#include <charconv>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>

#include "inhernet/csv.h"
#include "inhernet/errors.h"
#include "inhernet/inherit.h"
#include "inhernet/nn.h"
#include "inhernet/rng.h"

namespace inhernet {
namespace {

std::size_t resolve_workers(const SweepOptions& s) {
  return s.workers ? s.workers : worker_limit();
}

std::vector<std::uint64_t> seed_list(const SweepOptions& s) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < s.seeds; ++i) out.push_back(s.base_seed + i);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string fmt(double v) { return format_double(v); }

struct SeedTask {
  Split data;
  Network teacher;
  double teacher_acc = 0.0;
};

SeedTask prepare_classification(const ClassificationStudy& study,
                                std::uint64_t seed) {
  SeedTask t;
  SyntheticTask task = study.task;
  task.seed = seed;
  t.data = gen_synthetic(task);
  std::vector<std::size_t> widths{task.input_dim};
  widths.insert(widths.end(), study.teacher_hidden.begin(),
                study.teacher_hidden.end());
  widths.push_back(task.output_dim);
  CounterRng rng(seed, rng_stream::kTeacher);
  t.teacher = make_mlp(widths, rng);
  TrainConfig c = study.teacher_train;
  c.seed = seed;
  train(t.teacher, t.data, c);
  t.teacher_acc = evaluate(t.teacher, t.data.eval).accuracy;
  return t;
}

Network inherit_student(const Network& teacher, std::size_t rank,
                        std::size_t heads, double gate_scale,
                        std::uint64_t seed, Variant variant) {
  NetworkInheritOptions o;
  o.variant = variant;
  o.ranks = {rank};
  o.heads = heads;
  o.gate_init_scale = gate_scale;
  o.seed = seed;
  o.clamp_rank = true;
  return inherit_network(teacher, o);
}

struct Finetune {
  double accuracy = 0.0;
  bool settled = true;
};

Finetune finetune(const ClassificationStudy& study, const SeedTask& t,
                  std::size_t rank, std::size_t heads, std::uint64_t seed,
                  bool with_kd) {
  Network student = inherit_student(t.teacher, rank, heads,
                                    study.gate_init_scale, seed,
                                    Variant::kStandard);
  TrainConfig c = study.student_train;
  c.seed = seed;
  if (with_kd) {
    c.loss = LossKind::kCrossEntropyKd;
    c.base_lr = study.kd_lr;
    c.lambda_kd = study.lambda_kd;
    c.temperature = study.temperature;
  }
  const RunLog log = train(student, t.data, c, with_kd ? &t.teacher : nullptr);
  return {evaluate(student, t.data.eval).accuracy, eval_loss_settled(log)};
}

std::vector<SeedTask> prepare_all(const ClassificationStudy& study,
                                  const std::vector<std::uint64_t>& seeds,
                                  std::size_t workers) {
  std::vector<SeedTask> tasks(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    tasks[i] = prepare_classification(study, seeds[i]);
  });
  return tasks;
}

}  // namespace

std::size_t worker_limit() {
  if (const char* env = std::getenv("INHERIT_THREADS"); env && *env) {
    const std::string_view s(env);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
      throw RangeError("INHERIT_THREADS must be a positive integer, got '" +
                       std::string(s) + "'");
    }
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ClassificationStudy ClassificationStudy::defaults() {
  ClassificationStudy s;
  s.task.kind = TaskKind::kClassification;
  s.task.samples = 2000;
  s.task.input_dim = 32;
  s.task.output_dim = 10;
  s.task.separation = 2.0;
  s.task.label_noise = 0.1;
  s.teacher_hidden = {128, 128};
  s.teacher_train.epochs = 1;
  s.teacher_train.base_lr = 0.01;
  s.student_train.epochs = 30;
  s.student_train.base_lr = 0.05;
  s.kd_lr = 0.01;
  return s;
}

Insight1Result run_insight1(const Insight1Config& config) {
  const auto seeds = seed_list(config.sweep);
  const std::size_t workers = resolve_workers(config.sweep);
  const auto tasks = prepare_all(config.study, seeds, workers);
  Insight1Result result;
  result.seeds = seeds.size();
  const std::size_t nr = config.ranks.size();
  result.rows.resize(seeds.size() * nr);
  std::mutex flag_mutex;
  parallel_for(result.rows.size() * 2, workers, [&](std::size_t job) {
    const std::size_t cell = job / 2;
    const bool kd = job % 2;
    const std::size_t s = cell / nr;
    Insight1Row& row = result.rows[cell];
    const Finetune f = finetune(config.study, tasks[s], config.ranks[cell % nr],
                                config.heads, seeds[s], kd);
    (kd ? row.acc_kd : row.acc_ce) = f.accuracy;
    if (!f.settled) {
      std::lock_guard lock(flag_mutex);
      (kd ? row.settled_kd : row.settled_ce) = false;
      ++result.unsettled_runs;
    }
  });
  for (std::size_t cell = 0; cell < result.rows.size(); ++cell) {
    Insight1Row& row = result.rows[cell];
    row.seed = seeds[cell / nr];
    row.rank = config.ranks[cell % nr];
    row.teacher_acc = tasks[cell / nr].teacher_acc;
  }
  if (nr == 0) return result;
  const std::size_t smallest =
      *std::min_element(config.ranks.begin(), config.ranks.end());
  const std::size_t largest =
      *std::max_element(config.ranks.begin(), config.ranks.end());
  for (const Insight1Row& row : result.rows) {
    if (row.rank == smallest && row.kd_delta() > 0.0) ++result.kd_wins_smallest;
    if (row.rank == largest && row.kd_delta() <= 0.0) ++result.kd_nonwins_largest;
  }
  return result;
}

void write_csv(const Insight1Result& result, std::ostream& out) {
  out << "seed,rank,teacher_acc,acc_ce,acc_kd,kd_delta,settled_ce,settled_kd\n";
  for (const Insight1Row& r : result.rows) {
    out << r.seed << ',' << r.rank << ',' << fmt(r.teacher_acc) << ','
        << fmt(r.acc_ce) << ',' << fmt(r.acc_kd) << ',' << fmt(r.kd_delta())
        << ',' << r.settled_ce << ',' << r.settled_kd << '\n';
  }
}

std::string summary(const Insight1Result& result) {
  std::ostringstream s;
  s << "KD helps at the smallest rank in " << result.kd_wins_smallest << '/'
    << result.seeds << " seeds and does not help at the largest rank in "
    << result.kd_nonwins_largest << '/' << result.seeds << " seeds: "
    << (result.regime_flip() ? "regime flip reproduced"
                             : "regime flip not reproduced");
  return s.str();
}

Insight2Result run_insight2(const Insight2Config& config) {
  const auto seeds = seed_list(config.sweep);
  const std::size_t workers = resolve_workers(config.sweep);
  std::set<std::pair<std::size_t, std::size_t>> grid;
  for (std::size_t r : config.ranks) grid.emplace(r, config.fixed_heads);
  for (std::size_t h : config.heads) grid.emplace(config.mid_rank, h);
  grid.emplace(config.mid_rank, 1);
  grid.emplace(config.mid_rank, config.fixed_heads);
  const std::vector<std::pair<std::size_t, std::size_t>> cells(grid.begin(),
                                                               grid.end());
  const auto tasks = prepare_all(config.study, seeds, workers);
  Insight2Result result;
  result.seeds = seeds.size();
  result.rows.resize(seeds.size() * cells.size());
  parallel_for(result.rows.size(), workers, [&](std::size_t job) {
    const std::size_t s = job / cells.size();
    const auto [rank, heads] = cells[job % cells.size()];
    const Finetune f = finetune(config.study, tasks[s], rank, heads, seeds[s], false);
    result.rows[job] = {seeds[s], rank, heads, f.accuracy, f.settled};
  });
  for (const Insight2Row& r : result.rows) result.unsettled_runs += !r.settled;

  std::map<std::pair<std::size_t, std::size_t>, double> mean;
  for (const Insight2Row& r : result.rows) {
    mean[{r.rank, r.heads}] += r.accuracy / static_cast<double>(seeds.size());
  }
  auto range = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  std::vector<double> over_rank, over_heads;
  for (std::size_t r : config.ranks) {
    over_rank.push_back(mean[{r, config.fixed_heads}]);
  }
  for (std::size_t h : config.heads) over_heads.push_back(mean[{config.mid_rank, h}]);
  result.range_over_rank = range(over_rank);
  result.range_over_heads = range(over_heads);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    double one = 0.0, fixed = 0.0;
    for (const Insight2Row& r : result.rows) {
      if (r.seed != seeds[s] || r.rank != config.mid_rank) continue;
      if (r.heads == 1) one = r.accuracy;
      if (r.heads == config.fixed_heads) fixed = r.accuracy;
    }
    if (fixed >= one) ++result.h3_not_worse;
  }
  return result;
}

void write_csv(const Insight2Result& result, std::ostream& out) {
  out << "seed,rank,heads,accuracy,settled\n";
  for (const Insight2Row& r : result.rows) {
    out << r.seed << ',' << r.rank << ',' << r.heads << ',' << fmt(r.accuracy)
        << ',' << r.settled << '\n';
  }
}

std::string summary(const Insight2Result& result) {
  std::ostringstream s;
  s << "accuracy range over rank " << fmt(result.range_over_rank)
    << " vs over heads " << fmt(result.range_over_heads) << "; more heads not"
    << " worse in " << result.h3_not_worse << '/' << result.seeds << " seeds: "
    << (result.rank_dominates() && result.heads_help() ? "trends reproduced"
                                                       : "trends not reproduced");
  return s.str();
}

Insight3Config Insight3Config::defaults() {
  Insight3Config c;
  c.task.kind = TaskKind::kTeacherMimic;
  c.task.samples = 4000;
  c.task.input_dim = 16;
  c.task.output_dim = 4;
  c.task.teacher_hidden = {64, 64};
  c.task.planted_rank = 6;
  c.task.tail_scale = 0.02;
  c.task.noise = 0.1;
  c.train.loss = LossKind::kMse;
  c.train.epochs = 40;
  c.train.base_lr = 0.01;
  return c;
}

Insight3Result run_insight3(const Insight3Config& config) {
  const auto seeds = seed_list(config.sweep);
  Insight3Result result;
  result.epochs = config.train.epochs;
  result.rows.resize(seeds.size());
  std::vector<Split> data(seeds.size());
  std::vector<Network> teachers(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    SyntheticTask task = config.task;
    task.seed = seeds[s];
    data[s] = gen_synthetic(task);
    teachers[s] = mimic_teacher(task);
    Insight3Row& row = result.rows[s];
    row.seed = seeds[s];
    row.teacher_eval_loss = evaluate(teachers[s], data[s].eval).loss;
    row.threshold = config.threshold_factor * row.teacher_eval_loss;
  }
  parallel_for(seeds.size() * 2, resolve_workers(config.sweep),
               [&](std::size_t job) {
                 const std::size_t s = job / 2;
                 const bool svd = job % 2 == 0;
                 Insight3Row& row = result.rows[s];
                 Network student = inherit_student(
                     teachers[s], config.rank, config.heads,
                     config.gate_init_scale, seeds[s],
                     svd ? Variant::kStandard : Variant::kNoSvd);
                 TrainConfig c = config.train;
                 c.seed = seeds[s];
                 c.threshold = row.threshold;
                 const RunLog log = train(student, data[s], c);
                 const double final_loss =
                     log.epochs.empty() ? 0.0 : log.epochs.back().eval_loss;
                 if (svd) {
                   row.svd_epochs = log.epochs_to_threshold;
                   row.svd_final_loss = final_loss;
                   row.svd_settled = eval_loss_settled(log);
                 } else {
                   row.nosvd_epochs = log.epochs_to_threshold;
                   row.nosvd_final_loss = final_loss;
                   row.nosvd_settled = eval_loss_settled(log);
                 }
               });
  std::vector<double> svd, nosvd;
  const auto never = static_cast<double>(result.epochs + 1);
  for (const Insight3Row& r : result.rows) {
    result.unsettled_runs += !r.svd_settled + !r.nosvd_settled;
    svd.push_back(r.svd_epochs ? static_cast<double>(*r.svd_epochs) : never);
    nosvd.push_back(r.nosvd_epochs ? static_cast<double>(*r.nosvd_epochs) : never);
  }
  result.median_svd = median(svd);
  result.median_nosvd = median(nosvd);
  return result;
}

void write_csv(const Insight3Result& result, std::ostream& out) {
  out << "seed,teacher_eval_loss,threshold,svd_epochs,nosvd_epochs,"
         "svd_final_loss,nosvd_final_loss,svd_settled,nosvd_settled\n";
  auto epochs = [](const std::optional<std::size_t>& e) {
    return e ? std::to_string(*e) : std::string("never");
  };
  for (const Insight3Row& r : result.rows) {
    out << r.seed << ',' << fmt(r.teacher_eval_loss) << ',' << fmt(r.threshold)
        << ',' << epochs(r.svd_epochs) << ',' << epochs(r.nosvd_epochs) << ','
        << fmt(r.svd_final_loss) << ',' << fmt(r.nosvd_final_loss) << ','
        << r.svd_settled << ',' << r.nosvd_settled << '\n';
  }
}

std::string summary(const Insight3Result& result) {
  std::ostringstream s;
  s << "median epochs to threshold: SVD init " << fmt(result.median_svd)
    << ", no-SVD " << fmt(result.median_nosvd) << " (never counts as "
    << result.epochs + 1 << "): "
    << (result.svd_faster() ? "SVD init converges faster"
                            : "SVD init does not converge faster");
  return s.str();
}

std::vector<ReproductionRow> run_energy_rank_reproduction(
    std::size_t teachers, double epsilon, std::uint64_t base_seed) {
  std::vector<ReproductionRow> rows;
  for (std::size_t i = 0; i < teachers; ++i) {
    ReproductionRow row;
    row.seed = base_seed + i;
    const std::size_t widths[] = {32, 64, 64, 8};
    const Network teacher = make_planted_teacher(widths, 4, 1e-5, row.seed);
    NetworkInheritOptions o;
    o.energy_epsilon = epsilon;
    o.seed = row.seed;
    const Network student = inherit_network(teacher, o);
    for (std::size_t l = 0; l < student.size(); ++l) {
      if (const auto* layer =
              dynamic_cast<const InherNetLayer*>(&student.layer(l))) {
        row.ranks.push_back(layer->rank());
      }
    }
    CounterRng rng(row.seed, rng_stream::kVerify);
    Matrix x(500, widths[0]);
    for (double& v : x.data()) v = rng.normal();
    row.mse = mse_loss(student.apply(x), teacher.apply(x)).value;
    row.teacher_params = teacher.parameter_count();
    row.inherited_params = student.parameter_count();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace inhernet
