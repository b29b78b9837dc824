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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "inhernet/checkpoint.h"
#include "inhernet/csv.h"
#include "inhernet/errors.h"
#include "inhernet/experiments.h"
#include "inhernet/inherit.h"
#include "inhernet/rng.h"
#include "inhernet/theory.h"
#include "inhernet/train.h"
#include "inhernet/verify.h"
#include "options.h"
#include "svg.h"

namespace fs = std::filesystem;

namespace inhernet::tools {
namespace {

using ConfigMap = std::map<std::string, std::string>;

// Relative artifact paths resolve against `base`.
fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

fs::path out_dir(const fs::path& out_file) { return out_file.parent_path(); }

fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p.replace_extension();
  return fs::path(p.string() + suffix);
}

void print_header(const std::string& command) {
  std::cout << "# inhernet " << command << " resolved config\n";
}

void print_value(const std::string& key, const std::string& value) {
  std::cout << key << " = " << value << '\n';
}

Network load(const fs::path& path, ConfigMap* config) {
  CheckpointInfo info;
  Network net = load_checkpoint(path, &info);
  if (config) *config = info.config;
  return net;
}

void write_runlog(const RunLog& log, const fs::path& log_path, bool plot,
                  const std::string& title) {
  std::ostringstream csv;
  write_runlog_csv(log, csv);
  write_file_atomic(log_path, csv.str());
  std::cout << "wrote " << log_path.string() << '\n';
  if (!plot) return;
  Chart chart{title, "epoch", "loss", {}};
  Series tr{"train loss", {}, {}};
  Series ev{"eval loss", {}, {}};
  for (const EpochRecord& r : log.epochs) {
    const double e = static_cast<double>(r.epoch);
    tr.x.push_back(e);
    tr.y.push_back(r.train_loss);
    ev.x.push_back(e);
    ev.y.push_back(r.eval_loss);
  }
  chart.series = {tr, ev};
  const fs::path svg = sibling(log_path, ".svg");
  write_file_atomic(svg, render_svg(chart));
  std::cout << "wrote " << svg.string() << '\n';
}

void print_final(const RunLog& log) {
  if (log.epochs.empty()) return;
  const EpochRecord& r = log.epochs.back();
  std::cout << "final train_loss = " << format_double(r.train_loss)
            << ", eval_loss = " << format_double(r.eval_loss);
  if (!std::isnan(r.eval_acc)) {
    std::cout << ", eval_acc = " << format_double(r.eval_acc);
  }
  std::cout << '\n';
  if (log.epochs_to_threshold) {
    std::cout << "epochs_to_threshold = " << *log.epochs_to_threshold << '\n';
  }
}

// ---- train-teacher ----

struct TrainTeacherCmd {
  FieldGroup data_group{"data"};
  FieldGroup train_group{"train"};
  FieldGroup model_group{"teacher"};
  DataFlags data;
  TrainFlags tr;
  std::vector<std::uint64_t> hidden{64, 64};
  std::uint64_t init_seed = 0;
  std::string out;
  std::string log;
  bool plot = false;

  void bind(CLI::App* app) {
    data.bind(app, data_group);
    tr.bind(app, train_group, false);
    model_group.add(app, "hidden", hidden, "Hidden layer widths");
    model_group.add(app, "init-seed", init_seed, "Weight initialization seed");
    app->add_option("--out", out, "Output checkpoint")->required();
    app->add_option("--log", log, "RunLog CSV (default: <out>.runlog.csv)");
    app->add_flag("--plot", plot, "Also write an SVG loss chart");
  }

  int run() {
    print_header("train-teacher");
    data_group.print(std::cout);
    train_group.print(std::cout);
    model_group.print(std::cout);
    const Split split = data.load();
    const TrainConfig config = tr.config(split.train);
    std::vector<std::size_t> widths{split.train.inputs.cols()};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(split.train.is_classification()
                         ? split.train.num_classes
                         : split.train.targets.cols());
    CounterRng rng(init_seed, rng_stream::kInit);
    Network net = make_mlp(widths, rng);
    const RunLog runlog = train(net, split, config);
    print_final(runlog);

    CheckpointInfo info;
    info.seed = init_seed;
    data_group.store(info.config);
    train_group.store(info.config);
    model_group.store(info.config);
    const fs::path out_path(out);
    save_checkpoint(net, out_path, info);
    std::cout << "wrote " << out_path.string() << '\n';
    const fs::path log_path = log.empty() ? sibling(out_path, ".runlog.csv")
                                          : resolve(log, out_dir(out_path));
    write_runlog(runlog, log_path, plot, "teacher training");
    return 0;
  }
};

// ---- inherit ----

struct InheritCmd {
  FieldGroup group{"inherit"};
  std::string teacher;
  std::vector<std::uint64_t> ranks{4};
  std::optional<double> energy;
  std::uint64_t heads = 3;
  std::string mode = "convex";
  std::string gate = "code";
  std::string variant = "standard";
  double gate_init = 0.0;
  std::uint64_t seed = 0;
  bool clamp = false;
  std::string out;
  std::string report;

  void bind(CLI::App* app) {
    app->add_option("--teacher", teacher, "Teacher checkpoint")->required();
    group.add(app, "rank", ranks, "Rank per inheritable layer, or one for all");
    group.add(app, "energy", energy,
              "Pick each layer's rank to keep 1 - eps of the spectral energy");
    group.add(app, "heads", heads, "Expert heads per layer");
    group.add(app, "mode", mode, "Head combiner")
        ->check(CLI::IsMember({"convex", "paper"}));
    group.add(app, "gate", gate, "Gate input")
        ->check(CLI::IsMember({"code", "input"}));
    group.add(app, "variant", variant, "Inheritance variant")
        ->check(CLI::IsMember(
            {"standard", "no-svd", "no-gate", "symmetric", "inverse"}));
    group.add(app, "gate-init", gate_init, "Scale of the random gate weights");
    group.add(app, "seed", seed, "Seed for random initialization");
    group.add(app, "clamp-rank", clamp, "Clip ranks to min(m, n)");
    app->add_option("--out", out, "Output checkpoint")->required();
    app->add_option("--report", report, "Also write the theory report as JSON");
  }

  int run() {
    print_header("inherit");
    print_value("teacher", teacher);
    group.print(std::cout);
    ConfigMap teacher_config;
    const Network t = load(teacher, &teacher_config);
    NetworkInheritOptions o;
    o.variant = parse_variant(variant);
    o.ranks.assign(ranks.begin(), ranks.end());
    o.energy_epsilon = energy;
    o.heads = heads;
    o.combiner = parse_combiner(mode);
    o.gate_input = parse_gate_input(gate);
    o.gate_init_scale = gate_init;
    o.seed = seed;
    o.clamp_rank = clamp;
    const Network student = inherit_network(t, o);

    const TheoryReport rep = analyze(t, student);
    std::cout << "rho_paper = " << format_double(rep.rho_paper)
              << ", rho_actual = " << format_double(rep.rho_actual) << " ("
              << rep.param_count_teacher << " -> " << rep.param_count_actual
              << " params)\n";
    for (const LayerTheory& l : rep.per_layer_breakdown) {
      std::cout << "layer " << l.index << " (" << l.kind << ' ' << l.m << 'x'
                << l.n << "): rank " << l.rank << ", epsilon "
                << format_double(l.epsilon) << '\n';
    }
    std::cout << "kappa = " << format_double(rep.kappa)
              << ", preservation_lower_bound = "
              << format_double(rep.preservation_lower_bound) << '\n';

    CheckpointInfo info;
    info.seed = seed;
    info.config = teacher_config;
    group.store(info.config);
    const fs::path out_path(out);
    save_checkpoint(student, out_path, info);
    std::cout << "wrote " << out_path.string() << '\n';
    if (!report.empty()) {
      const fs::path rp = resolve(report, out_dir(out_path));
      write_file_atomic(rp, to_json(rep) + "\n");
      std::cout << "wrote " << rp.string() << '\n';
    }
    return 0;
  }
};

// ---- train / distill ----

struct TrainCmd {
  explicit TrainCmd(bool distill) : distill(distill) {}

  bool distill;
  FieldGroup data_group{"data"};
  FieldGroup train_group{"train"};
  DataFlags data;
  TrainFlags tr;
  std::string model;
  std::string teacher;
  std::string out;
  std::string log;
  bool plot = false;

  void bind(CLI::App* app) {
    if (distill) {
      app->add_option("--teacher", teacher, "Teacher checkpoint")->required();
      app->add_option("--student", model, "Student checkpoint")->required();
    } else {
      app->add_option("--model", model, "Checkpoint to train")->required();
    }
    data.bind(app, data_group);
    tr.bind(app, train_group, distill);
    app->add_option("--out", out, "Output checkpoint")->required();
    app->add_option("--log", log, "RunLog CSV (default: <out>.runlog.csv)");
    app->add_flag("--plot", plot, "Also write an SVG loss chart");
  }

  int run() {
    ConfigMap config;
    Network net = load(model, &config);
    data_group.merge_from(config);
    const char* name = distill ? "distill" : "train";
    print_header(name);
    if (distill) print_value("teacher", teacher);
    print_value(distill ? "student" : "model", model);
    data_group.print(std::cout);
    train_group.print(std::cout);

    const Split split = data.load();
    const TrainConfig c = tr.config(split.train);
    std::optional<Network> t;
    if (distill) {
      t = load(teacher, nullptr);
      if (t->output_width() != net.output_width()) {
        throw ShapeError("teacher has " + std::to_string(t->output_width()) +
                         " outputs but the student has " +
                         std::to_string(net.output_width()));
      }
    }
    const RunLog runlog = train(net, split, c, t ? &*t : nullptr);
    print_final(runlog);

    CheckpointInfo info;
    info.seed = tr.seed;
    info.config = config;
    data_group.store(info.config);
    train_group.store(info.config);
    const fs::path out_path(out);
    save_checkpoint(net, out_path, info);
    std::cout << "wrote " << out_path.string() << '\n';
    const fs::path log_path = log.empty() ? sibling(out_path, ".runlog.csv")
                                          : resolve(log, out_dir(out_path));
    write_runlog(runlog, log_path, plot, name);
    return 0;
  }
};

// ---- eval ----

struct EvalCmd {
  FieldGroup data_group{"data"};
  DataFlags data;
  std::string model;

  void bind(CLI::App* app) {
    app->add_option("--model", model, "Checkpoint to evaluate")->required();
    data.bind(app, data_group);
  }

  int run() {
    ConfigMap config;
    const Network net = load(model, &config);
    data_group.merge_from(config);
    print_header("eval");
    print_value("model", model);
    data_group.print(std::cout);
    const Split split = data.load();
    const Evaluation e = evaluate(net, split.eval);
    std::cout << "eval_loss = " << format_double(e.loss) << '\n';
    if (!std::isnan(e.accuracy)) {
      std::cout << "eval_acc = " << format_double(e.accuracy) << '\n';
    }
    std::cout << "params = " << net.parameter_count() << '\n';
    return 0;
  }
};

// ---- analyze ----

struct AnalyzeCmd {
  std::string teacher;
  std::string inherited;
  std::uint64_t probes = 256;
  std::uint64_t seed = 0;
  std::vector<double> alpha;
  std::string out;

  void bind(CLI::App* app) {
    app->add_option("--teacher", teacher, "Teacher checkpoint")->required();
    app->add_option("--inherited", inherited, "Inherited checkpoint")
        ->required();
    app->add_option("--probes", probes, "Normal probe inputs for the cosine")
        ->capture_default_str();
    app->add_option("--seed", seed, "Probe seed")->capture_default_str();
    app->add_option("--alpha", alpha, "Layer influence weights")
        ->delimiter(',');
    app->add_option("--out", out, "Write the JSON report here (default stdout)");
  }

  int run() {
    print_header("analyze");
    print_value("teacher", teacher);
    print_value("inherited", inherited);
    print_value("probes", to_text(probes));
    print_value("seed", to_text(seed));
    print_value("alpha", alpha.empty() ? "uniform" : to_text(alpha));
    const Network t = load(teacher, nullptr);
    const Network s = load(inherited, nullptr);
    std::optional<LayerInfluence> influence;
    if (!alpha.empty()) influence = LayerInfluence::normalized(alpha);
    Matrix x(probes, t.input_width());
    CounterRng rng(seed, rng_stream::kVerify);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    }
    const TheoryReport rep =
        analyze(t, s, influence, probes > 0 ? &x : nullptr);
    const std::string json = to_json(rep) + "\n";
    if (out.empty()) {
      std::cout << json;
    } else {
      write_file_atomic(out, json);
      std::cout << "wrote " << out << '\n';
    }
    return 0;
  }
};

// ---- verify ----

struct VerifyCmd {
  std::string suite = "all";
  std::vector<std::string> checkpoints;
  std::uint64_t seed = 2026;

  void bind(CLI::App* app) {
    app->add_option("--suite", suite, "Check suite")
        ->check(CLI::IsMember({"svd", "gradients", "theory", "all"}))
        ->capture_default_str();
    app->add_option("--checkpoint", checkpoints,
                    "Checkpoint to load and round-trip (repeatable)");
    app->add_option("--seed", seed, "Seed of the random cases")
        ->capture_default_str();
  }

  int run() {
    print_header("verify");
    print_value("suite", suite);
    print_value("seed", to_text(seed));
    for (const std::string& c : checkpoints) print_value("checkpoint", c);
    VerifyOptions o;
    o.seed = seed;
    o.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    const auto results = run_verify(parse_suite(suite), o);
    print_table(results, std::cout);
    return all_passed(results) ? 0 : 1;
  }
};

// ---- insight ----

struct InsightCmd {
  std::uint64_t which = 3;
  std::uint64_t seeds = 5;
  std::uint64_t base_seed = 1;
  std::string out = ".";
  bool plot = false;

  void bind(CLI::App* app) {
    app->add_option("--which", which, "Insight experiment")
        ->check(CLI::IsMember({1, 2, 3}))
        ->required();
    app->add_option("--seeds", seeds, "Number of seeds")->capture_default_str();
    app->add_option("--base-seed", base_seed, "First seed")
        ->capture_default_str();
    app->add_option("--out", out, "Output directory")->capture_default_str();
    app->add_flag("--plot", plot, "Also write SVG charts");
  }

  void write(const std::string& name, const std::string& contents) {
    const fs::path p = fs::path(out) / name;
    write_file_atomic(p, contents);
    std::cout << "wrote " << p.string() << '\n';
  }

  int run() {
    print_header("insight");
    print_value("which", to_text(which));
    print_value("seeds", to_text(seeds));
    print_value("base-seed", to_text(base_seed));
    print_value("out", out);
    print_value("workers", to_text(static_cast<std::uint64_t>(worker_limit())));
    fs::create_directories(out);
    SweepOptions sweep;
    sweep.seeds = seeds;
    sweep.base_seed = base_seed;
    const std::string stem = "insight" + std::to_string(which);
    std::ostringstream csv;
    std::string line;
    std::vector<Chart> charts;
    if (which == 1) {
      Insight1Config c;
      c.sweep = sweep;
      const Insight1Result r = run_insight1(c);
      write_csv(r, csv);
      line = summary(r);
      Chart ch{"final accuracy vs rank", "rank", "accuracy", {}};
      Series ce{"CE", {}, {}}, kd{"CE+KD", {}, {}};
      for (std::size_t rank : c.ranks) {
        double a = 0, b = 0;
        std::size_t k = 0;
        for (const Insight1Row& row : r.rows) {
          if (row.rank != rank) continue;
          a += row.acc_ce;
          b += row.acc_kd;
          ++k;
        }
        ce.x.push_back(static_cast<double>(rank));
        kd.x.push_back(static_cast<double>(rank));
        ce.y.push_back(k ? a / k : 0.0);
        kd.y.push_back(k ? b / k : 0.0);
      }
      ch.series = {ce, kd};
      charts.push_back(ch);
    } else if (which == 2) {
      Insight2Config c;
      c.sweep = sweep;
      const Insight2Result r = run_insight2(c);
      write_csv(r, csv);
      line = summary(r);
      auto mean_of = [&](std::size_t rank, std::size_t heads) {
        double a = 0;
        std::size_t k = 0;
        for (const Insight2Row& row : r.rows) {
          if (row.rank == rank && row.heads == heads) {
            a += row.accuracy;
            ++k;
          }
        }
        return k ? a / k : 0.0;
      };
      Series by_rank{"H=" + std::to_string(c.fixed_heads), {}, {}};
      for (std::size_t rank : c.ranks) {
        by_rank.x.push_back(static_cast<double>(rank));
        by_rank.y.push_back(mean_of(rank, c.fixed_heads));
      }
      Series by_heads{"r=" + std::to_string(c.mid_rank), {}, {}};
      for (std::size_t h : c.heads) {
        by_heads.x.push_back(static_cast<double>(h));
        by_heads.y.push_back(mean_of(c.mid_rank, h));
      }
      charts.push_back({"accuracy vs rank", "rank", "accuracy", {by_rank}});
      charts.push_back({"accuracy vs heads", "heads", "accuracy", {by_heads}});
    } else {
      Insight3Config c = Insight3Config::defaults();
      c.sweep = sweep;
      const Insight3Result r = run_insight3(c);
      write_csv(r, csv);
      line = summary(r);
      const double never = static_cast<double>(r.epochs + 1);
      Series svd{"SVD init", {}, {}}, nosvd{"NoSvd", {}, {}};
      for (const Insight3Row& row : r.rows) {
        const double s = static_cast<double>(row.seed);
        svd.x.push_back(s);
        nosvd.x.push_back(s);
        svd.y.push_back(row.svd_epochs ? *row.svd_epochs : never);
        nosvd.y.push_back(row.nosvd_epochs ? *row.nosvd_epochs : never);
      }
      charts.push_back(
          {"epochs to threshold per seed", "seed", "epochs", {svd, nosvd}});
    }
    write(stem + ".csv", csv.str());
    write(stem + "_summary.txt", line + "\n");
    if (plot) {
      for (std::size_t i = 0; i < charts.size(); ++i) {
        const std::string suffix =
            charts.size() > 1 ? "_" + std::to_string(i + 1) : "";
        write(stem + suffix + ".svg", render_svg(charts[i]));
      }
    }
    std::cout << line << '\n';
    return 0;
  }
};

}  // namespace
}  // namespace inhernet::tools

int main(int argc, char** argv) {
  using namespace inhernet::tools;
  CLI::App app{"InherNet: inherit compact networks from trained teachers"};
  app.set_version_flag("--version", "inhernet 0.1.0");
  app.require_subcommand(1);

  TrainTeacherCmd train_teacher;
  InheritCmd inherit;
  TrainCmd train(false);
  TrainCmd distill(true);
  EvalCmd eval;
  AnalyzeCmd analyze;
  VerifyCmd verify;
  InsightCmd insight;

  train_teacher.bind(
      app.add_subcommand("train-teacher", "Train an MLP teacher"));
  inherit.bind(app.add_subcommand("inherit", "Inherit a compact network"));
  train.bind(app.add_subcommand("train", "Fine-tune a checkpoint"));
  distill.bind(
      app.add_subcommand("distill", "Fine-tune a student with distillation"));
  eval.bind(app.add_subcommand("eval", "Evaluate a checkpoint"));
  analyze.bind(app.add_subcommand("analyze", "Theory report as JSON"));
  verify.bind(app.add_subcommand("verify", "Run the built-in check suites"));
  insight.bind(app.add_subcommand("insight", "Run an insight experiment"));

  CLI11_PARSE(app, argc, argv);

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "train-teacher") return train_teacher.run();
    if (name == "inherit") return inherit.run();
    if (name == "train") return train.run();
    if (name == "distill") return distill.run();
    if (name == "eval") return eval.run();
    if (name == "analyze") return analyze.run();
    if (name == "verify") return verify.run();
    return insight.run();
  } catch (const inhernet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
