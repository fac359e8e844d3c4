#pragma once

/**
 * Command implementations behind the ckmerge binary. Each cmd_* function
 * does the work of one subcommand, writes results to the given streams, and
 * returns a process exit code:
 *
 *   0   success
 *   2   incompatible checkpoints
 *   3   I/O or container-format failure
 *   4   objective/evaluator failure (partial report still written)
 *   64  usage error
 *   65  domain error (invalid numeric inputs, validation failures)
 *
 * Tabular output is CSV with a header row; run reports are versioned JSON.
 * Everything is deterministic given flags plus seed, wall-time excepted.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ckmerge/baselines.hpp"
#include "ckmerge/bayesopt.hpp"
#include "ckmerge/checkpoint_io.hpp"
#include "ckmerge/diagnostics.hpp"
#include "ckmerge/merge.hpp"
#include "ckmerge/report.hpp"
#include "ckmerge/synthetic.hpp"
#include "ckmerge/toy.hpp"

namespace ckmerge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCompat = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitEvaluator = 4;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitDomain = 65;

// Shortest-round-trip double formatting, shared with the JSON reports.
inline std::string format_double(double v) { return nlohmann::json(v).dump(); }

template <typename Fn>
int run_guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const CompatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompat;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const EvaluationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

namespace detail {

class CsvSink {
 public:
  explicit CsvSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.emplace(path);
      if (!*file_) throw IoError("cannot open output file " + path);
      stream_ = &*file_;
    }
  }
  std::ostream& os() { return *stream_; }

 private:
  std::optional<std::ofstream> file_;
  std::ostream* stream_;
};

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) throw DomainError("quantile of empty set");
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

inline double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace detail

// ============================================================================
// Evaluator specs
// ============================================================================

// Checkpoint scorers addressable from the command line:
//   toy-dev / toy-test   accuracy on the task split (first `fraction` part)
//   const:<v>            constant score
//   neg-dist:<path>      negative L2 distance to a target checkpoint
struct EvalArgs {
  std::string spec = "toy-dev";
  ToyTask task;
  double fraction = 1.0;
};

inline CheckpointEvaluator make_evaluator(const EvalArgs& args) {
  if (args.spec == "toy-dev") return ToyEvaluator(args.task, Split::dev, args.fraction);
  if (args.spec == "toy-test") return ToyEvaluator(args.task, Split::test, args.fraction);
  if (args.spec.rfind("const:", 0) == 0) {
    double v = 0.0;
    try {
      v = std::stod(args.spec.substr(6));
    } catch (const std::exception&) {
      throw DomainError("bad constant evaluator spec '" + args.spec + "'");
    }
    return [v](const Checkpoint&) { return v; };
  }
  if (args.spec.rfind("neg-dist:", 0) == 0) {
    Checkpoint target = load_checkpoint(args.spec.substr(9));
    return [target = std::move(target)](const Checkpoint& c) {
      return -std::sqrt(merge_distance(c, target));
    };
  }
  throw DomainError("unknown evaluator spec '" + args.spec + "'");
}

inline nlohmann::ordered_json eval_config_json(const EvalArgs& args) {
  return {{"evaluator", args.spec},
          {"fraction", args.fraction},
          {"task",
           {{"n_train", args.task.n_train},
            {"n_dev", args.task.n_dev},
            {"n_test", args.task.n_test},
            {"noise", args.task.noise},
            {"seed", args.task.seed}}}};
}

// ============================================================================
// merge
// ============================================================================

struct MergeArgs {
  std::string prev;
  std::string curr;
  double lambda = 0.5;
  std::string out;
};

inline int cmd_merge(const MergeArgs& args, std::ostream& out, std::ostream& err) {
  if (!(args.lambda >= 0.0 && args.lambda <= 1.0)) {
    err << "error: --lambda must lie in [0, 1]\n";
    return kExitUsage;
  }
  return run_guarded(err, [&] {
    const Checkpoint prev = load_checkpoint(args.prev);
    const Checkpoint curr = load_checkpoint(args.curr);
    Checkpoint merged = pairwise_merge(prev, curr, args.lambda);
    save_checkpoint(merged, args.out);
    out << "merged " << merged.numel() << " elements at lambda=" << format_double(args.lambda)
        << " -> " << args.out << "\n";
    return kExitOk;
  });
}

// ============================================================================
// optimize
// ============================================================================

struct OptimizeArgs {
  // checkpoint mode (both paths set) ...
  std::string prev;
  std::string curr;
  EvalArgs eval;
  // ... or synthetic mode
  std::string objective;  // e.g. "quadratic-peak:0.9"

  double alpha = 0.5;
  OptConfig opt;
  std::string out_report;
  std::string out_ckpt;
};

inline nlohmann::ordered_json opt_config_json(const OptimizeArgs& args) {
  return {{"alpha", args.alpha},
          {"budget", args.opt.budget},
          {"grid_resolution", args.opt.grid_resolution},
          {"acquisition", to_string(args.opt.portfolio)},
          {"hedge_eta", args.opt.hedge_eta},
          {"beta", args.opt.acq.beta},
          {"xi", args.opt.acq.xi},
          {"noise", args.opt.kernel.noise},
          {"refine_length_scale", args.opt.kernel.refine_length_scale},
          {"eval_repeats", args.opt.eval_repeats},
          {"early_stop_patience", args.opt.early_stop_patience}};
}

inline int cmd_optimize(const OptimizeArgs& args, std::ostream& out, std::ostream& err) {
  const bool checkpoint_mode = !args.prev.empty() || !args.curr.empty();
  if (checkpoint_mode && (args.prev.empty() || args.curr.empty())) {
    err << "error: --prev and --curr must be given together\n";
    return kExitUsage;
  }
  if (!checkpoint_mode && args.objective.empty()) {
    err << "error: need either --prev/--curr or --objective\n";
    return kExitUsage;
  }

  RunReport report;
  report.command = "optimize";
  report.seed = args.opt.seed;
  report.config = opt_config_json(args);

  auto finish = [&](std::ostream& sink, double started_ms) {
    report.wall_time_ms = detail::now_ms() - started_ms;
    if (!args.out_report.empty()) {
      write_report(report, args.out_report);
      report.artifacts["report"] = args.out_report;
    }
    sink << "best_lambda=" << format_double(report.result.best_lambda)
         << " best_value=" << format_double(report.result.best_value)
         << " evaluations=" << report.result.trace.size() << "\n";
  };

  const double started_ms = detail::now_ms();
  return run_guarded(err, [&]() -> int {
    const SearchBounds bounds{args.alpha, 1.0};
    try {
      if (checkpoint_mode) {
        report.config["prev"] = args.prev;
        report.config["curr"] = args.curr;
        report.config["eval"] = eval_config_json(args.eval);
        const Checkpoint prev = load_checkpoint(args.prev);
        const Checkpoint curr = load_checkpoint(args.curr);
        const CheckpointEvaluator evaluator = make_evaluator(args.eval);
        auto [best, result] = optimize_merge(prev, curr, evaluator, bounds, args.opt);
        report.result = std::move(result);
        if (!args.out_ckpt.empty()) {
          save_checkpoint(best, args.out_ckpt);
          report.artifacts["merged_checkpoint"] = args.out_ckpt;
        }
      } else {
        report.config["objective"] = args.objective;
        const SyntheticObjective objective =
            parse_objective_spec(args.objective, args.opt.seed);
        report.result = optimize(
            [&objective](double l) { return eval_synthetic(objective, l); }, bounds, args.opt);
      }
    } catch (const EvaluationError& e) {
      report.result = e.partial;
      err << "error: " << e.what() << "\n";
      if (!args.out_report.empty()) {
        report.wall_time_ms = detail::now_ms() - started_ms;
        write_report(report, args.out_report);
      }
      return kExitEvaluator;
    }
    finish(out, started_ms);
    return kExitOk;
  });
}

// ============================================================================
// sweep
// ============================================================================

struct SweepArgs {
  std::string mode = "lambda-curve";  // lambda-curve | pairwise-matrix | soup-k
  std::string prev;
  std::string curr;
  std::vector<std::string> checkpoints;
  std::string objective;  // synthetic alternative for lambda-curve
  EvalArgs eval;
  int resolution = 101;
  std::string out;  // CSV path, empty = stdout
};

inline int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    detail::CsvSink sink(args.out, out);
    if (args.resolution < 2) throw DomainError("sweep resolution must be >= 2");

    if (args.mode == "lambda-curve") {
      // Uniform lambda sweep over [0, 1], the pilot-protocol weight curve.
      std::function<double(double)> score;
      if (!args.objective.empty()) {
        auto obj = parse_objective_spec(args.objective, args.eval.task.seed);
        score = [obj = std::move(obj)](double l) { return eval_synthetic(obj, l); };
      } else {
        if (args.prev.empty() || args.curr.empty())
          throw DomainError("lambda-curve needs --prev/--curr or --objective");
        Checkpoint prev = load_checkpoint(args.prev);
        Checkpoint curr = load_checkpoint(args.curr);
        CheckpointEvaluator evaluator = make_evaluator(args.eval);
        score = [prev = std::move(prev), curr = std::move(curr),
                 evaluator = std::move(evaluator)](double l) {
          return evaluator(pairwise_merge(prev, curr, l));
        };
      }
      sink.os() << "lambda,score\n";
      for (int i = 0; i < args.resolution; ++i) {
        const double l = static_cast<double>(i) / static_cast<double>(args.resolution - 1);
        sink.os() << format_double(l) << "," << format_double(score(l)) << "\n";
      }
      return kExitOk;
    }

    if (args.mode == "pairwise-matrix") {
      if (args.checkpoints.size() < 2)
        throw DomainError("pairwise-matrix needs at least two --checkpoint paths");
      std::vector<Checkpoint> ckpts;
      ckpts.reserve(args.checkpoints.size());
      for (const std::string& path : args.checkpoints) ckpts.push_back(load_checkpoint(path));
      const CheckpointEvaluator evaluator = make_evaluator(args.eval);
      sink.os() << "i,j,ckpt_i,ckpt_j,score\n";
      for (std::size_t i = 0; i < ckpts.size(); ++i) {
        for (std::size_t j = 0; j < ckpts.size(); ++j) {
          const double score =
              (i == j) ? evaluator(ckpts[i])
                       : evaluator(pairwise_merge(ckpts[i], ckpts[j], 0.5));
          sink.os() << i << "," << j << "," << args.checkpoints[i] << ","
                    << args.checkpoints[j] << "," << format_double(score) << "\n";
        }
      }
      return kExitOk;
    }

    if (args.mode == "soup-k") {
      if (args.checkpoints.size() < 2)
        throw DomainError("soup-k needs at least two --checkpoint paths");
      std::vector<Checkpoint> ckpts;
      ckpts.reserve(args.checkpoints.size());
      for (const std::string& path : args.checkpoints) ckpts.push_back(load_checkpoint(path));
      const CheckpointEvaluator evaluator = make_evaluator(args.eval);
      sink.os() << "start,k,score,members\n";
      for (int k = 2; k <= 4; ++k) {
        for (std::size_t start = 0; start + static_cast<std::size_t>(k) <= ckpts.size();
             ++start) {
          std::vector<Checkpoint> window(ckpts.begin() + static_cast<std::ptrdiff_t>(start),
                                         ckpts.begin() + static_cast<std::ptrdiff_t>(start) + k);
          auto [soup_ckpt, trace] = greedy_soup(window, evaluator);
          std::string members;
          for (std::size_t m : trace.final_members) {
            if (!members.empty()) members += ";";
            members += std::to_string(start + m);
          }
          sink.os() << start << "," << k << "," << format_double(evaluator(soup_ckpt)) << ","
                    << members << "\n";
        }
      }
      return kExitOk;
    }

    err << "error: unknown sweep mode '" << args.mode << "'\n";
    return kExitUsage;
  });
}

// ============================================================================
// compare
// ============================================================================

struct CompareArgs {
  std::vector<std::string> strategies = {"bo", "grid", "random", "greedy"};
  int budget = 15;
  std::vector<std::uint64_t> seeds = {0};
  std::string objective = "gp-sample";
  double alpha = 0.5;
  OptConfig opt;            // BO settings (budget/seed overridden per run)
  BaselineConfig baseline;  // greedy step/shrink
  std::string rows_out;     // optional rows CSV; summary always goes to `out`
};

inline int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  for (const std::string& s : args.strategies) {
    if (s != "bo" && s != "grid" && s != "random" && s != "greedy") {
      err << "error: unknown strategy '" << s << "'\n";
      return kExitUsage;
    }
  }
  return run_guarded(err, [&]() -> int {
    const SearchBounds bounds{args.alpha, 1.0};
    std::map<std::string, std::vector<double>> bests;

    std::optional<detail::CsvSink> rows;
    if (!args.rows_out.empty()) rows.emplace(args.rows_out, out);
    std::ostream* rows_os = rows ? &rows->os() : &out;
    *rows_os << "strategy,seed,best_lambda,best_value\n";

    for (std::uint64_t seed : args.seeds) {
      const SyntheticObjective objective = parse_objective_spec(args.objective, seed);
      const Objective fn = [&objective](double l) { return eval_synthetic(objective, l); };
      for (const std::string& strategy : args.strategies) {
        OptResult result;
        if (strategy == "bo") {
          OptConfig cfg = args.opt;
          cfg.budget = args.budget;
          cfg.seed = seed;
          result = optimize(fn, bounds, cfg);
        } else {
          BaselineConfig cfg = args.baseline;
          cfg.budget = args.budget;
          cfg.seed = seed;
          result = strategy == "grid"     ? grid_search(fn, bounds, cfg)
                   : strategy == "random" ? random_search(fn, bounds, cfg)
                                          : greedy_search(fn, bounds, cfg);
        }
        bests[strategy].push_back(result.best_value);
        *rows_os << strategy << "," << seed << "," << format_double(result.best_lambda) << ","
                 << format_double(result.best_value) << "\n";
      }
    }

    out << "strategy,median_best,iqr_best\n";
    for (const std::string& strategy : args.strategies) {
      const std::vector<double>& v = bests[strategy];
      const double median = detail::quantile(v, 0.5);
      const double iqr = detail::quantile(v, 0.75) - detail::quantile(v, 0.25);
      out << strategy << "," << format_double(median) << "," << format_double(iqr) << "\n";
    }
    return kExitOk;
  });
}

// ============================================================================
// diag
// ============================================================================

struct DiagArgs {
  std::string sub;  // bound | kl | pacbayes | rho | regret | descent
  BoundInputs bound;
  PacBayesInputs pacbayes;
  ConvergenceInputs rho;
  // regret
  std::string report_path;
  double f_star = 0.0;
  // descent
  int dim = 1;
  std::vector<double> lambda_schedule;
  int steps = 50;
  std::uint64_t seed = 0;
  std::string out;  // CSV path for series output, empty = stdout
};

inline int cmd_diag(const DiagArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    if (args.sub == "bound") {
      const PerformanceBound b = performance_bound(args.bound);
      out << "lower,upper\n"
          << format_double(b.lower) << "," << format_double(b.upper) << "\n";
      return kExitOk;
    }
    if (args.sub == "kl") {
      out << format_double(kl_divergence(args.pacbayes)) << "\n";
      return kExitOk;
    }
    if (args.sub == "pacbayes") {
      out << format_double(pac_bayes_bound(args.pacbayes)) << "\n";
      return kExitOk;
    }
    if (args.sub == "rho") {
      out << format_double(convergence_rate(args.rho)) << "\n";
      return kExitOk;
    }
    if (args.sub == "regret") {
      const OptResult result = load_report_result(args.report_path);
      const std::vector<double> series = cumulative_regret(result, args.f_star);
      detail::CsvSink sink(args.out, out);
      sink.os() << "t,cumulative_regret\n";
      for (std::size_t t = 0; t < series.size(); ++t)
        sink.os() << (t + 1) << "," << format_double(series[t]) << "\n";
      return kExitOk;
    }
    if (args.sub == "descent") {
      const std::vector<double> schedule =
          args.lambda_schedule.empty() ? std::vector<double>{0.9} : args.lambda_schedule;
      const DescentTrace trace = simulate_merged_descent(
          args.dim, args.rho.eta, args.rho.mu, args.rho.hess_max, schedule, args.steps,
          args.seed);
      detail::CsvSink sink(args.out, out);
      sink.os() << "step,loss,merged_loss,contraction,rho\n";
      for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const DescentStep& s = trace.steps[t];
        sink.os() << (t + 1) << "," << format_double(s.loss) << ","
                  << format_double(s.merged_loss) << "," << format_double(s.contraction) << ","
                  << format_double(s.rho) << "\n";
      }
      return kExitOk;
    }
    err << "error: unknown diag subcommand '" << args.sub << "'\n";
    return kExitUsage;
  });
}

// ============================================================================
// make-toy
// ============================================================================

struct MakeToyArgs {
  ToyTask task;
  ToyModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

inline int cmd_make_toy(const MakeToyArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    const std::vector<Checkpoint> snapshots =
        make_toy_checkpoints(args.task, args.model, args.train, args.seed);
    std::filesystem::create_directories(args.out_dir);
    for (const Checkpoint& ckpt : snapshots) {
      const std::string step = ckpt.meta.at("step");
      const std::filesystem::path path =
          std::filesystem::path(args.out_dir) / ("snapshot_" + step + ".ckpt");
      save_checkpoint(ckpt, path);
      out << path.string() << "\n";
    }
    return kExitOk;
  });
}

}  // namespace ckmerge::cli
