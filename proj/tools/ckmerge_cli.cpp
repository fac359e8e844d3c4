// ckmerge: merge model checkpoints and search the pairwise merging weight.
//
// Subcommands: merge, optimize, sweep, compare, diag, make-toy.
// See README.md for a tour; every flag is described in --help.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ckmerge/cli.hpp"

namespace {

void add_task_flags(CLI::App* app, ckmerge::ToyTask& task) {
  app->add_option("--n-train", task.n_train, "toy task: training samples");
  app->add_option("--n-dev", task.n_dev, "toy task: dev samples");
  app->add_option("--n-test", task.n_test, "toy task: test samples");
  app->add_option("--task-noise", task.noise, "toy task: coordinate noise");
  app->add_option("--task-seed", task.seed, "toy task: data seed");
}

void add_eval_flags(CLI::App* app, ckmerge::cli::EvalArgs& eval) {
  app->add_option("--evaluator", eval.spec,
                  "checkpoint scorer: toy-dev, toy-test, const:<v>, neg-dist:<path>");
  app->add_option("--fraction", eval.fraction, "fraction of the split to score on")
      ->check(CLI::Range(1e-9, 1.0));
  add_task_flags(app, eval.task);
}

void add_opt_flags(CLI::App* app, ckmerge::cli::OptimizeArgs& args) {
  app->add_option("--alpha", args.alpha, "lower search bound for lambda")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  app->add_option("--budget", args.opt.budget, "objective evaluations")
      ->check(CLI::Range(2, 1000));
  app->add_option("--grid-resolution", args.opt.grid_resolution,
                  "acquisition argmax grid points")
      ->check(CLI::Range(101, 1000000));
  app->add_option("--seed", args.opt.seed, "run seed")->envname("CKMERGE_SEED");
  std::map<std::string, ckmerge::AcqPortfolio> acq_map{
      {"hedge", ckmerge::AcqPortfolio::hedge},
      {"ei", ckmerge::AcqPortfolio::ei},
      {"pi", ckmerge::AcqPortfolio::pi},
      {"ucb", ckmerge::AcqPortfolio::ucb}};
  app->add_option("--acquisition", args.opt.portfolio, "acquisition portfolio")
      ->transform(CLI::CheckedTransformer(acq_map, CLI::ignore_case));
  app->add_option("--eta", args.opt.hedge_eta, "hedge learning rate");
  app->add_option("--beta", args.opt.acq.beta, "UCB exploration weight");
  app->add_option("--xi", args.opt.acq.xi, "EI/PI improvement margin");
  app->add_option("--gp-noise", args.opt.kernel.noise, "GP observation noise variance");
  app->add_flag("--refine-ell", args.opt.kernel.refine_length_scale,
                "refine the GP length scale by marginal likelihood");
  app->add_option("--repeats", args.opt.eval_repeats,
                  "average this many objective calls per proposal");
  app->add_option("--early-stop", args.opt.early_stop_patience,
                  "stop after this many proposals without a new best (0 = off)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"checkpoint merging with Bayesian-optimized weights"};
  app.require_subcommand(1);
  // flags > config file > defaults; the file holds one [section] per
  // subcommand, e.g. [optimize] alpha = 0.6
  app.set_config("--config", "", "read defaults from a TOML config file");

  // merge
  ckmerge::cli::MergeArgs merge_args;
  CLI::App* merge = app.add_subcommand("merge", "pairwise-merge two checkpoints");
  merge->add_option("--prev", merge_args.prev, "older checkpoint")->required();
  merge->add_option("--curr", merge_args.curr, "newer checkpoint")->required();
  merge->add_option("--lambda", merge_args.lambda, "weight on --curr")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  merge->add_option("--out", merge_args.out, "output checkpoint path")->required();

  // optimize
  ckmerge::cli::OptimizeArgs opt_args;
  CLI::App* optimize =
      app.add_subcommand("optimize", "search the merging weight by Bayesian optimization");
  optimize->add_option("--prev", opt_args.prev, "older checkpoint");
  optimize->add_option("--curr", opt_args.curr, "newer checkpoint");
  optimize->add_option("--objective", opt_args.objective,
                       "synthetic objective spec instead of checkpoints, e.g. quadratic-peak:0.9");
  add_eval_flags(optimize, opt_args.eval);
  add_opt_flags(optimize, opt_args);
  optimize->add_option("--out-report", opt_args.out_report, "write the JSON run report here");
  optimize->add_option("--out-ckpt", opt_args.out_ckpt, "write the best merged checkpoint here");

  // sweep
  ckmerge::cli::SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "lambda curves, pairwise matrices, soup windows");
  sweep->add_option("--mode", sweep_args.mode, "lambda-curve | pairwise-matrix | soup-k")
      ->check(CLI::IsMember({"lambda-curve", "pairwise-matrix", "soup-k"}));
  sweep->add_option("--prev", sweep_args.prev, "older checkpoint (lambda-curve)");
  sweep->add_option("--curr", sweep_args.curr, "newer checkpoint (lambda-curve)");
  sweep->add_option("--checkpoint", sweep_args.checkpoints,
                    "checkpoint path (repeat; pairwise-matrix and soup-k)");
  sweep->add_option("--objective", sweep_args.objective, "synthetic objective (lambda-curve)");
  sweep->add_option("--resolution", sweep_args.resolution, "lambda grid points")
      ->check(CLI::Range(2, 1000000));
  add_eval_flags(sweep, sweep_args.eval);
  sweep->add_option("--out", sweep_args.out, "CSV output path (default stdout)");

  // compare
  ckmerge::cli::CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "equal-budget search-strategy comparison");
  compare->add_option("--strategy", compare_args.strategies,
                      "strategies to run (repeat: bo grid random greedy)");
  compare->add_option("--budget", compare_args.budget, "objective evaluations per run")
      ->check(CLI::Range(1, 1000));
  compare->add_option("--seed", compare_args.seeds, "run seeds (repeat)");
  compare->add_option("--objective", compare_args.objective,
                      "objective spec; gp-sample draws a fresh function per seed");
  compare->add_option("--alpha", compare_args.alpha, "lower search bound")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  compare->add_option("--greedy-step", compare_args.baseline.greedy_step,
                      "initial hill-climb step");
  compare->add_option("--greedy-shrink", compare_args.baseline.greedy_shrink,
                      "hill-climb step shrink factor");
  compare->add_option("--rows-out", compare_args.rows_out,
                      "write per-run rows CSV here (summary stays on stdout)");

  // diag
  ckmerge::cli::DiagArgs diag_args;
  CLI::App* diag = app.add_subcommand("diag", "evaluate the merging-theory diagnostics");
  diag->require_subcommand(1);

  CLI::App* diag_bound = diag->add_subcommand("bound", "merged-performance interval");
  diag_bound->add_option("--f-curr", diag_args.bound.f_curr)->required();
  diag_bound->add_option("--f-prev", diag_args.bound.f_prev)->required();
  diag_bound->add_option("--lambda", diag_args.bound.lambda)->required();
  diag_bound->add_option("--lg", diag_args.bound.lipschitz_grad, "gradient Lipschitz constant");
  diag_bound->add_option("--hess-max", diag_args.bound.hess_max);
  diag_bound->add_option("--hess-min", diag_args.bound.hess_min);
  diag_bound->add_option("--dist-sq", diag_args.bound.dist_sq)->required();

  CLI::App* diag_kl = diag->add_subcommand("kl", "Gaussian KL divergence");
  diag_kl->add_option("--lambda", diag_args.pacbayes.lambda)->required();
  diag_kl->add_option("--dist-sq", diag_args.pacbayes.dist_sq)->required();
  diag_kl->add_option("--sigma-sq", diag_args.pacbayes.sigma_sq)->required();

  CLI::App* diag_pac = diag->add_subcommand("pacbayes", "PAC-Bayes bound");
  diag_pac->add_option("--lambda", diag_args.pacbayes.lambda)->required();
  diag_pac->add_option("--dist-sq", diag_args.pacbayes.dist_sq)->required();
  diag_pac->add_option("--sigma-sq", diag_args.pacbayes.sigma_sq)->required();
  diag_pac->add_option("--n", diag_args.pacbayes.n)->required();
  diag_pac->add_option("--delta", diag_args.pacbayes.delta)->required();
  diag_pac->add_option("--empirical-loss", diag_args.pacbayes.empirical_loss);

  CLI::App* diag_rho = diag->add_subcommand("rho", "per-merge contraction factor");
  diag_rho->add_option("--eta", diag_args.rho.eta)->required();
  diag_rho->add_option("--mu", diag_args.rho.mu)->required();
  diag_rho->add_option("--lambda", diag_args.rho.lambda)->required();
  diag_rho->add_option("--hess-max", diag_args.rho.hess_max)->required();

  CLI::App* diag_regret = diag->add_subcommand("regret", "cumulative regret of a run report");
  diag_regret->add_option("--report", diag_args.report_path)->required();
  diag_regret->add_option("--f-star", diag_args.f_star)->required();
  diag_regret->add_option("--out", diag_args.out, "CSV output path (default stdout)");

  CLI::App* diag_descent = diag->add_subcommand("descent", "quadratic merged-descent simulation");
  diag_descent->add_option("--dim", diag_args.dim)->check(CLI::Range(1, 1000000));
  diag_descent->add_option("--eta", diag_args.rho.eta)->required();
  diag_descent->add_option("--mu", diag_args.rho.mu)->required();
  diag_descent->add_option("--hess-max", diag_args.rho.hess_max)->required();
  diag_descent->add_option("--lambda", diag_args.lambda_schedule,
                           "merge weight schedule (repeat; cycled)");
  diag_descent->add_option("--steps", diag_args.steps)->check(CLI::Range(1, 100000000));
  diag_descent->add_option("--seed", diag_args.seed);
  diag_descent->add_option("--out", diag_args.out, "CSV output path (default stdout)");

  // make-toy
  ckmerge::cli::MakeToyArgs toy_args;
  CLI::App* make_toy =
      app.add_subcommand("make-toy", "train the toy model and write snapshot checkpoints");
  add_task_flags(make_toy, toy_args.task);
  make_toy->add_option("--hidden1", toy_args.model.hidden1)->check(CLI::Range(1, 4096));
  make_toy->add_option("--hidden2", toy_args.model.hidden2)->check(CLI::Range(1, 4096));
  make_toy->add_option("--lr", toy_args.train.lr, "learning rate");
  make_toy->add_option("--steps", toy_args.train.steps)->check(CLI::Range(0, 100000000));
  make_toy->add_option("--batch-size", toy_args.train.batch_size)->check(CLI::Range(1, 1000000));
  make_toy->add_option("--snapshot", toy_args.train.snapshot_steps,
                       "snapshot step (repeat, ascending)");
  make_toy->add_option("--seed", toy_args.seed, "training seed")->envname("CKMERGE_SEED");
  make_toy->add_option("--out-dir", toy_args.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ckmerge::cli::kExitUsage;
  }

  if (merge->parsed()) return ckmerge::cli::cmd_merge(merge_args, std::cout, std::cerr);
  if (optimize->parsed()) return ckmerge::cli::cmd_optimize(opt_args, std::cout, std::cerr);
  if (sweep->parsed()) return ckmerge::cli::cmd_sweep(sweep_args, std::cout, std::cerr);
  if (compare->parsed()) return ckmerge::cli::cmd_compare(compare_args, std::cout, std::cerr);
  if (diag->parsed()) {
    diag_args.sub = diag->get_subcommands().front()->get_name();
    (void)diag_bound;
    (void)diag_kl;
    (void)diag_pac;
    (void)diag_rho;
    (void)diag_regret;
    (void)diag_descent;
    return ckmerge::cli::cmd_diag(diag_args, std::cout, std::cerr);
  }
  if (make_toy->parsed()) return ckmerge::cli::cmd_make_toy(toy_args, std::cout, std::cerr);
  return ckmerge::cli::kExitUsage;
}
