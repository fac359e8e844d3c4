// Acceptance suite: end-to-end checks of the library's contracts, one
// criterion per line. Exit status 0 iff every criterion passes.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ckmerge/acquisition.hpp"
#include "ckmerge/baselines.hpp"
#include "ckmerge/bayesopt.hpp"
#include "ckmerge/checkpoint_io.hpp"
#include "ckmerge/diagnostics.hpp"
#include "ckmerge/gp.hpp"
#include "ckmerge/merge.hpp"
#include "ckmerge/rng.hpp"
#include "ckmerge/synthetic.hpp"
#include "ckmerge/toy.hpp"

using namespace ckmerge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& note) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += note;
    }
  }
  void info(const std::string& note) {
    if (!detail.empty()) detail += "; ";
    detail += note;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::uint32_t ulp_distance(float a, float b) {
  auto ordered = [](float x) -> std::int64_t {
    const auto bits = static_cast<std::int32_t>(std::bit_cast<std::uint32_t>(x));
    return bits >= 0 ? bits : static_cast<std::int64_t>(0x80000000LL) - bits;
  };
  const std::int64_t d = ordered(a) - ordered(b);
  return static_cast<std::uint32_t>(d < 0 ? -d : d);
}

Checkpoint random_checkpoint(std::uint64_t seed, std::int64_t elements, double lo, double hi) {
  Rng rng(seed);
  Checkpoint c;
  Tensor t;
  t.shape = {elements};
  t.data.resize(static_cast<std::size_t>(elements));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  c.tensors.emplace("w", std::move(t));
  return c;
}

// ---------------------------------------------------------------------------
// Toy pipeline shared by criteria 6 and 8: one training run per seed, reused
// across held-out fractions.
// ---------------------------------------------------------------------------

struct ToyRun {
  ToyTask task;
  Checkpoint prev, curr;
  double prev_test = 0.0, curr_test = 0.0;
};

const std::vector<std::uint64_t>& toy_seeds() {
  static const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return seeds;
}

const ToyRun& toy_run(std::uint64_t seed) {
  static std::map<std::uint64_t, ToyRun> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;

  // mid-training snapshots with visible minibatch noise, so merging has
  // genuine headroom over the endpoints
  ToyRun run;
  run.task = ToyTask{.n_train = 256, .n_dev = 512, .n_test = 512, .noise = 0.3, .seed = seed};
  const TrainConfig train{.lr = 0.5, .steps = 400, .batch_size = 32,
                          .snapshot_steps = {300, 400}};
  std::vector<Checkpoint> snaps = make_toy_checkpoints(run.task, {}, train, seed);
  run.prev = std::move(snaps[0]);
  run.curr = std::move(snaps[1]);
  const ToyEvaluator test_eval(run.task, Split::test);
  run.prev_test = test_eval(run.prev);
  run.curr_test = test_eval(run.curr);
  return cache.emplace(seed, std::move(run)).first->second;
}

double bo_merged_test_accuracy(const ToyRun& run, double dev_fraction, std::uint64_t seed) {
  const ToyEvaluator dev_eval(run.task, Split::dev, dev_fraction);
  const SearchBounds bounds{0.5, 1.0};
  OptConfig cfg;
  cfg.budget = 12;
  cfg.seed = seed;
  auto [merged, result] = optimize_merge(run.prev, run.curr, dev_eval, bounds, cfg);
  (void)result;
  return ToyEvaluator(run.task, Split::test)(merged);
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome criterion_gp_correctness() {
  Outcome o;
  Rng pick(2024);
  std::vector<Observation> obs;
  for (int i = 0; i < 10; ++i) {
    const double lo = i / 10.0;
    obs.push_back({lo + 0.08 * pick.uniform(), pick.uniform(-1.0, 1.0)});
  }
  const KernelParams params{1.0, 0.15, 0.0};
  const double prior = sample_mean(obs);
  const GPModel model = gp_fit(obs, params, prior);

  double max_mean_err = 0.0;
  double max_var = 0.0;
  for (const Observation& ob : obs) {
    const auto [mean, var] = model.posterior(ob.lambda);
    max_mean_err = std::max(max_mean_err, std::abs(mean - ob.value));
    max_var = std::max(max_var, var);
  }
  o.require(max_mean_err <= 1e-8, "interpolation mean error " + fmt(max_mean_err));
  o.require(max_var <= 1e-8, "interpolation variance " + fmt(max_var));

  // explicit-inverse oracle via Gauss-Jordan
  const std::size_t n = obs.size();
  std::vector<double> aug(n * 2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      aug[i * 2 * n + j] = kernel_eval(params, obs[i].lambda, obs[j].lambda);
    aug[i * 2 * n + n + i] = 1.0;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(aug[r * 2 * n + col]) > std::abs(aug[piv * 2 * n + col])) piv = r;
    for (std::size_t c = 0; c < 2 * n; ++c) std::swap(aug[col * 2 * n + c], aug[piv * 2 * n + c]);
    const double d = aug[col * 2 * n + col];
    for (std::size_t c = 0; c < 2 * n; ++c) aug[col * 2 * n + c] /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = aug[r * 2 * n + col];
      for (std::size_t c = 0; c < 2 * n; ++c) aug[r * 2 * n + c] -= f * aug[col * 2 * n + c];
    }
  }

  double max_dev = 0.0;
  Rng qrng(77);
  for (int q = 0; q < 100; ++q) {
    const double x = qrng.uniform(0.0, 1.0);
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = kernel_eval(params, x, obs[i].lambda);
    double mean = prior;
    double var = kernel_eval(params, x, x);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += aug[i * 2 * n + n + j] * k[j];
      mean += row * (obs[i].value - prior);
      var -= k[i] * row;
    }
    const auto [cmean, cvar] = model.posterior(x);
    max_dev = std::max(max_dev, std::abs(cmean - mean));
    max_dev = std::max(max_dev, std::abs(cvar - std::max(var, 0.0)));
  }
  o.require(max_dev <= 1e-6, "oracle deviation " + fmt(max_dev));
  o.info("mean_err=" + fmt(max_mean_err) + " oracle_dev=" + fmt(max_dev));
  return o;
}

Outcome criterion_acquisition_correctness() {
  Outcome o;
  std::uint64_t seed = 9000;
  double worst_ei = 0.0, worst_pi = 0.0;
  for (double delta : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.1, 0.5, 1.0, 1.5, 2.0}) {
      const double best = 0.3;
      const double mean = best + delta;
      Rng rng(seed++);
      double ei_mc = 0.0, pi_mc = 0.0;
      constexpr int kDraws = 1000000;
      for (int i = 0; i < kDraws; ++i) {
        const double x = mean + sigma * rng.normal();
        if (x > best) {
          ei_mc += x - best;
          pi_mc += 1.0;
        }
      }
      ei_mc /= kDraws;
      pi_mc /= kDraws;
      worst_ei = std::max(worst_ei,
                          std::abs(expected_improvement(mean, sigma * sigma, best) - ei_mc));
      worst_pi = std::max(
          worst_pi, std::abs(probability_of_improvement(mean, sigma * sigma, best) - pi_mc));
    }
  }
  o.require(worst_ei <= 2e-3, "EI vs MC " + fmt(worst_ei));
  o.require(worst_pi <= 2e-3, "PI vs MC " + fmt(worst_pi));

  Rng rng(31);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int t = 0; t < 200; ++t) {
    HedgeState s{.rewards = {rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)},
                 .eta = rng.uniform(0.2, 3.0)};
    const auto w = hedge_weights(s);
    worst_sum = std::max(worst_sum, std::abs(w[0] + w[1] + w[2] - 1.0));
    HedgeState shifted = s;
    const double c = rng.uniform(-50, 50);
    for (double& r : shifted.rewards) r += c;
    const auto w2 = hedge_weights(shifted);
    for (std::size_t i = 0; i < kNumAcquisitions; ++i)
      worst_shift = std::max(worst_shift, std::abs(w[i] - w2[i]));
  }
  o.require(worst_sum <= 1e-12, "hedge weight sum error " + fmt(worst_sum));
  o.require(worst_shift <= 1e-9, "hedge shift sensitivity " + fmt(worst_shift));
  o.info("ei_mc=" + fmt(worst_ei) + " pi_mc=" + fmt(worst_pi));
  return o;
}

Outcome criterion_algorithm_structure() {
  Outcome o;
  const SearchBounds bounds{0.5, 1.0};
  for (std::uint64_t seed = 0; seed < 50 && o.pass; ++seed) {
    const SyntheticObjective obj = SyntheticObjective::make(SyntheticKind::gp_sample, {}, seed);
    const auto fn = [&obj](double x) { return eval_synthetic(obj, x); };
    OptConfig cfg;
    cfg.budget = 8;
    cfg.seed = seed;
    const OptResult r = optimize(fn, bounds, cfg);
    o.require(r.trace.size() == 8, "trace size at seed " + std::to_string(seed));
    o.require(r.trace[0].lambda == bounds.alpha, "first proposal not alpha");
    o.require(r.trace[1].lambda == 1.0, "second proposal not 1");
    o.require(r.best_value >= std::max(fn(bounds.alpha), fn(1.0)) - 1e-12,
              "endpoint domination violated");
    for (std::size_t i = 1; i < r.per_step_best.size(); ++i)
      o.require(r.per_step_best[i] >= r.per_step_best[i - 1], "per-step best decreased");
  }
  o.info("50 seeded runs");
  return o;
}

Outcome criterion_optimizer_efficacy() {
  Outcome o;
  const SearchBounds bounds{0.5, 1.0};
  const auto quad = [](double x) { return -(x - 0.9) * (x - 0.9); };

  double oracle_x = bounds.alpha;
  double oracle_v = quad(bounds.alpha);
  for (int i = 1; i <= 10000; ++i) {
    const double x = bounds.alpha + (1.0 - bounds.alpha) * i / 10000.0;
    if (quad(x) > oracle_v) {
      oracle_v = quad(x);
      oracle_x = x;
    }
  }

  OptConfig cfg;
  cfg.budget = 15;
  const OptResult r = optimize(quad, bounds, cfg);
  o.require(std::abs(r.best_lambda - oracle_x) <= 0.01,
            "quadratic-peak miss: " + fmt(r.best_lambda) + " vs oracle " + fmt(oracle_x));

  std::vector<double> bo_best, random_best;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticObjective obj = SyntheticObjective::make(SyntheticKind::gp_sample, {}, seed);
    const auto fn = [&obj](double x) { return eval_synthetic(obj, x); };
    OptConfig bo_cfg;
    bo_cfg.budget = 10;
    bo_cfg.seed = seed;
    bo_best.push_back(optimize(fn, bounds, bo_cfg).best_value);
    BaselineConfig rnd_cfg;
    rnd_cfg.budget = 10;
    rnd_cfg.seed = seed;
    random_best.push_back(random_search(fn, bounds, rnd_cfg).best_value);
  }
  const double bo_median = median(bo_best);
  const double random_median = median(random_best);
  o.require(bo_median >= random_median,
            "BO median " + fmt(bo_median) + " < random median " + fmt(random_median));
  o.info("bo_median=" + fmt(bo_median) + " random_median=" + fmt(random_median));
  return o;
}

Outcome criterion_merge_algebra() {
  Outcome o;

  const Checkpoint big_a = random_checkpoint(1, 1000000, -1.0, 1.0);
  const Checkpoint big_b = random_checkpoint(2, 1000000, -1.0, 1.0);
  o.require(checkpoints_tensor_equal(pairwise_merge(big_a, big_b, 1.0), big_b),
            "endpoint lambda=1 not bit-exact");
  o.require(checkpoints_tensor_equal(pairwise_merge(big_a, big_b, 0.0), big_a),
            "endpoint lambda=0 not bit-exact");

  const Checkpoint mid = pairwise_merge(big_a, big_b, 0.37);
  const auto& da = big_a.tensors.at("w").data;
  const auto& db = big_b.tensors.at("w").data;
  const auto& dm = mid.tensors.at("w").data;
  bool convex_ok = true;
  for (std::size_t i = 0; i < dm.size(); ++i) {
    if (dm[i] < std::min(da[i], db[i]) || dm[i] > std::max(da[i], db[i])) {
      convex_ok = false;
      break;
    }
  }
  o.require(convex_ok, "convexity bound violated");

  // soup vs iterated pairwise, positive data, <= 1 ulp per element
  std::vector<Checkpoint> parts;
  for (std::uint64_t s = 10; s < 14; ++s)
    parts.push_back(random_checkpoint(s, 250000, 0.1, 1.0));
  const std::vector<double> w = {0.1, 0.2, 0.3, 0.4};
  const Checkpoint direct = soup(parts, MergeWeights{w});
  Checkpoint running = parts[0];
  double mass = w[0];
  for (std::size_t i = 1; i < parts.size(); ++i) {
    running = pairwise_merge(running, parts[i], w[i] / (mass + w[i]));
    mass += w[i];
  }
  std::uint32_t worst_ulp = 0;
  const auto& dd = direct.tensors.at("w").data;
  const auto& dr = running.tensors.at("w").data;
  for (std::size_t i = 0; i < dd.size(); ++i)
    worst_ulp = std::max(worst_ulp, ulp_distance(dd[i], dr[i]));
  o.require(worst_ulp <= 1, "soup vs iterated pairwise ulp " + std::to_string(worst_ulp));
  o.info("max_ulp=" + std::to_string(worst_ulp));
  return o;
}

Outcome criterion_desk_scale_benefit() {
  Outcome o;
  std::vector<double> merged_acc, endpoint_acc;
  std::string fractions;
  for (std::uint64_t seed : toy_seeds()) {
    const ToyRun& run = toy_run(seed);
    merged_acc.push_back(bo_merged_test_accuracy(run, 1.0, seed));
    endpoint_acc.push_back(std::max(run.prev_test, run.curr_test));

    // lambda sweep on dev over [0, 1]: fraction of weights beating both endpoints
    const ToyEvaluator dev_eval(run.task, Split::dev);
    const double dev_prev = dev_eval(run.prev);
    const double dev_curr = dev_eval(run.curr);
    const double dev_best_endpoint = std::max(dev_prev, dev_curr);
    int improved = 0;
    for (int i = 0; i <= 100; ++i) {
      const double lambda = i / 100.0;
      if (dev_eval(pairwise_merge(run.prev, run.curr, lambda)) > dev_best_endpoint) ++improved;
    }
    if (!fractions.empty()) fractions += ",";
    fractions += fmt(improved / 101.0);
  }
  const double merged_median = median(merged_acc);
  const double endpoint_median = median(endpoint_acc);
  o.require(merged_median >= endpoint_median - 0.005,
            "merged median " + fmt(merged_median) + " vs endpoint median " +
                fmt(endpoint_median));
  o.info("merged_median=" + fmt(merged_median) + " endpoint_median=" + fmt(endpoint_median) +
         " sweep_improvement_fractions=[" + fractions + "]");
  return o;
}

Outcome criterion_diagnostics() {
  Outcome o;

  // exact quadratic scaling of the KL divergence
  const PacBayesInputs base{.lambda = 1.0, .dist_sq = 3.7, .sigma_sq = 0.9, .n = 100,
                            .delta = 0.05, .empirical_loss = 0.0};
  for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    PacBayesInputs in = base;
    in.lambda = lambda;
    const double expected = lambda * lambda * base.dist_sq / (2.0 * base.sigma_sq);
    o.require(kl_divergence(in) == expected, "KL quadratic scaling at " + fmt(lambda));
  }

  // PAC-Bayes hand evaluation: KL 0, n 100, delta 0.05
  const double pb = pac_bayes_bound({.lambda = 0.0, .dist_sq = 0.0, .sigma_sq = 1.0, .n = 100,
                                     .delta = 0.05, .empirical_loss = 0.0});
  const double pb_hand = 0.17308183826022852;  // sqrt(ln(400)/200)
  o.require(std::abs(pb - pb_hand) <= 1e-5, "pac-bayes " + fmt(pb) + " vs hand " + fmt(pb_hand));

  const PerformanceBound collapsed = performance_bound(
      {.f_curr = 0.8, .f_prev = 0.2, .lambda = 0.3, .lipschitz_grad = 10.0, .hess_max = 10.0,
       .hess_min = 0.0, .dist_sq = 0.0});
  o.require(collapsed.lower == collapsed.upper, "bound did not collapse at zero distance");

  const double rho = convergence_rate({.eta = 0.1, .mu = 1.0, .lambda = 0.9, .hess_max = 1.0});
  o.require(std::abs(rho - 0.9801) <= 1e-9, "rho substitution " + fmt(rho));

  const DescentTrace trace =
      simulate_merged_descent(1, 0.1, 1.0, 1.0, {0.9, 0.95}, 80, /*seed=*/42);
  for (const DescentStep& s : trace.steps) {
    if (s.rho < 1.0)
      o.require(s.contraction <= s.rho + 0.05,
                "contraction " + fmt(s.contraction) + " above rho+0.05 " + fmt(s.rho + 0.05));
  }
  o.info("pac_bayes=" + fmt(pb) + " rho=" + fmt(rho));
  return o;
}

Outcome criterion_heldout_fraction_robustness() {
  Outcome o;
  std::vector<double> medians;
  std::string detail;
  for (double fraction : {0.25, 0.5, 0.75, 1.0}) {
    std::vector<double> accs;
    for (std::uint64_t seed : toy_seeds())
      accs.push_back(bo_merged_test_accuracy(toy_run(seed), fraction, seed));
    medians.push_back(median(accs));
    if (!detail.empty()) detail += ",";
    detail += fmt(medians.back());
  }
  const double spread =
      *std::max_element(medians.begin(), medians.end()) -
      *std::min_element(medians.begin(), medians.end());
  o.require(spread <= 0.02, "median spread " + fmt(spread) + " above 2 points");
  o.info("medians=[" + detail + "] spread=" + fmt(spread));
  return o;
}

Outcome criterion_determinism_and_format() {
  Outcome o;

  // identical seeded optimization runs
  const SearchBounds bounds{0.5, 1.0};
  const SyntheticObjective obj = SyntheticObjective::make(SyntheticKind::gp_sample, {}, 5);
  const auto fn = [&obj](double x) { return eval_synthetic(obj, x); };
  OptConfig cfg;
  cfg.budget = 10;
  cfg.seed = 5;
  const OptResult a = optimize(fn, bounds, cfg);
  const OptResult b = optimize(fn, bounds, cfg);
  bool same = a.trace.size() == b.trace.size();
  for (std::size_t i = 0; same && i < a.trace.size(); ++i)
    same = a.trace[i].lambda == b.trace[i].lambda && a.trace[i].value == b.trace[i].value;
  o.require(same, "seeded optimization traces differ");

  // identical seeded training runs serialize to identical bytes
  const ToyTask task{.n_train = 128, .n_dev = 64, .n_test = 64, .noise = 0.2, .seed = 20};
  const TrainConfig train{.lr = 0.2, .steps = 150, .batch_size = 32, .snapshot_steps = {150}};
  const std::string bytes1 = serialize_checkpoint(make_toy_checkpoints(task, {}, train, 20)[0]);
  const std::string bytes2 = serialize_checkpoint(make_toy_checkpoints(task, {}, train, 20)[0]);
  o.require(bytes1 == bytes2, "seeded training checkpoints not byte-identical");

  // container round-trip, bit-exact, 100 random checkpoints
  bool roundtrip_ok = true;
  for (std::uint64_t seed = 0; seed < 100 && roundtrip_ok; ++seed) {
    Rng rng(seed);
    Checkpoint c;
    const int tensors = 1 + static_cast<int>(rng.index(4));
    for (int t = 0; t < tensors; ++t) {
      Tensor tensor;
      const std::int64_t rows = 1 + static_cast<std::int64_t>(rng.index(8));
      const std::int64_t cols = 1 + static_cast<std::int64_t>(rng.index(8));
      tensor.shape = {rows, cols};
      tensor.data.resize(static_cast<std::size_t>(rows * cols));
      for (float& v : tensor.data) v = static_cast<float>(rng.uniform(-10.0, 10.0));
      c.tensors.emplace("t" + std::to_string(t), std::move(tensor));
    }
    c.meta["seed"] = std::to_string(seed);
    const std::string bytes = serialize_checkpoint(c);
    const Checkpoint back = parse_checkpoint(bytes, "mem");
    roundtrip_ok = (back == c) && serialize_checkpoint(back) == bytes;
  }
  o.require(roundtrip_ok, "round-trip not bit-exact");
  o.info("100 round-trips bit-exact");
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "GP correctness", 1.0, criterion_gp_correctness},
      {2, "acquisition correctness", 10.0, criterion_acquisition_correctness},
      {3, "search-loop structure", 30.0, criterion_algorithm_structure},
      {4, "optimizer efficacy", 30.0, criterion_optimizer_efficacy},
      {5, "merge algebra", 5.0, criterion_merge_algebra},
      {6, "desk-scale merging benefit", 120.0, criterion_desk_scale_benefit},
      {7, "diagnostics formulas", 5.0, criterion_diagnostics},
      {8, "held-out-fraction robustness", 120.0, criterion_heldout_fraction_robustness},
      {9, "determinism and container format", 30.0, criterion_determinism_and_format},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > c.time_limit_s) {
      outcome.pass = false;
      outcome.detail += (outcome.detail.empty() ? "" : "; ") + std::string("over time limit ") +
                        fmt(c.time_limit_s) + "s";
    }
    all_pass = all_pass && outcome.pass;
    std::printf("[%s] criterion %d: %s (%s) [%.2fs]\n", outcome.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), outcome.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
