#pragma once

/**
 * Bayesian-optimization loop for the pairwise merging weight.
 *
 * The loop follows the standard recipe for this problem: evaluate the two
 * interval endpoints {alpha, 1} first, then repeatedly fit the GP surrogate
 * to all observations, maximize the (hedged) acquisition over a dense grid,
 * and evaluate the objective at the proposal. The result is the argmax over
 * everything evaluated.
 *
 * Acquisition maximization uses a uniform closed grid rather than gradient
 * ascent: the domain is one interval, objective calls dwarf grid cost, and
 * grid argmax is exactly reproducible. Ties pick the smallest lambda, and a
 * proposal colliding with an already-evaluated lambda is nudged to the
 * nearest free grid point so a zero-noise GP never sees duplicates.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ckmerge/acquisition.hpp"
#include "ckmerge/checkpoint.hpp"
#include "ckmerge/errors.hpp"
#include "ckmerge/gp.hpp"
#include "ckmerge/merge.hpp"

namespace ckmerge {

struct SearchBounds {
  double alpha = 0.5;
  double upper = 1.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (upper != 1.0) throw DomainError("upper search bound is fixed at 1");
  }
  double width() const { return upper - alpha; }
};

enum class AcqPortfolio { hedge, ei, pi, ucb };

inline const char* to_string(AcqPortfolio p) {
  switch (p) {
    case AcqPortfolio::hedge: return "hedge";
    case AcqPortfolio::ei: return "ei";
    case AcqPortfolio::pi: return "pi";
    case AcqPortfolio::ucb: return "ucb";
  }
  return "?";
}

struct OptConfig {
  int budget = 15;
  int grid_resolution = 1001;
  std::uint64_t seed = 0;
  KernelPolicy kernel;
  AcqConfig acq;
  double hedge_eta = 1.0;
  AcqPortfolio portfolio = AcqPortfolio::hedge;
  int eval_repeats = 1;          // average of r objective calls per proposal
  int early_stop_patience = 0;   // 0 = run to budget

  void validate() const {
    if (budget < 2) throw DomainError("budget must be >= 2 (initial design is {alpha, 1})");
    if (budget > 1000) throw DomainError("budget must be <= 1000");
    if (grid_resolution < 101) throw DomainError("grid resolution must be >= 101");
    if (eval_repeats < 1) throw DomainError("eval repeats must be >= 1");
    acq.validate();
  }
};

struct HedgeLogEntry {
  std::uint64_t step = 0;  // index of the evaluation this entry produced
  std::array<double, kNumAcquisitions> weights{};
  std::array<double, kNumAcquisitions> rewards{};   // after the update
  std::array<double, kNumAcquisitions> nominees{};  // per-acquisition argmax
  double proposed = 0.0;
};

struct OptResult {
  std::vector<Observation> trace;
  double best_lambda = 0.0;
  double best_value = 0.0;
  std::vector<double> per_step_best;
  std::vector<HedgeLogEntry> hedge_log;
};

// Objective evaluation failed; `partial` holds everything observed so far.
struct EvaluationError : Error {
  OptResult partial;
  EvaluationError(const std::string& what, OptResult p)
      : Error(what), partial(std::move(p)) {}
};

// ============================================================================
// Grid argmax
// ============================================================================

inline std::vector<double> make_grid(const SearchBounds& bounds, int resolution) {
  std::vector<double> grid(static_cast<std::size_t>(resolution));
  const double width = bounds.width();
  for (int i = 0; i < resolution; ++i)
    grid[static_cast<std::size_t>(i)] =
        bounds.alpha + width * static_cast<double>(i) / static_cast<double>(resolution - 1);
  grid.front() = bounds.alpha;
  grid.back() = bounds.upper;
  return grid;
}

namespace detail {

inline bool contains_lambda(std::span<const double> xs, double x) {
  for (double v : xs)
    if (std::abs(v - x) <= 1e-12) return true;
  return false;
}

// Index of the maximum value; ties resolved toward the smallest index
// (= smallest lambda on an ascending grid).
inline std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

// Argmax with collision nudging: if the winner was already evaluated, walk
// outward to the nearest free grid point (i+1, i-1, i+2, ...). Falls back to
// the raw argmax when every grid point is taken.
inline std::size_t argmax_index_excluding(std::span<const double> values,
                                          std::span<const double> grid,
                                          std::span<const double> exclude) {
  const std::size_t top = argmax_index(values);
  if (!contains_lambda(exclude, grid[top])) return top;
  for (std::size_t d = 1; d < grid.size(); ++d) {
    if (top + d < grid.size() && !contains_lambda(exclude, grid[top + d])) return top + d;
    if (top >= d && !contains_lambda(exclude, grid[top - d])) return top - d;
  }
  return top;
}

}  // namespace detail

// Maximizes `acq` over a uniform closed grid on [alpha, 1]. Ties pick the
// smallest lambda; points listed in `exclude` are skipped via nudging.
inline double argmax_acquisition(const std::function<double(double)>& acq,
                                 const SearchBounds& bounds, int resolution,
                                 std::span<const double> exclude = {}) {
  bounds.validate();
  if (resolution < 2) throw DomainError("argmax grid needs at least two points");
  const std::vector<double> grid = make_grid(bounds, resolution);
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = acq(grid[i]);
  return grid[detail::argmax_index_excluding(values, grid, exclude)];
}

// ============================================================================
// Optimization loop
// ============================================================================

using Objective = std::function<double(double)>;

namespace detail {

inline double evaluate_objective(const Objective& objective, double lambda, int repeats,
                                 const OptResult& partial_so_far) {
  double acc = 0.0;
  for (int r = 0; r < repeats; ++r) {
    try {
      acc += objective(lambda);
    } catch (const std::exception& e) {
      throw EvaluationError(std::string("objective failed at lambda=") +
                                std::to_string(lambda) + ": " + e.what(),
                            partial_so_far);
    }
  }
  return acc / static_cast<double>(repeats);
}

inline GPModel fit_surrogate(std::span<const Observation> obs, const KernelPolicy& policy,
                             double interval_width) {
  const KernelParams params = resolve_kernel(policy, obs, interval_width);
  const double prior = sample_mean(obs);
  try {
    return gp_fit(obs, params, prior);
  } catch (const NumericalError&) {
    return gp_fit(obs, params, prior, /*max_jitter=*/1e-2);  // one retry, then abort
  }
}

}  // namespace detail

inline OptResult optimize(const Objective& objective, const SearchBounds& bounds,
                          const OptConfig& cfg) {
  bounds.validate();
  cfg.validate();

  OptResult result;
  auto record = [&result](double lambda, double value) {
    result.trace.push_back({lambda, value});
    if (result.trace.size() == 1 || value > result.best_value) {
      result.best_value = value;
      result.best_lambda = lambda;
    }
    result.per_step_best.push_back(result.best_value);
  };

  // Initial design: both interval endpoints.
  record(bounds.alpha,
         detail::evaluate_objective(objective, bounds.alpha, cfg.eval_repeats, result));
  record(bounds.upper,
         detail::evaluate_objective(objective, bounds.upper, cfg.eval_repeats, result));

  HedgeState hedge{.rewards = {0.0, 0.0, 0.0}, .eta = cfg.hedge_eta, .step = 0};
  const std::vector<double> grid = make_grid(bounds, cfg.grid_resolution);
  int stale_steps = 0;

  for (int k = 2; k < cfg.budget; ++k) {
    if (cfg.early_stop_patience > 0 && stale_steps >= cfg.early_stop_patience) break;

    const GPModel model = detail::fit_surrogate(result.trace, cfg.kernel, bounds.width());
    const AcquisitionGridValues raw =
        AcquisitionGridValues::compute(model, cfg.acq, result.best_value, grid);

    std::vector<double> evaluated;
    evaluated.reserve(result.trace.size());
    for (const Observation& o : result.trace) evaluated.push_back(o.lambda);

    double proposal = 0.0;
    std::array<double, kNumAcquisitions> nominees{};
    std::array<double, kNumAcquisitions> weights{};
    if (cfg.portfolio == AcqPortfolio::hedge) {
      const std::array<const std::vector<double>*, kNumAcquisitions> per_acq = {&raw.ei, &raw.pi,
                                                                                &raw.ucbv};
      std::array<MinMaxRange, kNumAcquisitions> ranges;
      for (std::size_t i = 0; i < kNumAcquisitions; ++i) {
        ranges[i] = MinMaxRange::of(*per_acq[i]);
        nominees[i] = grid[detail::argmax_index(*per_acq[i])];
      }
      weights = hedge_weights(hedge);
      std::vector<double> combined(grid.size(), 0.0);
      for (std::size_t i = 0; i < kNumAcquisitions; ++i)
        for (std::size_t g = 0; g < grid.size(); ++g)
          combined[g] += weights[i] * ranges[i].normalize((*per_acq[i])[g]);
      proposal = grid[detail::argmax_index_excluding(combined, grid, evaluated)];
    } else {
      const std::vector<double>& values = cfg.portfolio == AcqPortfolio::ei   ? raw.ei
                                          : cfg.portfolio == AcqPortfolio::pi ? raw.pi
                                                                              : raw.ucbv;
      proposal = grid[detail::argmax_index_excluding(values, grid, evaluated)];
    }

    const double prev_best = result.best_value;
    const double value =
        detail::evaluate_objective(objective, proposal, cfg.eval_repeats, result);
    record(proposal, value);
    stale_steps = (result.best_value > prev_best) ? 0 : stale_steps + 1;

    if (cfg.portfolio == AcqPortfolio::hedge) {
      const GPModel refit = detail::fit_surrogate(result.trace, cfg.kernel, bounds.width());
      hedge = hedge_update(hedge, refit, nominees);
      result.hedge_log.push_back({static_cast<std::uint64_t>(k), weights, hedge.rewards,
                                  nominees, proposal});
    }
  }
  return result;
}

// Runs the loop with objective(lambda) = evaluator(pairwise_merge(prev, curr,
// lambda)) and returns the merged checkpoint at the best weight found.
inline std::pair<Checkpoint, OptResult> optimize_merge(const Checkpoint& prev,
                                                       const Checkpoint& curr,
                                                       const CheckpointEvaluator& evaluator,
                                                       const SearchBounds& bounds,
                                                       const OptConfig& cfg) {
  require_compat(prev, curr);
  const Objective objective = [&](double lambda) {
    return evaluator(pairwise_merge(prev, curr, lambda));
  };
  OptResult result = optimize(objective, bounds, cfg);
  Checkpoint best = pairwise_merge(prev, curr, result.best_lambda);
  return {std::move(best), std::move(result)};
}

}  // namespace ckmerge
