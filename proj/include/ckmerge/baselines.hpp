#pragma once

/**
 * Reference search strategies for equal-budget comparisons: uniform grid,
 * seeded uniform random sampling, and a shrinking-step hill climb. Each
 * returns the same OptResult shape as the Bayesian loop, with one trace
 * entry per objective call, so comparisons count evaluations identically.
 *
 * The hill climb is this library's definition (probe downhill from 1, then
 * uphill; shrink the step when neither side improves): no standard form
 * exists for it on an interval.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ckmerge/bayesopt.hpp"
#include "ckmerge/errors.hpp"
#include "ckmerge/rng.hpp"

namespace ckmerge {

struct BaselineConfig {
  int budget = 15;
  std::uint64_t seed = 0;
  double greedy_step = 0.1;
  double greedy_shrink = 0.5;

  void validate() const {
    if (budget < 1) throw DomainError("baseline budget must be >= 1");
    if (!(greedy_step > 0.0)) throw DomainError("greedy step must be > 0");
    if (!(greedy_shrink > 0.0 && greedy_shrink < 1.0))
      throw DomainError("greedy shrink must lie in (0, 1)");
  }
};

namespace detail {

struct TraceRecorder {
  OptResult result;

  double eval(const Objective& objective, double lambda) {
    const double value = detail::evaluate_objective(objective, lambda, 1, result);
    result.trace.push_back({lambda, value});
    if (result.trace.size() == 1 || value > result.best_value) {
      result.best_value = value;
      result.best_lambda = lambda;
    }
    result.per_step_best.push_back(result.best_value);
    return value;
  }
};

}  // namespace detail

// `budget` uniformly spaced points on [alpha, 1] inclusive.
inline OptResult grid_search(const Objective& objective, const SearchBounds& bounds,
                             const BaselineConfig& cfg) {
  bounds.validate();
  cfg.validate();
  if (cfg.budget < 2) throw DomainError("grid search budget must be >= 2");
  detail::TraceRecorder rec;
  for (double x : make_grid(bounds, cfg.budget)) rec.eval(objective, x);
  return std::move(rec.result);
}

// `budget` i.i.d. uniform draws on [alpha, 1]; the counter-based generator
// makes traces reproducible across platforms for a given seed.
inline OptResult random_search(const Objective& objective, const SearchBounds& bounds,
                               const BaselineConfig& cfg) {
  bounds.validate();
  cfg.validate();
  detail::TraceRecorder rec;
  Rng rng(cfg.seed);
  for (int i = 0; i < cfg.budget; ++i)
    rec.eval(objective, rng.uniform(bounds.alpha, bounds.upper));
  return std::move(rec.result);
}

// Hill climb from lambda = 1. Probes x - step, then x + step; moves on
// strict improvement, otherwise multiplies the step by greedy_shrink.
// Probes clamp to [alpha, 1] and a probe equal to the current point is
// skipped without spending budget.
inline OptResult greedy_search(const Objective& objective, const SearchBounds& bounds,
                               const BaselineConfig& cfg) {
  bounds.validate();
  cfg.validate();
  if (cfg.budget < 3) throw DomainError("greedy search budget must be >= 3");
  detail::TraceRecorder rec;

  double x = bounds.upper;
  double fx = rec.eval(objective, x);
  double step = cfg.greedy_step;

  while (static_cast<int>(rec.result.trace.size()) < cfg.budget) {
    bool moved = false;
    bool probed = false;
    for (double direction : {-1.0, +1.0}) {
      const double cand = std::clamp(x + direction * step, bounds.alpha, bounds.upper);
      if (cand == x) continue;
      probed = true;
      const double fc = rec.eval(objective, cand);
      if (fc > fx) {
        x = cand;
        fx = fc;
        moved = true;
        break;
      }
      if (static_cast<int>(rec.result.trace.size()) >= cfg.budget) break;
    }
    if (!probed) break;  // step underflowed against both bounds
    if (!moved) step *= cfg.greedy_shrink;
  }
  return std::move(rec.result);
}

}  // namespace ckmerge
