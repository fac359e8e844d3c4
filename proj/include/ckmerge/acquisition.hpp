#pragma once

/**
 * Acquisition functions and the GP-Hedge portfolio.
 *
 * Expected improvement, probability of improvement, and the upper confidence
 * bound are evaluated in closed form from a posterior (mean, variance).
 * GP-Hedge keeps a cumulative reward per acquisition and combines the three
 * with softmax weights:
 *
 *   A_hedge(x) = sum_i  softmax(eta * R)_i * A~_i(x)
 *
 * The three raw acquisitions live on incompatible scales (an expectation, a
 * probability, a mean-plus-margin), so each A_i is min-max normalized over
 * the candidate grid of the current step before being combined. The hedge
 * argmax is therefore invariant to positive affine rescaling of any single
 * raw acquisition.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ckmerge/errors.hpp"
#include "ckmerge/gp.hpp"

namespace ckmerge {

inline double normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) {
  constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

struct AcqConfig {
  double beta = 2.0;  // UCB exploration weight
  double xi = 0.0;    // improvement margin for EI/PI

  void validate() const {
    if (!(beta > 0.0)) throw DomainError("UCB beta must be > 0");
    if (!(xi >= 0.0)) throw DomainError("improvement margin xi must be >= 0");
  }
};

// E[max(f - best - xi, 0)] under N(mean, variance). Degenerates analytically
// at sigma = 0; never divides by a vanishing sigma.
inline double expected_improvement(double mean, double variance, double best,
                                   const AcqConfig& cfg = {}) {
  const double delta = mean - best - cfg.xi;
  if (!(variance > 0.0)) return std::max(delta, 0.0);
  const double sigma = std::sqrt(variance);
  const double z = delta / sigma;
  return std::max(delta * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

// P(f > best + xi) under N(mean, variance).
inline double probability_of_improvement(double mean, double variance, double best,
                                         const AcqConfig& cfg = {}) {
  const double delta = mean - best - cfg.xi;
  if (!(variance > 0.0)) return delta > 0.0 ? 1.0 : 0.0;
  return normal_cdf(delta / std::sqrt(variance));
}

inline double ucb(double mean, double variance, const AcqConfig& cfg = {}) {
  return mean + cfg.beta * std::sqrt(std::max(variance, 0.0));
}

// ============================================================================
// GP-Hedge
// ============================================================================

inline constexpr std::size_t kNumAcquisitions = 3;  // EI, PI, UCB

struct HedgeState {
  std::array<double, kNumAcquisitions> rewards{0.0, 0.0, 0.0};
  double eta = 1.0;
  std::uint64_t step = 0;
};

// softmax(eta * rewards), computed with max subtraction. Sums to 1 and is
// invariant to shifting all rewards by a constant.
inline std::array<double, kNumAcquisitions> hedge_weights(const HedgeState& state) {
  if (!(state.eta > 0.0)) throw DomainError("hedge eta must be > 0");
  std::array<double, kNumAcquisitions> scaled;
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kNumAcquisitions; ++i) {
    scaled[i] = state.eta * state.rewards[i];
    hi = std::max(hi, scaled[i]);
  }
  std::array<double, kNumAcquisitions> w;
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumAcquisitions; ++i) {
    w[i] = std::exp(scaled[i] - hi);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Min-max range of a value set; maps a constant set to all-zero scores.
struct MinMaxRange {
  double lo = 0.0;
  double hi = 0.0;

  static MinMaxRange of(std::span<const double> values) {
    MinMaxRange r{values.front(), values.front()};
    for (double v : values) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
    return r;
  }

  double normalize(double v) const {
    const double span = hi - lo;
    if (!(span > 0.0)) return 0.0;
    return (v - lo) / span;
  }
};

// Raw acquisition values over a candidate grid, one vector per acquisition.
struct AcquisitionGridValues {
  std::vector<double> ei, pi, ucbv;

  static AcquisitionGridValues compute(const GPModel& model, const AcqConfig& cfg, double best,
                                       std::span<const double> grid) {
    AcquisitionGridValues out;
    out.ei.reserve(grid.size());
    out.pi.reserve(grid.size());
    out.ucbv.reserve(grid.size());
    for (double x : grid) {
      const auto [mean, var] = model.posterior(x);
      out.ei.push_back(expected_improvement(mean, var, best, cfg));
      out.pi.push_back(probability_of_improvement(mean, var, best, cfg));
      out.ucbv.push_back(ucb(mean, var, cfg));
    }
    return out;
  }
};

// Hedge-combined acquisition at x, normalized against the given step grid.
inline double hedge_acquisition(const GPModel& model, const HedgeState& state,
                                const AcqConfig& cfg, double best, double x,
                                std::span<const double> grid) {
  const AcquisitionGridValues values = AcquisitionGridValues::compute(model, cfg, best, grid);
  const std::array<MinMaxRange, kNumAcquisitions> ranges = {
      MinMaxRange::of(values.ei), MinMaxRange::of(values.pi), MinMaxRange::of(values.ucbv)};
  const auto w = hedge_weights(state);

  const auto [mean, var] = model.posterior(x);
  const std::array<double, kNumAcquisitions> raw = {
      expected_improvement(mean, var, best, cfg),
      probability_of_improvement(mean, var, best, cfg), ucb(mean, var, cfg)};
  double acc = 0.0;
  for (std::size_t i = 0; i < kNumAcquisitions; ++i) acc += w[i] * ranges[i].normalize(raw[i]);
  return acc;
}

// Credits each acquisition with the refit model's posterior mean at its own
// nominated point, then advances the step counter.
inline HedgeState hedge_update(const HedgeState& state, const GPModel& model,
                               const std::array<double, kNumAcquisitions>& nominees) {
  HedgeState next = state;
  for (std::size_t i = 0; i < kNumAcquisitions; ++i)
    next.rewards[i] += model.posterior(nominees[i]).first;
  next.step += 1;
  return next;
}

}  // namespace ckmerge
