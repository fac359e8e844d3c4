#pragma once

/**
 * Executable forms of the merging theory: the merged-performance interval,
 * the Gaussian KL divergence and PAC-Bayes bound, the per-merge contraction
 * factor, cumulative regret, and a quadratic-descent simulation that checks
 * the contraction bound empirically.
 *
 * All bound evaluators are pure formula substitutions over user-supplied
 * constants (Lipschitz gradient constant, Hessian eigenvalue bounds, PL
 * constant); nothing here estimates those from data.
 */

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckmerge/bayesopt.hpp"
#include "ckmerge/checkpoint.hpp"
#include "ckmerge/errors.hpp"
#include "ckmerge/rng.hpp"

namespace ckmerge {

// Squared parameter distance between two compatible checkpoints, accumulated
// in double over every element.
inline double merge_distance(const Checkpoint& a, const Checkpoint& b) {
  require_compat(a, b);
  double acc = 0.0;
  auto ib = b.tensors.begin();
  for (const auto& [name, ta] : a.tensors) {
    const Tensor& tb = ib->second;
    for (std::size_t i = 0; i < ta.data.size(); ++i) {
      const double d = static_cast<double>(ta.data[i]) - static_cast<double>(tb.data[i]);
      acc += d * d;
    }
    ++ib;
  }
  return acc;
}

// ============================================================================
// Merged-performance interval
// ============================================================================

struct BoundInputs {
  double f_curr = 0.0;
  double f_prev = 0.0;
  double lambda = 0.5;
  double lipschitz_grad = 0.0;  // L_g
  double hess_max = 0.0;
  double hess_min = 0.0;
  double dist_sq = 0.0;  // squared distance between the two checkpoints

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
    if (!(lipschitz_grad >= 0.0)) throw DomainError("Lipschitz constant must be >= 0");
    if (!(hess_max >= 0.0) || !(hess_min >= 0.0) || hess_min > hess_max)
      throw DomainError("need 0 <= hess_min <= hess_max");
    if (!(dist_sq >= 0.0)) throw DomainError("squared distance must be >= 0");
  }
};

struct PerformanceBound {
  double lower = 0.0;
  double upper = 0.0;
};

// center = lambda f_curr + (1-lambda) f_prev
// width  = (lambda(1-lambda) L_g + 1/2 (lambda^2 + (1-lambda)^2) hess_max) dist_sq
inline PerformanceBound performance_bound(const BoundInputs& in) {
  in.validate();
  const double l = in.lambda;
  const double center = l * in.f_curr + (1.0 - l) * in.f_prev;
  const double width =
      (l * (1.0 - l) * in.lipschitz_grad +
       0.5 * (l * l + (1.0 - l) * (1.0 - l)) * in.hess_max) *
      in.dist_sq;
  return {center - width, center + width};
}

// ============================================================================
// KL divergence and PAC-Bayes bound
// ============================================================================

struct PacBayesInputs {
  double lambda = 1.0;
  double dist_sq = 0.0;
  double sigma_sq = 1.0;  // shared variance of prior and posterior
  std::int64_t n = 1;
  double delta = 0.05;
  double empirical_loss = 0.0;

  void validate() const {
    if (!(sigma_sq > 0.0)) throw DomainError("sigma squared must be > 0");
    if (n < 1) throw DomainError("sample count must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    if (!(dist_sq >= 0.0)) throw DomainError("squared distance must be >= 0");
  }
};

// KL between N(merged, sigma^2 I) and N(previous, sigma^2 I):
// lambda^2 ||Theta_t - Theta_{t-1}||^2 / (2 sigma^2).
inline double kl_divergence(const PacBayesInputs& in) {
  in.validate();
  return in.lambda * in.lambda * in.dist_sq / (2.0 * in.sigma_sq);
}

// empirical_loss + sqrt((KL + ln(2 sqrt(n) / delta)) / (2n)), holding with
// probability at least 1 - delta.
inline double pac_bayes_bound(const PacBayesInputs& in) {
  in.validate();
  const double n = static_cast<double>(in.n);
  const double complexity = kl_divergence(in) + std::log(2.0 * std::sqrt(n) / in.delta);
  return in.empirical_loss + std::sqrt(complexity / (2.0 * n));
}

// ============================================================================
// Contraction factor
// ============================================================================

struct ConvergenceInputs {
  double eta = 0.1;     // learning rate
  double mu = 1.0;      // PL constant
  double lambda = 0.9;  // merging weight
  double hess_max = 1.0;

  void validate() const {
    if (!(eta > 0.0)) throw DomainError("learning rate must be > 0");
    if (!(mu > 0.0)) throw DomainError("PL constant must be > 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
    if (!(hess_max >= 0.0)) throw DomainError("hess_max must be >= 0");
  }
};

// rho = 1 - 2 eta mu (1-lambda) (1 - eta (1-lambda) hess_max / 2).
// Values below 1 indicate per-merge contraction of the loss gap.
inline double convergence_rate(const ConvergenceInputs& in) {
  in.validate();
  const double c = 1.0 - in.lambda;
  return 1.0 - 2.0 * in.eta * in.mu * c * (1.0 - 0.5 * in.eta * c * in.hess_max);
}

// ============================================================================
// Cumulative regret
// ============================================================================

// R_T = sum_{t<=T} (f_star - f(lambda_t)); returns the full prefix series.
inline std::vector<double> cumulative_regret(const OptResult& result, double f_star) {
  for (const Observation& o : result.trace) {
    if (o.value > f_star)
      throw DomainError("f_star " + std::to_string(f_star) +
                        " is below an observed value " + std::to_string(o.value));
  }
  std::vector<double> series;
  series.reserve(result.trace.size());
  double acc = 0.0;
  for (const Observation& o : result.trace) {
    acc += f_star - o.value;
    series.push_back(acc);
  }
  return series;
}

// ============================================================================
// Directional curvature estimator
// ============================================================================

// Central second difference of g(lambda) = evaluator(merge(prev, curr,
// lambda)), divided by the squared checkpoint distance. Along the merge
// segment this estimates d^T H d / ||d||^2, a desk-scale stand-in for the
// Hessian eigenvalue constants in the interval formula. Intended for toy
// models; three evaluator calls per estimate.
inline double estimate_directional_curvature(const Checkpoint& prev, const Checkpoint& curr,
                                             const CheckpointEvaluator& evaluator,
                                             double lambda = 0.5, double step = 0.05) {
  if (!(step > 0.0) || lambda - step < 0.0 || lambda + step > 1.0)
    throw DomainError("curvature stencil must stay inside [0, 1]");
  const double dist_sq = merge_distance(prev, curr);
  if (!(dist_sq > 0.0)) throw DomainError("checkpoints coincide; direction undefined");
  const double center = evaluator(pairwise_merge(prev, curr, lambda));
  const double left = evaluator(pairwise_merge(prev, curr, lambda - step));
  const double right = evaluator(pairwise_merge(prev, curr, lambda + step));
  return (right - 2.0 * center + left) / (step * step * dist_sq);
}

// ============================================================================
// Quadratic-descent simulation
// ============================================================================

struct DescentStep {
  double loss = 0.0;         // L(theta_t) after the gradient step
  double merged_loss = 0.0;  // L(merged_t)
  double contraction = 0.0;  // (L(merged_t) - L*) / (L(theta_t) - L*)
  double rho = 0.0;          // analytic bound for this step's lambda
};

struct DescentTrace {
  double initial_loss = 0.0;
  std::vector<DescentStep> steps;
};

// Gradient descent on L(theta) = 1/2 theta^T H theta with H diagonal and its
// spectrum spread evenly over [mu, hess_max]; each step also forms the
// pairwise merge of the two most recent iterates and records both losses.
// The trajectory itself is plain descent; merging is measured, not fed back.
inline DescentTrace simulate_merged_descent(int dim, double eta, double mu, double hess_max,
                                            const std::vector<double>& lambda_schedule,
                                            int steps, std::uint64_t seed,
                                            std::optional<std::vector<double>> initial = {}) {
  if (dim < 1) throw DomainError("dimension must be >= 1");
  if (steps < 1) throw DomainError("step count must be >= 1");
  if (!(eta > 0.0) || !(mu > 0.0) || !(hess_max >= mu))
    throw DomainError("need eta > 0 and 0 < mu <= hess_max");
  if (lambda_schedule.empty()) throw DomainError("lambda schedule must not be empty");
  for (double l : lambda_schedule)
    if (!(l >= 0.0 && l <= 1.0)) throw DomainError("schedule lambda outside [0, 1]");

  std::vector<double> h(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    h[static_cast<std::size_t>(i)] =
        (dim == 1) ? hess_max
                   : mu + (hess_max - mu) * static_cast<double>(i) / static_cast<double>(dim - 1);
  }

  std::vector<double> theta(static_cast<std::size_t>(dim));
  if (initial.has_value()) {
    if (initial->size() != theta.size())
      throw DomainError("initial point dimension mismatch");
    theta = *initial;
  } else {
    Rng rng(seed);
    for (double& t : theta) t = rng.normal();
  }

  auto loss_of = [&h](const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += 0.5 * h[i] * v[i] * v[i];
    return acc;
  };

  DescentTrace trace;
  trace.initial_loss = loss_of(theta);
  std::vector<double> prev = theta;
  for (int t = 0; t < steps; ++t) {
    prev = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * h[i] * theta[i];

    const double lambda =
        lambda_schedule[static_cast<std::size_t>(t) % lambda_schedule.size()];
    std::vector<double> merged(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
      merged[i] = lambda * theta[i] + (1.0 - lambda) * prev[i];

    DescentStep step;
    step.loss = loss_of(theta);
    step.merged_loss = loss_of(merged);
    step.contraction = (step.loss > 0.0) ? step.merged_loss / step.loss : 0.0;
    step.rho = convergence_rate({eta, mu, lambda, hess_max});
    if (!std::isfinite(step.loss) || step.loss > 1e12)
      throw DivergenceError("descent diverged at step " + std::to_string(t));
    trace.steps.push_back(step);
  }
  return trace;
}

}  // namespace ckmerge
