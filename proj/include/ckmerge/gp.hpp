#pragma once

/**
 * Gaussian-process surrogate over a scalar merging weight.
 *
 * Squared-exponential kernel. The posterior at a query x given observations
 * (lambda_i, f_i) is
 *
 *   mean(x) = mu0 + k(x)ᵀ (K + noise I)⁻¹ (f - mu0)
 *   var(x)  = k(x, x) - k(x)ᵀ (K + noise I)⁻¹ k(x)
 *
 * solved through a Cholesky factor of the Gram matrix. A fitted GPModel is
 * immutable; posterior queries are pure and safe to share across threads.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ckmerge/errors.hpp"
#include "ckmerge/linalg.hpp"

namespace ckmerge {

struct KernelParams {
  double variance = 1.0;      // signal variance sigma_f^2
  double length_scale = 0.2;  // l
  double noise = 1e-6;        // observation noise variance

  void validate() const {
    if (!(variance > 0.0)) throw DomainError("kernel variance must be > 0");
    if (!(length_scale > 0.0)) throw DomainError("kernel length scale must be > 0");
    if (!(noise >= 0.0)) throw DomainError("kernel noise must be >= 0");
  }
};

struct Observation {
  double lambda = 0.0;
  double value = 0.0;
};

// Squared-exponential covariance: variance * exp(-(x-y)^2 / (2 l^2)).
inline double kernel_eval(const KernelParams& p, double x, double y) {
  const double d = x - y;
  return p.variance * std::exp(-(d * d) / (2.0 * p.length_scale * p.length_scale));
}

class GPModel {
 public:
  const KernelParams& params() const { return params_; }
  std::span<const Observation> observations() const { return obs_; }
  double prior_mean() const { return prior_mean_; }
  double jitter() const { return jitter_; }
  const std::vector<double>& cholesky() const { return chol_; }
  const std::vector<double>& alpha() const { return alpha_; }

  // Posterior mean and variance at x (Eqs. above). Variance is clamped at 0;
  // the pre-clamp value only dips below by factorization round-off.
  std::pair<double, double> posterior(double x) const {
    const std::size_t n = obs_.size();
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = kernel_eval(params_, x, obs_[i].lambda);

    double mean = prior_mean_;
    for (std::size_t i = 0; i < n; ++i) mean += k[i] * alpha_[i];

    // var = k(x,x) - vᵀv with v = L⁻¹ k
    const std::vector<double> v = forward_solve(chol_, n, k);
    double var = kernel_eval(params_, x, x);
    for (std::size_t i = 0; i < n; ++i) var -= v[i] * v[i];
    return {mean, std::max(var, 0.0)};
  }

  // log p(f | lambda, params): -1/2 rᵀ K⁻¹ r - sum log L_ii - n/2 log 2pi.
  double log_marginal_likelihood() const {
    const std::size_t n = obs_.size();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      quad += (obs_[i].value - prior_mean_) * alpha_[i];
    double logdet_half = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet_half += std::log(chol_[i * n + i]);
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    return -0.5 * quad - logdet_half - 0.5 * static_cast<double>(n) * kLog2Pi;
  }

  friend GPModel gp_fit(std::span<const Observation>, const KernelParams&, double, double);

 private:
  KernelParams params_;
  std::vector<Observation> obs_;
  double prior_mean_ = 0.0;
  double jitter_ = 0.0;
  std::vector<double> chol_;   // lower-triangular factor of K + (noise + jitter) I
  std::vector<double> alpha_;  // (K + noise I)⁻¹ (f - mu0)
};

// Fits the Gram factorization. If the factorization fails, a jitter ladder
// 1e-10, 1e-9, ..., up to max_jitter is added to the diagonal.
inline GPModel gp_fit(std::span<const Observation> obs, const KernelParams& params,
                      double prior_mean, double max_jitter = 1e-4) {
  params.validate();
  if (obs.empty()) throw EmptyInputError("gp_fit needs at least one observation");
  if (params.noise == 0.0) {
    for (std::size_t i = 0; i < obs.size(); ++i)
      for (std::size_t j = i + 1; j < obs.size(); ++j)
        if (obs[i].lambda == obs[j].lambda)
          throw DuplicateError("duplicate lambda " + std::to_string(obs[i].lambda) +
                               " with zero observation noise");
  }

  const std::size_t n = obs.size();
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      gram[i * n + j] = kernel_eval(params, obs[i].lambda, obs[j].lambda);

  GPModel model;
  model.params_ = params;
  model.obs_.assign(obs.begin(), obs.end());
  model.prior_mean_ = prior_mean;

  double jitter = 0.0;
  for (;;) {
    std::vector<double> a = gram;
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += params.noise + jitter;
    if (cholesky_factor(a, n)) {
      model.chol_ = std::move(a);
      model.jitter_ = jitter;
      break;
    }
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 10.0;
    if (jitter > max_jitter)
      throw NumericalError("Gram matrix not positive definite after jitter ladder");
  }

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = obs[i].value - prior_mean;
  model.alpha_ = cholesky_solve(model.chol_, n, residual);
  return model;
}

inline std::pair<double, double> gp_posterior(const GPModel& model, double x) {
  return model.posterior(x);
}

// ============================================================================
// Hyperparameter policy
// ============================================================================

// Defaults used by the optimizer each time it refits: signal variance from
// the sample variance of the observed values, length scale proportional to
// the search-interval width, near-zero noise. Optionally refines the length
// scale by log-marginal likelihood over a small grid.
struct KernelPolicy {
  double length_scale_factor = 0.2;  // l = factor * (1 - alpha)
  double noise = 1e-6;
  bool refine_length_scale = false;  // grid {0.05, 0.1, 0.2, 0.4} * (1 - alpha)
  double variance_floor = 1e-8;
};

inline double sample_mean(std::span<const Observation> obs) {
  double m = 0.0;
  for (const Observation& o : obs) m += o.value;
  return m / static_cast<double>(obs.size());
}

inline double sample_variance(std::span<const Observation> obs) {
  if (obs.size() < 2) return 0.0;
  const double m = sample_mean(obs);
  double s = 0.0;
  for (const Observation& o : obs) s += (o.value - m) * (o.value - m);
  return s / static_cast<double>(obs.size() - 1);
}

inline KernelParams resolve_kernel(const KernelPolicy& policy, std::span<const Observation> obs,
                                   double interval_width) {
  KernelParams params;
  params.variance = std::max(sample_variance(obs), policy.variance_floor);
  params.length_scale = policy.length_scale_factor * interval_width;
  params.noise = policy.noise;
  if (params.length_scale <= 0.0) params.length_scale = policy.length_scale_factor;

  if (policy.refine_length_scale && obs.size() >= 3) {
    const double prior = sample_mean(obs);
    double best_lml = -std::numeric_limits<double>::infinity();
    double best_ell = params.length_scale;
    for (double factor : {0.05, 0.1, 0.2, 0.4}) {
      KernelParams trial = params;
      trial.length_scale = factor * interval_width;
      if (trial.length_scale <= 0.0) continue;
      try {
        const double lml = gp_fit(obs, trial, prior).log_marginal_likelihood();
        if (lml > best_lml) {
          best_lml = lml;
          best_ell = trial.length_scale;
        }
      } catch (const NumericalError&) {
        // skip over-flexible candidates that break the factorization
      }
    }
    params.length_scale = best_ell;
  }
  return params;
}

}  // namespace ckmerge
