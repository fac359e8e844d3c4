#pragma once

/**
 * Synthetic 1-D objectives for exercising the search strategies without
 * touching real checkpoints.
 *
 * The gp-sample kind draws one fixed function per seed from the surrogate
 * prior: standard normals are pushed through the Cholesky factor of a
 * squared-exponential kernel matrix on a fixed 101-point grid over [0, 1]
 * (variance 1, length scale 0.15, diagonal jitter 1e-8), and queries linearly
 * interpolate between grid points. The draw happens once at construction.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ckmerge/errors.hpp"
#include "ckmerge/linalg.hpp"
#include "ckmerge/rng.hpp"

namespace ckmerge {

enum class SyntheticKind { quadratic_peak, two_bump, gp_sample, plateau };

inline const char* to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::quadratic_peak: return "quadratic-peak";
    case SyntheticKind::two_bump: return "two-bump";
    case SyntheticKind::gp_sample: return "gp-sample";
    case SyntheticKind::plateau: return "plateau";
  }
  return "?";
}

inline constexpr int kGpSampleGridSize = 101;
inline constexpr double kGpSampleLengthScale = 0.15;
inline constexpr double kGpSampleJitter = 1e-8;

struct SyntheticObjective {
  SyntheticKind kind = SyntheticKind::quadratic_peak;
  std::vector<double> params;  // per-kind, see make()
  std::uint64_t seed = 0;
  std::vector<double> gp_values;  // gp_sample only

  // params:
  //   quadratic-peak: {peak}                  f = -(x - peak)^2
  //   two-bump:       {p1, p2}                two Gaussian bumps, taller at p2
  //   plateau:        {base, height, edge}    f = base + height * [x >= edge]
  //   gp-sample:      none (seed selects the draw)
  static SyntheticObjective make(SyntheticKind kind, std::vector<double> params = {},
                                 std::uint64_t seed = 0) {
    SyntheticObjective obj;
    obj.kind = kind;
    obj.seed = seed;
    switch (kind) {
      case SyntheticKind::quadratic_peak:
        obj.params = params.empty() ? std::vector<double>{0.9} : std::move(params);
        break;
      case SyntheticKind::two_bump:
        obj.params = params.empty() ? std::vector<double>{0.62, 0.9} : std::move(params);
        break;
      case SyntheticKind::plateau:
        if (params.empty()) {
          obj.params = {0.5, 0.0, 0.7};
        } else {
          obj.params = std::move(params);
          obj.params.resize(3, 0.0);
        }
        break;
      case SyntheticKind::gp_sample: {
        const int n = kGpSampleGridSize;
        std::vector<double> k(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double d = (i - j) / static_cast<double>(n - 1);
            k[static_cast<std::size_t>(i) * n + j] =
                std::exp(-d * d / (2.0 * kGpSampleLengthScale * kGpSampleLengthScale));
          }
          k[static_cast<std::size_t>(i) * n + i] += kGpSampleJitter;
        }
        if (!cholesky_factor(k, static_cast<std::size_t>(n)))
          throw NumericalError("gp-sample covariance factorization failed");
        Rng rng(seed);
        std::vector<double> z(static_cast<std::size_t>(n));
        for (double& v : z) v = rng.normal();
        obj.gp_values.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int j = 0; j <= i; ++j)
            acc += k[static_cast<std::size_t>(i) * n + j] * z[static_cast<std::size_t>(j)];
          obj.gp_values[static_cast<std::size_t>(i)] = acc;
        }
        break;
      }
    }
    return obj;
  }
};

inline double eval_synthetic(const SyntheticObjective& obj, double lambda) {
  switch (obj.kind) {
    case SyntheticKind::quadratic_peak: {
      const double d = lambda - obj.params[0];
      return -d * d;
    }
    case SyntheticKind::two_bump: {
      const double d1 = lambda - obj.params[0];
      const double d2 = lambda - obj.params[1];
      return 0.6 * std::exp(-d1 * d1 / (2.0 * 0.07 * 0.07)) +
             1.0 * std::exp(-d2 * d2 / (2.0 * 0.05 * 0.05));
    }
    case SyntheticKind::plateau:
      return obj.params[0] + (lambda >= obj.params[2] ? obj.params[1] : 0.0);
    case SyntheticKind::gp_sample: {
      const double x = std::clamp(lambda, 0.0, 1.0);
      const double pos = x * (kGpSampleGridSize - 1);
      const auto lo = static_cast<std::size_t>(pos);
      if (lo + 1 >= obj.gp_values.size()) return obj.gp_values.back();
      const double frac = pos - static_cast<double>(lo);
      return (1.0 - frac) * obj.gp_values[lo] + frac * obj.gp_values[lo + 1];
    }
  }
  throw DomainError("unknown synthetic objective kind");
}

// Spec strings: "quadratic-peak:0.9", "two-bump[:p1:p2]",
// "plateau[:base[:height[:edge]]]", "gp-sample[:seed]".
inline SyntheticObjective parse_objective_spec(const std::string& spec,
                                               std::uint64_t default_seed = 0) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t colon = spec.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(spec.substr(start));
      break;
    }
    parts.push_back(spec.substr(start, colon - start));
    start = colon + 1;
  }
  if (parts.empty() || parts[0].empty()) throw DomainError("empty objective spec");

  auto numeric_params = [&parts, &spec]() {
    std::vector<double> out;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const double v = std::stod(parts[i]);
      if (!std::isfinite(v))
        throw DomainError("non-finite parameter in objective spec '" + spec + "'");
      out.push_back(v);
    }
    return out;
  };

  try {
    if (parts[0] == "quadratic-peak")
      return SyntheticObjective::make(SyntheticKind::quadratic_peak, numeric_params());
    if (parts[0] == "two-bump")
      return SyntheticObjective::make(SyntheticKind::two_bump, numeric_params());
    if (parts[0] == "plateau")
      return SyntheticObjective::make(SyntheticKind::plateau, numeric_params());
    if (parts[0] == "gp-sample") {
      const std::uint64_t seed =
          parts.size() > 1 ? static_cast<std::uint64_t>(std::stoull(parts[1])) : default_seed;
      return SyntheticObjective::make(SyntheticKind::gp_sample, {}, seed);
    }
  } catch (const std::invalid_argument&) {
    throw DomainError("bad numeric parameter in objective spec '" + spec + "'");
  } catch (const std::out_of_range&) {
    throw DomainError("out-of-range parameter in objective spec '" + spec + "'");
  }
  throw DomainError("unknown objective kind '" + parts[0] + "'");
}

}  // namespace ckmerge
