#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "ckmerge/acquisition.hpp"
#include "ckmerge/rng.hpp"

using namespace ckmerge;

namespace {

// Monte-Carlo oracle for EI and PI under N(mean, sigma^2).
struct McEstimate {
  double ei = 0.0;
  double pi = 0.0;
};

McEstimate monte_carlo(double mean, double sigma, double best, std::size_t draws,
                       std::uint64_t seed) {
  Rng rng(seed);
  McEstimate est;
  for (std::size_t i = 0; i < draws; ++i) {
    const double x = mean + sigma * rng.normal();
    if (x > best) {
      est.ei += x - best;
      est.pi += 1.0;
    }
  }
  est.ei /= static_cast<double>(draws);
  est.pi /= static_cast<double>(draws);
  return est;
}

}  // namespace

TEST_CASE("expected improvement degenerate and closed-form anchors") {
  CHECK(expected_improvement(0.5, 0.0, 0.7) == 0.0);
  CHECK(expected_improvement(0.9, 0.0, 0.7) == doctest::Approx(0.2));
  // mean == best with unit sigma: EI = phi(0) = 1/sqrt(2 pi)
  CHECK(expected_improvement(1.0, 1.0, 1.0) ==
        doctest::Approx(0.39894228040143268).epsilon(1e-12));
}

TEST_CASE("EI and PI match a Monte-Carlo oracle") {
  std::uint64_t seed = 1;
  for (double delta : {-1.0, 0.0, 0.5}) {
    for (double sigma : {0.3, 1.0}) {
      const double best = 0.4;
      const double mean = best + delta;
      const McEstimate mc = monte_carlo(mean, sigma, best, 400000, seed++);
      CHECK(std::abs(expected_improvement(mean, sigma * sigma, best) - mc.ei) <= 2e-3);
      CHECK(std::abs(probability_of_improvement(mean, sigma * sigma, best) - mc.pi) <= 2e-3);
    }
  }
}

TEST_CASE("probability of improvement anchors") {
  CHECK(probability_of_improvement(0.5, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  // mean - best = 2 sigma: Phi(2)
  CHECK(probability_of_improvement(0.9, 0.01, 0.7) ==
        doctest::Approx(0.97724986805182079).epsilon(1e-10));
  CHECK(probability_of_improvement(0.8, 0.0, 0.7) == 1.0);
  CHECK(probability_of_improvement(0.6, 0.0, 0.7) == 0.0);
}

TEST_CASE("ucb arithmetic") {
  CHECK(ucb(0.5, 0.01, {.beta = 2.0}) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(ucb(0.5, 0.0, {.beta = 2.0}) == 0.5);
  CHECK(ucb(0.5, 123.0, {.beta = 0.0}) == 0.5);
}

TEST_CASE("acquisition monotonicity in the posterior mean") {
  const double best = 0.2;
  double prev_ei = -1.0;
  double prev_pi = -1.0;
  for (double mean = -1.0; mean <= 1.0; mean += 0.05) {
    const double ei = expected_improvement(mean, 0.25, best);
    const double pi = probability_of_improvement(mean, 0.25, best);
    CHECK(ei >= prev_ei);
    CHECK(pi >= prev_pi);
    CHECK(ei >= 0.0);
    CHECK(pi >= 0.0);
    CHECK(pi <= 1.0);
    prev_ei = ei;
    prev_pi = pi;
  }
  CHECK(ucb(0.6, 0.3, {.beta = 2.0}) > ucb(0.5, 0.3, {.beta = 2.0}));
  CHECK(ucb(0.5, 0.4, {.beta = 2.0}) > ucb(0.5, 0.3, {.beta = 2.0}));
}

TEST_CASE("hedge weights: uniform, closed form, shift invariance") {
  CHECK(hedge_weights({.rewards = {0.0, 0.0, 0.0}, .eta = 1.0})[0] ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const auto w = hedge_weights({.rewards = {1.0, 0.0, 0.0}, .eta = std::log(2.0)});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    HedgeState s{.rewards = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)},
                 .eta = rng.uniform(0.1, 3.0)};
    const auto base = hedge_weights(s);
    CHECK(std::abs(base[0] + base[1] + base[2] - 1.0) <= 1e-12);

    const double shift = rng.uniform(-100.0, 100.0);
    HedgeState shifted = s;
    for (double& r : shifted.rewards) r += shift;
    const auto moved = hedge_weights(shifted);
    for (std::size_t i = 0; i < kNumAcquisitions; ++i)
      CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-10));
  }
}

TEST_CASE("min-max normalization is invariant to positive affine rescaling") {
  const std::vector<double> values = {0.1, 0.9, 0.4, 0.7, 0.2};
  std::vector<double> rescaled;
  for (double v : values) rescaled.push_back(1000.0 * v - 37.0);
  const MinMaxRange r1 = MinMaxRange::of(values);
  const MinMaxRange r2 = MinMaxRange::of(rescaled);
  for (std::size_t i = 0; i < values.size(); ++i)
    CHECK(r1.normalize(values[i]) == doctest::Approx(r2.normalize(rescaled[i])).epsilon(1e-12));
  // a constant set maps to all zeros rather than dividing by zero
  const MinMaxRange flat = MinMaxRange::of(std::vector<double>{2.0, 2.0, 2.0});
  CHECK(flat.normalize(2.0) == 0.0);
}

namespace {

GPModel toy_model() {
  const std::vector<Observation> obs = {{0.5, 0.6}, {0.7, 0.9}, {1.0, 0.8}};
  return gp_fit(obs, KernelParams{0.05, 0.1, 1e-6}, sample_mean(obs));
}

std::vector<double> toy_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(0.5 + 0.5 * i / 50.0);
  return grid;
}

}  // namespace

TEST_CASE("hedge acquisition equals an independent recomposition") {
  const GPModel model = toy_model();
  const std::vector<double> grid = toy_grid();
  const AcqConfig cfg{.beta = 2.0, .xi = 0.0};
  const HedgeState state{.rewards = {0.4, -0.2, 0.9}, .eta = 1.3};
  const double best = 0.9;

  // second path: recompute everything from first principles
  std::vector<double> ei, pi, ub;
  for (double x : grid) {
    const auto [m, v] = model.posterior(x);
    ei.push_back(expected_improvement(m, v, best, cfg));
    pi.push_back(probability_of_improvement(m, v, best, cfg));
    ub.push_back(ucb(m, v, cfg));
  }
  auto minmax = [](const std::vector<double>& vs) {
    double lo = vs[0], hi = vs[0];
    for (double v : vs) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::pair{lo, hi};
  };
  const auto [elo, ehi] = minmax(ei);
  const auto [plo, phi] = minmax(pi);
  const auto [ulo, uhi] = minmax(ub);
  const auto w = hedge_weights(state);

  for (std::size_t g = 0; g < grid.size(); g += 7) {
    const double expected = w[0] * (ei[g] - elo) / (ehi - elo) +
                            w[1] * (pi[g] - plo) / (phi - plo) +
                            w[2] * (ub[g] - ulo) / (uhi - ulo);
    CHECK(hedge_acquisition(model, state, cfg, best, grid[g], grid) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("hedge acquisition limits") {
  const GPModel model = toy_model();
  const std::vector<double> grid = toy_grid();
  const AcqConfig cfg{};
  const double best = 0.9;

  SUBCASE("one dominant reward reduces to that acquisition") {
    const HedgeState state{.rewards = {500.0, 0.0, 0.0}, .eta = 1.0};
    for (std::size_t g = 0; g < grid.size(); g += 11) {
      const auto [m, v] = model.posterior(grid[g]);
      AcquisitionGridValues raw = AcquisitionGridValues::compute(model, cfg, best, grid);
      const double expected =
          MinMaxRange::of(raw.ei).normalize(expected_improvement(m, v, best, cfg));
      CHECK(hedge_acquisition(model, state, cfg, best, grid[g], grid) ==
            doctest::Approx(expected).epsilon(1e-6));
    }
  }

  SUBCASE("equal rewards with agreeing normalized acquisitions return the common value") {
    // at the grid argmax of each acquisition the normalized value is 1, so if
    // all three argmaxes coincide the hedge value there is 1 regardless of
    // the weights
    AcquisitionGridValues raw = AcquisitionGridValues::compute(model, cfg, best, grid);
    const HedgeState state{.rewards = {0.0, 0.0, 0.0}, .eta = 1.0};
    std::size_t amax_ei = 0, amax_pi = 0, amax_ucb = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (raw.ei[g] > raw.ei[amax_ei]) amax_ei = g;
      if (raw.pi[g] > raw.pi[amax_pi]) amax_pi = g;
      if (raw.ucbv[g] > raw.ucbv[amax_ucb]) amax_ucb = g;
    }
    if (amax_ei == amax_pi && amax_pi == amax_ucb) {
      CHECK(hedge_acquisition(model, state, cfg, best, grid[amax_ei], grid) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("hedge update accumulates posterior means at the nominees") {
  const GPModel model = toy_model();
  const std::array<double, 3> nominees = {0.6, 0.8, 1.0};
  HedgeState state{.rewards = {0.0, 0.0, 0.0}, .eta = 1.0, .step = 0};

  const HedgeState once = hedge_update(state, model, nominees);
  CHECK(once.step == 1);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(once.rewards[i] == doctest::Approx(model.posterior(nominees[i]).first));

  const HedgeState twice = hedge_update(once, model, nominees);
  CHECK(twice.step == 2);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(twice.rewards[i] == doctest::Approx(2.0 * model.posterior(nominees[i]).first));
}

TEST_CASE("equal posterior means credit every acquisition equally") {
  const GPModel model = toy_model();
  const std::array<double, 3> same_point = {0.75, 0.75, 0.75};
  const HedgeState updated =
      hedge_update({.rewards = {1.0, 2.0, 3.0}, .eta = 1.0}, model, same_point);
  const double m = model.posterior(0.75).first;
  CHECK(updated.rewards[0] == doctest::Approx(1.0 + m));
  CHECK(updated.rewards[1] == doctest::Approx(2.0 + m));
  CHECK(updated.rewards[2] == doctest::Approx(3.0 + m));
}
