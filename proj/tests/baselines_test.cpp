#include <doctest.h>

#include <cmath>

#include "ckmerge/baselines.hpp"

using namespace ckmerge;

TEST_CASE("grid search hits an on-grid optimum exactly") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 6;  // step 0.1 over [0.5, 1]
  const OptResult r =
      grid_search([](double x) { return -(x - 0.8) * (x - 0.8); }, bounds, cfg);
  CHECK(r.best_lambda == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.best_value == doctest::Approx(0.0));
  CHECK(r.trace.size() == 6);
}

TEST_CASE("grid search with budget 2 evaluates exactly the endpoints") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 2;
  const OptResult r = grid_search([](double x) { return x; }, bounds, cfg);
  REQUIRE(r.trace.size() == 2);
  CHECK(r.trace[0].lambda == 0.5);
  CHECK(r.trace[1].lambda == 1.0);
}

TEST_CASE("grid search on an increasing function returns the upper bound") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 11;
  CHECK(grid_search([](double x) { return x; }, bounds, cfg).best_lambda == 1.0);
}

TEST_CASE("random search is reproducible per seed") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 25;
  cfg.seed = 99;
  const auto fn = [](double x) { return std::sin(9.0 * x); };
  const OptResult a = random_search(fn, bounds, cfg);
  const OptResult b = random_search(fn, bounds, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].lambda == b.trace[i].lambda);
    CHECK(a.trace[i].lambda >= 0.5);
    CHECK(a.trace[i].lambda <= 1.0);
  }
}

TEST_CASE("random search with budget 1 records one observation") {
  BaselineConfig cfg;
  cfg.budget = 1;
  const OptResult r = random_search([](double x) { return x; }, SearchBounds{0.5, 1.0}, cfg);
  CHECK(r.trace.size() == 1);
  CHECK(r.per_step_best.size() == 1);
}

TEST_CASE("high-budget random search lands near the peak on almost every seed") {
  const SearchBounds bounds{0.5, 1.0};
  const auto fn = [](double x) { return -(x - 0.9) * (x - 0.9); };
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    BaselineConfig cfg;
    cfg.budget = 10000;
    cfg.seed = seed;
    if (std::abs(random_search(fn, bounds, cfg).best_lambda - 0.9) <= 0.01) ++hits;
  }
  // per-draw hit probability 0.04, so P(miss in 10^4 draws) ~ e^-408
  CHECK(hits >= 99);
}

TEST_CASE("greedy search stays at the upper bound on an increasing function") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 10;
  const OptResult r = greedy_search([](double x) { return x; }, bounds, cfg);
  CHECK(r.best_lambda == 1.0);
}

TEST_CASE("greedy search converges on a unimodal peak") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 20;
  cfg.greedy_step = 0.1;
  cfg.greedy_shrink = 0.5;
  const OptResult r =
      greedy_search([](double x) { return -(x - 0.9) * (x - 0.9); }, bounds, cfg);
  CHECK(std::abs(r.best_lambda - 0.9) <= 0.0125);
}

TEST_CASE("greedy search spends exactly its budget") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 3;
  const OptResult r =
      greedy_search([](double x) { return std::cos(3.0 * x); }, bounds, cfg);
  CHECK(r.trace.size() == 3);
}

TEST_CASE("all baselines satisfy the shared result invariants") {
  const SearchBounds bounds{0.5, 1.0};
  const auto fn = [](double x) { return std::sin(7.0 * x) + 0.3 * x; };
  BaselineConfig cfg;
  cfg.budget = 15;
  cfg.seed = 3;

  for (const OptResult& r : {grid_search(fn, bounds, cfg), random_search(fn, bounds, cfg),
                             greedy_search(fn, bounds, cfg)}) {
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.size() == 15);  // equal-budget comparability
    double best = r.trace[0].value;
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      best = std::max(best, r.trace[i].value);
      CHECK(r.per_step_best[i] == best);
    }
    CHECK(r.best_value == best);
  }
}

TEST_CASE("baseline configuration validation") {
  const SearchBounds bounds{0.5, 1.0};
  BaselineConfig cfg;
  cfg.budget = 0;
  CHECK_THROWS_AS(random_search([](double x) { return x; }, bounds, cfg), DomainError);
  cfg.budget = 1;
  CHECK_THROWS_AS(grid_search([](double x) { return x; }, bounds, cfg), DomainError);
  cfg.budget = 2;
  CHECK_THROWS_AS(greedy_search([](double x) { return x; }, bounds, cfg), DomainError);
  cfg.budget = 5;
  cfg.greedy_shrink = 1.5;
  CHECK_THROWS_AS(greedy_search([](double x) { return x; }, bounds, cfg), DomainError);
}
