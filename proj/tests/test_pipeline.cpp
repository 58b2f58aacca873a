#include <doctest.h>

#include <atomic>
#include <cmath>

#include "polyuct/pipeline.hpp"

using namespace polyuct;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.mdp = make_benchmark("doubling-1d", 0.5, 0.25);
  cfg.epsilon = cfg.mdp.v_max() / 8.0;
  cfg.L = 3;
  cfg.eta = 0.5;
  cfg.xi_H = 640.0;  // the derived depth H = 4 needs xi_H > 596
  cfg.kappa = 1.0;
  cfg.m_cap = 400;
  cfg.seed = 2024;
  cfg.grid_per_dim = 100;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("schedule derivation follows the lambda geometry") {
  PipelineConfig cfg = small_config();
  const auto steps = derive_schedule(cfg);
  REQUIRE(steps.size() == 3);
  // lambda = (eps/v_max)^(1/L) = (1/8)^(1/3) = 1/2; H = ceil(log_0.5(1/16)) = 4.
  for (const IterationStep& s : steps) CHECK(s.H == 4);
  CHECK(steps[1].delta / steps[0].delta == doctest::Approx(0.5));
  CHECK(steps[2].delta / steps[1].delta == doctest::Approx(0.5));
  // n ratio with eta = 1/2 is lambda^-2 = 4 (before rounding).
  CHECK(static_cast<double>(steps[1].n) / static_cast<double>(steps[0].n) ==
        doctest::Approx(4.0).epsilon(0.01));
  // The raw sample condition binds against the cap and is flagged.
  CHECK(steps[2].m == 400);
  CHECK(steps[2].m_capped);
}

TEST_CASE("degenerate tolerances are rejected") {
  PipelineConfig cfg = small_config();
  cfg.epsilon = cfg.mdp.v_max();  // lambda = 1
  CHECK_THROWS_AS(derive_schedule(cfg), std::invalid_argument);
  cfg.epsilon = 0.25;
  cfg.C_prime = 0.1;  // delta_1 >= 1
  CHECK_THROWS_WITH_AS(static_cast<void>(derive_schedule(cfg)), doctest::Contains("C'"),
                       std::invalid_argument);
}

TEST_CASE("overrides replace derived values") {
  PipelineConfig cfg = small_config();
  cfg.override_n = std::vector<std::uint64_t>{10, 20, 30};
  cfg.override_H = std::vector<int>{2, 2, 2};
  const auto steps = derive_schedule(cfg);
  CHECK(steps[0].n == 10);
  CHECK(steps[2].n == 30);
  CHECK(steps[0].H == 2);
}

TEST_CASE("pipeline runs deterministically and reports exact accounting") {
  PipelineConfig cfg = small_config();
  cfg.m_cap = 120;
  cfg.override_n = std::vector<std::uint64_t>{32, 64, 128};

  // Count reward draws through an instrumented wrapper.
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  const auto base_sampler = cfg.mdp.reward_sampler;
  cfg.mdp.reward_sampler = [counter, base_sampler](const State& s, int a, std::uint64_t v,
                                                   std::uint64_t seed) {
    counter->fetch_add(1, std::memory_order_relaxed);
    return base_sampler(s, a, v, seed);
  };

  const PipelineResult run1 = run_pipeline(cfg);
  REQUIRE(run1.reports.size() == 3);
  std::uint64_t reported = 0;
  for (const IterationReport& rep : run1.reports) {
    CHECK(rep.transitions == rep.m * rep.n * static_cast<std::uint64_t>(rep.H));
    reported += rep.transitions;
  }
  CHECK(reported == counter->load());

  // Bit-identical reports under the same master seed, regardless of threads.
  PipelineConfig cfg2 = cfg;
  cfg2.threads = 1;
  const PipelineResult run2 = run_pipeline(cfg2);
  REQUIRE(run2.reports.size() == run1.reports.size());
  for (std::size_t i = 0; i < run1.reports.size(); ++i) {
    REQUIRE(run1.reports[i].sup_error.has_value());
    CHECK(*run1.reports[i].sup_error == *run2.reports[i].sup_error);  // bitwise
  }
}

TEST_CASE("oracles stay bounded and improve over the zero start") {
  PipelineConfig cfg = small_config();
  cfg.m_cap = 400;
  cfg.override_n = std::vector<std::uint64_t>{64, 256, 1024};
  const PipelineResult run = run_pipeline(cfg);
  REQUIRE(run.reports.size() == 3);
  const double v_max = cfg.mdp.v_max();

  // Every fitted model, clamped, stays within [-v_max, v_max] on the grid.
  for (const NnModel& model : run.models) {
    const ValueOracle oracle = as_oracle(model, v_max);
    double sup = 0.0;
    for (int i = 0; i <= 200; ++i) {
      State s(1);
      s[0] = i / 200.0;
      sup = std::max(sup, std::abs(oracle.evaluate(s)));
    }
    CHECK(sup <= v_max + 1e-12);
  }

  // Error of the zero start is sup |v*| = v_max on this benchmark.
  const double err0 = v_max;
  REQUIRE(run.reports.back().sup_error.has_value());
  CHECK(*run.reports.back().sup_error < err0);
  CHECK(*run.reports.front().sup_error < err0);
}

TEST_CASE("two-dimensional benchmark runs end to end") {
  PipelineConfig cfg;
  cfg.mdp = make_benchmark("grid-2d", 0.5, 0.25);
  cfg.epsilon = cfg.mdp.v_max() / 4.0;  // lambda = 1/2 with L = 2
  cfg.L = 2;
  cfg.eta = 0.5;
  cfg.xi_H = 640.0;
  // Corner balls keep only ~pi*delta^2/4 of their volume inside the square;
  // the cap must leave them a few samples each or corners predict 0.
  cfg.m_cap = 3000;
  cfg.override_n = std::vector<std::uint64_t>{48, 192};
  cfg.seed = 7;
  cfg.grid_per_dim = 60;
  cfg.threads = 2;
  const PipelineResult run = run_pipeline(cfg);
  REQUIRE(run.reports.size() == 2);
  const double err0 =
      sup_grid_error([](const State&) { return 0.0; }, *cfg.mdp.v_star, 2, cfg.grid_per_dim);
  REQUIRE(run.reports.back().sup_error.has_value());
  CHECK(*run.reports.back().sup_error < err0);
  CHECK(*run.reports.front().sup_error < cfg.mdp.v_max());
}

TEST_CASE("per-iteration transition budget aborts with partial reports") {
  PipelineConfig cfg = small_config();
  cfg.override_n = std::vector<std::uint64_t>{16, 1000000, 16};
  cfg.max_transitions_per_iter = 100000;
  const PipelineResult run = run_pipeline(cfg);
  CHECK(run.aborted);
  CHECK(run.reports.size() == 1);
}
