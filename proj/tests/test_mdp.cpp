#include <doctest.h>

#include <cmath>
#include <vector>

#include "polyuct/mdp.hpp"
#include "polyuct/stream.hpp"

using namespace polyuct;

namespace {

State s1(double x) {
  State s(1);
  s[0] = x;
  return s;
}

State s2(double x, double y) {
  State s(2);
  s[0] = x;
  s[1] = y;
  return s;
}

std::vector<double> grid101() {
  std::vector<double> g;
  for (int i = 0; i <= 100; ++i) g.push_back(i / 100.0);
  return g;
}

}  // namespace

TEST_CASE("doubling-1d transitions") {
  const DeterministicMdp mdp = make_benchmark("doubling-1d", 0.5, 0.0);
  CHECK(transition(mdp, s1(0.5), 1)[0] == doctest::Approx(0.75));
  CHECK(transition(mdp, s1(1.0), 1)[0] == doctest::Approx(1.0));
  CHECK(transition(mdp, s1(0.5), 0)[0] == doctest::Approx(0.25));
  CHECK_THROWS_AS(transition(mdp, s1(0.5), 2), std::invalid_argument);
  CHECK_THROWS_AS(transition(mdp, s1(0.5), -1), std::invalid_argument);
}

TEST_CASE("doubling-1d closed-form value") {
  const DeterministicMdp mdp = make_benchmark("doubling-1d", 0.5, 0.0);
  const auto vs = *mdp.v_star;
  CHECK(vs(s1(1.0)) == doctest::Approx(2.0));
  CHECK(vs(s1(0.0)) == doctest::Approx(2.0 / 3.0));
  // Affine value: the Lipschitz constant is the slope 1/(1 - gamma/2) = 4/3.
  CHECK((vs(s1(1.0)) - vs(s1(0.0))) == doctest::Approx(4.0 / 3.0));
  // And v_star is a Bellman fixed point.
  const ValueOracle oracle = v_star_oracle(mdp);
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    CHECK(value_iteration(mdp, oracle, 3, s1(x)) == doctest::Approx(vs(s1(x))).epsilon(1e-12));
  }
}

TEST_CASE("unknown benchmark is rejected") {
  CHECK_THROWS_AS(make_benchmark("nope", 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_benchmark("doubling-1d", 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_benchmark("doubling-1d", 0.5, 2.0), std::invalid_argument);
}

TEST_CASE("value_iteration basics") {
  const DeterministicMdp mdp = make_benchmark("doubling-1d", 0.5, 0.0);
  const ValueOracle zero = zero_oracle(mdp.v_max());
  CHECK(value_iteration(mdp, zero, 0, s1(0.37)) == 0.0);
  CHECK(value_iteration(mdp, zero, 1, s1(0.5)) == doctest::Approx(0.5));
  CHECK(value_iteration(mdp, v_star_oracle(mdp), 5, s1(1.0)) == doctest::Approx(2.0));
  CHECK_THROWS_AS(value_iteration(mdp, zero, 30, s1(0.5), 100), resource_error);
}

TEST_CASE("value iteration contracts on the test grid") {
  const DeterministicMdp mdp = make_benchmark("doubling-1d", 0.5, 0.0);
  const auto vs = *mdp.v_star;
  // Affine starts keep every intermediate error function affine, so the grid
  // maximum equals the sup and the contraction inequality is exact.
  std::vector<ValueOracle> starts;
  starts.push_back(zero_oracle(mdp.v_max()));
  starts.push_back({[](const State&) { return 1.5; }, 1.5, std::nullopt});
  starts.push_back({[&vs](const State& s) { return vs(s) + 0.7; }, mdp.v_max() + 0.7, 0.7});
  starts.push_back({[&vs](const State& s) { return vs(s) - 0.3 + 0.5 * s[0]; },
                    mdp.v_max() + 0.8, std::nullopt});
  for (const ValueOracle& v0 : starts) {
    std::vector<double> err;
    for (int h = 0; h <= 5; ++h) {
      double worst = 0.0;
      for (double x : grid101()) {
        worst = std::max(worst, std::abs(value_iteration(mdp, v0, h, s1(x)) - vs(s1(x))));
      }
      err.push_back(worst);
    }
    for (int h = 0; h < 5; ++h) {
      CHECK(err[static_cast<std::size_t>(h) + 1] <=
            mdp.gamma * err[static_cast<std::size_t>(h)] + 1e-12);
    }
  }
}

TEST_CASE("closed form matches the value-iteration oracle at rate gamma^h") {
  const DeterministicMdp mdp = make_benchmark("doubling-1d", 0.5, 0.0);
  const auto vs = *mdp.v_star;
  const ValueOracle zero = zero_oracle(mdp.v_max());
  for (int h : {0, 1, 2, 4, 8}) {
    for (double x : grid101()) {
      const double err = std::abs(vs(s1(x)) - value_iteration(mdp, zero, h, s1(x)));
      CHECK(err <= std::pow(mdp.gamma, h) * mdp.v_max() + 1e-9);
    }
  }
}

TEST_CASE("reward sampling is seeded, bounded, and mean-correct") {
  const double noise = 0.7;
  const DeterministicMdp mdp = make_benchmark("doubling-1d", 0.5, noise);
  CHECK(mdp.r_max == doctest::Approx(1.0 + noise));

  // Bitwise determinism per (state, action, visit, seed).
  CHECK(sample_reward(mdp, s1(0.3), 1, 7, 99) == sample_reward(mdp, s1(0.3), 1, 7, 99));
  CHECK(sample_reward(mdp, s1(0.3), 1, 7, 99) != sample_reward(mdp, s1(0.3), 1, 8, 99));

  // Boundedness fuzz over 1e5 draws; also estimate the mean at fixed (s, a).
  RngStream pick(derive_key(5, {0xf0}));
  for (int i = 0; i < 100000; ++i) {
    const State s = s1(pick.next_unit());
    const int a = pick.next_u64() % 2;
    const double r = sample_reward(mdp, s, a, static_cast<std::uint64_t>(i), 31337);
    CHECK(std::abs(r) <= mdp.r_max);
  }
  double sum = 0.0;
  const int n = 200000;
  for (int i = 1; i <= n; ++i) sum += sample_reward(mdp, s1(0.4), 0, static_cast<std::uint64_t>(i), 2024);
  CHECK(sum / n == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("grid-2d closed form agrees with the value-iteration oracle") {
  const DeterministicMdp mdp = make_benchmark("grid-2d", 0.5, 0.0);
  CHECK(mdp.d == 2);
  CHECK(mdp.K == 4);
  const auto vs = *mdp.v_star;
  CHECK(vs(s2(1.0, 1.0)) == doctest::Approx(2.0));
  const ValueOracle oracle = v_star_oracle(mdp);
  const ValueOracle zero = zero_oracle(mdp.v_max());
  for (double x : {0.0, 0.25, 0.8, 1.0}) {
    for (double y : {0.0, 0.5, 1.0}) {
      CHECK(value_iteration(mdp, oracle, 2, s2(x, y)) ==
            doctest::Approx(vs(s2(x, y))).epsilon(1e-12));
      const double err = std::abs(vs(s2(x, y)) - value_iteration(mdp, zero, 6, s2(x, y)));
      CHECK(err <= std::pow(mdp.gamma, 6) * mdp.v_max() + 1e-9);
    }
  }
}

TEST_CASE("state hashing normalizes signed zero") {
  CHECK(state_hash(s1(0.0)) == state_hash(s1(-0.0)));
  CHECK(state_hash(s1(0.25)) != state_hash(s1(0.5)));
}
