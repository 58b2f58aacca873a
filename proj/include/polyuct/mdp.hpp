#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "polyuct/common.hpp"

namespace polyuct {

/// A state is a point of [0,1]^d.
using State = Eigen::VectorXd;

bool in_unit_box(const State& s);

/// Bit-pattern hash of the coordinates. Transitions are deterministic pure
/// arithmetic, so replayed states hash identically across runs and platforms
/// with the same floating-point behavior.
std::uint64_t state_hash(const State& s);

/// A bounded map used to evaluate leaf states during search.
struct ValueOracle {
  std::function<double(const State&)> evaluate;
  /// All outputs lie in [-declared_bound, declared_bound].
  double declared_bound = 0.0;
  /// Sup-norm distance to the optimal value function, when known.
  std::optional<double> declared_error;
};

ValueOracle zero_oracle(double bound);

/// Deterministic-transition discounted MDP on [0,1]^d with K actions and
/// stochastic rewards bounded by r_max.
///
/// reward_sampler(s, a, visit, seed) draws the `visit`-th reward observed on
/// edge (s, a); the draw is a pure function of its arguments (counter-based
/// stream keyed on (seed, state hash, action, visit)), so edges are mutually
/// independent and reproducible regardless of visit order.
struct DeterministicMdp {
  int d = 1;
  int K = 1;
  double gamma = 0.5;  // in [0,1); 0 reduces a depth-1 search to a plain bandit
  double r_max = 1.0;
  std::function<State(const State&, int)> transition_fn;
  std::function<double(const State&, int)> reward_mean;
  std::function<double(const State&, int, std::uint64_t, std::uint64_t)> reward_sampler;
  /// Closed-form optimal value; present only on benchmark instances.
  std::optional<std::function<double(const State&)>> v_star;

  double v_max() const { return r_max / (1.0 - gamma); }
};

/// s ∘ a. Throws std::invalid_argument on an out-of-range action or an
/// invalid state.
State transition(const DeterministicMdp& mdp, const State& s, int a);

double sample_reward(const DeterministicMdp& mdp, const State& s, int a,
                     std::uint64_t visit, std::uint64_t seed);

/// ValueOracle view of the benchmark's closed-form optimal value.
ValueOracle v_star_oracle(const DeterministicMdp& mdp);

/// Benchmark instances with known structure.
///
/// "doubling-1d": d=1, K=2, s∘a0 = s/2, s∘a1 = (s+1)/2, mean reward s for
/// both actions, reward noise uniform on [-noise, noise] (clipped so the
/// total stays within r_max = 1 + noise). Optimal value
///   V*(s) = 1/(1-γ) - (1-s)/(1-γ/2),
/// affine with Lipschitz constant 1/(1-γ/2).
///
/// "grid-2d": d=2, K=4. Action bits (b0, b1) contract each coordinate:
/// coordinate j maps to (s_j + b_j)/2. Mean reward (s_0 + s_1)/2 for every
/// action, same noise model, r_max = 1 + noise. The always-up policy is
/// optimal and the value is affine:
///   V*(s) = γ/((1-γ)(2-γ)) + (s_0 + s_1)/(2-γ),
/// Lipschitz with constant sqrt(2)/(2-γ).
DeterministicMdp make_benchmark(const std::string& name, double gamma, double noise);

/// h-step Bellman backup of v0 at s over the deterministic transition tree,
/// using exact mean rewards (no sampling). Cost O(K^h); throws
/// resource_error once more than node_budget states have been expanded.
double value_iteration(const DeterministicMdp& mdp, const ValueOracle& v0, int h,
                       const State& s, std::size_t node_budget = std::size_t{1} << 20);

}  // namespace polyuct
