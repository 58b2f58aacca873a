#include "polyuct/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "polyuct/stream.hpp"

namespace polyuct {

bool in_unit_box(const State& s) {
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0 && s[i] <= 1.0)) return false;
  }
  return s.size() >= 1;
}

std::uint64_t state_hash(const State& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    std::uint64_t bits;
    const double v = s[i] == 0.0 ? 0.0 : s[i];  // normalize -0.0
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ValueOracle zero_oracle(double bound) {
  return ValueOracle{[](const State&) { return 0.0; }, bound, std::nullopt};
}

State transition(const DeterministicMdp& mdp, const State& s, int a) {
  if (a < 0 || a >= mdp.K) {
    throw std::invalid_argument("transition: action index out of range [0, K)");
  }
  if (s.size() != mdp.d || !in_unit_box(s)) {
    throw std::invalid_argument("transition: state not a valid point of [0,1]^d");
  }
  return mdp.transition_fn(s, a);
}

double sample_reward(const DeterministicMdp& mdp, const State& s, int a,
                     std::uint64_t visit, std::uint64_t seed) {
  if (a < 0 || a >= mdp.K) {
    throw std::invalid_argument("sample_reward: action index out of range [0, K)");
  }
  return mdp.reward_sampler(s, a, visit, seed);
}

ValueOracle v_star_oracle(const DeterministicMdp& mdp) {
  if (!mdp.v_star) {
    throw std::invalid_argument("v_star_oracle: instance has no closed-form optimal value");
  }
  return ValueOracle{*mdp.v_star, mdp.v_max(), 0.0};
}

namespace {

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

// mean + uniform noise on [-noise, noise], clipped into [-r_max, r_max].
double noisy_reward(double mean, double noise, double r_max, const State& s, int a,
                    std::uint64_t visit, std::uint64_t seed) {
  if (noise == 0.0) return mean;
  const std::uint64_t key =
      derive_key(seed, {state_hash(s), static_cast<std::uint64_t>(a), visit});
  const double u = unit_draw(key, 0);
  return clip(mean + noise * (2.0 * u - 1.0), -r_max, r_max);
}

}  // namespace

DeterministicMdp make_benchmark(const std::string& name, double gamma, double noise) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("make_benchmark: gamma must lie in [0, 1)");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw std::invalid_argument("make_benchmark: noise must lie in [0, 1]");
  }
  DeterministicMdp mdp;
  mdp.gamma = gamma;
  mdp.r_max = 1.0 + noise;
  const double r_max = mdp.r_max;
  if (name == "doubling-1d") {
    mdp.d = 1;
    mdp.K = 2;
    mdp.transition_fn = [](const State& s, int a) {
      State next(1);
      next[0] = a == 0 ? s[0] / 2.0 : (s[0] + 1.0) / 2.0;
      return next;
    };
    mdp.reward_mean = [](const State& s, int) { return s[0]; };
    mdp.reward_sampler = [noise, r_max](const State& s, int a, std::uint64_t visit,
                                        std::uint64_t seed) {
      return noisy_reward(s[0], noise, r_max, s, a, visit, seed);
    };
    mdp.v_star = [gamma](const State& s) {
      return 1.0 / (1.0 - gamma) - (1.0 - s[0]) / (1.0 - gamma / 2.0);
    };
  } else if (name == "grid-2d") {
    mdp.d = 2;
    mdp.K = 4;
    mdp.transition_fn = [](const State& s, int a) {
      State next(2);
      next[0] = (s[0] + static_cast<double>(a & 1)) / 2.0;
      next[1] = (s[1] + static_cast<double>((a >> 1) & 1)) / 2.0;
      return next;
    };
    mdp.reward_mean = [](const State& s, int) { return (s[0] + s[1]) / 2.0; };
    mdp.reward_sampler = [noise, r_max](const State& s, int a, std::uint64_t visit,
                                        std::uint64_t seed) {
      return noisy_reward((s[0] + s[1]) / 2.0, noise, r_max, s, a, visit, seed);
    };
    mdp.v_star = [gamma](const State& s) {
      return gamma / ((1.0 - gamma) * (2.0 - gamma)) + (s[0] + s[1]) / (2.0 - gamma);
    };
  } else {
    throw std::invalid_argument("make_benchmark: unknown benchmark '" + name + "'");
  }
  return mdp;
}

namespace {

double vi_rec(const DeterministicMdp& mdp, const ValueOracle& v0, int h, const State& s,
              std::size_t& budget) {
  if (budget == 0) {
    throw resource_error("value_iteration: node budget exhausted (K^h too large)");
  }
  --budget;
  if (h == 0) return v0.evaluate(s);
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < mdp.K; ++a) {
    const double q =
        mdp.reward_mean(s, a) + mdp.gamma * vi_rec(mdp, v0, h - 1, mdp.transition_fn(s, a), budget);
    best = std::max(best, q);
  }
  return best;
}

}  // namespace

double value_iteration(const DeterministicMdp& mdp, const ValueOracle& v0, int h,
                       const State& s, std::size_t node_budget) {
  if (h < 0) throw std::invalid_argument("value_iteration: h must be >= 0");
  if (s.size() != mdp.d || !in_unit_box(s)) {
    throw std::invalid_argument("value_iteration: state not a valid point of [0,1]^d");
  }
  std::size_t budget = node_budget;
  return vi_rec(mdp, v0, h, s, budget);
}

}  // namespace polyuct
