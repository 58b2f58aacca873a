#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "polyuct/common.hpp"

namespace polyuct {

/// Parameters of the polynomial-bonus index policy:
///   B(t, s) = beta^{1/xi} * t^{alpha/xi} / s^{1-eta}.
/// Construction validates alpha > 2, beta > 1, xi > 0, eta in [1/2, 1) and
/// xi*eta*(1-eta) <= alpha < xi*(1-eta).
struct UcbParams {
  double alpha;
  double beta;
  double xi;
  double eta;
  UcbParams(double alpha, double beta, double xi, double eta);
};

/// The alpha that sits exactly on the lower admissibility boundary for a
/// given (xi, eta); the leaf level of a search schedule uses this value.
inline double boundary_alpha(double xi, double eta) { return xi * eta * (1.0 - eta); }

/// Arm reward source. draw(arm, t, seed) yields the t-th reward of `arm`
/// (t >= 1), bounded by R in absolute value, as a pure function of its
/// arguments (counter-based streams), so arms are mutually independent and
/// draws do not depend on play order.
struct RewardProcess {
  int K = 1;
  double R = 1.0;
  std::function<double(int, std::uint64_t, std::uint64_t)> draw;
  /// Limit means mu_i, when known.
  std::optional<std::vector<double>> declared_mu;
};

/// i.i.d. arms with values in {0, 1}; R = 1.
RewardProcess bernoulli_process(std::vector<double> p);
/// i.i.d. arms uniform on [mu_i - halfwidth, mu_i + halfwidth].
RewardProcess uniform_process(std::vector<double> mu, double halfwidth);
/// Non-stationary arms whose running mean is mu_i + drift_c * n^(drift_eta-1)
/// after n draws, plus i.i.d. uniform noise of the given halfwidth.
RewardProcess drifting_process(std::vector<double> mu, double drift_c, double drift_eta,
                               double halfwidth);
/// Same draws as `base` with the constant c added to every reward.
RewardProcess shifted_process(RewardProcess base, double c);

/// Play-count bookkeeping for one bandit run.
struct BanditState {
  std::uint64_t t = 0;  // completed plays
  std::vector<std::uint64_t> plays;
  std::vector<KahanSum> sums;  // per-arm cumulative rewards
  KahanSum total;              // cumulative reward in play order

  explicit BanditState(int K) : plays(static_cast<std::size_t>(K)), sums(static_cast<std::size_t>(K)) {}
  int arms() const { return static_cast<int>(plays.size()); }
  void apply(int arm, double reward) {
    sums[static_cast<std::size_t>(arm)].add(reward);
    total.add(reward);
    ++plays[static_cast<std::size_t>(arm)];
    ++t;
  }
};

/// B(t, s); s = 0 yields +infinity (an unplayed arm always wins). Evaluated
/// in log space so large t^{alpha/xi} cannot overflow intermediate terms.
/// The raw overload evaluates the formula for any positive parameters.
double poly_bonus(std::uint64_t t, std::uint64_t s, double alpha, double beta, double xi,
                  double eta);
double poly_bonus(std::uint64_t t, std::uint64_t s, const UcbParams& p);

/// Classical comparator c * sqrt(log t / s); s = 0 yields +infinity.
double log_bonus(double t, std::uint64_t s, double c);

/// argmax_i { mean_i + B(state.t, plays_i) }, ties broken by lowest index.
int select_arm(const BanditState& state, const UcbParams& p);

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  double xbar = 0.0;
  std::vector<std::uint64_t> plays;
  std::vector<int> actions;  // filled only when requested
};

/// Runs the index policy for n steps. Deterministic given (proc, p, n, seed).
RunRecord run_bandit(const RewardProcess& proc, const UcbParams& p, std::uint64_t n,
                     std::uint64_t seed, bool record_actions = false);

}  // namespace polyuct
