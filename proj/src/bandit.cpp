#include "polyuct/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polyuct/stream.hpp"

namespace polyuct {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

std::uint64_t arm_key(std::uint64_t seed, int arm) {
  return derive_key(seed, {0xa53u, static_cast<std::uint64_t>(arm)});
}
}  // namespace

UcbParams::UcbParams(double alpha_, double beta_, double xi_, double eta_)
    : alpha(alpha_), beta(beta_), xi(xi_), eta(eta_) {
  if (!(alpha > 2.0)) {
    throw std::invalid_argument("UcbParams: alpha must satisfy alpha > 2 (got " +
                                std::to_string(alpha) + ")");
  }
  if (!(beta > 1.0)) {
    throw std::invalid_argument("UcbParams: beta must satisfy beta > 1 (got " +
                                std::to_string(beta) + ")");
  }
  if (!(xi > 0.0)) throw std::invalid_argument("UcbParams: xi must be positive");
  if (!(eta >= 0.5 && eta < 1.0)) {
    throw std::invalid_argument("UcbParams: eta must lie in [1/2, 1)");
  }
  const double lo = boundary_alpha(xi, eta);
  const double hi = xi * (1.0 - eta);
  const double slack = 1e-12 * std::max(1.0, std::abs(lo));
  if (!(alpha >= lo - slack && alpha < hi)) {
    throw std::invalid_argument(
        "UcbParams: alpha must satisfy xi*eta*(1-eta) <= alpha < xi*(1-eta)");
  }
}

double poly_bonus(std::uint64_t t, std::uint64_t s, double alpha, double beta, double xi,
                  double eta) {
  if (s == 0) return kInf;
  if (t == 0) return 0.0;
  const double log_b = std::log(beta) / xi + (alpha / xi) * std::log(static_cast<double>(t)) -
                       (1.0 - eta) * std::log(static_cast<double>(s));
  return std::exp(log_b);
}

double poly_bonus(std::uint64_t t, std::uint64_t s, const UcbParams& p) {
  return poly_bonus(t, s, p.alpha, p.beta, p.xi, p.eta);
}

double log_bonus(double t, std::uint64_t s, double c) {
  if (s == 0) return kInf;
  if (t <= 0.0) return 0.0;
  return c * std::sqrt(std::log(t) / static_cast<double>(s));
}

int select_arm(const BanditState& state, const UcbParams& p) {
  const int K = state.arms();
  if (K < 1) throw std::invalid_argument("select_arm: no arms");
  int best = 0;
  double best_index = -kInf;
  for (int i = 0; i < K; ++i) {
    const std::uint64_t s = state.plays[static_cast<std::size_t>(i)];
    double index;
    if (s == 0) {
      index = kInf;
    } else {
      index = state.sums[static_cast<std::size_t>(i)].value() / static_cast<double>(s) +
              poly_bonus(state.t, s, p);
    }
    if (index > best_index) {
      best_index = index;
      best = i;
    }
  }
  return best;
}

RunRecord run_bandit(const RewardProcess& proc, const UcbParams& p, std::uint64_t n,
                     std::uint64_t seed, bool record_actions) {
  if (proc.K < 1) throw std::invalid_argument("run_bandit: process has no arms");
  if (n < 1) throw std::invalid_argument("run_bandit: n must be >= 1");
  BanditState state(proc.K);
  RunRecord rec;
  rec.seed = seed;
  rec.n = n;
  if (record_actions) rec.actions.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t step = 1; step <= n; ++step) {
    const int a = select_arm(state, p);
    const double r = proc.draw(a, state.plays[static_cast<std::size_t>(a)] + 1, seed);
    state.apply(a, r);
    if (record_actions) rec.actions.push_back(a);
  }
  rec.plays = state.plays;
  rec.xbar = state.total.value() / static_cast<double>(n);
  return rec;
}

RewardProcess bernoulli_process(std::vector<double> p) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("bernoulli_process: probabilities must lie in [0,1]");
    }
  }
  RewardProcess proc;
  proc.K = static_cast<int>(p.size());
  proc.R = 1.0;
  proc.declared_mu = p;
  proc.draw = [p](int arm, std::uint64_t t, std::uint64_t seed) {
    return unit_draw(arm_key(seed, arm), t) < p[static_cast<std::size_t>(arm)] ? 1.0 : 0.0;
  };
  return proc;
}

RewardProcess uniform_process(std::vector<double> mu, double halfwidth) {
  if (halfwidth < 0.0) throw std::invalid_argument("uniform_process: halfwidth must be >= 0");
  double r = 0.0;
  for (double m : mu) r = std::max(r, std::abs(m) + halfwidth);
  RewardProcess proc;
  proc.K = static_cast<int>(mu.size());
  proc.R = r == 0.0 ? 1.0 : r;
  proc.declared_mu = mu;
  const double R = proc.R;
  proc.draw = [mu, halfwidth, R](int arm, std::uint64_t t, std::uint64_t seed) {
    const double u = unit_draw(arm_key(seed, arm), t);
    return clip(mu[static_cast<std::size_t>(arm)] + halfwidth * (2.0 * u - 1.0), -R, R);
  };
  return proc;
}

RewardProcess drifting_process(std::vector<double> mu, double drift_c, double drift_eta,
                               double halfwidth) {
  if (!(drift_eta >= 0.5 && drift_eta < 1.0)) {
    throw std::invalid_argument("drifting_process: drift_eta must lie in [1/2, 1)");
  }
  if (halfwidth < 0.0) throw std::invalid_argument("drifting_process: halfwidth must be >= 0");
  double r = 0.0;
  for (double m : mu) r = std::max(r, std::abs(m));
  // |t^eta - (t-1)^eta| <= 1 for t >= 1, so the drift never exceeds |drift_c|.
  r += std::abs(drift_c) + halfwidth;
  RewardProcess proc;
  proc.K = static_cast<int>(mu.size());
  proc.R = r == 0.0 ? 1.0 : r;
  proc.declared_mu = mu;
  const double R = proc.R;
  proc.draw = [mu, drift_c, drift_eta, halfwidth, R](int arm, std::uint64_t t,
                                                     std::uint64_t seed) {
    // Per-draw mean m_t = mu + c*(t^eta - (t-1)^eta) makes the running mean
    // of the first n draws equal mu + c*n^(eta-1) exactly.
    const double tt = static_cast<double>(t);
    const double drift =
        drift_c * (std::pow(tt, drift_eta) - std::pow(tt - 1.0, drift_eta));
    const double u = unit_draw(arm_key(seed, arm), t);
    return clip(mu[static_cast<std::size_t>(arm)] + drift + halfwidth * (2.0 * u - 1.0),
                -R, R);
  };
  return proc;
}

RewardProcess shifted_process(RewardProcess base, double c) {
  RewardProcess proc;
  proc.K = base.K;
  proc.R = base.R + std::abs(c);
  if (base.declared_mu) {
    std::vector<double> mu = *base.declared_mu;
    for (double& m : mu) m += c;
    proc.declared_mu = std::move(mu);
  }
  proc.draw = [base = std::move(base), c](int arm, std::uint64_t t, std::uint64_t seed) {
    return base.draw(arm, t, seed) + c;
  };
  return proc;
}

}  // namespace polyuct
