#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "polyuct/bandit.hpp"

namespace polyuct {

/// Phi(n, delta) = n^eta * (beta/delta)^(1/xi), evaluated in log space.
double phi(std::uint64_t n, double delta, double beta, double xi, double eta);

/// Play-count threshold past which a gap-delta_i arm's index rarely beats the
/// optimum: ceil((2/delta_i * beta^{1/xi} * t^{alpha/xi})^{1/(1-eta)}).
/// Non-decreasing in t. Raw overloads evaluate the formulas for any positive
/// parameters; the UcbParams forms take the validated policy tuple.
std::uint64_t a_threshold(double delta_i, std::uint64_t t, double alpha, double beta,
                          double xi, double eta);
std::uint64_t a_threshold(double delta_i, std::uint64_t t, const UcbParams& p);

/// Upper bound on the expected number of plays of a gap-delta_i arm over n
/// steps: (2/delta_i * beta^{1/xi})^{1/(1-eta)} * n^{alpha/(xi(1-eta))}
/// + 2/(alpha-2) + 1. Requires alpha > 2.
double suboptimal_plays_bound(double delta_i, std::uint64_t n, double alpha, double beta, double xi,
                    double eta);
double suboptimal_plays_bound(double delta_i, std::uint64_t n, const UcbParams& p);

/// Static description of a bandit instance with known limit means.
struct InstanceInfo {
  double R = 1.0;
  int K = 1;
  std::vector<double> mu;
  // derived
  double mu_star = 0.0;
  int i_star = 0;
  double delta_min = 0.0;  // gap to the second-best arm; must be > 0
  /// mu_{i*,n} - mu_{i*}; identically 0 for i.i.d. arms.
  std::function<double(std::uint64_t)> delta_star_n = [](std::uint64_t) { return 0.0; };

  static InstanceInfo from(double R, std::vector<double> mu);
};

/// The concentration exponents and constant induced one level up by the
/// index policy, plus the burn-in horizons the derivation uses.
struct ConcentrationConstants {
  double eta_prime = 0.0;  // alpha / (xi (1-eta))
  double xi_prime = 0.0;   // alpha - 1
  double beta_prime = 0.0;
  std::uint64_t N_p = 0;        // first t with t >= A(t)
  std::uint64_t N_p_prime = 0;  // first t additionally satisfying 2R*A(t) >= t^eta + 2R(4K-3)
  double c1 = 0.0;
  double c2 = 0.0;
};

ConcentrationConstants concentration_constants(const InstanceInfo& info, const UcbParams& p,
                                     std::uint64_t search_cap = 100'000'000ULL);

/// r0(n) = n^eta + 2R(K-1)(3 + A(n)); documentation output only.
double deviation_scale_r0(std::uint64_t n, const InstanceInfo& info, const UcbParams& p);

/// Empirical exceedance frequencies of (n*xbar - n*mu_star)/n^eta_prime over
/// a z-grid, both tails, with binomial standard errors.
struct TailEstimate {
  std::vector<double> z;
  std::vector<double> p_upper;  // P(deviation >= z)
  std::vector<double> p_lower;  // P(deviation <= -z)
  std::vector<double> se;       // binomial se at max(p_upper, p_lower)
  std::uint64_t replicas = 0;
  std::uint64_t n = 0;
  double eta_prime = 0.0;
};

/// xbar_fn(replica) must return the run average of replica's seeded run.
TailEstimate estimate_tail(std::uint64_t replicas, std::uint64_t n, double mu_star,
                           double eta_prime, const std::vector<double>& z_grid,
                           const std::function<double(std::uint64_t)>& xbar_fn,
                           int threads = 1);

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log-y space
  double r2 = 0.0;
};

/// Ordinary least squares on (log x, log y); needs >= 3 strictly positive
/// points.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

/// One row of a convergence-rate curve.
struct RatePoint {
  std::uint64_t n = 0;
  double abs_bias = 0.0;
  double se = 0.0;  // Monte Carlo standard error of the replica mean
};

/// |mean over replicas of xbar(n, replica) - mu_star| for each n in the grid.
std::vector<RatePoint> rate_curve(
    const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, double mu_star,
    const std::function<double(std::uint64_t n, std::uint64_t replica)>& xbar_fn,
    int threads = 1);

/// Picks the window of z values where both estimated tail frequencies are
/// resolvable (p >= 20/M on the heavier tail, strictly below saturation) and
/// fits a power law to the heavier tail over it. Returns nullopt when fewer
/// than 3 usable points exist.
struct TailSlope {
  double slope = 0.0;
  double z_lo = 0.0;
  double z_hi = 0.0;
  int points = 0;
};
std::optional<TailSlope> fit_tail_slope(const TailEstimate& tail);

}  // namespace polyuct
