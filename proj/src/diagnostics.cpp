#include "polyuct/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polyuct/parallel.hpp"

namespace polyuct {

namespace {

// Snaps values that are an ulp away from an integer before ceil(), so
// mathematically integral thresholds (e.g. (2*sqrt(4))^2 = 16) stay exact.
std::uint64_t ceil_to_count(double x) {
  const double snapped = snap_ceil(x);
  if (!(snapped >= 0.0) || snapped > 1e18) {
    throw std::invalid_argument("threshold does not fit a 64-bit count");
  }
  return static_cast<std::uint64_t>(snapped);
}

}  // namespace

double phi(std::uint64_t n, double delta, double beta, double xi, double eta) {
  if (n < 1) throw std::invalid_argument("phi: n must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("phi: delta must lie in (0,1]");
  const double log_phi = eta * std::log(static_cast<double>(n)) +
                         (std::log(beta) - std::log(delta)) / xi;
  return std::exp(log_phi);
}

std::uint64_t a_threshold(double delta_i, std::uint64_t t, double alpha, double beta,
                          double xi, double eta) {
  if (!(delta_i > 0.0)) throw std::invalid_argument("a_threshold: gap must be positive");
  if (t < 1) throw std::invalid_argument("a_threshold: t must be >= 1");
  const double log_x = (std::log(2.0 / delta_i) + std::log(beta) / xi +
                        (alpha / xi) * std::log(static_cast<double>(t))) /
                       (1.0 - eta);
  return std::max<std::uint64_t>(1, ceil_to_count(std::exp(log_x)));
}

std::uint64_t a_threshold(double delta_i, std::uint64_t t, const UcbParams& p) {
  return a_threshold(delta_i, t, p.alpha, p.beta, p.xi, p.eta);
}

double suboptimal_plays_bound(double delta_i, std::uint64_t n, double alpha, double beta, double xi,
                    double eta) {
  if (!(delta_i > 0.0)) throw std::invalid_argument("suboptimal_plays_bound: gap must be positive");
  if (!(alpha > 2.0)) throw std::invalid_argument("suboptimal_plays_bound: alpha must exceed 2");
  const double log_main = (std::log(2.0 / delta_i) + std::log(beta) / xi) / (1.0 - eta) +
                          (alpha / (xi * (1.0 - eta))) * std::log(static_cast<double>(n));
  return std::exp(log_main) + 2.0 / (alpha - 2.0) + 1.0;
}

double suboptimal_plays_bound(double delta_i, std::uint64_t n, const UcbParams& p) {
  return suboptimal_plays_bound(delta_i, n, p.alpha, p.beta, p.xi, p.eta);
}

InstanceInfo InstanceInfo::from(double R, std::vector<double> mu) {
  if (mu.empty()) throw std::invalid_argument("InstanceInfo: need at least one arm");
  if (!(R > 0.0)) throw std::invalid_argument("InstanceInfo: R must be positive");
  InstanceInfo info;
  info.R = R;
  info.K = static_cast<int>(mu.size());
  info.mu = std::move(mu);
  info.i_star = 0;
  for (int i = 1; i < info.K; ++i) {
    if (info.mu[static_cast<std::size_t>(i)] > info.mu[static_cast<std::size_t>(info.i_star)]) {
      info.i_star = i;
    }
  }
  info.mu_star = info.mu[static_cast<std::size_t>(info.i_star)];
  double second = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < info.K; ++i) {
    if (i != info.i_star) second = std::max(second, info.mu[static_cast<std::size_t>(i)]);
  }
  info.delta_min = info.K > 1 ? info.mu_star - second
                              : std::numeric_limits<double>::infinity();
  return info;
}

namespace {

// A(t) with the gap Delta_min; the base 2*beta^{1/xi}/Delta_min is raised to
// exceed 1 when needed (enlarging beta keeps every exceedance bound valid).
struct AFn {
  double log_base_over_1meta;  // log(2 beta^{1/xi} / Delta) / (1-eta)
  double exponent;             // alpha / (xi (1-eta))
  double operator()(std::uint64_t t) const {
    const double log_a = log_base_over_1meta + exponent * std::log(static_cast<double>(t));
    return std::exp(log_a);
  }
  std::uint64_t count(std::uint64_t t) const {
    const double v = snap_ceil((*this)(t));
    if (v > 1e18) throw resource_error("a_threshold overflow");
    return static_cast<std::uint64_t>(std::max(1.0, v));
  }
};

AFn make_a_fn(const InstanceInfo& info, const UcbParams& p, double* beta_used) {
  double beta = p.beta;
  const double min_beta = std::pow(info.delta_min / 2.0, p.xi);
  if (!(2.0 * std::pow(beta, 1.0 / p.xi) / info.delta_min > 1.0)) {
    beta = min_beta * (1.0 + 1e-9);
  }
  if (beta_used != nullptr) *beta_used = beta;
  AFn a;
  a.log_base_over_1meta =
      (std::log(2.0 / info.delta_min) + std::log(beta) / p.xi) / (1.0 - p.eta);
  a.exponent = p.alpha / (p.xi * (1.0 - p.eta));
  return a;
}

// First t in [1, cap] with pred(t) true. Doubling probe then bisection; the
// predicates used here are eventually-true up-sets past their first crossing,
// and the final walk-back guards the boundary.
std::uint64_t first_time(const std::function<bool(std::uint64_t)>& pred, std::uint64_t cap,
                         const char* what) {
  std::uint64_t hi = 1;
  while (!pred(hi)) {
    if (hi >= cap) throw resource_error(std::string(what) + ": search exceeded cap");
    hi = std::min(cap, hi * 2);
  }
  std::uint64_t lo = hi / 2;  // pred(lo) false (or lo == 0)
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  while (hi > 1 && pred(hi - 1)) --hi;
  return hi;
}

}  // namespace

ConcentrationConstants concentration_constants(const InstanceInfo& info, const UcbParams& p,
                                     std::uint64_t search_cap) {
  if (!(info.delta_min > 0.0) || !std::isfinite(info.delta_min)) {
    throw std::invalid_argument("concentration_constants: requires a positive finite gap");
  }
  double beta_used = p.beta;
  const AFn A = make_a_fn(info, p, &beta_used);

  ConcentrationConstants out;
  out.eta_prime = p.alpha / (p.xi * (1.0 - p.eta));
  out.xi_prime = p.alpha - 1.0;

  out.N_p = first_time([&](std::uint64_t t) { return t >= A.count(t); }, search_cap,
                       "concentration_constants: N_p");
  const double R = info.R;
  const int K = info.K;
  out.N_p_prime = first_time(
      [&](std::uint64_t t) {
        if (t < A.count(t)) return false;
        const double lhs = 2.0 * R * static_cast<double>(A.count(t));
        const double rhs = std::pow(static_cast<double>(t), p.eta) +
                           2.0 * R * (4.0 * static_cast<double>(K) - 3.0);
        return lhs >= rhs;
      },
      search_cap, "concentration_constants: N_p_prime");

  const double log_c1 = std::log(2.0 * R * static_cast<double>(K)) +
                        (std::log(2.0 / info.delta_min) + std::log(beta_used) / p.xi) /
                            (1.0 - p.eta);
  out.c1 = std::exp(log_c1);
  out.c2 = out.N_p_prime <= 1
               ? 0.0
               : 2.0 * R * std::pow(static_cast<double>(out.N_p_prime - 1), 1.0 - out.eta_prime);

  const double a_np = static_cast<double>(A.count(out.N_p_prime));
  double tail_const = 0.0;
  if (K > 1) {
    tail_const = 2.0 * static_cast<double>(K - 1) /
                 ((p.alpha - 1.0) * std::pow(1.0 + a_np, p.alpha - 1.0));
  }
  const double inner = std::max(beta_used, tail_const);
  const double log_term = std::log(2.0) + (p.alpha - 1.0) * log_c1 + std::log(inner);
  out.beta_prime = std::max(out.c2, std::exp(log_term));
  return out;
}

double deviation_scale_r0(std::uint64_t n, const InstanceInfo& info, const UcbParams& p) {
  const AFn A = make_a_fn(info, p, nullptr);
  return std::pow(static_cast<double>(n), p.eta) +
         2.0 * info.R * static_cast<double>(info.K - 1) *
             (3.0 + static_cast<double>(A.count(n)));
}

TailEstimate estimate_tail(std::uint64_t replicas, std::uint64_t n, double mu_star,
                           double eta_prime, const std::vector<double>& z_grid,
                           const std::function<double(std::uint64_t)>& xbar_fn,
                           int threads) {
  if (replicas < 1) throw std::invalid_argument("estimate_tail: need replicas >= 1");
  if (z_grid.empty()) throw std::invalid_argument("estimate_tail: empty z grid");
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    if (!(z_grid[i] >= 1.0) || (i > 0 && !(z_grid[i] > z_grid[i - 1]))) {
      throw std::invalid_argument("estimate_tail: z grid must be increasing and >= 1");
    }
  }
  std::vector<double> dev(replicas);
  const double scale = std::pow(static_cast<double>(n), eta_prime);
  parallel_for(replicas, threads, [&](std::uint64_t r) {
    dev[r] = (static_cast<double>(n) * (xbar_fn(r) - mu_star)) / scale;
  });

  TailEstimate tail;
  tail.z = z_grid;
  tail.replicas = replicas;
  tail.n = n;
  tail.eta_prime = eta_prime;
  tail.p_upper.resize(z_grid.size());
  tail.p_lower.resize(z_grid.size());
  tail.se.resize(z_grid.size());
  const double m = static_cast<double>(replicas);
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    std::uint64_t up = 0;
    std::uint64_t lo = 0;
    for (double d : dev) {
      if (d >= z_grid[i]) ++up;
      if (d <= -z_grid[i]) ++lo;
    }
    tail.p_upper[i] = static_cast<double>(up) / m;
    tail.p_lower[i] = static_cast<double>(lo) / m;
    const double pmax = std::max(tail.p_upper[i], tail.p_lower[i]);
    tail.se[i] = std::sqrt(pmax * (1.0 - pmax) / m);
  }
  return tail;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: need >= 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) {
      throw std::invalid_argument("fit_power_law: points must be strictly positive");
    }
    const double lx = std::log(x);
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double m = static_cast<double>(points.size());
  const double vxx = sxx - sx * sx / m;
  const double vxy = sxy - sx * sy / m;
  const double vyy = syy - sy * sy / m;
  if (!(vxx > 0.0)) throw std::invalid_argument("fit_power_law: x values are all equal");
  PowerLawFit fit;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / m;
  // r2 = 1 for a constant y (zero residuals around a flat fit).
  fit.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return fit;
}

std::vector<RatePoint> rate_curve(
    const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, double mu_star,
    const std::function<double(std::uint64_t, std::uint64_t)>& xbar_fn, int threads) {
  if (replicas < 2) throw std::invalid_argument("rate_curve: need replicas >= 2");
  std::vector<RatePoint> out;
  out.reserve(n_grid.size());
  for (std::uint64_t n : n_grid) {
    std::vector<double> x(replicas);
    parallel_for(replicas, threads, [&](std::uint64_t r) { x[r] = xbar_fn(n, r); });
    KahanSum sum;
    for (double v : x) sum.add(v);
    const double mean = sum.value() / static_cast<double>(replicas);
    KahanSum sq;
    for (double v : x) sq.add((v - mean) * (v - mean));
    const double var = sq.value() / static_cast<double>(replicas - 1);
    RatePoint pt;
    pt.n = n;
    pt.abs_bias = std::abs(mean - mu_star);
    pt.se = std::sqrt(var / static_cast<double>(replicas));
    out.push_back(pt);
  }
  return out;
}

std::optional<TailSlope> fit_tail_slope(const TailEstimate& tail) {
  // Fit the heavier tail: below p ~ 20/M binomial noise dominates, and the
  // saturated region p = 1 carries no slope information.
  const double floor = 20.0 / static_cast<double>(tail.replicas);
  double mass_upper = 0.0;
  double mass_lower = 0.0;
  for (std::size_t i = 0; i < tail.z.size(); ++i) {
    mass_upper += tail.p_upper[i];
    mass_lower += tail.p_lower[i];
  }
  const std::vector<double>& p = mass_upper >= mass_lower ? tail.p_upper : tail.p_lower;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < tail.z.size(); ++i) {
    if (p[i] >= floor && p[i] < 1.0) pts.emplace_back(tail.z[i], p[i]);
  }
  if (pts.size() < 3) return std::nullopt;
  const PowerLawFit fit = fit_power_law(pts);
  TailSlope slope;
  slope.slope = fit.slope;
  slope.z_lo = pts.front().first;
  slope.z_hi = pts.back().first;
  slope.points = static_cast<int>(pts.size());
  return slope;
}

}  // namespace polyuct
