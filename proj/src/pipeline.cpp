#include "polyuct/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "polyuct/parallel.hpp"
#include "polyuct/stream.hpp"

namespace polyuct {

double default_cd(int d) {
  // Volume of the unit d-ball via Gamma(d/2 + 1), divided by 2^d (one
  // orthant of each ball is always inside [0,1]^d for grid centers).
  constexpr double pi = 3.14159265358979323846;
  const double ball = std::pow(pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
  return ball / std::pow(2.0, d);
}

namespace {

std::uint64_t required_fit_samples(double delta, int d, double v_max, double c_d) {
  const BallCover cover = build_cover(d, delta);
  const double k = static_cast<double>(cover.K_count);
  const double n = 32.0 * std::max(1.0, v_max * v_max / (delta * delta)) / c_d *
                   std::pow(delta, -d) * std::log(k / delta);
  return static_cast<std::uint64_t>(snap_ceil(n));
}

}  // namespace

std::vector<IterationStep> derive_schedule(const PipelineConfig& cfg) {
  const double v_max = cfg.mdp.v_max();
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < v_max)) {
    throw std::invalid_argument(
        "derive_schedule: epsilon must lie in (0, v_max); lambda = (epsilon/v_max)^(1/L) "
        "must be < 1");
  }
  if (cfg.L < 1) throw std::invalid_argument("derive_schedule: L must be >= 1");
  if (!(cfg.eta >= 0.5 && cfg.eta < 1.0)) {
    throw std::invalid_argument("derive_schedule: eta must lie in [1/2, 1)");
  }
  if (!(cfg.kappa > 0.0)) throw std::invalid_argument("derive_schedule: kappa must be positive");
  if (cfg.mdp.gamma <= 0.0) {
    throw std::invalid_argument("derive_schedule: the depth rule needs gamma in (0, 1)");
  }
  const double lambda = std::pow(cfg.epsilon / v_max, 1.0 / cfg.L);
  const double c_prime = cfg.C_prime > 0.0 ? cfg.C_prime : 4.0 * (4.0 / 3.0 + 1.0);
  const double c_d = cfg.C_d > 0.0 ? cfg.C_d : default_cd(cfg.mdp.d);

  const double delta_1 = 3.0 * v_max / (4.0 * c_prime) * lambda;
  if (delta_1 >= 1.0) {
    throw std::invalid_argument(
        "derive_schedule: delta_1 >= 1; C' too small, need C' > " +
        std::to_string(3.0 * v_max * lambda / 4.0));
  }

  const int H = static_cast<int>(snap_ceil(std::log(lambda / 8.0) / std::log(cfg.mdp.gamma)));
  std::vector<IterationStep> steps;
  steps.reserve(static_cast<std::size_t>(cfg.L));
  for (int ell = 1; ell <= cfg.L; ++ell) {
    IterationStep step;
    step.ell = ell;
    step.H = H;
    step.delta = 3.0 * v_max / (4.0 * c_prime) * std::pow(lambda, ell);
    step.n = static_cast<std::uint64_t>(
        snap_ceil(cfg.kappa * std::pow(8.0 / (v_max * std::pow(lambda, ell)), 1.0 / (1.0 - cfg.eta))));
    const std::uint64_t m_raw = required_fit_samples(step.delta, cfg.mdp.d, v_max, c_d);
    step.m = m_raw;
    if (cfg.m_cap > 0 && m_raw > cfg.m_cap) {
      step.m = cfg.m_cap;
      step.m_capped = true;
    }
    const std::size_t idx = static_cast<std::size_t>(ell - 1);
    if (cfg.override_H && idx < cfg.override_H->size()) step.H = (*cfg.override_H)[idx];
    if (cfg.override_delta && idx < cfg.override_delta->size()) {
      step.delta = (*cfg.override_delta)[idx];
    }
    if (cfg.override_n && idx < cfg.override_n->size()) step.n = (*cfg.override_n)[idx];
    if (cfg.override_m && idx < cfg.override_m->size()) {
      step.m = (*cfg.override_m)[idx];
      step.m_capped = false;
    }
    if (step.H < 1 || step.n < 1 || step.m < 1 || !(step.delta > 0.0 && step.delta < 1.0)) {
      throw std::invalid_argument("derive_schedule: iteration " + std::to_string(ell) +
                                  " has a non-positive or out-of-range parameter");
    }
    // Fail at validation time if the leaf exponent cannot support the depth.
    static_cast<void>(schedule_params(step.H, cfg.xi_H, cfg.eta, cfg.beta));
    steps.push_back(step);
  }
  return steps;
}

double sup_grid_error(const std::function<double(const State&)>& oracle,
                      const std::function<double(const State&)>& reference, int d,
                      int grid_per_dim) {
  if (d < 1 || d > 2) throw std::invalid_argument("sup_grid_error: d must be 1 or 2");
  if (grid_per_dim < 2) throw std::invalid_argument("sup_grid_error: need >= 2 grid points");
  double worst = 0.0;
  const auto coord = [grid_per_dim](int i) {
    return static_cast<double>(i) / static_cast<double>(grid_per_dim - 1);
  };
  if (d == 1) {
    State s(1);
    for (int i = 0; i < grid_per_dim; ++i) {
      s[0] = coord(i);
      worst = std::max(worst, std::abs(oracle(s) - reference(s)));
    }
  } else {
    State s(2);
    for (int i = 0; i < grid_per_dim; ++i) {
      for (int j = 0; j < grid_per_dim; ++j) {
        s[0] = coord(i);
        s[1] = coord(j);
        worst = std::max(worst, std::abs(oracle(s) - reference(s)));
      }
    }
  }
  return worst;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  const std::vector<IterationStep> steps = derive_schedule(cfg);
  const double v_max = cfg.mdp.v_max();

  PipelineResult result;
  ValueOracle oracle = zero_oracle(v_max);
  for (const IterationStep& step : steps) {
    const std::uint64_t transitions =
        step.m * step.n * static_cast<std::uint64_t>(step.H);
    if (cfg.max_transitions_per_iter > 0 && transitions > cfg.max_transitions_per_iter) {
      result.aborted = true;
      result.abort_reason = "iteration " + std::to_string(step.ell) + " needs " +
                            std::to_string(transitions) +
                            " transitions, over the per-iteration budget";
      return result;
    }
    const auto started = std::chrono::steady_clock::now();
    const ParamSchedule sched = schedule_params(step.H, cfg.xi_H, cfg.eta, cfg.beta);

    // Sample the query states uniformly, one derived stream per sample.
    std::vector<std::pair<State, double>> data(step.m);
    for (std::uint64_t i = 0; i < step.m; ++i) {
      RngStream stream(
          derive_key(cfg.seed, {0x57a7e5ULL, static_cast<std::uint64_t>(step.ell), i}));
      State s(cfg.mdp.d);
      for (int j = 0; j < cfg.mdp.d; ++j) s[j] = stream.next_unit();
      data[i].first = std::move(s);
    }
    // Label each state with a seeded search against the previous oracle.
    parallel_for(step.m, cfg.threads, [&](std::uint64_t i) {
      const std::uint64_t run_seed =
          derive_key(cfg.seed, {0x6c75ULL, static_cast<std::uint64_t>(step.ell), i});
      data[i].second =
          run_mcts(cfg.mdp, oracle, data[i].first, sched, step.n, run_seed).estimate;
    });

    NnModel model = fit(build_cover(cfg.mdp.d, step.delta), data, v_max);
    oracle = as_oracle(model, v_max);

    IterationReport report;
    report.ell = step.ell;
    report.m = step.m;
    report.n = step.n;
    report.delta = step.delta;
    report.H = step.H;
    report.transitions = transitions;
    report.m_capped = step.m_capped;
    if (cfg.mdp.v_star) {
      report.sup_error =
          sup_grid_error(oracle.evaluate, *cfg.mdp.v_star, cfg.mdp.d, cfg.grid_per_dim);
    }
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.reports.push_back(report);
    result.models.push_back(std::move(model));
  }
  return result;
}

}  // namespace polyuct
