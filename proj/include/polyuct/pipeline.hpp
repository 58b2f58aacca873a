#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyuct/cover.hpp"
#include "polyuct/mcts.hpp"
#include "polyuct/mdp.hpp"

namespace polyuct {

/// Configuration for the iterate(sample -> search -> fit) loop. With
/// lambda = (epsilon/v_max)^{1/L}, iteration l uses
///   H_l     = ceil(log_gamma(lambda/8))
///   delta_l = 3 v_max / (4 C') * lambda^l
///   n_l     = ceil(kappa * (8 / (v_max lambda^l))^{1/(1-eta)})
///   m_l     = ceil(32 max(1, delta_l^-2 v_max^2) / C_d * delta_l^-d
///                  * log(K(delta_l, d)/delta_l)), capped at m_cap.
struct PipelineConfig {
  DeterministicMdp mdp;
  double epsilon = 0.25;
  int L = 3;
  double eta = 0.5;
  double xi_H = 40.0;
  double beta = 2.718281828459045;
  double C_prime = 0.0;  // 0 selects the default 4*(C+1) for C = 4/3
  double C_d = 0.0;      // 0 selects vol(unit d-ball)/2^d
  double kappa = 1.0;
  std::uint64_t m_cap = 4000;
  /// Abort (with partial reports) if m_l * n_l * H_l exceeds this; 0 = off.
  std::uint64_t max_transitions_per_iter = 0;
  std::uint64_t seed = 1;
  int grid_per_dim = 200;
  int threads = 1;
  std::optional<std::vector<std::uint64_t>> override_m;
  std::optional<std::vector<std::uint64_t>> override_n;
  std::optional<std::vector<double>> override_delta;
  std::optional<std::vector<int>> override_H;
};

struct IterationStep {
  int ell = 0;
  int H = 0;
  double delta = 0.0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  bool m_capped = false;
};

/// Validates the config and expands the per-iteration schedule. Throws
/// std::invalid_argument on epsilon >= v_max (lambda must be < 1) and on
/// delta_1 >= 1, reporting the minimal admissible C'.
std::vector<IterationStep> derive_schedule(const PipelineConfig& cfg);

struct IterationReport {
  int ell = 0;
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  double delta = 0.0;
  int H = 0;
  std::optional<double> sup_error;  // vs v_star on the test grid, when known
  std::uint64_t transitions = 0;    // m * n * H, exactly
  double seconds = 0.0;
  bool m_capped = false;
};

struct PipelineResult {
  std::vector<IterationReport> reports;
  std::vector<NnModel> models;  // one fitted model per completed iteration
  bool aborted = false;
  std::string abort_reason;
};

/// Runs the loop: V0 = 0; per iteration sample m uniform states, label each
/// by a seeded search against the previous oracle, fit the ball-average
/// model, clamp its predictions to [-v_max, v_max]. Deterministic given the
/// master seed (replica streams are reduced in sample order).
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// max_s |oracle(s) - reference(s)| over the uniform grid with
/// grid_per_dim points per dimension (d <= 2).
double sup_grid_error(const std::function<double(const State&)>& oracle,
                      const std::function<double(const State&)>& reference, int d,
                      int grid_per_dim);

/// Default per-ball volume constant: vol(unit d-ball) / 2^d.
double default_cd(int d);

}  // namespace polyuct
