#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "polyuct/mdp.hpp"

namespace polyuct {

/// Grid ball cover of [0,1]^d: centers are d-tuples over
///   Q(delta) = { delta*i/2 : 0 <= i <= floor(2/delta) }
///            ∪ { 1 - delta*i/2 : 0 <= i <= floor(2/delta) },
/// deduplicated and sorted; rows of `centers` are in lexicographic order,
/// which fixes the "first covering ball" assignment.
struct BallCover {
  int d = 1;
  double delta = 0.5;
  Eigen::MatrixXd centers;  // K_count x d
  int K_count = 0;
};

/// Throws resource_error when |Q(delta)|^d exceeds center_budget.
BallCover build_cover(int d, double delta, std::size_t center_budget = std::size_t{1} << 22);

/// Index of the first center (in canonical order) within Euclidean distance
/// delta of s. Throws std::logic_error if no ball covers s (the grid cover
/// always does for d <= 16).
int ball_index(const BallCover& cover, const State& s);

/// Piecewise-constant averaging estimator over a ball cover.
struct NnModel {
  BallCover cover;
  std::vector<double> sums;
  std::vector<std::uint64_t> counts;
  double declared_bound = 0.0;
};

/// Aggregates labeled samples into every ball that contains them (balls
/// overlap; membership is by distance, not by the first-covering rule).
/// Empty data is allowed (the model predicts 0 everywhere). declared_bound
/// defaults to max |label|.
NnModel fit(const BallCover& cover, const std::vector<std::pair<State, double>>& data,
            std::optional<double> bound = std::nullopt);

/// Average of the labels in ball ball_index(s); 0 for an empty ball.
double predict(const NnModel& model, const State& s);

/// ValueOracle view; when clamp_to is set, predictions are clamped to
/// [-clamp_to, clamp_to] after averaging.
ValueOracle as_oracle(const NnModel& model, std::optional<double> clamp_to = std::nullopt);

/// One CSV row per ball: center coordinates, count, sum.
void save_model_csv(const NnModel& model, const std::filesystem::path& path);
NnModel load_model_csv(const std::filesystem::path& path, double delta);

}  // namespace polyuct
