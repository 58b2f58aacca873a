#include "polyuct/cover.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polyuct/io.hpp"

namespace polyuct {

namespace {

std::vector<double> grid_points(double delta) {
  const int imax = static_cast<int>(std::floor(2.0 / delta));
  std::vector<double> q;
  q.reserve(2 * static_cast<std::size_t>(imax) + 2);
  for (int i = 0; i <= imax; ++i) {
    q.push_back(delta * static_cast<double>(i) / 2.0);
    q.push_back(1.0 - delta * static_cast<double>(i) / 2.0);
  }
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  return q;
}

}  // namespace

BallCover build_cover(int d, double delta, std::size_t center_budget) {
  if (d < 1) throw std::invalid_argument("build_cover: d must be >= 1");
  // delta = 1 is allowed as the degenerate three-center cover.
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("build_cover: delta must lie in (0, 1]");
  }
  const std::vector<double> q = grid_points(delta);
  double count = 1.0;
  for (int j = 0; j < d; ++j) count *= static_cast<double>(q.size());
  if (count > static_cast<double>(center_budget)) {
    throw resource_error("build_cover: |Q(delta)|^d exceeds the center budget");
  }

  BallCover cover;
  cover.d = d;
  cover.delta = delta;
  cover.K_count = static_cast<int>(count);
  cover.centers.resize(cover.K_count, d);
  // Odometer over the sorted axis values yields lexicographic row order.
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  for (int row = 0; row < cover.K_count; ++row) {
    for (int j = 0; j < d; ++j) cover.centers(row, j) = q[idx[static_cast<std::size_t>(j)]];
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < q.size()) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
#ifndef NDEBUG
  // Spot-verify coverage on a dense grid in debug builds (d <= 2 only; the
  // grid construction guarantees it for d <= 16).
  if (d <= 2) {
    const int pts = 64;
    State s(d);
    for (int i = 0; i <= pts; ++i) {
      s[0] = static_cast<double>(i) / pts;
      for (int j = 0; j <= (d == 2 ? pts : 0); ++j) {
        if (d == 2) s[1] = static_cast<double>(j) / pts;
        static_cast<void>(ball_index(cover, s));
      }
    }
  }
#endif
  return cover;
}

int ball_index(const BallCover& cover, const State& s) {
  if (s.size() != cover.d || !in_unit_box(s)) {
    throw std::invalid_argument("ball_index: state not a valid point of [0,1]^d");
  }
  const double r2 = cover.delta * cover.delta;
  for (int j = 0; j < cover.K_count; ++j) {
    if ((cover.centers.row(j).transpose() - s).squaredNorm() <= r2) return j;
  }
  throw std::logic_error("ball_index: no covering ball (coverage invariant violated)");
}

NnModel fit(const BallCover& cover, const std::vector<std::pair<State, double>>& data,
            std::optional<double> bound) {
  NnModel model;
  model.cover = cover;
  model.sums.assign(static_cast<std::size_t>(cover.K_count), 0.0);
  model.counts.assign(static_cast<std::size_t>(cover.K_count), 0);
  // A sample contributes to every ball containing it (the balls overlap);
  // only prediction uses the first-covering-ball rule. Aggregating by
  // membership keeps every ball's sample count proportional to its volume,
  // which is what the sample-complexity bound counts.
  const double r2 = cover.delta * cover.delta;
  double max_abs = 0.0;
  for (const auto& [s, label] : data) {
    if (s.size() != cover.d || !in_unit_box(s)) {
      throw std::invalid_argument("fit: sample outside [0,1]^d");
    }
    bool covered = false;
    for (int j = 0; j < cover.K_count; ++j) {
      if ((cover.centers.row(j).transpose() - s).squaredNorm() <= r2) {
        model.sums[static_cast<std::size_t>(j)] += label;
        ++model.counts[static_cast<std::size_t>(j)];
        covered = true;
      }
    }
    if (!covered) throw std::logic_error("fit: sample not covered by any ball");
    max_abs = std::max(max_abs, std::abs(label));
  }
  model.declared_bound = bound.value_or(max_abs);
  return model;
}

double predict(const NnModel& model, const State& s) {
  const std::size_t j = static_cast<std::size_t>(ball_index(model.cover, s));
  if (model.counts[j] == 0) return 0.0;
  return model.sums[j] / static_cast<double>(model.counts[j]);
}

ValueOracle as_oracle(const NnModel& model, std::optional<double> clamp_to) {
  ValueOracle oracle;
  if (clamp_to) {
    const double b = *clamp_to;
    oracle.evaluate = [model, b](const State& s) {
      return std::min(b, std::max(-b, predict(model, s)));
    };
    oracle.declared_bound = b;
  } else {
    oracle.evaluate = [model](const State& s) { return predict(model, s); };
    oracle.declared_bound = model.declared_bound;
  }
  return oracle;
}

void save_model_csv(const NnModel& model, const std::filesystem::path& path) {
  CsvRow header;
  for (int j = 0; j < model.cover.d; ++j) header.push_back("c_" + std::to_string(j));
  header.push_back("count");
  header.push_back("sum");
  std::vector<CsvRow> rows;
  rows.reserve(static_cast<std::size_t>(model.cover.K_count));
  for (int i = 0; i < model.cover.K_count; ++i) {
    CsvRow row;
    for (int j = 0; j < model.cover.d; ++j) row.push_back(fmt_double(model.cover.centers(i, j)));
    row.push_back(std::to_string(model.counts[static_cast<std::size_t>(i)]));
    row.push_back(fmt_double(model.sums[static_cast<std::size_t>(i)]));
    rows.push_back(std::move(row));
  }
  write_csv_atomic(path, header, rows);
}

NnModel load_model_csv(const std::filesystem::path& path, double delta) {
  const std::vector<CsvRow> rows = read_csv(path);
  if (rows.size() < 2) throw std::invalid_argument("load_model_csv: no data rows");
  const int d = static_cast<int>(rows.front().size()) - 2;
  if (d < 1) throw std::invalid_argument("load_model_csv: malformed header");
  NnModel model;
  model.cover = build_cover(d, delta);
  if (static_cast<std::size_t>(model.cover.K_count) != rows.size() - 1) {
    throw std::invalid_argument("load_model_csv: row count does not match K(delta, d)");
  }
  model.sums.assign(static_cast<std::size_t>(model.cover.K_count), 0.0);
  model.counts.assign(static_cast<std::size_t>(model.cover.K_count), 0);
  double max_abs = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.size() != static_cast<std::size_t>(d) + 2) {
      throw std::invalid_argument("load_model_csv: malformed row");
    }
    for (int j = 0; j < d; ++j) {
      const double c = std::stod(row[static_cast<std::size_t>(j)]);
      if (std::abs(c - model.cover.centers(static_cast<int>(i) - 1, j)) > 1e-12) {
        throw std::invalid_argument("load_model_csv: centers do not match the cover grid");
      }
    }
    model.counts[i - 1] = std::stoull(row[static_cast<std::size_t>(d)]);
    model.sums[i - 1] = std::stod(row[static_cast<std::size_t>(d) + 1]);
    if (model.counts[i - 1] > 0) {
      max_abs = std::max(max_abs,
                         std::abs(model.sums[i - 1] / static_cast<double>(model.counts[i - 1])));
    }
  }
  model.declared_bound = max_abs;
  return model;
}

}  // namespace polyuct
