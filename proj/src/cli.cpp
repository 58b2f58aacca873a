#include "polyuct/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "polyuct/diagnostics.hpp"
#include "polyuct/io.hpp"
#include "polyuct/parallel.hpp"
#include "polyuct/pipeline.hpp"
#include "polyuct/stream.hpp"

namespace polyuct {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliContext {
  fs::path out_dir;
  std::uint64_t seed = 1;
  std::uint64_t replicas = 1;
  int threads = 1;
  bool dump_tree = false;
  std::string config_hash;
};

UcbParams parse_params(const json& j) {
  return UcbParams(j.at("alpha").get<double>(), j.at("beta").get<double>(),
                   j.at("xi").get<double>(), j.at("eta").get<double>());
}

RewardProcess parse_process(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bernoulli") return bernoulli_process(j.at("mu").get<std::vector<double>>());
  if (kind == "uniform") {
    return uniform_process(j.at("mu").get<std::vector<double>>(),
                           j.at("halfwidth").get<double>());
  }
  if (kind == "drifting") {
    return drifting_process(j.at("mu").get<std::vector<double>>(),
                            j.at("drift_c").get<double>(), j.at("drift_eta").get<double>(),
                            j.at("halfwidth").get<double>());
  }
  throw std::invalid_argument("config: unknown process kind '" + kind + "'");
}

DeterministicMdp parse_benchmark(const json& j) {
  return make_benchmark(j.at("name").get<std::string>(), j.at("gamma").get<double>(),
                        j.at("noise").get<double>());
}

ValueOracle parse_oracle(const json& j, const DeterministicMdp& mdp) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return zero_oracle(mdp.v_max());
  if (kind == "v_star") return v_star_oracle(mdp);
  if (kind == "v_star_perturbed") {
    const double eps0 = j.at("epsilon0").get<double>();
    if (!mdp.v_star) throw std::invalid_argument("config: benchmark has no closed-form value");
    const auto vs = *mdp.v_star;
    ValueOracle oracle;
    oracle.evaluate = [vs, eps0](const State& s) {
      constexpr double two_pi = 6.283185307179586476925;
      return vs(s) + eps0 * std::sin(two_pi * s[0]);
    };
    oracle.declared_bound = mdp.v_max() + eps0;
    oracle.declared_error = eps0;
    return oracle;
  }
  throw std::invalid_argument("config: unknown oracle kind '" + kind + "'");
}

State parse_root(const json& j, const DeterministicMdp& mdp) {
  const std::vector<double> coords = j.get<std::vector<double>>();
  if (coords.size() != static_cast<std::size_t>(mdp.d)) {
    throw std::invalid_argument("config: root dimension does not match the benchmark");
  }
  State s(mdp.d);
  for (int i = 0; i < mdp.d; ++i) s[i] = coords[static_cast<std::size_t>(i)];
  if (!in_unit_box(s)) throw std::invalid_argument("config: root must lie in [0,1]^d");
  return s;
}

ParamSchedule parse_schedule(const json& j) {
  const int H = j.at("H").get<int>();
  const double xi_H = j.at("xi_H").get<double>();
  const double eta = j.at("eta").get<double>();
  if (j.at("beta").is_array()) {
    return schedule_params(H, xi_H, eta, j.at("beta").get<std::vector<double>>());
  }
  return schedule_params(H, xi_H, eta, j.at("beta").get<double>());
}

void write_manifest(const CliContext& ctx, double wall_seconds) {
  write_csv_atomic(ctx.out_dir / "manifest.csv",
                   {"config_hash", "seed", "tool_version", "wall_seconds"},
                   {{ctx.config_hash, std::to_string(ctx.seed), kToolVersion,
                     fmt_double(wall_seconds)}});
}

void write_rate_csv(const fs::path& path, const std::vector<RatePoint>& curve) {
  std::vector<CsvRow> rows;
  for (const RatePoint& pt : curve) {
    rows.push_back({std::to_string(pt.n), fmt_double(pt.abs_bias), fmt_double(pt.se)});
  }
  write_csv_atomic(path, {"n", "abs_bias", "se"}, rows);
}

void write_tail_csv(const fs::path& path, const TailEstimate& tail) {
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < tail.z.size(); ++i) {
    rows.push_back({fmt_double(tail.z[i]), fmt_double(tail.p_upper[i]),
                    fmt_double(tail.p_lower[i]), fmt_double(tail.se[i])});
  }
  write_csv_atomic(path, {"z", "p_hat_upper", "p_hat_lower", "se"}, rows);
}

void save_tree_csv(const SearchTree& tree, const fs::path& path) {
  CsvRow header{"path", "depth", "N", "v_tilde"};
  for (int a = 0; a < tree.K; ++a) header.push_back("q_" + std::to_string(a));
  std::vector<CsvRow> rows;
  // Depth-first in action order, reconstructing path labels as we go.
  struct Frame {
    std::int32_t node;
    std::string path;
  };
  std::vector<Frame> stack{{0, ""}};
  while (!stack.empty()) {
    const Frame frame = stack.back();
    stack.pop_back();
    const SearchTree::Node& node = tree.nodes[static_cast<std::size_t>(frame.node)];
    CsvRow row;
    row.push_back(frame.path);
    row.push_back(std::to_string(node.depth));
    row.push_back(std::to_string(frame.node == 0 ? tree.root_visits : node.visits));
    row.push_back(fmt_double(node.depth == tree.H ? node.leaf_value : node.value.value()));
    for (int a = 0; a < tree.K; ++a) {
      if (node.first_slot < 0) {
        row.emplace_back();
      } else {
        row.push_back(fmt_double(tree.edge_reward_sum(frame.node, a)));
      }
    }
    rows.push_back(std::move(row));
    if (node.first_slot >= 0) {
      for (int a = tree.K - 1; a >= 0; --a) {
        const std::int32_t c = tree.child_at(frame.node, a);
        if (c >= 0) {
          stack.push_back(
              {c, frame.path.empty() ? std::to_string(a) : frame.path + "-" + std::to_string(a)});
        }
      }
    }
  }
  write_csv_atomic(path, header, rows);
}

std::vector<std::uint64_t> parse_n_grid(const json& j) {
  auto grid = j.get<std::vector<std::uint64_t>>();
  if (grid.empty()) throw std::invalid_argument("config: n_grid must be non-empty");
  return grid;
}

int cmd_bandit(const json& cfg, CliContext& ctx) {
  const json& block = cfg.at("bandit");
  const RewardProcess proc = parse_process(block.at("process"));
  const UcbParams params = parse_params(block.at("params"));
  if (!proc.declared_mu) {
    throw std::invalid_argument("config: bandit rate curves need declared arm means");
  }
  const InstanceInfo info = InstanceInfo::from(proc.R, *proc.declared_mu);

  const std::vector<std::uint64_t> n_grid = parse_n_grid(block.at("n_grid"));
  const auto curve = rate_curve(
      n_grid, ctx.replicas, info.mu_star,
      [&](std::uint64_t n, std::uint64_t r) {
        return run_bandit(proc, params, n, ctx.seed ^ r).xbar;
      },
      ctx.threads);
  write_rate_csv(ctx.out_dir / "rate.csv", curve);

  // Per-replica records at the largest horizon.
  const std::uint64_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
  std::vector<RunRecord> records(ctx.replicas);
  parallel_for(ctx.replicas, ctx.threads, [&](std::uint64_t r) {
    records[r] = run_bandit(proc, params, n_max, ctx.seed ^ r);
  });
  CsvRow header{"seed", "n", "xbar"};
  for (int a = 0; a < proc.K; ++a) header.push_back("T_" + std::to_string(a));
  std::vector<CsvRow> rows;
  for (const RunRecord& rec : records) {
    CsvRow row{std::to_string(rec.seed), std::to_string(rec.n), fmt_double(rec.xbar)};
    for (std::uint64_t t : rec.plays) row.push_back(std::to_string(t));
    rows.push_back(std::move(row));
  }
  write_csv_atomic(ctx.out_dir / "runs.csv", header, rows);

  if (block.contains("tail")) {
    const json& tb = block.at("tail");
    const std::uint64_t n = tb.at("n").get<std::uint64_t>();
    const double eta_prime = tb.contains("eta_prime")
                                 ? tb.at("eta_prime").get<double>()
                                 : params.alpha / (params.xi * (1.0 - params.eta));
    const TailEstimate tail = estimate_tail(
        ctx.replicas, n, info.mu_star, eta_prime, tb.at("z_grid").get<std::vector<double>>(),
        [&](std::uint64_t r) { return run_bandit(proc, params, n, ctx.seed ^ r).xbar; },
        ctx.threads);
    write_tail_csv(ctx.out_dir / "tail.csv", tail);
  }
  return 0;
}

int cmd_mcts(const json& cfg, CliContext& ctx) {
  const json& block = cfg.at("mcts");
  const DeterministicMdp mdp = parse_benchmark(block.at("benchmark"));
  const ValueOracle oracle = parse_oracle(block.at("oracle"), mdp);
  const State root = parse_root(block.at("root"), mdp);
  const ParamSchedule sched = parse_schedule(block.at("schedule"));
  const double target = mcts_target(mdp, oracle, root, sched.H);

  const std::vector<std::uint64_t> n_grid = parse_n_grid(block.at("n_grid"));
  const auto curve = rate_curve(
      n_grid, ctx.replicas, target,
      [&](std::uint64_t n, std::uint64_t r) {
        return run_mcts(mdp, oracle, root, sched, n, ctx.seed ^ r).estimate;
      },
      ctx.threads);
  write_rate_csv(ctx.out_dir / "rate.csv", curve);

  if (ctx.dump_tree) {
    const std::uint64_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
    const MctsResult run = run_mcts(mdp, oracle, root, sched, n_max, ctx.seed);
    save_tree_csv(run.tree, ctx.out_dir / "tree.csv");
  }
  return 0;
}

int cmd_nn(const json& cfg, CliContext& ctx) {
  const json& block = cfg.at("nn");
  const DeterministicMdp mdp = parse_benchmark(block.at("benchmark"));
  if (!mdp.v_star) throw std::invalid_argument("config: nn labels need a closed-form value");
  const auto vs = *mdp.v_star;
  const double delta = block.at("delta").get<double>();
  const std::uint64_t samples = block.at("samples").get<std::uint64_t>();

  const BallCover cover = build_cover(mdp.d, delta);
  std::vector<std::pair<State, double>> data(samples);
  for (std::uint64_t i = 0; i < samples; ++i) {
    RngStream stream(derive_key(ctx.seed, {0x55ULL, i}));
    State s(mdp.d);
    for (int j = 0; j < mdp.d; ++j) s[j] = stream.next_unit();
    data[i] = {s, vs(s)};
  }
  const NnModel model = fit(cover, data, mdp.v_max());
  save_model_csv(model, ctx.out_dir / "model.csv");

  const double err = sup_grid_error([&](const State& s) { return predict(model, s); }, vs,
                                    mdp.d, 200);
  write_csv_atomic(ctx.out_dir / "nn_report.csv",
                   {"d", "delta", "samples", "K_count", "sup_grid_error"},
                   {{std::to_string(mdp.d), fmt_double(delta), std::to_string(samples),
                     std::to_string(cover.K_count), fmt_double(err)}});
  return 0;
}

int cmd_pipeline(const json& cfg, CliContext& ctx) {
  const json& block = cfg.at("pipeline");
  PipelineConfig pc;
  pc.mdp = parse_benchmark(block.at("benchmark"));
  pc.epsilon = block.at("epsilon").get<double>();
  pc.L = block.at("L").get<int>();
  pc.eta = block.at("eta").get<double>();
  pc.xi_H = block.at("xi_H").get<double>();
  pc.beta = block.value("beta", pc.beta);
  pc.C_prime = block.value("C_prime", 0.0);
  pc.C_d = block.value("C_d", 0.0);
  pc.kappa = block.value("kappa", 1.0);
  pc.m_cap = block.value("m_cap", pc.m_cap);
  pc.max_transitions_per_iter = block.value("max_transitions_per_iter", std::uint64_t{0});
  pc.grid_per_dim = block.value("grid_per_dim", 200);
  pc.seed = ctx.seed;
  pc.threads = ctx.threads;
  if (block.contains("override_m")) pc.override_m = block.at("override_m").get<std::vector<std::uint64_t>>();
  if (block.contains("override_n")) pc.override_n = block.at("override_n").get<std::vector<std::uint64_t>>();
  if (block.contains("override_delta")) pc.override_delta = block.at("override_delta").get<std::vector<double>>();
  if (block.contains("override_H")) pc.override_H = block.at("override_H").get<std::vector<int>>();

  const PipelineResult result = run_pipeline(pc);
  std::vector<CsvRow> rows;
  for (const IterationReport& rep : result.reports) {
    rows.push_back({std::to_string(rep.ell), std::to_string(rep.m), std::to_string(rep.n),
                    fmt_double(rep.delta), std::to_string(rep.H),
                    rep.sup_error ? fmt_double(*rep.sup_error) : "nan",
                    std::to_string(rep.transitions), fmt_double(rep.seconds)});
  }
  write_csv_atomic(ctx.out_dir / "pipeline_report.csv",
                   {"l", "m", "n", "delta", "H", "sup_error", "transitions", "seconds"}, rows);
  if (result.aborted) throw resource_error("pipeline: " + result.abort_reason);
  return 0;
}

int cmd_tail(const json& cfg, CliContext& ctx) {
  const json& block = cfg.at("tail");
  const std::string kind = block.at("kind").get<std::string>();
  const std::uint64_t n = block.at("n").get<std::uint64_t>();
  const std::vector<double> z_grid = block.at("z_grid").get<std::vector<double>>();

  TailEstimate tail;
  if (kind == "bandit") {
    const RewardProcess proc = parse_process(block.at("process"));
    const UcbParams params = parse_params(block.at("params"));
    if (!proc.declared_mu) {
      throw std::invalid_argument("config: tail estimation needs declared arm means");
    }
    const InstanceInfo info = InstanceInfo::from(proc.R, *proc.declared_mu);
    const double eta_prime = block.contains("eta_prime")
                                 ? block.at("eta_prime").get<double>()
                                 : params.alpha / (params.xi * (1.0 - params.eta));
    tail = estimate_tail(
        ctx.replicas, n, info.mu_star, eta_prime, z_grid,
        [&](std::uint64_t r) { return run_bandit(proc, params, n, ctx.seed ^ r).xbar; },
        ctx.threads);
  } else if (kind == "mcts") {
    const DeterministicMdp mdp = parse_benchmark(block.at("benchmark"));
    const ValueOracle oracle = parse_oracle(block.at("oracle"), mdp);
    const State root = parse_root(block.at("root"), mdp);
    const ParamSchedule sched = parse_schedule(block.at("schedule"));
    const double target = mcts_target(mdp, oracle, root, sched.H);
    const UcbParams& level1 = sched.at_level(1);
    const double eta_prime = block.contains("eta_prime")
                                 ? block.at("eta_prime").get<double>()
                                 : level1.alpha / (level1.xi * (1.0 - level1.eta));
    tail = estimate_tail(
        ctx.replicas, n, target, eta_prime, z_grid,
        [&](std::uint64_t r) {
          return run_mcts(mdp, oracle, root, sched, n, ctx.seed ^ r).estimate;
        },
        ctx.threads);
  } else {
    throw std::invalid_argument("config: tail kind must be 'bandit' or 'mcts'");
  }
  write_tail_csv(ctx.out_dir / "tail.csv", tail);
  return 0;
}

int cmd_constants(const json& cfg, CliContext& ctx) {
  const json& block = cfg.at("constants");
  const json& inst = block.at("instance");
  const InstanceInfo info =
      InstanceInfo::from(inst.at("R").get<double>(), inst.at("mu").get<std::vector<double>>());
  if (inst.contains("K") && inst.at("K").get<int>() != info.K) {
    throw std::invalid_argument("config: K does not match the number of arm means");
  }
  const UcbParams params = parse_params(block.at("params"));
  const ConcentrationConstants out = concentration_constants(info, params);
  write_csv_atomic(ctx.out_dir / "constants.csv",
                   {"eta_prime", "xi_prime", "beta_prime", "N_p", "N_p_prime", "c1", "c2"},
                   {{fmt_double(out.eta_prime), fmt_double(out.xi_prime),
                     fmt_double(out.beta_prime), std::to_string(out.N_p),
                     std::to_string(out.N_p_prime), fmt_double(out.c1), fmt_double(out.c2)}});
  if (block.contains("r0_n")) {
    std::vector<CsvRow> rows;
    for (std::uint64_t n : block.at("r0_n").get<std::vector<std::uint64_t>>()) {
      rows.push_back({std::to_string(n), fmt_double(deviation_scale_r0(n, info, params))});
    }
    write_csv_atomic(ctx.out_dir / "r0.csv", {"n", "r0"}, rows);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"polynomial-bonus tree search experiment harness"};
  std::string config_path;
  std::string out_override;
  int threads = default_threads();
  bool dump_tree = false;
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--threads", threads, "worker pool size (default: hardware parallelism)");
  app.add_option("--out", out_override, "output directory (overrides config output_dir)");
  app.add_flag("--dump-tree", dump_tree, "write tree.csv (mcts command only)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    const std::string raw = read_file(config_path);
    const json cfg = json::parse(raw);

    CliContext ctx;
    char hash[24];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(raw)));
    ctx.config_hash = hash;
    ctx.seed = cfg.value("seed", std::uint64_t{1});
    if (const char* env_seed = std::getenv("POLYUCT_SEED")) {
      ctx.seed = std::stoull(env_seed);
    }
    ctx.replicas = cfg.value("replicas", std::uint64_t{1});
    ctx.threads = threads;
    if (cfg.contains("threads") && app.count("--threads") == 0) {
      ctx.threads = cfg.at("threads").get<int>();
    }
    ctx.dump_tree = dump_tree;
    ctx.out_dir = !out_override.empty() ? fs::path(out_override)
                                        : fs::path(cfg.value("output_dir", std::string{"."}));
    fs::create_directories(ctx.out_dir);

    const std::string command = cfg.at("command").get<std::string>();
    int rc;
    if (command == "bandit") {
      rc = cmd_bandit(cfg, ctx);
    } else if (command == "mcts") {
      rc = cmd_mcts(cfg, ctx);
    } else if (command == "nn") {
      rc = cmd_nn(cfg, ctx);
    } else if (command == "pipeline") {
      rc = cmd_pipeline(cfg, ctx);
    } else if (command == "tail") {
      rc = cmd_tail(cfg, ctx);
    } else if (command == "constants") {
      rc = cmd_constants(cfg, ctx);
    } else {
      throw std::invalid_argument("config: unknown command '" + command + "'");
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(ctx, wall);
    return rc;
  } catch (const resource_error& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace polyuct
