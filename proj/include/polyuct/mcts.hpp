#pragma once

#include <cstdint>
#include <vector>

#include "polyuct/bandit.hpp"
#include "polyuct/mdp.hpp"

namespace polyuct {

/// One UcbParams tuple per tree level h = 1..H, generated by the recursion
///   eta_h = eta,  alpha_h = eta(1-eta)(alpha_{h+1} - 1),  xi_h = alpha_{h+1} - 1,
/// anchored at the leaf by alpha_H = xi_H * eta * (1-eta).
struct ParamSchedule {
  int H = 1;
  std::vector<UcbParams> levels;  // levels[h-1] holds the tuple for depth h

  const UcbParams& at_level(int h) const { return levels[static_cast<std::size_t>(h - 1)]; }
};

/// Builds the schedule from the leaf-level exponent. Throws
/// std::invalid_argument when the induced alpha_1 is not > 2; the message
/// reports the minimal admissible xi_H for this depth.
ParamSchedule schedule_params(int H, double xi_H, double eta, double beta = 2.718281828459045);
ParamSchedule schedule_params(int H, double xi_H, double eta, const std::vector<double>& beta_per_level);

/// Fixed-depth search tree. Nodes live in an arena keyed by the action path
/// from the root; states are recomputed by transition replay, never stored.
/// Statistics are cumulative sums; means are formed at read time.
struct SearchTree {
  struct Node {
    KahanSum value;          // cumulative node value (internal nodes)
    double leaf_value = 0.0; // cached oracle evaluation (depth-H nodes)
    std::uint64_t visits = 0;
    std::int32_t first_slot = -1;  // base index of this node's K child slots
    std::int16_t depth = 0;
    bool leaf_cached = false;
  };

  int K = 0;
  int H = 0;
  std::vector<Node> nodes;            // nodes[0] is the root
  std::vector<std::int32_t> child;    // K slots per expanded node; -1 = absent
  std::vector<KahanSum> edge_reward;  // cumulative immediate reward per slot
  std::uint64_t root_visits = 0;      // simulation counter; the root's t

  std::int32_t child_at(std::int32_t node, int a) const {
    const std::int32_t base = nodes[static_cast<std::size_t>(node)].first_slot;
    return base < 0 ? -1 : child[static_cast<std::size_t>(base) + static_cast<std::size_t>(a)];
  }
  double edge_reward_sum(std::int32_t node, int a) const {
    const std::int32_t base = nodes[static_cast<std::size_t>(node)].first_slot;
    return edge_reward[static_cast<std::size_t>(base) + static_cast<std::size_t>(a)].value();
  }
};

struct MctsOptions {
  /// Maximum number of tree nodes; 0 means the natural bound n*H + 1.
  std::size_t node_budget = 0;
  /// Record the action taken at the root on every simulation.
  bool record_root_actions = false;
};

struct MctsResult {
  double estimate = 0.0;
  SearchTree tree;
  std::vector<int> root_actions;
};

/// Algorithm: n simulations of select-to-depth-H / evaluate-leaf / backup.
/// Deterministic given (mdp, oracle, root, sched, n, seed).
MctsResult run_mcts(const DeterministicMdp& mdp, const ValueOracle& oracle, const State& root,
                    const ParamSchedule& sched, std::uint64_t n, std::uint64_t seed,
                    const MctsOptions& options = {});

/// The exact H-step backup target the search converges to; delegates to
/// value_iteration over mean rewards.
double mcts_target(const DeterministicMdp& mdp, const ValueOracle& oracle, const State& root,
                   int H, std::size_t node_budget = std::size_t{1} << 20);

/// Per-visit value bound at depth h:
/// sum_{k=0}^{H-h-1} gamma^k * r_max + gamma^{H-h} * oracle_bound.
double r_tilde_max(const DeterministicMdp& mdp, double oracle_bound, int H, int h);

/// Verifies every structural tree invariant (visit-count conservation,
/// per-level value bounds, parent/child consistency sums within 1e-9);
/// throws std::logic_error naming the first violation.
void check_tree(const SearchTree& tree, const DeterministicMdp& mdp, const ValueOracle& oracle);

/// Single-state MDP whose K self-loop arms replay `proc`; with gamma = 0 and
/// H = 1 the search reduces exactly to the index policy on `proc`.
DeterministicMdp bandit_mdp(const RewardProcess& proc, double gamma = 0.0);

/// The immediate-reward arms seen at `root`: draw(a, t, seed) replays the
/// MDP's reward stream for edge (root, a).
RewardProcess root_arm_process(const DeterministicMdp& mdp, const State& root);

}  // namespace polyuct
