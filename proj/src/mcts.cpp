#include "polyuct/mcts.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "polyuct/stream.hpp"

namespace polyuct {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double chain_alpha(int H, double xi_H, double eta) {
  // alpha_1 as a function of the leaf exponent.
  double alpha = boundary_alpha(xi_H, eta);
  for (int h = H - 1; h >= 1; --h) alpha = eta * (1.0 - eta) * (alpha - 1.0);
  return alpha;
}
}  // namespace

ParamSchedule schedule_params(int H, double xi_H, double eta,
                              const std::vector<double>& beta_per_level) {
  if (H < 1) throw std::invalid_argument("schedule_params: H must be >= 1");
  if (!(xi_H > 0.0)) throw std::invalid_argument("schedule_params: xi_H must be positive");
  if (!(eta >= 0.5 && eta < 1.0)) {
    throw std::invalid_argument("schedule_params: eta must lie in [1/2, 1)");
  }
  if (beta_per_level.size() != static_cast<std::size_t>(H)) {
    throw std::invalid_argument("schedule_params: need one beta per level");
  }
  if (!(chain_alpha(H, xi_H, eta) > 2.0)) {
    // Invert the affine chain alpha_1(xi_H) = c^H xi_H - sum_{k=1}^{H-1} c^k.
    const double c = eta * (1.0 - eta);
    double geom = 0.0;
    for (int k = 1; k <= H - 1; ++k) geom += std::pow(c, k);
    const double min_xi = (2.0 + geom) / std::pow(c, H);
    throw std::invalid_argument(
        "schedule_params: xi_H too small for this depth (alpha_1 <= 2); need xi_H > " +
        std::to_string(min_xi));
  }

  // Build leaf-to-root, then store root-to-leaf.
  std::vector<double> alpha(static_cast<std::size_t>(H));
  std::vector<double> xi(static_cast<std::size_t>(H));
  alpha[static_cast<std::size_t>(H - 1)] = boundary_alpha(xi_H, eta);
  xi[static_cast<std::size_t>(H - 1)] = xi_H;
  for (int h = H - 1; h >= 1; --h) {
    xi[static_cast<std::size_t>(h - 1)] = alpha[static_cast<std::size_t>(h)] - 1.0;
    alpha[static_cast<std::size_t>(h - 1)] =
        boundary_alpha(xi[static_cast<std::size_t>(h - 1)], eta);
  }
  ParamSchedule sched;
  sched.H = H;
  sched.levels.reserve(static_cast<std::size_t>(H));
  for (int h = 1; h <= H; ++h) {
    sched.levels.emplace_back(alpha[static_cast<std::size_t>(h - 1)],
                              beta_per_level[static_cast<std::size_t>(h - 1)],
                              xi[static_cast<std::size_t>(h - 1)], eta);
  }
  return sched;
}

ParamSchedule schedule_params(int H, double xi_H, double eta, double beta) {
  if (H < 1) throw std::invalid_argument("schedule_params: H must be >= 1");
  return schedule_params(H, xi_H, eta, std::vector<double>(static_cast<std::size_t>(H), beta));
}

double r_tilde_max(const DeterministicMdp& mdp, double oracle_bound, int H, int h) {
  double bound = oracle_bound;
  for (int k = H; k > h; --k) bound = mdp.r_max + mdp.gamma * bound;
  return bound;
}

namespace {

struct Arena {
  SearchTree tree;
  std::size_t budget;

  std::int32_t new_node(std::int16_t depth) {
    if (tree.nodes.size() >= budget) {
      throw resource_error("run_mcts: tree node budget exhausted");
    }
    SearchTree::Node node;
    node.depth = depth;
    tree.nodes.push_back(node);
    return static_cast<std::int32_t>(tree.nodes.size() - 1);
  }

  // Lazily attaches the K child slots of `node`.
  std::int32_t slots(std::int32_t node) {
    SearchTree::Node& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.first_slot < 0) {
      n.first_slot = static_cast<std::int32_t>(tree.child.size());
      tree.child.resize(tree.child.size() + static_cast<std::size_t>(tree.K), -1);
      tree.edge_reward.resize(tree.edge_reward.size() + static_cast<std::size_t>(tree.K));
    }
    return n.first_slot;
  }
};

}  // namespace

MctsResult run_mcts(const DeterministicMdp& mdp, const ValueOracle& oracle, const State& root,
                    const ParamSchedule& sched, std::uint64_t n, std::uint64_t seed,
                    const MctsOptions& options) {
  if (n < 1) throw std::invalid_argument("run_mcts: n must be >= 1");
  if (sched.H < 1 || sched.levels.size() != static_cast<std::size_t>(sched.H)) {
    throw std::invalid_argument("run_mcts: malformed schedule");
  }
  if (root.size() != mdp.d || !in_unit_box(root)) {
    throw std::invalid_argument("run_mcts: root is not a valid point of [0,1]^d");
  }

  const int H = sched.H;
  const int K = mdp.K;
  const double gamma = mdp.gamma;

  Arena arena;
  arena.tree.K = K;
  arena.tree.H = H;
  arena.budget = options.node_budget != 0
                     ? options.node_budget
                     : static_cast<std::size_t>(n) * static_cast<std::size_t>(H) + 1;
  arena.new_node(0);  // root

  MctsResult result;
  if (options.record_root_actions) result.root_actions.reserve(static_cast<std::size_t>(n));

  std::vector<std::int32_t> path_node(static_cast<std::size_t>(H) + 1);
  std::vector<int> path_action(static_cast<std::size_t>(H) + 1);
  std::vector<double> path_reward(static_cast<std::size_t>(H) + 1);

  for (std::uint64_t t = 1; t <= n; ++t) {
    // Simulation: select actions down to depth H, replaying states.
    State s = root;
    std::int32_t node = 0;
    path_node[0] = 0;
    for (int h = 0; h < H; ++h) {
      const UcbParams& p = sched.at_level(h + 1);
      const std::uint64_t parent_visits =
          h == 0 ? arena.tree.root_visits : arena.tree.nodes[static_cast<std::size_t>(node)].visits;
      const std::int32_t base = arena.slots(node);

      int best_action = 0;
      double best_index = -kInf;
      for (int a = 0; a < K; ++a) {
        const std::int32_t c = arena.tree.child[static_cast<std::size_t>(base) + a];
        double index;
        if (c < 0) {
          index = kInf;  // unvisited edge: bonus divides by zero
        } else {
          const SearchTree::Node& cn = arena.tree.nodes[static_cast<std::size_t>(c)];
          // Depth-H children contribute their cached evaluation once per
          // visit; internal children accumulate full discounted returns.
          const double child_value_sum =
              h + 1 == H ? static_cast<double>(cn.visits) * cn.leaf_value : cn.value.value();
          const double mean =
              (arena.tree.edge_reward[static_cast<std::size_t>(base) + a].value() +
               gamma * child_value_sum) /
              static_cast<double>(cn.visits);
          index = mean + poly_bonus(parent_visits, cn.visits, p);
        }
        if (index > best_index) {
          best_index = index;
          best_action = a;
        }
      }

      std::int32_t c = arena.tree.child[static_cast<std::size_t>(base) + best_action];
      const std::uint64_t visit =
          (c < 0 ? 0 : arena.tree.nodes[static_cast<std::size_t>(c)].visits) + 1;
      const double r = mdp.reward_sampler(s, best_action, visit, seed);
      s = mdp.transition_fn(s, best_action);
      if (c < 0) {
        c = arena.new_node(static_cast<std::int16_t>(h + 1));
        arena.tree.child[static_cast<std::size_t>(base) + best_action] = c;
      }
      path_action[static_cast<std::size_t>(h + 1)] = best_action;
      path_reward[static_cast<std::size_t>(h + 1)] = r;
      path_node[static_cast<std::size_t>(h + 1)] = c;
      node = c;
      if (h == 0 && options.record_root_actions) result.root_actions.push_back(best_action);
    }

    // Evaluation: cache the oracle once per leaf; revisits reuse it.
    SearchTree::Node& leaf = arena.tree.nodes[static_cast<std::size_t>(node)];
    if (!leaf.leaf_cached) {
      leaf.leaf_value = oracle.evaluate(s);
      leaf.leaf_cached = true;
    }

    // Backup: every node on the path accumulates its discounted tail return;
    // edges accumulate immediate rewards; visit counts cover depths 1..H.
    double tail = arena.tree.nodes[static_cast<std::size_t>(path_node[static_cast<std::size_t>(H)])]
                      .leaf_value;
    for (int h = H - 1; h >= 0; --h) {
      tail = path_reward[static_cast<std::size_t>(h + 1)] + gamma * tail;
      arena.tree.nodes[static_cast<std::size_t>(path_node[static_cast<std::size_t>(h)])].value.add(
          tail);
      const std::int32_t base =
          arena.tree.nodes[static_cast<std::size_t>(path_node[static_cast<std::size_t>(h)])]
              .first_slot;
      arena.tree
          .edge_reward[static_cast<std::size_t>(base) +
                       static_cast<std::size_t>(path_action[static_cast<std::size_t>(h + 1)])]
          .add(path_reward[static_cast<std::size_t>(h + 1)]);
      ++arena.tree.nodes[static_cast<std::size_t>(path_node[static_cast<std::size_t>(h + 1)])]
            .visits;
    }
    ++arena.tree.root_visits;
  }

  result.estimate = arena.tree.nodes[0].value.value() / static_cast<double>(n);
  result.tree = std::move(arena.tree);
#ifndef NDEBUG
  check_tree(result.tree, mdp, oracle);
#endif
  return result;
}

double mcts_target(const DeterministicMdp& mdp, const ValueOracle& oracle, const State& root,
                   int H, std::size_t node_budget) {
  return value_iteration(mdp, oracle, H, root, node_budget);
}

void check_tree(const SearchTree& tree, const DeterministicMdp& mdp, const ValueOracle& oracle) {
  const double slack = 1e-9;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const SearchTree::Node& node = tree.nodes[i];
    const int h = node.depth;
    const std::uint64_t visits = i == 0 ? tree.root_visits : node.visits;
    if (node.first_slot < 0) {
      // Only depth-H nodes stay unexpanded; any shallower node attaches its
      // child slots in the simulation that creates it.
      if (h < tree.H) {
        throw std::logic_error("check_tree: internal node has no child slots");
      }
      continue;
    }
    std::uint64_t child_visits = 0;
    double consistency = 0.0;
    for (int a = 0; a < tree.K; ++a) {
      const std::int32_t c = tree.child[static_cast<std::size_t>(node.first_slot) + a];
      if (c < 0) continue;
      const SearchTree::Node& cn = tree.nodes[static_cast<std::size_t>(c)];
      child_visits += cn.visits;
      const double child_value_sum = h + 1 == tree.H
                                         ? static_cast<double>(cn.visits) * cn.leaf_value
                                         : cn.value.value();
      consistency += tree.edge_reward[static_cast<std::size_t>(node.first_slot) + a].value() +
                     mdp.gamma * child_value_sum;
    }
    if (child_visits != visits) {
      throw std::logic_error("check_tree: child visit counts do not sum to the node's count");
    }
    if (std::abs(consistency - node.value.value()) > slack) {
      throw std::logic_error("check_tree: node value does not match edge/child decomposition");
    }
    if (visits > 0) {
      const double bound = r_tilde_max(mdp, oracle.declared_bound, tree.H, h);
      if (std::abs(node.value.value() / static_cast<double>(visits)) > bound + slack) {
        throw std::logic_error("check_tree: per-visit node value exceeds the level bound");
      }
    }
  }
  // Leaf evaluations respect the oracle's declared bound.
  for (const SearchTree::Node& node : tree.nodes) {
    if (node.depth == tree.H && node.leaf_cached &&
        std::abs(node.leaf_value) > oracle.declared_bound + slack) {
      throw std::logic_error("check_tree: cached leaf value exceeds the oracle bound");
    }
  }
}

DeterministicMdp bandit_mdp(const RewardProcess& proc, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("bandit_mdp: gamma must lie in [0, 1)");
  }
  DeterministicMdp mdp;
  mdp.d = 1;
  mdp.K = proc.K;
  mdp.gamma = gamma;
  mdp.r_max = proc.R;
  mdp.transition_fn = [](const State& s, int) { return s; };
  if (proc.declared_mu) {
    const std::vector<double> mu = *proc.declared_mu;
    mdp.reward_mean = [mu](const State&, int a) { return mu[static_cast<std::size_t>(a)]; };
  } else {
    mdp.reward_mean = [](const State&, int) { return 0.0; };
  }
  mdp.reward_sampler = [draw = proc.draw](const State&, int a, std::uint64_t visit,
                                          std::uint64_t seed) { return draw(a, visit, seed); };
  return mdp;
}

RewardProcess root_arm_process(const DeterministicMdp& mdp, const State& root) {
  RewardProcess proc;
  proc.K = mdp.K;
  proc.R = mdp.r_max;
  std::vector<double> mu(static_cast<std::size_t>(mdp.K));
  for (int a = 0; a < mdp.K; ++a) mu[static_cast<std::size_t>(a)] = mdp.reward_mean(root, a);
  proc.declared_mu = std::move(mu);
  proc.draw = [mdp, root](int a, std::uint64_t t, std::uint64_t seed) {
    return mdp.reward_sampler(root, a, t, seed);
  };
  return proc;
}

}  // namespace polyuct
