#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rpg/mdp.hpp"
#include "rpg/rng.hpp"

namespace rpg {

struct Transition {
    std::size_t next_state = 0;
    double reward = 0.0;
};

/// Deterministic environment queried by the tree search.
class SearchModel {
public:
    virtual ~SearchModel() = default;
    virtual std::size_t num_actions() const = 0;
    virtual Transition step(std::size_t state, std::size_t action) const = 0;
    virtual bool is_terminal(std::size_t state) const = 0;
};

/// Complete tree of uniform depth with a reward on entering each node.
/// Node ids are heap-ordered: children of n are n·b + 1 .. n·b + b.
class TreeModel final : public SearchModel {
public:
    TreeModel(int depth, std::size_t branching, std::vector<double> node_rewards);

    /// Rewards uniform in [−scale, scale]; the root's entry reward is 0.
    static TreeModel random(int depth, std::size_t branching, std::uint64_t seed,
                            double scale = 1.0);

    std::size_t num_actions() const override { return branching_; }
    Transition step(std::size_t state, std::size_t action) const override;
    bool is_terminal(std::size_t state) const override { return depth_of(state) == depth_; }

    int depth() const noexcept { return depth_; }
    std::size_t num_nodes() const noexcept { return rewards_.size(); }
    int depth_of(std::size_t node) const;
    std::size_t child(std::size_t node, std::size_t action) const { return node * branching_ + 1 + action; }
    const std::vector<double>& node_rewards() const noexcept { return rewards_; }
    TreeModel with_rewards(std::vector<double> node_rewards) const;

    /// Tree as an MDP: deterministic edges carry the child's entry reward;
    /// leaves are zero-reward absorbing terminals.
    TabularMdp to_mdp(double gamma) const;

private:
    int depth_;
    std::size_t branching_;
    std::vector<double> rewards_;
};

/// Search view of a tabular MDP; rejects stochastic kernels.
class MdpSearchModel final : public SearchModel {
public:
    explicit MdpSearchModel(const TabularMdp& mdp);
    std::size_t num_actions() const override { return mdp_.num_actions(); }
    Transition step(std::size_t state, std::size_t action) const override;
    bool is_terminal(std::size_t state) const override { return mdp_.is_terminal(state); }

private:
    const TabularMdp& mdp_;
    std::vector<std::size_t> next_;
};

enum class SearchFlavor { ucb, maxent, residual };

struct SearchConfig {
    SearchFlavor flavor = SearchFlavor::maxent;
    double exploration_c = 1.0;  // UCB bonus weight
    double epsilon = 0.0;        // max-ent uniform mixing
    double temperature = 1.0;    // τ
    double prior_weight = 1.0;   // k
    int max_iterations = 1000;
    double gamma = 1.0;
    /// Nodes at this depth are treated as terminal.
    int max_depth = std::numeric_limits<int>::max();
    /// Step cap for rollouts on models without reachable terminals.
    int rollout_horizon = 200;
    /// π_D indexed by model state; required by the residual flavor.
    std::optional<LogPolicyTable> prior;

    void validate() const;
};

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

struct SearchNode {
    std::size_t state = 0;
    std::size_t parent = kNoParent;
    std::size_t action = 0;  // action taken at the parent
    int depth = 0;
    bool terminal = false;
    bool complete = false;  // subtree fully expanded down to terminals
    std::vector<std::size_t> children;  // children[a], expanded in action order
    int visit_count = 0;
    double value = 0.0;  // UCB: running return sum; max-ent: soft Q
    double reward = 0.0;  // entry reward r(n)
    double prior_log_prob = 0.0;  // log π_D(action | parent state)
};

struct SearchTree {
    std::vector<SearchNode> nodes;  // nodes[0] is the root

    const SearchNode& root() const { return nodes.front(); }
    const SearchNode& operator[](std::size_t i) const { return nodes[i]; }
    SearchNode& operator[](std::size_t i) { return nodes[i]; }
    bool fully_expanded(std::size_t n, std::size_t num_actions) const {
        return nodes[n].children.size() == num_actions;
    }
};

SearchTree make_search_tree(std::size_t root_state, const SearchModel& model,
                            const SearchConfig& cfg);

/// Probabilities select_child samples from (one-hot on the UCB argmax).
std::vector<double> selection_distribution(const SearchTree& tree, std::size_t node,
                                           const SearchConfig& cfg);
/// Throws ContractError unless `node` is fully expanded.
std::size_t select_child(const SearchTree& tree, std::size_t node, const SearchConfig& cfg,
                         Rng& rng);

/// Adds the next untried child and returns its id; a terminal node is
/// returned unchanged. Throws ContractError on a fully expanded node.
std::size_t expand(SearchTree& tree, std::size_t node, const SearchModel& model,
                   const SearchConfig& cfg);

/// r(n) plus the discounted rollout return from n's state (entropy-regularized
/// for the max-ent flavors). Terminal nodes return r(n) exactly.
double evaluate(const SearchTree& tree, std::size_t node, const SearchModel& model,
                const SearchConfig& cfg, std::uint64_t seed);

/// UCB: adds `value` to every node on the path. Max-ent flavors: the leaf
/// takes `value`, ancestors recompute r(n) + γ·τ·lse(children).
void backprop(SearchTree& tree, std::size_t leaf, double value, const SearchConfig& cfg);

SearchTree run_search(std::size_t root_state, const SearchModel& model, const SearchConfig& cfg,
                      std::uint64_t seed);

/// Throws ContractError unless `node` is fully expanded.
std::vector<double> extract_policy(const SearchTree& tree, std::size_t node,
                                   const SearchConfig& cfg);
inline std::vector<double> extract_root_policy(const SearchTree& tree, const SearchConfig& cfg) {
    return extract_policy(tree, 0, cfg);
}

/// τ·lse over the node's child logits (soft flavors) or best mean (UCB).
double node_soft_value(const SearchTree& tree, std::size_t node, const SearchConfig& cfg);

struct AccumulationReport {
    bool passed = false;
    double policy_residual = 0.0;  // max TV over internal nodes
    double value_residual = 0.0;   // max |V^A − V^S − acc|
};

/// Runs fully expanded max-ent searches under the step-reward tree and the
/// tree with all path reward moved to the leaves, and compares them per node.
AccumulationReport accumulation_equivalence_check(const TreeModel& tree, double temperature,
                                                  std::uint64_t seed, double tol = 1e-9);

}  // namespace rpg
