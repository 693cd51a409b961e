#include "rpg/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"

namespace rpg {

TreeModel::TreeModel(int depth, std::size_t branching, std::vector<double> node_rewards)
    : depth_(depth), branching_(branching), rewards_(std::move(node_rewards)) {
    if (depth < 0) throw ParameterError("tree depth must be >= 0");
    if (branching < 1) throw ParameterError("branching factor must be >= 1");
    std::size_t count = 0, level = 1;
    for (int d = 0; d <= depth; ++d, level *= branching) count += level;
    if (rewards_.size() != count) {
        throw DimensionError("tree of depth " + std::to_string(depth) + " has " +
                             std::to_string(count) + " nodes, got " +
                             std::to_string(rewards_.size()) + " rewards");
    }
}

TreeModel TreeModel::random(int depth, std::size_t branching, std::uint64_t seed, double scale) {
    std::size_t count = 0, level = 1;
    for (int d = 0; d <= depth; ++d, level *= branching) count += level;
    Rng rng(seed);
    std::vector<double> rewards(count, 0.0);
    for (std::size_t i = 1; i < count; ++i) rewards[i] = scale * (2.0 * rng.uniform() - 1.0);
    return TreeModel(depth, branching, std::move(rewards));
}

int TreeModel::depth_of(std::size_t node) const {
    if (node >= rewards_.size()) throw LookupError("node " + std::to_string(node) + " not in tree");
    int d = 0;
    while (node != 0) {
        node = (node - 1) / branching_;
        ++d;
    }
    return d;
}

Transition TreeModel::step(std::size_t state, std::size_t action) const {
    if (action >= branching_) throw LookupError("action out of range");
    if (is_terminal(state)) return {state, 0.0};
    const std::size_t c = child(state, action);
    return {c, rewards_[c]};
}

TreeModel TreeModel::with_rewards(std::vector<double> node_rewards) const {
    return TreeModel(depth_, branching_, std::move(node_rewards));
}

TabularMdp TreeModel::to_mdp(double gamma) const {
    const std::size_t n = num_nodes();
    Table reward(n, branching_);
    std::vector<double> kernel(n * branching_ * n, 0.0);
    std::vector<bool> terminal(n, false);
    for (std::size_t s = 0; s < n; ++s) {
        terminal[s] = is_terminal(s);
        for (std::size_t a = 0; a < branching_; ++a) {
            const auto t = step(s, a);
            reward(s, a) = t.reward;
            kernel[(s * branching_ + a) * n + t.next_state] = 1.0;
        }
    }
    return TabularMdp(n, branching_, std::move(reward), std::move(kernel), gamma, std::move(terminal));
}

MdpSearchModel::MdpSearchModel(const TabularMdp& mdp) : mdp_(mdp) {
    next_.resize(mdp.num_states() * mdp.num_actions());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const auto row = mdp.transition(s, a);
            const auto it = std::find(row.begin(), row.end(), 1.0);
            if (it == row.end()) {
                throw ContractError("tree search needs deterministic transitions; state " +
                                    std::to_string(s) + " action " + std::to_string(a) +
                                    " is stochastic");
            }
            next_[s * mdp.num_actions() + a] = static_cast<std::size_t>(it - row.begin());
        }
    }
}

Transition MdpSearchModel::step(std::size_t state, std::size_t action) const {
    return {next_[state * mdp_.num_actions() + action], mdp_.reward(state, action)};
}

void SearchConfig::validate() const {
    if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
    if (!(epsilon >= 0.0)) throw ParameterError("epsilon must be >= 0");
    if (!(exploration_c >= 0.0)) throw ParameterError("exploration constant must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
    if (max_iterations < 0) throw ParameterError("max iterations must be >= 0");
    if (flavor == SearchFlavor::residual && !prior) {
        throw ParameterError("residual search needs a prior policy");
    }
}

namespace {

bool is_soft(const SearchConfig& cfg) { return cfg.flavor != SearchFlavor::ucb; }

double prior_term(const SearchConfig& cfg, double log_prob) {
    return cfg.flavor == SearchFlavor::residual ? scaled_log(cfg.prior_weight, log_prob) : 0.0;
}

// Per-child logits Q/τ (+ k·log π_D for the residual flavor).
std::vector<double> child_logits(const SearchTree& tree, std::size_t node, const SearchConfig& cfg) {
    const auto& kids = tree[node].children;
    std::vector<double> logits(kids.size());
    for (std::size_t a = 0; a < kids.size(); ++a) {
        const auto& c = tree[kids[a]];
        logits[a] = c.value / cfg.temperature + prior_term(cfg, c.prior_log_prob);
    }
    return logits;
}

void require_expanded(const SearchTree& tree, std::size_t node) {
    const auto& n = tree[node];
    if (n.terminal || n.children.empty()) {
        throw ContractError("node " + std::to_string(node) + " has no children to choose from");
    }
}

std::size_t ucb_argmax(const SearchTree& tree, std::size_t node, const SearchConfig& cfg) {
    const auto& kids = tree[node].children;
    const double log_parent = std::log(static_cast<double>(std::max(tree[node].visit_count, 1)));
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kids.size(); ++a) {
        const auto& c = tree[kids[a]];
        if (c.visit_count == 0) return a;
        const double n = static_cast<double>(c.visit_count);
        const double score = c.value / n + cfg.exploration_c * std::sqrt(2.0 * log_parent / n);
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

void refresh_complete(SearchTree& tree, std::size_t node, std::size_t num_actions) {
    auto& n = tree[node];
    if (n.terminal) {
        n.complete = true;
        return;
    }
    n.complete = n.children.size() == num_actions &&
                 std::all_of(n.children.begin(), n.children.end(),
                             [&](std::size_t c) { return tree[c].complete; });
}

// Discounted return from the root of a playout ending at `leaf`, whose
// evaluate() already includes r(leaf).
double path_return(const SearchTree& tree, std::size_t leaf, double leaf_value, double gamma) {
    double ret = leaf_value * std::pow(gamma, std::max(tree[leaf].depth - 1, 0));
    for (std::size_t n = tree[leaf].parent; n != kNoParent && n != 0; n = tree[n].parent) {
        ret += std::pow(gamma, tree[n].depth - 1) * tree[n].reward;
    }
    return ret;
}

}  // namespace

SearchTree make_search_tree(std::size_t root_state, const SearchModel& model,
                            const SearchConfig& cfg) {
    SearchTree tree;
    SearchNode root;
    root.state = root_state;
    root.terminal = model.is_terminal(root_state) || cfg.max_depth <= 0;
    root.complete = root.terminal;
    tree.nodes.push_back(std::move(root));
    return tree;
}

std::vector<double> selection_distribution(const SearchTree& tree, std::size_t node,
                                           const SearchConfig& cfg) {
    require_expanded(tree, node);
    const std::size_t n = tree[node].children.size();
    if (!is_soft(cfg)) {
        std::vector<double> one_hot(n, 0.0);
        one_hot[ucb_argmax(tree, node, cfg)] = 1.0;
        return one_hot;
    }
    auto probs = softmax(child_logits(tree, node, cfg));
    double visits = 0.0;
    for (std::size_t c : tree[node].children) visits += tree[c].visit_count;
    // ε|A|/log(1 + ΣC) exceeds 1 for small counts; clamp to a valid mixture.
    double lambda = 0.0;
    if (cfg.epsilon > 0.0) {
        const double denom = std::log1p(visits);
        lambda = denom > 0.0 ? std::min(1.0, cfg.epsilon * static_cast<double>(n) / denom) : 1.0;
    }
    for (double& p : probs) p = (1.0 - lambda) * p + lambda / static_cast<double>(n);
    return probs;
}

std::size_t select_child(const SearchTree& tree, std::size_t node, const SearchConfig& cfg,
                         Rng& rng) {
    require_expanded(tree, node);
    if (!is_soft(cfg)) return tree[node].children[ucb_argmax(tree, node, cfg)];
    return tree[node].children[rng.categorical(selection_distribution(tree, node, cfg))];
}

std::size_t expand(SearchTree& tree, std::size_t node, const SearchModel& model,
                   const SearchConfig& cfg) {
    if (tree[node].terminal) return node;
    const std::size_t a = tree[node].children.size();
    if (a >= model.num_actions()) {
        throw ContractError("node " + std::to_string(node) + " is already fully expanded");
    }
    const auto t = model.step(tree[node].state, a);
    SearchNode child;
    child.state = t.next_state;
    child.parent = node;
    child.action = a;
    child.depth = tree[node].depth + 1;
    child.terminal = model.is_terminal(t.next_state) || child.depth >= cfg.max_depth;
    child.complete = child.terminal;
    child.reward = t.reward;
    if (cfg.prior) child.prior_log_prob = (*cfg.prior)(tree[node].state, a);
    const std::size_t id = tree.nodes.size();
    tree.nodes.push_back(std::move(child));
    tree[node].children.push_back(id);
    return id;
}

double evaluate(const SearchTree& tree, std::size_t node, const SearchModel& model,
                const SearchConfig& cfg, std::uint64_t seed) {
    const auto& n = tree[node];
    if (n.terminal) return n.reward;
    Rng rng(seed);
    const std::size_t num_actions = model.num_actions();
    const bool use_prior = cfg.flavor == SearchFlavor::residual && cfg.prior;
    const double uniform_log = -std::log(static_cast<double>(num_actions));
    std::vector<double> uniform(num_actions, 1.0 / static_cast<double>(num_actions));

    std::size_t state = n.state;
    int depth = n.depth;
    double ret = 0.0, discount = cfg.gamma;
    for (int t = 0; t < cfg.rollout_horizon; ++t) {
        if (model.is_terminal(state) || depth >= cfg.max_depth) break;
        std::size_t a;
        double log_mu;
        if (use_prior) {
            const auto probs = cfg.prior->probabilities(state);
            a = rng.categorical(probs);
            log_mu = (*cfg.prior)(state, a);
        } else {
            a = rng.categorical(uniform);
            log_mu = uniform_log;
        }
        const auto step = model.step(state, a);
        double r = step.reward;
        if (is_soft(cfg)) {
            r -= cfg.temperature * log_mu;
            if (cfg.prior) r += cfg.temperature * prior_term(cfg, (*cfg.prior)(state, a));
        }
        ret += discount * r;
        discount *= cfg.gamma;
        state = step.next_state;
        ++depth;
    }
    return n.reward + ret;
}

double node_soft_value(const SearchTree& tree, std::size_t node, const SearchConfig& cfg) {
    const auto& n = tree[node];
    if (n.children.empty()) return 0.0;
    if (!is_soft(cfg)) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t c : n.children) {
            const auto& ch = tree[c];
            if (ch.visit_count > 0) best = std::max(best, ch.value / ch.visit_count);
        }
        return best;
    }
    return cfg.temperature * log_sum_exp(child_logits(tree, node, cfg));
}

void backprop(SearchTree& tree, std::size_t leaf, double value, const SearchConfig& cfg) {
    if (!is_soft(cfg)) {
        for (std::size_t n = leaf; n != kNoParent; n = tree[n].parent) {
            tree[n].visit_count += 1;
            tree[n].value += value;
        }
        return;
    }
    tree[leaf].visit_count += 1;
    tree[leaf].value = value;
    for (std::size_t n = tree[leaf].parent; n != kNoParent; n = tree[n].parent) {
        tree[n].visit_count += 1;
        tree[n].value = tree[n].reward + cfg.gamma * node_soft_value(tree, n, cfg);
    }
}

SearchTree run_search(std::size_t root_state, const SearchModel& model, const SearchConfig& cfg,
                      std::uint64_t seed) {
    cfg.validate();
    const std::size_t num_actions = model.num_actions();
    SearchTree tree = make_search_tree(root_state, model, cfg);
    Rng rng(seed);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        // Soft values are recomputed from children, so a complete tree is final.
        if (is_soft(cfg) && tree.root().complete) break;
        std::size_t node = 0;
        while (!tree[node].terminal && tree.fully_expanded(node, num_actions)) {
            node = select_child(tree, node, cfg, rng);
        }
        const std::size_t leaf = expand(tree, node, model, cfg);
        const double value = evaluate(tree, leaf, model, cfg, rng.next_u64());
        if (is_soft(cfg)) {
            backprop(tree, leaf, value, cfg);
        } else {
            backprop(tree, leaf, path_return(tree, leaf, value, cfg.gamma), cfg);
        }
        for (std::size_t n = leaf; n != kNoParent; n = tree[n].parent) {
            refresh_complete(tree, n, num_actions);
        }
    }
    return tree;
}

std::vector<double> extract_policy(const SearchTree& tree, std::size_t node,
                                   const SearchConfig& cfg) {
    const auto& n = tree[node];
    require_expanded(tree, node);
    if (!is_soft(cfg)) {
        std::vector<double> one_hot(n.children.size(), 0.0);
        std::size_t best = 0;
        double best_mean = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n.children.size(); ++a) {
            const auto& c = tree[n.children[a]];
            const double mean = c.visit_count > 0 ? c.value / c.visit_count
                                                  : -std::numeric_limits<double>::infinity();
            if (mean > best_mean) {
                best_mean = mean;
                best = a;
            }
        }
        one_hot[best] = 1.0;
        return one_hot;
    }
    return softmax(child_logits(tree, node, cfg));
}

AccumulationReport accumulation_equivalence_check(const TreeModel& tree, double temperature,
                                                  std::uint64_t seed, double tol) {
    // acc(n): path reward from the root down to and including n.
    std::vector<double> acc(tree.num_nodes(), 0.0);
    for (std::size_t n = 1; n < tree.num_nodes(); ++n) {
        acc[n] = acc[(n - 1) / tree.num_actions()] + tree.node_rewards()[n];
    }
    std::vector<double> moved(tree.num_nodes(), 0.0);
    for (std::size_t n = 0; n < tree.num_nodes(); ++n) {
        if (tree.is_terminal(n)) moved[n] = acc[n];
    }
    const TreeModel accumulated = tree.with_rewards(std::move(moved));

    SearchConfig cfg;
    cfg.flavor = SearchFlavor::maxent;
    cfg.temperature = temperature;
    cfg.gamma = 1.0;
    cfg.max_iterations = static_cast<int>(64 * tree.num_nodes());
    cfg.epsilon = 0.5;  // uniform mixing reaches every subtree; final values ignore it
    const SearchTree step_tree = run_search(0, tree, cfg, seed);
    const SearchTree acc_tree = run_search(0, accumulated, cfg, seed + 1);

    AccumulationReport report;
    if (!step_tree.root().complete || !acc_tree.root().complete) {
        report.policy_residual = report.value_residual = std::numeric_limits<double>::infinity();
        return report;
    }
    std::unordered_map<std::size_t, std::size_t> by_state;
    for (std::size_t i = 0; i < acc_tree.nodes.size(); ++i) by_state[acc_tree[i].state] = i;
    for (std::size_t i = 0; i < step_tree.nodes.size(); ++i) {
        const auto& node = step_tree[i];
        if (node.terminal) continue;
        const std::size_t j = by_state.at(node.state);
        const auto ps = extract_policy(step_tree, i, cfg);
        const auto pa = extract_policy(acc_tree, j, cfg);
        report.policy_residual = std::max(report.policy_residual, total_variation(ps, pa));
        const double vs = node_soft_value(step_tree, i, cfg);
        const double va = node_soft_value(acc_tree, j, cfg);
        report.value_residual = std::max(report.value_residual, std::abs(va - vs - acc[node.state]));
    }
    report.passed = report.policy_residual <= tol && report.value_residual <= tol;
    return report;
}

}  // namespace rpg
