#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rpg/envs.hpp"
#include "rpg/mcts.hpp"
#include "rpg/mdp.hpp"
#include "rpg/numerics.hpp"
#include "rpg/rng.hpp"
#include "rpg/soft_dp.hpp"
#include "rpg/table.hpp"

namespace rpg::test {

inline Table random_table(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Table t(rows, cols);
    for (double& x : t.values()) x = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
    return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs_diff(const Table& a, const Table& b) {
    return max_abs_diff(a.values(), b.values());
}

/// Plain deterministic MDP from a next-state table (one entry per (s, a)).
inline TabularMdp deterministic_mdp(std::size_t n, std::size_t a, const std::vector<std::size_t>& next,
                                    Table reward, double gamma,
                                    std::vector<bool> terminal = {}) {
    std::vector<double> p(n * a * n, 0.0);
    for (std::size_t i = 0; i < n * a; ++i) p[i * n + next[i]] = 1.0;
    if (terminal.empty()) terminal.assign(n, false);
    return TabularMdp(n, a, std::move(reward), std::move(p), gamma, std::move(terminal));
}

/// One state, `a` actions, every action loops back with reward `reward`.
inline TabularMdp self_loop(std::size_t a, double reward, double gamma) {
    return TabularMdp(1, a, Table(1, a, reward), std::vector<double>(a, 1.0), gamma, {false});
}

/// Soft-optimal policy of `mdp` at α.
inline LogPolicyTable soft_optimal(const TabularMdp& mdp, double alpha) {
    return boltzmann_policy(soft_value_iteration(mdp, alpha).q, alpha);
}

inline TabularMdp add_rewards(const TabularMdp& mdp, const Table& extra) {
    Table r = mdp.reward();
    for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] += extra.values()[i];
    return mdp.with_reward(std::move(r));
}

/// Soft-optimal policy on every internal node of a tree, indexed by node id.
inline LogPolicyTable tree_soft_policy(const TreeModel& model, double tau, double gamma) {
    const auto qs = finite_horizon_soft_q(model.to_mdp(gamma), tau, model.depth());
    Table lp(model.num_nodes(), model.num_actions(), -std::log(double(model.num_actions())));
    for (std::size_t n = 0; n < model.num_nodes(); ++n) {
        const int togo = model.depth() - model.depth_of(n);
        if (togo <= 0) continue;
        std::vector<double> scaled(qs[togo].q.row(n).begin(), qs[togo].q.row(n).end());
        for (double& x : scaled) x /= tau;
        const auto row = log_softmax(scaled);
        for (std::size_t a = 0; a < row.size(); ++a) lp(n, a) = row[a];
    }
    return LogPolicyTable(lp);
}

}  // namespace rpg::test
