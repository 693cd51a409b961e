#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rpg/mdp.hpp"
#include "rpg/policy.hpp"

namespace rpg {

enum class AddonKind { none, lane_bonus, hazard_penalty };

struct GridWorldSpec {
    std::size_t width = 5;
    std::size_t height = 5;
    std::size_t goal_x = 4;
    std::size_t goal_y = 4;
    double goal_reward = 1.0;
    double step_cost = -0.01;
    AddonKind addon = AddonKind::lane_bonus;
    double addon_magnitude = 0.05;
    double gamma = 0.95;
};

/// Basic task plus the add-on reward table, both over the same grid.
struct GridWorld {
    TabularMdp mdp;
    Table addon;
    GridWorldSpec spec;

    std::size_t state(std::size_t x, std::size_t y) const { return y * spec.width + x; }
};

/// Grid moves 0 up, 1 down, 2 left, 3 right (y grows downward); moves into a
/// wall leave the agent in place. State id is y·width + x. Entering the goal
/// pays the goal reward and every other move the step cost; the goal absorbs.
/// Lane bonus: +magnitude for every action taken on the bottom row.
/// Hazard penalty: −magnitude for entering an interior cell of the middle row.
GridWorld make_gridworld(const GridWorldSpec& spec = {});

/// Actions 0 left, 1 right; with probability `slip` the move goes the other
/// way. Entering the last state pays 1 and ends the episode.
TabularMdp make_chain(std::size_t n, double slip, double gamma = 0.9);

/// Transition rows are normalized uniform draws; rewards uniform in
/// [−reward_scale, reward_scale]. No terminal states.
TabularMdp make_random_mdp(std::size_t num_states, std::size_t num_actions, std::uint64_t seed,
                           double reward_scale = 1.0, double gamma = 0.9);

/// Single-state continuous bandit with r(a) = −w·‖a − μ*‖².
struct GaussianBanditSpec {
    std::vector<double> target;
    double weight = 1.0;

    double reward(std::span<const double> action) const;
};

/// E[r] + α·H in closed form: −w·(‖μ − μ*‖² + Σσ²) + α·H.
double gaussian_bandit_objective(const DiagonalGaussianPolicy& policy,
                                 const GaussianBanditSpec& spec, double alpha);

}  // namespace rpg
