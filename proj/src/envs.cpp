#include "rpg/envs.hpp"

#include <cmath>

#include "rpg/errors.hpp"
#include "rpg/rng.hpp"

namespace rpg {

GridWorld make_gridworld(const GridWorldSpec& spec) {
    if (spec.width < 1 || spec.height < 1) throw ParameterError("grid must be at least 1x1");
    if (spec.goal_x >= spec.width || spec.goal_y >= spec.height) {
        throw ParameterError("goal lies outside the grid");
    }
    if (!(spec.gamma >= 0.0 && spec.gamma < 1.0)) throw ParameterError("gamma must lie in [0, 1)");
    const std::size_t w = spec.width, h = spec.height, n = w * h;
    constexpr std::size_t kActions = 4;
    const std::size_t goal = spec.goal_y * w + spec.goal_x;

    Table reward(n, kActions);
    Table addon(n, kActions);
    std::vector<double> kernel(n * kActions * n, 0.0);
    std::vector<bool> terminal(n, false);
    terminal[goal] = true;

    const auto hazard = [&](std::size_t x, std::size_t y) {
        return y == h / 2 && x > 0 && x + 1 < w && y * w + x != goal;
    };
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t s = y * w + x;
            for (std::size_t a = 0; a < kActions; ++a) {
                std::size_t nx = x, ny = y;
                if (a == 0 && y > 0) --ny;
                if (a == 1 && y + 1 < h) ++ny;
                if (a == 2 && x > 0) --nx;
                if (a == 3 && x + 1 < w) ++nx;
                if (s == goal) {
                    kernel[(s * kActions + a) * n + s] = 1.0;
                    continue;
                }
                const std::size_t next = ny * w + nx;
                kernel[(s * kActions + a) * n + next] = 1.0;
                reward(s, a) = next == goal ? spec.goal_reward : spec.step_cost;
                if (spec.addon == AddonKind::lane_bonus && y + 1 == h) {
                    addon(s, a) = spec.addon_magnitude;
                } else if (spec.addon == AddonKind::hazard_penalty && hazard(nx, ny)) {
                    addon(s, a) = -spec.addon_magnitude;
                }
            }
        }
    }
    return {TabularMdp(n, kActions, std::move(reward), std::move(kernel), spec.gamma,
                       std::move(terminal)),
            std::move(addon), spec};
}

TabularMdp make_chain(std::size_t n, double slip, double gamma) {
    if (n < 2) throw ParameterError("chain needs at least 2 states");
    if (!(slip >= 0.0 && slip < 1.0)) throw ParameterError("slip must lie in [0, 1)");
    constexpr std::size_t kActions = 2;
    Table reward(n, kActions);
    std::vector<double> kernel(n * kActions * n, 0.0);
    std::vector<bool> terminal(n, false);
    const std::size_t last = n - 1;
    terminal[last] = true;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < kActions; ++a) {
            double* row = kernel.data() + (s * kActions + a) * n;
            if (s == last) {
                row[s] = 1.0;
                continue;
            }
            const std::size_t left = s == 0 ? 0 : s - 1;
            const std::size_t right = s + 1;
            const std::size_t intended = a == 0 ? left : right;
            const std::size_t slipped = a == 0 ? right : left;
            row[intended] += 1.0 - slip;
            row[slipped] += slip;
            reward(s, a) = row[last];
        }
    }
    return TabularMdp(n, kActions, std::move(reward), std::move(kernel), gamma, std::move(terminal));
}

TabularMdp make_random_mdp(std::size_t num_states, std::size_t num_actions, std::uint64_t seed,
                           double reward_scale, double gamma) {
    if (num_states < 1 || num_actions < 1) throw ParameterError("need at least one state and action");
    Rng rng(seed);
    Table reward(num_states, num_actions);
    for (double& r : reward.values()) r = reward_scale * (2.0 * rng.uniform() - 1.0);
    std::vector<double> kernel(num_states * num_actions * num_states);
    for (std::size_t row = 0; row < num_states * num_actions; ++row) {
        double* p = kernel.data() + row * num_states;
        double total = 0.0;
        for (std::size_t j = 0; j < num_states; ++j) {
            p[j] = 1.0 - rng.uniform();  // (0, 1]
            total += p[j];
        }
        for (std::size_t j = 0; j < num_states; ++j) p[j] /= total;
    }
    return TabularMdp(num_states, num_actions, std::move(reward), std::move(kernel), gamma,
                      std::vector<bool>(num_states, false));
}

double GaussianBanditSpec::reward(std::span<const double> action) const {
    if (action.size() != target.size()) throw DimensionError("action dimension mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) sq += (action[i] - target[i]) * (action[i] - target[i]);
    return -weight * sq;
}

double gaussian_bandit_objective(const DiagonalGaussianPolicy& policy,
                                 const GaussianBanditSpec& spec, double alpha) {
    if (policy.num_states() != 1) throw DimensionError("bandit policy must have a single state");
    if (policy.action_dim() != spec.target.size()) throw DimensionError("action dimension mismatch");
    const auto mu = policy.mean(0);
    const auto log_std = policy.log_std(0);
    double sq = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        sq += (mu[i] - spec.target[i]) * (mu[i] - spec.target[i]) + std::exp(2.0 * log_std[i]);
    }
    return -spec.weight * sq + (alpha != 0.0 ? alpha * policy.entropy(0) : 0.0);
}

}  // namespace rpg
