#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rpg/envs.hpp"
#include "support.hpp"

namespace rpg {
namespace {

/// Deterministic policy table putting all mass on `action[s]`.
LogPolicyTable one_hot(std::size_t n, std::size_t a, const std::vector<std::size_t>& action) {
    Table lp(n, a, kNegInf);
    for (std::size_t s = 0; s < n; ++s) lp(s, action[s]) = 0.0;
    return LogPolicyTable(lp);
}

TEST(Gridworld, SingleCellIsTerminal) {
    GridWorldSpec spec;
    spec.width = spec.height = 1;
    spec.goal_x = spec.goal_y = 0;
    const auto g = make_gridworld(spec);
    EXPECT_EQ(g.mdp.num_states(), 1u);
    EXPECT_TRUE(g.mdp.is_terminal(0));
    EXPECT_TRUE(validate_mdp(g.mdp).empty());
}

TEST(Gridworld, ShortestPathReturn) {
    const auto g = make_gridworld();
    // Right along the top row, then down the right column.
    std::vector<std::size_t> act(25, 1);
    for (std::size_t x = 0; x < 4; ++x) act[g.state(x, 0)] = 3;
    const auto v = soft_policy_evaluation(g.mdp, one_hot(25, 4, act), 0.0);
    double expected = std::pow(0.95, 7) * 1.0;
    for (int t = 0; t < 7; ++t) expected += -0.01 * std::pow(0.95, t);
    EXPECT_NEAR(v[g.state(0, 0)], expected, 1e-10);
}

TEST(Gridworld, MovesClipAtWalls) {
    const auto g = make_gridworld();
    auto next = [&](std::size_t s, std::size_t a) {
        const auto row = g.mdp.transition(s, a);
        return std::size_t(std::max_element(row.begin(), row.end()) - row.begin());
    };
    EXPECT_EQ(next(g.state(0, 0), 0), g.state(0, 0));
    EXPECT_EQ(next(g.state(0, 0), 2), g.state(0, 0));
    EXPECT_EQ(next(g.state(0, 0), 1), g.state(0, 1));
    EXPECT_EQ(next(g.state(0, 0), 3), g.state(1, 0));
    EXPECT_EQ(next(g.state(4, 2), 3), g.state(4, 2));
}

TEST(Gridworld, GoalAbsorbsAndPaysOnEntry) {
    const auto g = make_gridworld();
    const auto goal = g.state(4, 4);
    EXPECT_TRUE(g.mdp.is_terminal(goal));
    EXPECT_EQ(g.mdp.reward(g.state(4, 3), 1), 1.0);
    EXPECT_EQ(g.mdp.reward(g.state(3, 4), 3), 1.0);
    EXPECT_EQ(g.mdp.reward(g.state(0, 0), 3), -0.01);
    for (std::size_t a = 0; a < 4; ++a) {
        EXPECT_EQ(g.mdp.reward(goal, a), 0.0);
        EXPECT_EQ(g.addon(goal, a), 0.0);
    }
}

TEST(Gridworld, AddonKinds) {
    GridWorldSpec spec;
    spec.addon = AddonKind::none;
    const auto none = make_gridworld(spec);
    for (double x : none.addon.values()) EXPECT_EQ(x, 0.0);

    spec.addon = AddonKind::lane_bonus;
    const auto lane = make_gridworld(spec);
    for (std::size_t a = 0; a < 4; ++a) {
        EXPECT_EQ(lane.addon(lane.state(1, 4), a), 0.05);
        EXPECT_EQ(lane.addon(lane.state(1, 3), a), 0.0);
    }

    spec.addon = AddonKind::hazard_penalty;
    const auto hazard = make_gridworld(spec);
    EXPECT_EQ(hazard.addon(hazard.state(2, 1), 1), -0.05);  // enter (2, 2)
    EXPECT_EQ(hazard.addon(hazard.state(0, 2), 3), -0.05);  // enter (1, 2)
    EXPECT_EQ(hazard.addon(hazard.state(0, 1), 1), 0.0);    // (0, 2) is on the border
    EXPECT_EQ(hazard.addon(hazard.state(2, 2), 0), 0.0);    // leaving
}

TEST(Gridworld, AddonIsIndependentOfBasicTable) {
    GridWorldSpec spec;
    spec.addon_magnitude = 0.3;
    const auto a = make_gridworld(spec);
    spec.addon_magnitude = 0.0;
    const auto b = make_gridworld(spec);
    EXPECT_EQ(a.mdp.reward(), b.mdp.reward());
}

TEST(Gridworld, AddonChangesSoftOptimalPolicy) {
    for (auto kind : {AddonKind::lane_bonus, AddonKind::hazard_penalty}) {
        GridWorldSpec spec;
        spec.addon = kind;
        const auto g = make_gridworld(spec);
        const double alpha = 0.05;
        const auto basic = test::soft_optimal(g.mdp, alpha);
        const auto total = test::soft_optimal(test::add_rewards(g.mdp, g.addon), alpha);
        EXPECT_GT(max_policy_tv(basic, total), 0.01);
    }
}

TEST(Chain, SlipZeroIsDeterministic) {
    const auto m = make_chain(5, 0.0);
    EXPECT_TRUE(validate_mdp(m).empty());
    for (std::size_t s = 0; s < 5; ++s)
        for (std::size_t a = 0; a < 2; ++a) {
            const auto row = m.transition(s, a);
            EXPECT_EQ(std::count(row.begin(), row.end(), 1.0), 1);
        }
    EXPECT_EQ(m.transition(1, 1)[2], 1.0);
    EXPECT_EQ(m.transition(1, 0)[0], 1.0);
    EXPECT_EQ(m.reward(3, 1), 1.0);
    EXPECT_TRUE(m.is_terminal(4));
}

TEST(Chain, SlipSplitsMass) {
    const auto m = make_chain(4, 0.25);
    EXPECT_TRUE(validate_mdp(m).empty());
    EXPECT_DOUBLE_EQ(m.transition(1, 1)[2], 0.75);
    EXPECT_DOUBLE_EQ(m.transition(1, 1)[0], 0.25);
}

TEST(RandomMdp, SeedDeterminesModel) {
    const auto a = make_random_mdp(5, 3, 99), b = make_random_mdp(5, 3, 99), c = make_random_mdp(5, 3, 100);
    EXPECT_EQ(a.reward(), b.reward());
    EXPECT_TRUE(std::equal(a.transition_kernel().begin(), a.transition_kernel().end(), b.transition_kernel().begin()));
    EXPECT_NE(a.reward(), c.reward());
}

TEST(RandomMdp, RowsAreDistributions) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto m = make_random_mdp(6, 4, seed, 2.0);
        EXPECT_TRUE(validate_mdp(m).empty());
        for (std::size_t s = 0; s < 6; ++s)
            for (std::size_t a = 0; a < 4; ++a) {
                double sum = 0.0;
                for (double p : m.transition(s, a)) sum += p;
                EXPECT_NEAR(sum, 1.0, 1e-12);
                EXPECT_LE(std::abs(m.reward(s, a)), 2.0);
            }
    }
}

TEST(GaussianBandit, ClosedFormObjective) {
    GaussianBanditSpec spec{{0.0}, 1.0};
    DiagonalGaussianPolicy pi(1, 1, DiagonalGaussianPolicy::StdMode::global, 0.0);
    pi.mean(0)[0] = 1.0;
    EXPECT_NEAR(gaussian_bandit_objective(pi, spec, 0.0), -2.0, 1e-15);

    pi.mean(0)[0] = 0.0;
    pi.log_std(0)[0] = -20.0;
    EXPECT_NEAR(gaussian_bandit_objective(pi, spec, 0.0), 0.0, 1e-15);
}

TEST(GaussianBandit, EntropyIncrement) {
    GaussianBanditSpec spec{{0.5, -1.0}, 2.0};
    DiagonalGaussianPolicy pi(1, 2, DiagonalGaussianPolicy::StdMode::global, -0.4);
    const double base = gaussian_bandit_objective(pi, spec, 0.0);
    const double c = 0.5 * std::log(2 * std::numbers::pi * std::numbers::e);
    EXPECT_NEAR(gaussian_bandit_objective(pi, spec, 0.3) - base, 0.3 * 2 * (-0.4 + c), 1e-12);
}

TEST(GaussianBandit, RewardPeaksAtTarget) {
    GaussianBanditSpec spec{{0.5, -1.0}, 2.0};
    const std::vector<double> target = {0.5, -1.0};
    EXPECT_EQ(spec.reward(target), 0.0);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> a = {rng.normal(), rng.normal()};
        EXPECT_LT(spec.reward(a), 0.0);
    }
}

TEST(GaussianBandit, SampledRewardMatchesClosedForm) {
    GaussianBanditSpec spec{{0.3}, 1.5};
    DiagonalGaussianPolicy pi(1, 1, DiagonalGaussianPolicy::StdMode::global, -0.5);
    pi.mean(0)[0] = -0.2;
    Rng rng(4);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) mean += spec.reward(pi.sample(0, rng)) / n;
    EXPECT_NEAR(mean, gaussian_bandit_objective(pi, spec, 0.0), 0.01);
}

}  // namespace
}  // namespace rpg
