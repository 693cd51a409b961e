#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rpg/errors.hpp"
#include "rpg/gradient.hpp"
#include "rpg/trajectory.hpp"
#include "support.hpp"

namespace rpg {
namespace {

bool same_batch(const TrajectoryBatch& a, const TrajectoryBatch& b) {
    if (a.trajectories.size() != b.trajectories.size()) return false;
    for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
        const auto& x = a.trajectories[i];
        const auto& y = b.trajectories[i];
        if (x.steps.size() != y.steps.size() || x.final_state != y.final_state) return false;
        for (std::size_t t = 0; t < x.steps.size(); ++t) {
            const auto& p = x.steps[t];
            const auto& q = y.steps[t];
            if (p.state != q.state || p.action != q.action || p.reward != q.reward ||
                p.log_prob != q.log_prob)
                return false;
        }
    }
    return true;
}

TabularSoftmaxPolicy random_softmax(std::size_t s, std::size_t a, std::uint64_t seed) {
    Rng rng(seed);
    return TabularSoftmaxPolicy(test::random_table(s, a, rng, 1.5));
}

TEST(SampleTrajectories, OneHotPolicyOnDeterministicMdpRepeats) {
    const auto m = make_chain(5, 0.0);
    Table logits(5, 2, 0.0);
    for (std::size_t s = 0; s < 5; ++s) logits(s, 1) = 800.0;
    const TabularSoftmaxPolicy pi(logits);
    const auto batch = sample_trajectories(m, pi, 6, 20, 9);
    for (const auto& traj : batch.trajectories) {
        ASSERT_EQ(traj.horizon(), 6u);
        for (std::size_t t = 0; t < 6; ++t) {
            EXPECT_EQ(traj.steps[t].action, batch.trajectories[0].steps[t].action);
            EXPECT_EQ(traj.steps[t].state, batch.trajectories[0].steps[t].state);
        }
    }
}

TEST(SampleTrajectories, SeedDeterminesBatch) {
    const auto m = make_random_mdp(4, 3, 1);
    const auto pi = random_softmax(4, 3, 2);
    EXPECT_TRUE(same_batch(sample_trajectories(m, pi, 5, 50, 17), sample_trajectories(m, pi, 5, 50, 17)));
    EXPECT_FALSE(same_batch(sample_trajectories(m, pi, 5, 50, 17), sample_trajectories(m, pi, 5, 50, 18)));
}

TEST(SampleTrajectories, ThreadCountDoesNotChangeBatch) {
    const auto m = make_random_mdp(4, 3, 1);
    const auto pi = random_softmax(4, 3, 2);
    const auto one = sample_trajectories(m, pi, 7, 64, 5, {0, 1});
    for (unsigned threads : {2u, 3u, 8u})
        EXPECT_TRUE(same_batch(one, sample_trajectories(m, pi, 7, 64, 5, {0, threads})));
}

TEST(SampleTrajectories, UniformPolicyActionFrequency) {
    const auto m = make_random_mdp(3, 2, 4);
    const TabularSoftmaxPolicy pi(3, 2);
    const auto batch = sample_trajectories(m, pi, 3, 10000, 123);
    for (std::size_t t = 0; t < 3; ++t) {
        double ones = 0.0;
        for (const auto& traj : batch.trajectories) ones += traj.steps[t].action;
        EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
    }
}

TEST(SampleTrajectories, LogProbsAndRewardsComeFromModel) {
    const auto m = make_random_mdp(4, 3, 6);
    const auto pi = random_softmax(4, 3, 7);
    const auto batch = sample_trajectories(m, pi, 6, 30, 1, {2, 1});
    for (const auto& traj : batch.trajectories) {
        EXPECT_EQ(traj.steps.front().state, 2u);
        for (const auto& st : traj.steps) {
            EXPECT_NEAR(st.log_prob, pi.log_prob(st.state, st.action), 1e-12);
            EXPECT_EQ(st.reward, m.reward(st.state, st.action));
        }
    }
}

TEST(EnumerateTrajectories, HorizonOneDeterministic) {
    const auto m = make_chain(4, 0.0);
    const auto pi = random_softmax(4, 2, 3);
    const auto batch = enumerate_trajectories(m, pi, 1, 1);
    ASSERT_EQ(batch.trajectories.size(), 2u);
    EXPECT_EQ(batch.mode, BatchMode::enumerated);
    const auto p = pi.probabilities(1);
    for (const auto& traj : batch.trajectories)
        EXPECT_NEAR(*traj.path_probability, p[traj.steps[0].action], 1e-15);
}

TEST(EnumerateTrajectories, StochasticTwoStateMatchesHandProduct) {
    // Fully mixing 2-state MDP: every (a, s') pair has positive probability.
    const std::vector<double> kernel = {0.3, 0.7, 0.6, 0.4, 0.2, 0.8, 0.9, 0.1};
    const TabularMdp m(2, 2, Table(2, 2, {1.0, 2.0, 3.0, 4.0}), kernel, 1.0, {false, false});
    const TabularSoftmaxPolicy pi(2, 2);
    const auto batch = enumerate_trajectories(m, pi, 2, 0);
    EXPECT_EQ(batch.trajectories.size(), 16u);
    double total = 0.0;
    for (const auto& traj : batch.trajectories) {
        const auto& s = traj.steps;
        const std::size_t s1 = s[1].state;
        double expected = 0.5 * kernel[(0 * 2 + s[0].action) * 2 + s1] * 0.5 *
                          kernel[(s1 * 2 + s[1].action) * 2 + traj.final_state];
        EXPECT_NEAR(*traj.path_probability, expected, 1e-15);
        total += *traj.path_probability;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(EnumerateTrajectories, ProbabilitiesSumToOne) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = make_random_mdp(3, 2, seed);
        const auto pi = random_softmax(3, 2, seed + 50);
        const auto batch = enumerate_trajectories(m, pi, 3, 0);
        double total = 0.0;
        for (std::size_t i = 0; i < batch.trajectories.size(); ++i) total += batch.weight(i);
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(EnumerateTrajectories, BudgetExceededThrows) {
    const auto m = make_random_mdp(6, 4, 1);
    const TabularSoftmaxPolicy pi(6, 4);
    EXPECT_THROW(enumerate_trajectories(m, pi, 6, 0, 1000), BudgetError);
}

TEST(SoftReturn, ScalarExamples) {
    Trajectory one;
    one.steps.push_back({0, 0, 2.0, -0.6931});
    EXPECT_NEAR(soft_return(one, 1.0, 0.9, 0), 2.6931, 1e-12);

    Trajectory traj;
    traj.steps = {{0, 0, 1.0, -0.1}, {0, 1, 2.0, -0.2}, {0, 0, -1.0, -0.3}};
    EXPECT_NEAR(soft_return(traj, 0.0, 0.5, 0), 1.0 + 0.5 * 2.0 - 0.25, 1e-15);
    EXPECT_NEAR(soft_return(traj, 0.7, 0.0, 1), 2.0 + 0.7 * 0.2, 1e-15);
    EXPECT_NEAR(soft_return(traj, 0.5, 0.9, 1), (2.0 + 0.1) + 0.9 * (-1.0 + 0.15), 1e-15);
}

TEST(SoftReturn, MonteCarloConvergesToEnumeration) {
    const auto m = make_random_mdp(3, 2, 8, 1.0, 0.9);
    const auto pi = random_softmax(3, 2, 9);
    const double alpha = 0.3;
    const auto exact_batch = enumerate_trajectories(m, pi, 4, 0);
    double exact = 0.0;
    for (std::size_t i = 0; i < exact_batch.trajectories.size(); ++i)
        exact += exact_batch.weight(i) * soft_return(exact_batch.trajectories[i], alpha, 0.9, 0);
    const int count = 2000;
    int within = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto batch = sample_trajectories(m, pi, 4, count, seed);
        double mean = 0.0;
        for (const auto& traj : batch.trajectories) mean += soft_return(traj, alpha, 0.9, 0);
        mean /= count;
        if (std::abs(mean - exact) <= 3.0 / std::sqrt(double(count)) * std::abs(exact)) ++within;
    }
    EXPECT_GE(within, 19);
}

TEST(ScoreFunction, ZeroMeanOverEnumeratedPaths) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = make_random_mdp(3, 3, seed);
        const auto pi = random_softmax(3, 3, seed + 9);
        const auto batch = enumerate_trajectories(m, pi, 3, 0);
        std::vector<double> total(pi.num_parameters(), 0.0);
        for (std::size_t i = 0; i < batch.trajectories.size(); ++i)
            for (const auto& st : batch.trajectories[i].steps)
                pi.accumulate_grad_log_prob(st.state, st.action, batch.weight(i), total);
        for (double g : total) EXPECT_NEAR(g, 0.0, 1e-9);
    }
}

TEST(Advantages, ZeroBaselineZeroDiscountIsModdedReward) {
    const auto m = make_random_mdp(3, 2, 2);
    const auto pi = random_softmax(3, 2, 3);
    const auto batch = sample_trajectories(m, pi, 4, 10, 1);
    const std::vector<double> zero(3, 0.0);
    RewardModel spg{RewardMode::spg, 0.4, 0.0, std::nullopt};
    const auto adv = compute_advantages(batch, zero, spg, 0.0, 0.0);
    for (std::size_t i = 0; i < batch.trajectories.size(); ++i)
        for (std::size_t t = 0; t < 4; ++t) {
            const auto& st = batch.trajectories[i].steps[t];
            EXPECT_NEAR(adv[i][t], st.reward - 0.4 * st.log_prob, 1e-15);
        }
}

TEST(Advantages, ExactSoftValueBaselineIsCentered) {
    // With γ = 0 the policy's soft value is its one-step soft reward.
    const auto m = make_random_mdp(3, 3, 5, 1.0, 0.0);
    const auto pi = random_softmax(3, 3, 6);
    const double alpha = 0.5;
    const auto v = soft_policy_evaluation(m, pi.to_log_policy(), alpha);
    for (std::size_t s = 0; s < 3; ++s) {
        const auto batch = enumerate_trajectories(m, pi, 1, s);
        const auto adv = compute_advantages(batch, v, {RewardMode::spg, alpha, 0.0, std::nullopt}, 0.0, 0.0);
        double mean = 0.0;
        for (std::size_t i = 0; i < batch.trajectories.size(); ++i) mean += batch.weight(i) * adv[i][0];
        EXPECT_NEAR(mean, 0.0, 1e-9);
    }
}

TEST(Advantages, DiscountedExactBaselineIsCenteredPerStep) {
    const auto m = make_random_mdp(3, 2, 15, 1.0, 0.8);
    const auto pi = random_softmax(3, 2, 16);
    const double alpha = 0.3;
    const auto v = soft_policy_evaluation(m, pi.to_log_policy(), alpha);
    const auto batch = enumerate_trajectories(m, pi, 3, 0);
    const auto adv = compute_advantages(batch, v, {RewardMode::spg, alpha, 0.0, std::nullopt}, 0.8, 0.0);
    // Weighted mean of the one-step advantage at each (t, state) is zero.
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t s = 0; s < 3; ++s) {
            double sum = 0.0, mass = 0.0;
            for (std::size_t i = 0; i < batch.trajectories.size(); ++i)
                if (batch.trajectories[i].steps[t].state == s) {
                    sum += batch.weight(i) * adv[i][t];
                    mass += batch.weight(i);
                }
            if (mass > 0.0) EXPECT_NEAR(sum / mass, 0.0, 1e-9);
        }
}

TEST(Advantages, KlModeIsRpgSlice) {
    const auto m = make_random_mdp(3, 3, 3);
    const auto pi = random_softmax(3, 3, 4);
    const auto prior = test::soft_optimal(m, 0.5);
    const auto batch = sample_trajectories(m, pi, 5, 20, 2);
    const std::vector<double> v = {0.3, -0.2, 0.1};
    const double beta = 0.35;
    const auto kl = compute_advantages(batch, v, {RewardMode::kl, beta, 0.0, prior}, 0.9, 0.7);
    const auto rpg = compute_advantages(batch, v, {RewardMode::rpg, beta, beta, prior}, 0.9, 0.7);
    EXPECT_EQ(kl, rpg);
}

TEST(Advantages, GreedyRpgIsSpgOnAddon) {
    const auto m = make_random_mdp(3, 3, 3);
    const auto pi = random_softmax(3, 3, 4);
    const auto prior = test::soft_optimal(m, 0.5);
    const auto batch = sample_trajectories(m, pi, 5, 20, 2);
    const std::vector<double> v = {0.3, -0.2, 0.1};
    const auto a = compute_advantages(batch, v, {RewardMode::rpg, 0.2, 0.0, prior}, 0.9, 1.0);
    const auto b = compute_advantages(batch, v, {RewardMode::spg, 0.2, 0.0, std::nullopt}, 0.9, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t t = 0; t < a[i].size(); ++t) EXPECT_NEAR(a[i][t], b[i][t], 1e-15);
}

TEST(Advantages, MissingBaselineEntryThrows) {
    const auto m = make_random_mdp(3, 2, 2);
    const auto batch = sample_trajectories(m, TabularSoftmaxPolicy(3, 2), 3, 4, 1);
    const std::vector<double> short_v(2, 0.0);
    EXPECT_THROW(compute_advantages(batch, short_v, {}, 0.9), LookupError);
}

TEST(BatchCsv, OneRowPerStep) {
    const auto m = make_random_mdp(3, 2, 2);
    const auto batch = sample_trajectories(m, TabularSoftmaxPolicy(3, 2), 3, 4, 1);
    std::ostringstream out;
    write_batch_csv(batch, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "episode,t,s,a,r,log_prob");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 12);
}

}  // namespace
}  // namespace rpg
