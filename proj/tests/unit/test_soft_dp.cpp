#include <gtest/gtest.h>

#include <cmath>

#include "rpg/errors.hpp"
#include "rpg/soft_dp.hpp"
#include "support.hpp"

namespace rpg {
namespace {

using test::max_abs_diff;
using test::random_table;
using test::random_vector;

const double kLog2 = std::log(2.0);

// Independent Boltzmann evaluation: probabilities of softmax(q/α) without
// going through log space.
std::vector<double> direct_softmax(std::span<const double> q, double alpha) {
    double m = q[0];
    for (double x : q) m = std::max(m, x);
    std::vector<double> p;
    double z = 0.0;
    for (double x : q) z += std::exp((x - m) / alpha);
    for (double x : q) p.push_back(std::exp((x - m) / alpha) / z);
    return p;
}

TEST(SoftBellmanBackup, ZeroDiscountReturnsReward) {
    Rng rng(1);
    auto m = make_random_mdp(3, 2, 5, 1.0, 0.0);
    const SoftQTable q{random_table(3, 2, rng, 10.0), 0.7};
    EXPECT_EQ(soft_bellman_backup(q, m, 0.7).q, m.reward());
}

TEST(SoftBellmanBackup, SelfLoopExample) {
    const auto m = test::self_loop(2, 0.0, 0.5);
    const auto next = soft_bellman_backup({Table(1, 2), 1.0}, m, 1.0);
    for (double x : next.q.values()) EXPECT_NEAR(x, 0.5 * kLog2, 1e-15);
    EXPECT_NEAR(next.q(0, 0), 0.34657, 1e-5);
}

TEST(SoftBellmanBackup, ConstantShiftPropagatesScaledByDiscount) {
    Rng rng(2);
    const auto m = make_random_mdp(4, 3, 9, 1.0, 0.8);
    Table q = random_table(4, 3, rng);
    Table shifted = q;
    for (double& x : shifted.values()) x += 2.5;
    const auto a = soft_bellman_backup({q, 0.4}, m, 0.4).q;
    const auto b = soft_bellman_backup({shifted, 0.4}, m, 0.4).q;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b.values()[i] - a.values()[i], 0.8 * 2.5, 1e-12);
}

TEST(SoftBellmanBackup, RejectsNonPositiveAlpha) {
    const auto m = test::self_loop(2, 0.0, 0.5);
    EXPECT_THROW(soft_bellman_backup({Table(1, 2), 1.0}, m, 0.0), ParameterError);
    EXPECT_THROW(soft_bellman_backup({Table(1, 2), 1.0}, m, -1.0), ParameterError);
}

TEST(SoftBellmanBackup, IsDiscountContraction) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const double gamma = 0.1 + 0.89 * rng.uniform();
        const auto m = make_random_mdp(5, 3, 1000 + trial, 1.0, gamma);
        const double alpha = 0.05 + rng.uniform();
        const Table q1 = random_table(5, 3, rng, 5.0), q2 = random_table(5, 3, rng, 5.0);
        const auto b1 = soft_bellman_backup({q1, alpha}, m, alpha).q;
        const auto b2 = soft_bellman_backup({q2, alpha}, m, alpha).q;
        EXPECT_LE(max_abs_diff(b1, b2), gamma * max_abs_diff(q1, q2) + 1e-12);
    }
}

TEST(SoftValueIteration, ZeroDiscountConvergesToReward) {
    const auto m = make_random_mdp(3, 2, 8, 1.0, 0.0);
    const auto sol = soft_value_iteration(m, 0.5);
    EXPECT_EQ(sol.q.q, m.reward());
    EXPECT_LE(sol.iterations, 2);
}

TEST(SoftValueIteration, SelfLoopFixedPoint) {
    const auto sol = soft_value_iteration(test::self_loop(2, 0.0, 0.5), 1.0);
    // x = 0.5·(x + log 2)  →  x = log 2, V = x + log 2.
    EXPECT_NEAR(sol.q.q(0, 0), kLog2, 1e-9);
    EXPECT_NEAR(sol.q.q(0, 1), kLog2, 1e-9);
    EXPECT_NEAR(sol.v.v[0], 2.0 * kLog2, 1e-9);
    EXPECT_LE(sol.residual, 1e-10);
}

TEST(SoftValueIteration, ConstantRewardSymmetricMdpGivesUniformPolicy) {
    const auto m = test::self_loop(3, 0.7, 0.9);
    const auto pi = boltzmann_policy(soft_value_iteration(m, 0.3).q, 0.3);
    for (double p : pi.probabilities(0)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

TEST(SoftValueIteration, ThrowsWithLastResidual) {
    const auto m = make_random_mdp(4, 2, 1, 1.0, 0.99);
    try {
        soft_value_iteration(m, 0.5, {1e-12, 3, std::nullopt});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.last_residual(), 1e-12);
    }
}

TEST(SoftValueIteration, ValuesPairWithQ) {
    const auto m = make_random_mdp(5, 4, 77);
    const double alpha = 0.3;
    const auto sol = soft_value_iteration(m, alpha);
    for (std::size_t s = 0; s < 5; ++s) {
        double z = 0.0;
        for (double x : sol.q.q.row(s)) z += std::exp(x / alpha);
        EXPECT_NEAR(sol.v.v[s], alpha * std::log(z), 1e-9);
    }
}

TEST(SoftValueIteration, LogSumExpBounds) {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const double alpha = 0.01 + 2.0 * rng.uniform();
        const SoftQTable q{random_table(4, 3, rng, 20.0), alpha};
        const auto v = soft_values(q);
        for (std::size_t s = 0; s < 4; ++s) {
            double m = q.q(s, 0);
            for (double x : q.q.row(s)) m = std::max(m, x);
            EXPECT_GE(v.v[s], m - 1e-12);
            EXPECT_LE(v.v[s], m + alpha * std::log(3.0) + 1e-12);
        }
    }
}

TEST(SoftValueIteration, SmallTemperatureDoesNotOverflow) {
    const auto m = make_random_mdp(4, 3, 5, 10.0);
    const auto sol = soft_value_iteration(m, 1e-3);
    for (double x : sol.q.q.values()) EXPECT_TRUE(std::isfinite(x));
}

TEST(FiniteHorizon, CountsExactlyHRewards) {
    // Self-loop with reward 1 and two actions, γ = 1: V_H = H·(1 + log 2).
    const auto m = test::self_loop(2, 1.0, 1.0);
    for (int h = 0; h <= 5; ++h) {
        const auto sol = soft_value_iteration(m, 1.0, {1e-10, 100000, h});
        EXPECT_NEAR(sol.v.v[0], h * (1.0 + kLog2), 1e-12) << "H=" << h;
    }
    const auto qs = finite_horizon_soft_q(m, 1.0, 3);
    ASSERT_EQ(qs.size(), 4u);
    EXPECT_EQ(qs[0].q(0, 0), 0.0);
    EXPECT_EQ(qs[1].q(0, 0), 1.0);
    EXPECT_NEAR(qs[3].q(0, 1), 1.0 + 2.0 * (1.0 + kLog2), 1e-12);
}

TEST(BoltzmannPolicy, EqualQIsUniform) {
    const auto pi = boltzmann_policy({Table(2, 4, 3.0), 0.2}, 0.2);
    for (std::size_t s = 0; s < 2; ++s)
        for (double p : pi.probabilities(s)) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(BoltzmannPolicy, LogisticExample) {
    const auto p = boltzmann_policy({Table(1, 2, {1.0, 0.0}), 1.0}, 1.0).probabilities(0);
    EXPECT_NEAR(p[0], 0.73106, 1e-5);
    EXPECT_NEAR(p[1], 0.26894, 1e-5);
    EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(BoltzmannPolicy, StateOffsetsDoNotChangePolicy) {
    Rng rng(5);
    Table q = random_table(4, 3, rng);
    Table shifted = q;
    const auto c = random_vector(4, rng, 50.0);
    for (std::size_t s = 0; s < 4; ++s)
        for (double& x : shifted.row(s)) x += c[s];
    const auto a = boltzmann_policy({q, 0.6}, 0.6), b = boltzmann_policy({shifted, 0.6}, 0.6);
    EXPECT_LE(max_policy_tv(a, b), 1e-12);
}

TEST(BoltzmannPolicy, MatchesDirectSoftmax) {
    Rng rng(6);
    const Table q = random_table(3, 5, rng, 4.0);
    const auto pi = boltzmann_policy({q, 0.8}, 0.8);
    for (std::size_t s = 0; s < 3; ++s)
        EXPECT_LE(max_abs_diff(pi.probabilities(s), direct_softmax(q.row(s), 0.8)), 1e-14);
}

TEST(BoltzmannPolicy, DegenerateRowThrows) {
    Table q(1, 2, kNegInf);
    EXPECT_THROW(boltzmann_policy({q, 1.0}, 1.0), DegenerateDistributionError);
}

TEST(BoltzmannPolicy, MinusInfinityActionGetsZeroProbability) {
    const auto p = boltzmann_policy({Table(1, 2, {0.0, kNegInf}), 1.0}, 1.0).probabilities(0);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], 0.0);
}

TEST(ResidualBackup, ZeroCoefficientIsSoftBackupOnAddon) {
    Rng rng(7);
    const auto m = make_random_mdp(4, 3, 21);
    const Table addon = random_table(4, 3, rng);
    const SoftQTable q{random_table(4, 3, rng), 0.5};
    const auto prior = test::soft_optimal(m, 0.5);
    const auto a = residual_soft_q_backup(q, prior, addon, m, 0.0, 0.5).q;
    const auto b = soft_bellman_backup(q, m.with_reward(addon), 0.5).q;
    EXPECT_LE(max_abs_diff(a, b), 1e-12);
}

TEST(ResidualBackup, MatchesSoftBackupOnAugmentedMdp) {
    // Q_aug = Q_R + ω′·log π solves the augmented MDP; one residual backup and
    // one augmented backup must agree after that restructuring.
    Rng rng(8);
    const auto m = make_random_mdp(4, 3, 22);
    const Table addon = random_table(4, 3, rng);
    const auto prior = test::soft_optimal(m, 0.7);
    const double wp = 0.7, ah = 0.4;
    const SoftQTable q_r{random_table(4, 3, rng), ah};
    const auto aug = augment_mdp(m, {addon, 1.0, 0.7, ah, wp}, prior);
    Table q_aug = q_r.q;
    for (std::size_t i = 0; i < q_aug.size(); ++i)
        q_aug.values()[i] += wp * prior.log_probs().values()[i];
    const auto lhs = residual_soft_q_backup(q_r, prior, addon, m, wp, ah).q;
    const auto rhs = soft_bellman_backup({q_aug, ah}, aug, ah).q;
    for (std::size_t i = 0; i < lhs.size(); ++i)
        EXPECT_NEAR(lhs.values()[i] + wp * prior.log_probs().values()[i], rhs.values()[i], 1e-12);
}

TEST(ResidualIteration, ZeroAddonRecoversPrior) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = make_random_mdp(5, 3, seed);
        const double alpha = 0.5;
        const auto prior = test::soft_optimal(m, alpha);
        const auto sol = residual_soft_q_iteration(m, prior, Table(5, 3), alpha, alpha);
        const auto pi = customized_policy_from_residual(sol.q, prior, alpha, alpha);
        EXPECT_LE(max_policy_tv(pi, prior), 1e-6);
    }
}

TEST(ResidualIteration, MatchesSoftOptimumOfSummedReward) {
    Rng rng(9);
    const auto m = make_random_mdp(4, 3, 31, 1.0, 0.9);
    const Table addon = random_table(4, 3, rng);
    const double alpha = 0.5;
    const auto prior = test::soft_optimal(m, alpha);
    const auto sol = residual_soft_q_iteration(m, prior, addon, alpha, alpha);
    const auto pi = customized_policy_from_residual(sol.q, prior, alpha, alpha);
    const auto oracle = test::soft_optimal(test::add_rewards(m, addon), alpha);
    EXPECT_LE(max_policy_tv(pi, oracle), 1e-6);
}

TEST(ResidualIteration, EquivalenceForArbitraryNewTemperature) {
    Rng rng(10);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = make_random_mdp(5, 4, 200 + seed);
        const Table addon = random_table(5, 4, rng);
        const double alpha = 0.2 + rng.uniform(), alpha_hat = 0.1 + rng.uniform();
        const auto prior = test::soft_optimal(m, alpha);
        const auto sol = residual_soft_q_iteration(m, prior, addon, alpha, alpha_hat);
        const auto pi = customized_policy_from_residual(sol.q, prior, alpha, alpha_hat);
        const auto oracle = test::soft_optimal(test::add_rewards(m, addon), alpha_hat);
        EXPECT_LE(max_policy_tv(pi, oracle), 1e-6) << "seed " << seed;
    }
}

TEST(CustomizedPolicy, ZeroResidualWithMatchedCoefficientsIsPrior) {
    const auto m = make_random_mdp(3, 3, 4);
    const auto prior = test::soft_optimal(m, 0.6);
    const auto pi = customized_policy_from_residual({Table(3, 3), 0.6}, prior, 0.9, 0.9);
    EXPECT_LE(max_abs_diff(pi.log_probs(), prior.log_probs()), 1e-15);
}

TEST(CustomizedPolicy, ZeroCoefficientIsBoltzmann) {
    Rng rng(12);
    const SoftQTable q{random_table(3, 3, rng), 0.4};
    const auto prior = test::soft_optimal(make_random_mdp(3, 3, 1), 0.3);
    const auto a = customized_policy_from_residual(q, prior, 0.0, 0.4);
    EXPECT_LE(max_abs_diff(a.log_probs(), boltzmann_policy(q, 0.4).log_probs()), 1e-15);
}

TEST(CustomizedPolicy, ScalarExample) {
    const auto prior = LogPolicyTable::uniform(1, 2);
    const auto p =
        customized_policy_from_residual({Table(1, 2, {0.2, 0.0}), 1.0}, prior, 1.0, 1.0).probabilities(0);
    EXPECT_NEAR(p[0], 0.54983, 1e-5);
    EXPECT_NEAR(p[1], 0.45017, 1e-5);
}

TEST(Lemma1, IdentityAndScaling) {
    Rng rng(13);
    const SoftQTable q{random_table(3, 4, rng), 0.5};
    const std::vector<double> zero(3, 0.0);
    EXPECT_LE(max_abs_diff(lemma1_transform(q, 0.5, 0.5, zero).q, q.q), 1e-15);
    const auto doubled = lemma1_transform(q, 0.5, 1.0, zero).q;
    for (std::size_t i = 0; i < q.q.size(); ++i) EXPECT_NEAR(doubled.values()[i], 2.0 * q.q.values()[i], 1e-15);
}

TEST(Lemma1, PreservesBoltzmannPolicy) {
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const SoftQTable q{random_table(3, 4, rng, 3.0), 0.7};
        const auto offset = random_vector(3, rng, 5.0);
        const auto q2 = lemma1_transform(q, 0.7, 1.3, offset);
        const auto a = boltzmann_policy(q, 0.7), b = boltzmann_policy(q2, 1.3);
        for (std::size_t s = 0; s < 3; ++s)
            EXPECT_LE(max_abs_diff(a.probabilities(s), b.probabilities(s)), 1e-12);
    }
}

TEST(Lemma2, TrivialCases) {
    Rng rng(15);
    const auto m = make_random_mdp(3, 2, 16);
    const Table r2 = random_table(3, 2, rng);
    EXPECT_LE(max_abs_diff(lemma2_shaped_reward(r2, 0.5, 0.5, std::vector<double>(3, 0.0), m), r2), 1e-15);
    // Constant potential k shifts every reward by −α·k·(1 − γ).
    const auto r1 = lemma2_shaped_reward(r2, 0.5, 0.5, std::vector<double>(3, 2.0), m);
    for (std::size_t i = 0; i < r1.size(); ++i)
        EXPECT_NEAR(r1.values()[i] - r2.values()[i], -0.5 * 2.0 * (1.0 - 0.9), 1e-12);
}

TEST(Lemma2, PreservesSoftOptimalPolicy) {
    Rng rng(16);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = make_random_mdp(3, 3, 300 + seed);
        const auto potential = random_vector(3, rng, 2.0);
        const Table r1 = lemma2_shaped_reward(m.reward(), 1.0, 2.0, potential, m);
        const auto a = test::soft_optimal(m.with_reward(r1), 1.0);
        const auto b = test::soft_optimal(m, 2.0);
        EXPECT_LE(max_policy_tv(a, b), 1e-6);
    }
}

TEST(TemperatureRescale, HoldsOnRandomMdps) {
    EXPECT_TRUE(temperature_rescale_check(make_random_mdp(4, 3, 1), 0.7, 0.7, 1e-8).holds);
    const auto r = temperature_rescale_check(make_random_mdp(4, 3, 2), 0.5, 1.0, 1e-8);
    EXPECT_TRUE(r.holds) << r.q_residual << " " << r.policy_residual;
    const auto degenerate = TabularMdp(1, 1, Table(1, 1, 1.0), {1.0}, 0.0, {false});
    EXPECT_TRUE(temperature_rescale_check(degenerate, 0.3, 3.0, 1e-12).holds);
}

TEST(TemperatureRescale, ZeroToleranceFailsSomewhere) {
    bool any_fail = false;
    for (std::uint64_t seed = 0; seed < 5 && !any_fail; ++seed)
        any_fail = !temperature_rescale_check(make_random_mdp(4, 3, seed), 0.3, 1.7, 0.0).holds;
    EXPECT_TRUE(any_fail);
}

TEST(PolicyEvaluation, SoftOptimalPolicyAttainsSoftValue) {
    const auto m = make_random_mdp(5, 3, 44);
    const auto sol = soft_value_iteration(m, 0.4);
    const auto v = soft_policy_evaluation(m, boltzmann_policy(sol.q, 0.4), 0.4);
    EXPECT_LE(max_abs_diff(v, sol.v.v), 1e-8);
}

TEST(PolicyEvaluation, OccupancySumsToHorizonMass) {
    const auto m = make_random_mdp(4, 2, 3, 1.0, 0.8);
    const auto occ = discounted_occupancy(m, LogPolicyTable::uniform(4, 2), 0);
    double total = 0.0;
    for (double x : occ) total += x;
    EXPECT_NEAR(total, 1.0 / (1.0 - 0.8), 1e-8);
}

}  // namespace
}  // namespace rpg
