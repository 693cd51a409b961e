#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rpg/mdp.hpp"
#include "rpg/policy.hpp"

namespace rpg {

struct Step {
    std::size_t state = 0;
    std::size_t action = 0;
    double reward = 0.0;
    double log_prob = 0.0;  // log π_θ(action | state) of the generating policy
};

struct Trajectory {
    std::vector<Step> steps;
    std::size_t final_state = 0;  // state reached after the last step
    std::optional<double> path_probability;  // enumeration mode only

    std::size_t horizon() const noexcept { return steps.size(); }
};

enum class BatchMode { sampled, enumerated };

struct TrajectoryBatch {
    std::vector<Trajectory> trajectories;
    BatchMode mode = BatchMode::sampled;
    std::uint64_t rng_seed = 0;

    /// Expectation weight of trajectory i: its path probability when
    /// enumerated, 1/N when sampled.
    double weight(std::size_t i) const;
    std::size_t horizon() const noexcept {
        return trajectories.empty() ? 0 : trajectories.front().horizon();
    }
};

struct SamplingOptions {
    std::size_t start_state = 0;
    /// Worker threads; the batch is identical for any value.
    unsigned threads = 1;
};

/// Seeded on-policy rollouts. Trajectory i draws from its own stream derived
/// from (seed, i), so results do not depend on the thread count.
TrajectoryBatch sample_trajectories(const TabularMdp& mdp, const DiscretePolicy& policy,
                                    int horizon, int count, std::uint64_t seed,
                                    const SamplingOptions& options = {});

/// Every (action, next-state) path of length `horizon` with nonzero
/// probability. Throws BudgetError once more than `budget` paths would be
/// produced.
TrajectoryBatch enumerate_trajectories(const TabularMdp& mdp, const DiscretePolicy& policy,
                                       int horizon, std::size_t start_state,
                                       std::size_t budget = 1'000'000);

/// Σ_{t' ≥ t} γ^{t'−t}·(r_{t'} − α·log π_θ(a_{t'}|s_{t'})).
double soft_return(const Trajectory& traj, double alpha, double gamma, std::size_t from_step);

/// Which per-step reward the advantage is computed over.
enum class RewardMode {
    plain,  // r
    spg,    // r − α·log π_θ
    rpg,    // r_R + ω′·log π_prior − α̂·log π_θ   (alpha holds α̂)
    kl,     // r_R + β·log π_prior − β·log π_θ    (alpha holds β)
};

struct RewardModel {
    RewardMode mode = RewardMode::plain;
    double alpha = 0.0;
    double omega_prime = 0.0;
    std::optional<LogPolicyTable> prior;

    /// Reformulated reward of one recorded step.
    double operator()(const Step& step) const;
    /// Reward with the prior augmentation but without the −α·log π_θ term.
    double augmented(const Step& step) const;
    /// Coefficient on −log π_θ.
    double entropy_coeff() const;
};

using AdvantageTable = std::vector<std::vector<double>>;

/// GAE(λ) over the reformulated reward with a state-value baseline:
/// δ_t = r_mode + γ·V(s_{t+1}) − V(s_t). λ = 0 gives the one-step form,
/// λ = 1 the Monte-Carlo return minus baseline, bootstrapped at the horizon.
AdvantageTable compute_advantages(const TrajectoryBatch& batch, std::span<const double> baseline,
                                  const RewardModel& reward, double gamma, double lambda = 1.0);

/// One CSV row per step: episode,t,s,a,r,log_prob.
void write_batch_csv(const TrajectoryBatch& batch, std::ostream& out);

}  // namespace rpg
