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

/// min(ratio·A, clip(ratio, 1−ε, 1+ε)·A).
double ppo_clip_objective(double ratio, double advantage, double epsilon);

enum class OptimizerKind { sgd, adam };

struct PpoParams {
    double clip_epsilon = 0.2;
    int epochs = 4;
    int minibatch_size = 128;  // steps per minibatch
    double step_size = 1.0;
    int batch_size = 16;  // trajectories per iteration
    int horizon = 40;
    double gae_lambda = 1.0;
    /// Plain ascent by default. Adam rescales every coordinate to a unit-sized
    /// step, so near a fixed point it amplifies sampling noise and roundoff.
    OptimizerKind optimizer = OptimizerKind::sgd;
    double value_step_size = 0.2;
    /// Leading fraction of iterations that only fit the value baseline.
    double warmup_fraction = 0.05;
    std::size_t start_state = 0;
    unsigned threads = 1;

    void validate() const;
};

struct IterationMetrics {
    int iteration = 0;
    double objective = 0.0;  // exact soft objective of the task being optimized
    double total_reward = 0.0;
    double basic_reward = 0.0;
    double addon_reward = 0.0;
    double entropy = 0.0;  // occupancy-weighted mean policy entropy
    double grad_norm = 0.0;
};

struct TrainResult {
    TabularSoftmaxPolicy policy;
    std::vector<IterationMetrics> metrics;
};

/// Exact metrics of a fixed policy from `start`: the objective is the soft
/// value on r + addon at `entropy_coeff`, the rewards are plain evaluations.
IterationMetrics evaluate_policy(const TabularMdp& basic_task, const Table& addon,
                                 double entropy_coeff, const LogPolicyTable& policy,
                                 std::size_t start);

/// Clipped-surrogate PPO on the reformulated reward r − α·log π_θ.
/// When `reported_addon` is given, `mdp`'s reward is taken to be basic +
/// add-on and the metrics split it accordingly.
TrainResult train_soft_ppo(const TabularMdp& mdp, TabularSoftmaxPolicy policy, double alpha,
                           const PpoParams& params, int iterations, std::uint64_t seed,
                           const std::optional<Table>& reported_addon = std::nullopt);

enum class CustomizationMode {
    residual,  // ω′ from CustomizationSpec::augment_coeff
    kl,        // ω′ = α̂
    greedy,    // ω′ = 0
};

/// PPO on r_R + ω′·log π_prior − α̂·log π_θ starting from the prior's logits.
/// The basic reward of `basic_task` is read only for the reported metrics.
TrainResult train_residual_ppo(const TabularMdp& basic_task, const LogPolicyTable& prior,
                               const CustomizationSpec& spec, const PpoParams& params,
                               int iterations, std::uint64_t seed, CustomizationMode mode);

inline constexpr const char* kMetricsSchema = "# rpgkit-metrics v1";

void write_metrics_csv(std::span<const IterationMetrics> metrics, std::ostream& out);

}  // namespace rpg
