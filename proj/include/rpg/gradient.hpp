#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rpg/mdp.hpp"
#include "rpg/policy.hpp"
#include "rpg/trajectory.hpp"

namespace rpg {

/// The four entropy treatments compared for maximum-entropy policy gradients.
enum class EstimatorVariant {
    no_entropy,      // Σ_t ∇log π_t · G^r_t
    end_entropy,     // Σ_t ∇log π_t · G^r_t + α·∇H(π(·|s_t))
    repeat_entropy,  // Σ_t ∇log π_t · G^soft_t + α·∇H(π(·|s_t))
    soft_pg,         // Σ_t ∇log π_t · G^soft_t
};

struct EstimatorConfig {
    EstimatorVariant variant = EstimatorVariant::soft_pg;
    double alpha = 0.0;
    double gamma = 1.0;
    /// plain, rpg or kl; rpg adds ω′·log π_prior and kl adds α·log π_prior to r.
    RewardMode reward_mode = RewardMode::plain;
    double omega_prime = 0.0;
    std::optional<LogPolicyTable> prior;
};

/// Weighted mean over the batch of the variant's per-trajectory gradient,
/// using causality-truncated returns without the γ^t state weighting. With an
/// enumerated batch this is the exact expectation of the estimator.
std::vector<double> estimate_gradient(const TrajectoryBatch& batch,
                                      const TabularSoftmaxPolicy& policy,
                                      const EstimatorConfig& cfg);

/// J(π) = E[Σ_t γ^t (r_t + α·H(π(·|s_t)))] from `start_state` over `horizon`
/// steps, computed by exhaustive enumeration.
double exact_soft_objective(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                            double alpha, double gamma, int horizon, std::size_t start_state = 0);

/// Central finite differences of exact_soft_objective over every logit.
std::vector<double> exact_soft_gradient(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                                        double alpha, double gamma, int horizon,
                                        std::size_t start_state = 0, double step = 1e-6);

/// Sampled soft policy gradient for a single-state continuous bandit:
/// mean of ∇log π(a)·(r(a) − α·log π(a)) over `samples` draws.
std::vector<double> estimate_bandit_gradient(
    const DiagonalGaussianPolicy& policy,
    const std::function<double(std::span<const double>)>& reward, double alpha, int samples,
    std::uint64_t seed);

}  // namespace rpg
