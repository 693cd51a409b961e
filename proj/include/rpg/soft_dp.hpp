#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rpg/mdp.hpp"
#include "rpg/table.hpp"

namespace rpg {

/// Soft Q-function over a tabular MDP together with the temperature it was
/// solved under. Which role it plays (optimal, residual, augmented) is decided
/// by the MDP it was solved on.
struct SoftQTable {
    Table q;
    double entropy_coeff = 1.0;
};

struct SoftValueTable {
    std::vector<double> v;
};

/// v[s] = α·log Σ_a exp(q[s][a]/α).
SoftValueTable soft_values(const SoftQTable& q);

/// One synchronous application of Q ← r + γ·E_{s'}[α·log Σ exp(Q(s',·)/α)].
SoftQTable soft_bellman_backup(const SoftQTable& q, const TabularMdp& mdp, double alpha);

struct SolveOptions {
    double tolerance = 1e-10;
    int max_iterations = 100000;
    /// When set, the `horizon`-step value with V_0 = 0 is computed instead
    /// of the fixed point; required for γ = 1.
    std::optional<int> horizon;
};

struct SoftSolution {
    SoftQTable q;
    SoftValueTable v;
    int iterations = 0;
    double residual = 0.0;
};

/// Fixed point of soft_bellman_backup (or its H-step finite-horizon value).
/// Throws ConvergenceError carrying the last sup-norm change.
SoftSolution soft_value_iteration(const TabularMdp& mdp, double alpha,
                                  const SolveOptions& options = {});

/// Q_k for k = 0..horizon steps-to-go with Q_0 ≡ 0, Q_1 = r and V_0 = 0.
std::vector<SoftQTable> finite_horizon_soft_q(const TabularMdp& mdp, double alpha, int horizon);

/// π(a|s) ∝ exp(Q(s,a)/α), in log space.
LogPolicyTable boltzmann_policy(const SoftQTable& q, double alpha);

/// Residual soft-Q backup:
///   Q_R ← r_R + γ·E_{s'}[α̂·log Σ_{a'} exp((Q_R(s',a') + ω′·log π(a'|s'))/α̂)].
SoftQTable residual_soft_q_backup(const SoftQTable& q_r, const LogPolicyTable& prior,
                                  const Table& addon_reward, const TabularMdp& mdp,
                                  double omega_prime, double alpha_hat);

/// Fixed point of residual_soft_q_backup.
SoftSolution residual_soft_q_iteration(const TabularMdp& mdp, const LogPolicyTable& prior,
                                       const Table& addon_reward, double omega_prime,
                                       double alpha_hat, const SolveOptions& options = {});

/// π(a|s) ∝ exp(Q_R(s,a)/α̂ + (ω′/α̂)·log π_prior(a|s)).
LogPolicyTable customized_policy_from_residual(const SoftQTable& q_r, const LogPolicyTable& prior,
                                               double omega_prime, double alpha_hat);

/// Q₂ = β·(Q₁/α + c(s)); the Boltzmann policy of Q₂ at β equals that of Q₁ at α.
SoftQTable lemma1_transform(const SoftQTable& q, double alpha, double beta,
                            std::span<const double> offset);

/// r₁(s,a) = (α/β)·r₂(s,a) − α·(c(s) − γ·E_{s'|s,a}[c(s')]).
///
/// The shaping term depends on the action through the expectation.
Table lemma2_shaped_reward(const Table& r2, double alpha, double beta,
                           std::span<const double> potential, const TabularMdp& mdp);

struct TemperatureRescaleResult {
    bool holds = false;
    double q_residual = 0.0;       // max |Q*_α[(α/β)r] − (α/β)·Q*_β[r]|
    double policy_residual = 0.0;  // max per-state TV between the two Boltzmann policies
};

/// Solves (r, β) and ((α/β)·r, α) and checks that the α-solution is the
/// (α/β)-scaled β-solution and that both induce the same policy.
TemperatureRescaleResult temperature_rescale_check(const TabularMdp& mdp, double alpha,
                                                   double beta, double tol,
                                                   const SolveOptions& options = {});

/// Soft state values of a fixed policy:
///   V(s) = Σ_a π(a|s)·[r(s,a) − α·log π(a|s) + γ·E V(s')].
/// With α = 0 this is plain discounted policy evaluation.
std::vector<double> soft_policy_evaluation(const TabularMdp& mdp, const LogPolicyTable& policy,
                                           double alpha, const SolveOptions& options = {});

/// Discounted state occupancy Σ_t γ^t·P(s_t = s) from a fixed start state.
std::vector<double> discounted_occupancy(const TabularMdp& mdp, const LogPolicyTable& policy,
                                         std::size_t start_state,
                                         const SolveOptions& options = {});

}  // namespace rpg
