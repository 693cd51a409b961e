#pragma once

namespace rpg {

/// One preference pair: log-probabilities of the preferred (w) and rejected (l)
/// completions under the trained policy π_θ and the reference policy π.
struct PreferenceExample {
    double logp_theta_w = 0.0;
    double logp_theta_l = 0.0;
    double logp_prior_w = 0.0;
    double logp_prior_l = 0.0;
    double label = 1.0;  // cross-entropy variant only
    double beta = 1.0;
    double alpha_hat = 1.0;    // decomposed variant
    double omega_prime = 1.0;  // decomposed variant
};

/// β·(log π_θ − log π).
double dpo_implicit_reward(double logp_theta, double logp_prior, double beta);

// The losses below are log-likelihoods (higher is better); negate them to
// obtain a quantity to minimize.

/// log σ(β·Δ_w − β·Δ_l) with Δ = log π_θ − log π.
double dpo_loss(const PreferenceExample& ex);

/// l·log σ(β·Δ_w) + (1 − l)·log(1 − σ(β·Δ_l)).
double cross_entropy_dpo_loss(const PreferenceExample& ex);

/// log σ(α̂·log(π_θ(y_w)/π_θ(y_l)) − ω′·log(π(y_w)/π(y_l))).
double decomposed_dpo_loss(const PreferenceExample& ex);

}  // namespace rpg
