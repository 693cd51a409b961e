#include "rpg/preference.hpp"

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"

namespace rpg {

namespace {

void require_beta(double beta) {
    if (!(beta > 0.0)) throw ParameterError("beta must be > 0");
}

}  // namespace

double dpo_implicit_reward(double logp_theta, double logp_prior, double beta) {
    require_beta(beta);
    return beta * (logp_theta - logp_prior);
}

double dpo_loss(const PreferenceExample& ex) {
    const double rw = dpo_implicit_reward(ex.logp_theta_w, ex.logp_prior_w, ex.beta);
    const double rl = dpo_implicit_reward(ex.logp_theta_l, ex.logp_prior_l, ex.beta);
    return log_sigmoid(rw - rl);
}

double cross_entropy_dpo_loss(const PreferenceExample& ex) {
    if (ex.label != 0.0 && ex.label != 1.0) throw ParameterError("label must be 0 or 1");
    const double rw = dpo_implicit_reward(ex.logp_theta_w, ex.logp_prior_w, ex.beta);
    const double rl = dpo_implicit_reward(ex.logp_theta_l, ex.logp_prior_l, ex.beta);
    // log(1 − σ(x)) = log σ(−x).
    double out = 0.0;
    if (ex.label != 0.0) out += ex.label * log_sigmoid(rw);
    if (ex.label != 1.0) out += (1.0 - ex.label) * log_sigmoid(-rl);
    return out;
}

double decomposed_dpo_loss(const PreferenceExample& ex) {
    const double theta_ratio = ex.logp_theta_w - ex.logp_theta_l;
    const double prior_ratio = ex.logp_prior_w - ex.logp_prior_l;
    return log_sigmoid(ex.alpha_hat * theta_ratio - ex.omega_prime * prior_ratio);
}

}  // namespace rpg
