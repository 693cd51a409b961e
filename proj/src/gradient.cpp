#include "rpg/gradient.hpp"

#include <cmath>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"
#include "rpg/rng.hpp"

namespace rpg {

std::vector<double> estimate_gradient(const TrajectoryBatch& batch,
                                      const TabularSoftmaxPolicy& policy,
                                      const EstimatorConfig& cfg) {
    if (!(cfg.alpha >= 0.0)) throw ParameterError("entropy coefficient α must be >= 0");
    if (cfg.reward_mode == RewardMode::spg) {
        throw ParameterError("estimator reward mode must be plain, rpg or kl");
    }
    const RewardModel base{cfg.reward_mode, cfg.alpha, cfg.omega_prime, cfg.prior};
    const bool soft_returns = cfg.variant == EstimatorVariant::repeat_entropy ||
                              cfg.variant == EstimatorVariant::soft_pg;
    const bool entropy_bonus = cfg.alpha != 0.0 && (cfg.variant == EstimatorVariant::end_entropy ||
                                                    cfg.variant == EstimatorVariant::repeat_entropy);

    std::vector<double> grad(policy.num_parameters(), 0.0);
    std::vector<double> rewards;
    for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
        const auto& steps = batch.trajectories[i].steps;
        const double w = batch.weight(i);
        if (w == 0.0) continue;
        rewards.assign(steps.size(), 0.0);
        for (std::size_t t = 0; t < steps.size(); ++t) {
            rewards[t] = base.augmented(steps[t]);
            if (soft_returns) rewards[t] -= scaled_log(cfg.alpha, steps[t].log_prob);
        }
        double to_go = 0.0;
        for (std::size_t t = steps.size(); t-- > 0;) {
            to_go = rewards[t] + cfg.gamma * to_go;
            policy.accumulate_grad_log_prob(steps[t].state, steps[t].action, w * to_go, grad);
            if (entropy_bonus) policy.accumulate_grad_entropy(steps[t].state, w * cfg.alpha, grad);
        }
    }
    return grad;
}

double exact_soft_objective(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                            double alpha, double gamma, int horizon, std::size_t start_state) {
    const auto batch = enumerate_trajectories(mdp, policy, horizon, start_state);
    std::vector<double> entropy(mdp.num_states());
    for (std::size_t s = 0; s < entropy.size(); ++s) entropy[s] = policy.entropy(s);
    double j = 0.0;
    for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
        double ret = 0.0;
        double discount = 1.0;
        for (const auto& st : batch.trajectories[i].steps) {
            ret += discount * (st.reward + alpha * entropy[st.state]);
            discount *= gamma;
        }
        j += batch.weight(i) * ret;
    }
    return j;
}

std::vector<double> exact_soft_gradient(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                                        double alpha, double gamma, int horizon,
                                        std::size_t start_state, double step) {
    if (!(step > 0.0)) throw ParameterError("finite-difference step must be > 0");
    TabularSoftmaxPolicy probe = policy;
    std::vector<double> grad(policy.num_parameters());
    for (std::size_t k = 0; k < grad.size(); ++k) {
        const double x = policy.parameters()[k];
        probe.parameters()[k] = x + step;
        const double up = exact_soft_objective(mdp, probe, alpha, gamma, horizon, start_state);
        probe.parameters()[k] = x - step;
        const double down = exact_soft_objective(mdp, probe, alpha, gamma, horizon, start_state);
        probe.parameters()[k] = x;
        grad[k] = (up - down) / (2.0 * step);
    }
    return grad;
}

std::vector<double> estimate_bandit_gradient(
    const DiagonalGaussianPolicy& policy,
    const std::function<double(std::span<const double>)>& reward, double alpha, int samples,
    std::uint64_t seed) {
    if (samples < 1) throw ParameterError("sample count must be >= 1");
    Rng rng(seed);
    std::vector<double> grad(policy.num_parameters(), 0.0);
    for (int i = 0; i < samples; ++i) {
        const auto a = policy.sample(0, rng);
        const double weight = reward(a) - alpha * policy.log_prob(0, a);
        const auto g = policy.grad_log_prob(0, a);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += weight * g[k];
    }
    for (double& g : grad) g /= samples;
    return grad;
}

}  // namespace rpg
