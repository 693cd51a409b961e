#include "rpg/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"
#include "rpg/rng.hpp"
#include "rpg/soft_dp.hpp"
#include "rpg/trajectory.hpp"

namespace rpg {

double ppo_clip_objective(double ratio, double advantage, double epsilon) {
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

void PpoParams::validate() const {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ParameterError("clip ε must lie in (0, 1)");
    if (epochs < 1 || minibatch_size < 1 || batch_size < 1 || horizon < 1) {
        throw ParameterError("epochs, minibatch size, batch size and horizon must be >= 1");
    }
    if (!(step_size >= 0.0) || !(value_step_size >= 0.0)) {
        throw ParameterError("step sizes must be >= 0");
    }
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ParameterError("GAE λ must lie in [0, 1]");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
        throw ParameterError("warm-up fraction must lie in [0, 1)");
    }
}

namespace {

constexpr double kRatioFloor = 1e-8;
constexpr double kRatioCeil = 1e8;

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double step, std::size_t n)
        : kind_(kind), step_(step), m_(n, 0.0), v_(n, 0.0) {}

    // Gradient ascent on `params`.
    void apply(std::span<double> params, std::span<const double> grad) {
        if (kind_ == OptimizerKind::sgd) {
            for (std::size_t k = 0; k < params.size(); ++k) params[k] += step_ * grad[k];
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, t_);
        const double c2 = 1.0 - std::pow(b2, t_);
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = b1 * m_[k] + (1.0 - b1) * grad[k];
            v_[k] = b2 * v_[k] + (1.0 - b2) * grad[k] * grad[k];
            params[k] += step_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps);
        }
    }

private:
    OptimizerKind kind_;
    double step_;
    std::vector<double> m_, v_;
    int t_ = 0;
};

struct Sample {
    std::size_t state;
    std::size_t action;
    double old_log_prob;
    double advantage;
};

using Evaluator = std::function<IterationMetrics(const LogPolicyTable&)>;

double occupancy_entropy(const TabularMdp& mdp, const LogPolicyTable& pi, std::size_t start) {
    const auto occ = discounted_occupancy(mdp, pi, start);
    double mass = 0.0, acc = 0.0;
    for (std::size_t s = 0; s < occ.size(); ++s) {
        double h = 0.0;
        for (double lp : pi.row(s)) {
            const double p = std::exp(lp);
            if (p > 0.0) h -= p * lp;
        }
        acc += occ[s] * h;
        mass += occ[s];
    }
    return mass > 0.0 ? acc / mass : 0.0;
}

TrainResult run_ppo(const TabularMdp& rollout_mdp, const RewardModel& reward,
                    TabularSoftmaxPolicy policy, const PpoParams& params, int iterations,
                    std::uint64_t seed, const Evaluator& evaluate) {
    params.validate();
    if (iterations < 0) throw ParameterError("iteration count must be >= 0");
    if (policy.num_states() != rollout_mdp.num_states() ||
        policy.num_actions() != rollout_mdp.num_actions()) {
        throw DimensionError("policy shape does not match the MDP");
    }
    const double gamma = rollout_mdp.discount();
    const int warmup = static_cast<int>(std::floor(params.warmup_fraction * iterations));
    Optimizer optimizer(params.optimizer, params.step_size, policy.num_parameters());
    std::vector<double> value(rollout_mdp.num_states(), 0.0);

    TrainResult result{policy, {}};
    for (int it = 0; it < iterations; ++it) {
        const std::uint64_t batch_seed = Rng(seed, static_cast<std::uint64_t>(it)).next_u64();
        const auto batch =
            sample_trajectories(rollout_mdp, policy, params.horizon, params.batch_size, batch_seed,
                                {params.start_state, params.threads});

        // TD(0) fit of the baseline on the reformulated reward.
        for (const auto& traj : batch.trajectories) {
            for (std::size_t t = 0; t < traj.steps.size(); ++t) {
                const auto& st = traj.steps[t];
                const std::size_t next =
                    t + 1 < traj.steps.size() ? traj.steps[t + 1].state : traj.final_state;
                const double target = reward(st) + gamma * value[next];
                value[st.state] += params.value_step_size * (target - value[st.state]);
            }
        }

        std::vector<double> grad(policy.num_parameters(), 0.0);
        double grad_norm = 0.0;
        if (it >= warmup) {
            const auto adv = compute_advantages(batch, value, reward, gamma, params.gae_lambda);
            std::vector<Sample> samples;
            for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
                const auto& steps = batch.trajectories[i].steps;
                for (std::size_t t = 0; t < steps.size(); ++t) {
                    samples.push_back({steps[t].state, steps[t].action, steps[t].log_prob, adv[i][t]});
                }
            }
            Rng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(it));
            std::vector<std::size_t> order(samples.size());
            const auto mb = static_cast<std::size_t>(params.minibatch_size);
            for (int epoch = 0; epoch < params.epochs; ++epoch) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                for (std::size_t k = order.size(); k > 1; --k) {
                    const auto j = static_cast<std::size_t>(shuffle_rng.uniform() * static_cast<double>(k));
                    std::swap(order[k - 1], order[std::min(j, k - 1)]);
                }
                for (std::size_t begin = 0; begin < order.size(); begin += mb) {
                    const std::size_t end = std::min(order.size(), begin + mb);
                    std::fill(grad.begin(), grad.end(), 0.0);
                    const double scale = 1.0 / static_cast<double>(end - begin);
                    for (std::size_t k = begin; k < end; ++k) {
                        const auto& smp = samples[order[k]];
                        const double log_ratio =
                            policy.log_prob(smp.state, smp.action) - smp.old_log_prob;
                        const double ratio = std::clamp(std::exp(log_ratio), kRatioFloor, kRatioCeil);
                        const bool active = smp.advantage >= 0.0
                                                ? ratio < 1.0 + params.clip_epsilon
                                                : ratio > 1.0 - params.clip_epsilon;
                        if (!active) continue;
                        policy.accumulate_grad_log_prob(smp.state, smp.action,
                                                        scale * smp.advantage * ratio, grad);
                    }
                    optimizer.apply(policy.parameters(), grad);
                    grad_norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
                }
            }
            for (double x : policy.parameters()) {
                if (!std::isfinite(x)) throw TrainingError("policy parameters became non-finite", it);
            }
        }

        IterationMetrics m = evaluate(policy.to_log_policy());
        m.iteration = it;
        m.grad_norm = grad_norm;
        result.metrics.push_back(m);
    }
    result.policy = std::move(policy);
    return result;
}

}  // namespace

IterationMetrics evaluate_policy(const TabularMdp& basic_task, const Table& addon,
                                 double entropy_coeff, const LogPolicyTable& policy,
                                 std::size_t start) {
    require_shape(addon, basic_task.num_states(), basic_task.num_actions(), "add-on reward");
    Table total = basic_task.reward();
    for (std::size_t k = 0; k < total.size(); ++k) total.values()[k] += addon.values()[k];
    IterationMetrics m;
    m.objective = soft_policy_evaluation(basic_task.with_reward(std::move(total)), policy,
                                         entropy_coeff)[start];
    m.basic_reward = soft_policy_evaluation(basic_task, policy, 0.0)[start];
    m.addon_reward = soft_policy_evaluation(basic_task.with_reward(addon), policy, 0.0)[start];
    m.total_reward = m.basic_reward + m.addon_reward;
    m.entropy = occupancy_entropy(basic_task, policy, start);
    return m;
}

TrainResult train_soft_ppo(const TabularMdp& mdp, TabularSoftmaxPolicy policy, double alpha,
                           const PpoParams& params, int iterations, std::uint64_t seed,
                           const std::optional<Table>& reported_addon) {
    if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
    const RewardModel reward{RewardMode::spg, alpha, 0.0, std::nullopt};
    Table addon(mdp.num_states(), mdp.num_actions());
    Table basic = mdp.reward();
    if (reported_addon) {
        require_shape(*reported_addon, mdp.num_states(), mdp.num_actions(), "add-on reward");
        addon = *reported_addon;
        for (std::size_t k = 0; k < basic.size(); ++k) basic.values()[k] -= addon.values()[k];
    }
    const TabularMdp basic_task = mdp.with_reward(std::move(basic));
    const std::size_t start = params.start_state;
    auto evaluate = [&](const LogPolicyTable& pi) {
        IterationMetrics m = evaluate_policy(basic_task, addon, alpha, pi, start);
        // Keep the objective on the exact trained reward rather than basic + add-on.
        m.objective = soft_policy_evaluation(mdp, pi, alpha)[start];
        return m;
    };
    return run_ppo(mdp, reward, std::move(policy), params, iterations, seed, evaluate);
}

TrainResult train_residual_ppo(const TabularMdp& basic_task, const LogPolicyTable& prior,
                               const CustomizationSpec& spec, const PpoParams& params,
                               int iterations, std::uint64_t seed, CustomizationMode mode) {
    spec.validate();
    require_shape(spec.addon_reward, basic_task.num_states(), basic_task.num_actions(),
                  "add-on reward");
    require_shape(prior.log_probs(), basic_task.num_states(), basic_task.num_actions(), "prior");
    const double alpha_hat = spec.new_entropy_coeff;
    RewardModel reward{RewardMode::rpg, alpha_hat, spec.augment_coeff(), prior};
    if (mode == CustomizationMode::kl) reward = {RewardMode::kl, alpha_hat, alpha_hat, prior};
    if (mode == CustomizationMode::greedy) reward.omega_prime = 0.0;

    const TabularMdp addon_task = basic_task.with_reward(spec.addon_reward);
    const std::size_t start = params.start_state;
    auto evaluate = [&](const LogPolicyTable& pi) {
        return evaluate_policy(basic_task, spec.addon_reward, alpha_hat, pi, start);
    };
    return run_ppo(addon_task, reward, TabularSoftmaxPolicy::from_log_policy(prior), params,
                   iterations, seed, evaluate);
}

void write_metrics_csv(std::span<const IterationMetrics> metrics, std::ostream& out) {
    out << kMetricsSchema << '\n';
    out << "iter,exact_or_sampled_J,total_reward,basic_reward,addon_reward,entropy,grad_norm\n";
    out << std::setprecision(17);
    for (const auto& m : metrics) {
        out << m.iteration << ',' << m.objective << ',' << m.total_reward << ',' << m.basic_reward
            << ',' << m.addon_reward << ',' << m.entropy << ',' << m.grad_norm << '\n';
    }
}

}  // namespace rpg
