#include "rpg/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"
#include "rpg/rng.hpp"

namespace rpg {

double TrajectoryBatch::weight(std::size_t i) const {
    if (mode == BatchMode::enumerated) return trajectories[i].path_probability.value_or(0.0);
    return 1.0 / static_cast<double>(trajectories.size());
}

namespace {

void check_policy_shape(const TabularMdp& mdp, const DiscretePolicy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
        throw DimensionError("policy shape does not match the MDP");
    }
}

Trajectory rollout(const TabularMdp& mdp, const DiscretePolicy& policy, int horizon,
                   std::size_t start, Rng& rng) {
    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(horizon));
    std::size_t s = start;
    std::vector<double> probs(mdp.num_actions());
    for (int t = 0; t < horizon; ++t) {
        const auto lp = policy.log_probs(s);
        for (std::size_t a = 0; a < probs.size(); ++a) probs[a] = std::exp(lp[a]);
        const std::size_t a = rng.categorical(probs);
        traj.steps.push_back({s, a, mdp.reward(s, a), lp[a]});
        s = rng.categorical(mdp.transition(s, a));
    }
    traj.final_state = s;
    return traj;
}

}  // namespace

TrajectoryBatch sample_trajectories(const TabularMdp& mdp, const DiscretePolicy& policy,
                                    int horizon, int count, std::uint64_t seed,
                                    const SamplingOptions& options) {
    if (count < 1) throw ParameterError("trajectory count must be >= 1");
    if (horizon < 1) throw ParameterError("horizon must be >= 1");
    if (options.start_state >= mdp.num_states()) throw LookupError("start state out of range");
    check_policy_shape(mdp, policy);

    TrajectoryBatch batch;
    batch.mode = BatchMode::sampled;
    batch.rng_seed = seed;
    batch.trajectories.resize(static_cast<std::size_t>(count));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(seed, i);
            batch.trajectories[i] = rollout(mdp, policy, horizon, options.start_state, rng);
        }
    };
    const std::size_t n = batch.trajectories.size();
    const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, n);
    if (workers == 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }
    return batch;
}

TrajectoryBatch enumerate_trajectories(const TabularMdp& mdp, const DiscretePolicy& policy,
                                       int horizon, std::size_t start_state, std::size_t budget) {
    if (horizon < 1) throw ParameterError("horizon must be >= 1");
    if (start_state >= mdp.num_states()) throw LookupError("start state out of range");
    check_policy_shape(mdp, policy);

    TrajectoryBatch batch;
    batch.mode = BatchMode::enumerated;
    std::vector<Step> prefix;
    prefix.reserve(static_cast<std::size_t>(horizon));

    // Depth-first over (action, next-state) branches with nonzero probability.
    auto recurse = [&](auto&& self, std::size_t s, double prob) -> void {
        if (prefix.size() == static_cast<std::size_t>(horizon)) {
            if (batch.trajectories.size() >= budget) {
                throw BudgetError("trajectory enumeration exceeds budget of " +
                                  std::to_string(budget) + " paths");
            }
            batch.trajectories.push_back({prefix, s, prob});
            return;
        }
        const auto lp = policy.log_probs(s);
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double pa = std::exp(lp[a]);
            if (pa == 0.0) continue;
            const auto row = mdp.transition(s, a);
            prefix.push_back({s, a, mdp.reward(s, a), lp[a]});
            for (std::size_t sp = 0; sp < mdp.num_states(); ++sp) {
                if (row[sp] == 0.0) continue;
                self(self, sp, prob * pa * row[sp]);
            }
            prefix.pop_back();
        }
    };
    recurse(recurse, start_state, 1.0);
    return batch;
}

double soft_return(const Trajectory& traj, double alpha, double gamma, std::size_t from_step) {
    if (from_step >= traj.steps.size()) throw LookupError("from_step beyond trajectory horizon");
    double acc = 0.0;
    double discount = 1.0;
    for (std::size_t t = from_step; t < traj.steps.size(); ++t) {
        const auto& st = traj.steps[t];
        acc += discount * (st.reward - scaled_log(alpha, st.log_prob));
        discount *= gamma;
    }
    return acc;
}

double RewardModel::entropy_coeff() const {
    return mode == RewardMode::plain ? 0.0 : alpha;
}

double RewardModel::augmented(const Step& step) const {
    switch (mode) {
        case RewardMode::plain:
        case RewardMode::spg:
            return step.reward;
        case RewardMode::rpg:
        case RewardMode::kl: {
            if (!prior) throw ParameterError("rpg/kl reward modes need a prior policy");
            const double w = mode == RewardMode::kl ? alpha : omega_prime;
            return step.reward + scaled_log(w, (*prior)(step.state, step.action));
        }
    }
    return step.reward;
}

double RewardModel::operator()(const Step& step) const {
    return augmented(step) - scaled_log(entropy_coeff(), step.log_prob);
}

AdvantageTable compute_advantages(const TrajectoryBatch& batch, std::span<const double> baseline,
                                  const RewardModel& reward, double gamma, double lambda) {
    auto value = [&](std::size_t s) {
        if (s >= baseline.size()) {
            throw LookupError("baseline has no entry for state " + std::to_string(s));
        }
        return baseline[s];
    };
    AdvantageTable out;
    out.reserve(batch.trajectories.size());
    for (const auto& traj : batch.trajectories) {
        const std::size_t h = traj.steps.size();
        std::vector<double> adv(h);
        double running = 0.0;
        for (std::size_t k = h; k-- > 0;) {
            const auto& st = traj.steps[k];
            const std::size_t next = k + 1 < h ? traj.steps[k + 1].state : traj.final_state;
            const double v_next = gamma == 0.0 ? 0.0 : gamma * value(next);
            const double delta = reward(st) + v_next - value(st.state);
            running = delta + (k + 1 < h ? gamma * lambda * running : 0.0);
            adv[k] = running;
        }
        out.push_back(std::move(adv));
    }
    return out;
}

void write_batch_csv(const TrajectoryBatch& batch, std::ostream& out) {
    out << "episode,t,s,a,r,log_prob\n";
    out << std::setprecision(17);
    for (std::size_t e = 0; e < batch.trajectories.size(); ++e) {
        const auto& steps = batch.trajectories[e].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            out << e << ',' << t << ',' << steps[t].state << ',' << steps[t].action << ','
                << steps[t].reward << ',' << steps[t].log_prob << '\n';
        }
    }
}

}  // namespace rpg
