#include "rpg/mdp.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"

namespace rpg {

namespace {

std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(10) << x;
    return out.str();
}

}  // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions, Table reward,
                       std::vector<double> transition, double discount, std::vector<bool> terminal)
    : num_states_(num_states),
      num_actions_(num_actions),
      reward_(std::move(reward)),
      transition_(std::move(transition)),
      discount_(discount),
      terminal_(std::move(terminal)) {
    if (num_states_ == 0 || num_actions_ == 0) {
        throw DimensionError("MDP needs at least one state and one action");
    }
    require_shape(reward_, num_states_, num_actions_, "reward");
    if (transition_.size() != num_states_ * num_actions_ * num_states_) {
        throw DimensionError("transition kernel has " + std::to_string(transition_.size()) +
                             " entries, expected " +
                             std::to_string(num_states_ * num_actions_ * num_states_));
    }
    if (terminal_.size() != num_states_) {
        throw DimensionError("terminal mask has " + std::to_string(terminal_.size()) +
                             " entries, expected " + std::to_string(num_states_));
    }
}

double TabularMdp::expected_next(std::size_t s, std::size_t a,
                                 std::span<const double> values) const {
    const auto row = transition(s, a);
    double acc = 0.0;
    for (std::size_t sp = 0; sp < num_states_; ++sp) {
        if (row[sp] != 0.0) acc += row[sp] * values[sp];
    }
    return acc;
}

TabularMdp TabularMdp::with_reward(Table reward) const {
    return TabularMdp(num_states_, num_actions_, std::move(reward), transition_, discount_,
                      terminal_);
}

TabularMdp TabularMdp::with_terminal_mask(std::vector<bool> terminal) const {
    return TabularMdp(num_states_, num_actions_, reward_, transition_, discount_,
                      std::move(terminal));
}

std::vector<std::string> validate_mdp(const TabularMdp& mdp, std::optional<int> horizon) {
    std::vector<std::string> report;
    const double g = mdp.discount();
    if (!(g >= 0.0 && g <= 1.0)) {
        report.push_back("discount " + fmt(g) + " outside [0, 1]");
    } else if (g == 1.0 && !(horizon && *horizon > 0)) {
        report.push_back("discount 1 requires a finite horizon");
    }
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const auto row = mdp.transition(s, a);
            double sum = 0.0;
            bool negative = false;
            for (double p : row) {
                sum += p;
                negative = negative || p < 0.0 || std::isnan(p);
            }
            const std::string where = "state " + std::to_string(s) + " action " + std::to_string(a);
            if (negative) report.push_back(where + ": transition row has negative entries");
            if (!(std::abs(sum - 1.0) <= 1e-12)) {
                report.push_back(where + ": transition row sums to " + fmt(sum));
            }
            if (mdp.is_terminal(s)) {
                if (row[s] != 1.0) report.push_back(where + ": terminal state does not self-loop");
                if (mdp.reward(s, a) != 0.0) {
                    report.push_back(where + ": terminal reward nonzero (" + fmt(mdp.reward(s, a)) +
                                     ")");
                }
            }
        }
    }
    return report;
}

LogPolicyTable::LogPolicyTable(Table log_probs) : log_probs_(std::move(log_probs)) {
    for (double x : log_probs_.values()) {
        if (x > 0.0 || std::isnan(x)) throw ParameterError("log-probability entries must be <= 0");
    }
    auto report = normalization_report();
    if (!report.empty()) throw ParameterError("log-policy not normalized: " + report.front());
}

LogPolicyTable LogPolicyTable::unchecked(Table log_probs) {
    return LogPolicyTable(std::move(log_probs), Unchecked{});
}

LogPolicyTable LogPolicyTable::uniform(std::size_t num_states, std::size_t num_actions) {
    return LogPolicyTable(
        Table(num_states, num_actions, -std::log(static_cast<double>(num_actions))), Unchecked{});
}

std::vector<double> LogPolicyTable::probabilities(std::size_t s) const {
    std::vector<double> p(log_probs_.cols());
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = std::exp(log_probs_(s, a));
    return p;
}

std::vector<std::string> LogPolicyTable::normalization_report(double tol) const {
    std::vector<std::string> report;
    for (std::size_t s = 0; s < log_probs_.rows(); ++s) {
        double sum = 0.0;
        for (double x : log_probs_.row(s)) sum += std::exp(x);
        if (!(std::abs(sum - 1.0) <= tol)) {
            report.push_back("row " + std::to_string(s) + " sums to " + fmt(sum));
        }
    }
    return report;
}

double max_policy_tv(const LogPolicyTable& p, const LogPolicyTable& q) {
    require_shape(q.log_probs(), p.num_states(), p.num_actions(), "policy");
    double worst = 0.0;
    for (std::size_t s = 0; s < p.num_states(); ++s) {
        worst = std::max(worst, total_variation(p.probabilities(s), q.probabilities(s)));
    }
    return worst;
}

double CustomizationSpec::augment_coeff() const {
    return augment_override ? *augment_override : prior_weight * prior_entropy_coeff;
}

void CustomizationSpec::validate() const {
    if (!(prior_weight >= 0.0)) throw ParameterError("prior weight ω must be >= 0");
    if (!(prior_entropy_coeff > 0.0)) throw ParameterError("prior entropy coefficient α must be > 0");
    if (!(new_entropy_coeff > 0.0)) throw ParameterError("entropy coefficient α̂ must be > 0");
}

TabularMdp augment_mdp(const TabularMdp& mdp, const CustomizationSpec& spec,
                       const LogPolicyTable& prior) {
    require_shape(spec.addon_reward, mdp.num_states(), mdp.num_actions(), "add-on reward");
    require_shape(prior.log_probs(), mdp.num_states(), mdp.num_actions(), "prior policy");
    const double w = spec.augment_coeff();
    Table reward(mdp.num_states(), mdp.num_actions());
    std::vector<bool> terminal = mdp.terminal_mask();
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        bool zero_row = true;
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            reward(s, a) = spec.addon_reward(s, a) + scaled_log(w, prior(s, a));
            zero_row = zero_row && reward(s, a) == 0.0;
        }
        if (!zero_row) terminal[s] = false;
    }
    return TabularMdp(mdp.num_states(), mdp.num_actions(), std::move(reward),
                      {mdp.transition_kernel().begin(), mdp.transition_kernel().end()},
                      mdp.discount(), std::move(terminal));
}

}  // namespace rpg
