#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpg/table.hpp"

namespace rpg {

/// Finite MDP with a dense reward table and transition kernel.
///
/// The constructor only checks shapes; the semantic invariants (stochastic
/// rows, absorbing zero-reward terminals, discount range) are reported by
/// validate_mdp so that malformed models can still be inspected.
class TabularMdp {
public:
    /// `transition` is row-major over (state, action, next_state).
    TabularMdp(std::size_t num_states, std::size_t num_actions, Table reward,
               std::vector<double> transition, double discount, std::vector<bool> terminal);

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    double discount() const noexcept { return discount_; }

    const Table& reward() const noexcept { return reward_; }
    double reward(std::size_t s, std::size_t a) const { return reward_(s, a); }

    /// p(. | s, a) as a span over next states.
    std::span<const double> transition(std::size_t s, std::size_t a) const {
        return {transition_.data() + (s * num_actions_ + a) * num_states_, num_states_};
    }
    std::span<const double> transition_kernel() const noexcept { return transition_; }

    bool is_terminal(std::size_t s) const { return terminal_[s]; }
    const std::vector<bool>& terminal_mask() const noexcept { return terminal_; }

    /// sum_{s'} p(s'|s,a) * values[s'].
    double expected_next(std::size_t s, std::size_t a, std::span<const double> values) const;

    /// Same kernel, discount and terminal mask with a different reward table.
    TabularMdp with_reward(Table reward) const;
    TabularMdp with_terminal_mask(std::vector<bool> terminal) const;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    Table reward_;
    std::vector<double> transition_;
    double discount_;
    std::vector<bool> terminal_;
};

/// Human-readable list of violated invariants; empty iff the MDP is valid.
/// A discount of exactly 1 is accepted only when `horizon` is supplied.
std::vector<std::string> validate_mdp(const TabularMdp& mdp,
                                      std::optional<int> horizon = std::nullopt);

/// Natural-log policy table, one row per state.
class LogPolicyTable {
public:
    /// Throws ParameterError unless every row exponentiates to a distribution
    /// (within 1e-9) and no entry is positive.
    explicit LogPolicyTable(Table log_probs);

    /// Skips the normalization check. Only for fault-injection and diagnostics.
    static LogPolicyTable unchecked(Table log_probs);
    static LogPolicyTable uniform(std::size_t num_states, std::size_t num_actions);

    std::size_t num_states() const noexcept { return log_probs_.rows(); }
    std::size_t num_actions() const noexcept { return log_probs_.cols(); }
    const Table& log_probs() const noexcept { return log_probs_; }
    double operator()(std::size_t s, std::size_t a) const { return log_probs_(s, a); }
    std::span<const double> row(std::size_t s) const { return log_probs_.row(s); }
    std::vector<double> probabilities(std::size_t s) const;

    /// One message per row whose probabilities do not sum to 1 within `tol`.
    std::vector<std::string> normalization_report(double tol = 1e-9) const;

private:
    struct Unchecked {};
    LogPolicyTable(Table log_probs, Unchecked) : log_probs_(std::move(log_probs)) {}
    Table log_probs_;
};

/// Maximum over states of the total-variation distance between two policies.
double max_policy_tv(const LogPolicyTable& p, const LogPolicyTable& q);

/// Inputs of a policy-customization task: the add-on reward r_R and the
/// weights that trade it off against the prior's implicit reward.
struct CustomizationSpec {
    Table addon_reward;
    double prior_weight = 1.0;         // ω
    double prior_entropy_coeff = 1.0;  // α
    double new_entropy_coeff = 1.0;    // α̂
    std::optional<double> augment_override;

    /// ω′: the override when present, otherwise ω·α.
    double augment_coeff() const;
    /// Throws ParameterError on ω < 0, α <= 0 or α̂ <= 0.
    void validate() const;
};

/// MDP with reward r_R(s,a) + ω′·log π(a|s) on the original kernel.
///
/// Terminal states whose augmented reward row is not identically zero are
/// returned as ordinary absorbing states (the terminal flag only marks the
/// zero-reward convention; dynamics are unchanged).
TabularMdp augment_mdp(const TabularMdp& mdp, const CustomizationSpec& spec,
                       const LogPolicyTable& prior);

}  // namespace rpg
