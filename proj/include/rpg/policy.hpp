#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpg/mdp.hpp"
#include "rpg/rng.hpp"
#include "rpg/table.hpp"

namespace rpg {

/// Stochastic policy over a finite action set.
class DiscretePolicy {
public:
    virtual ~DiscretePolicy() = default;
    virtual std::size_t num_states() const = 0;
    virtual std::size_t num_actions() const = 0;
    virtual double log_prob(std::size_t s, std::size_t a) const = 0;
    /// Normalized log-probabilities of row s.
    virtual std::vector<double> log_probs(std::size_t s) const;
};

/// Fixed (non-parametric) policy backed by a log-policy table.
class TablePolicy final : public DiscretePolicy {
public:
    explicit TablePolicy(LogPolicyTable table) : table_(std::move(table)) {}
    std::size_t num_states() const override { return table_.num_states(); }
    std::size_t num_actions() const override { return table_.num_actions(); }
    double log_prob(std::size_t s, std::size_t a) const override { return table_(s, a); }
    const LogPolicyTable& table() const noexcept { return table_; }

private:
    LogPolicyTable table_;
};

/// π_θ(a|s) = softmax(θ[s])[a] with one logit per state-action pair.
class TabularSoftmaxPolicy final : public DiscretePolicy {
public:
    TabularSoftmaxPolicy(std::size_t num_states, std::size_t num_actions);
    explicit TabularSoftmaxPolicy(Table logits);

    /// Logits equal to the prior's log-probabilities; -inf entries are
    /// clamped to kMinLogit so that the parameters stay finite.
    static TabularSoftmaxPolicy from_log_policy(const LogPolicyTable& prior);
    static constexpr double kMinLogit = -1e3;

    std::size_t num_states() const override { return logits_.rows(); }
    std::size_t num_actions() const override { return logits_.cols(); }
    double log_prob(std::size_t s, std::size_t a) const override;
    std::vector<double> log_probs(std::size_t s) const override;
    std::vector<double> probabilities(std::size_t s) const;
    double entropy(std::size_t s) const;

    /// ∇_θ log π(a|s): e_a − π(·|s) on row s, zero elsewhere.
    std::vector<double> grad_log_prob(std::size_t s, std::size_t a) const;
    void accumulate_grad_log_prob(std::size_t s, std::size_t a, double scale,
                                  std::span<double> grad) const;
    /// ∇_θ H(π(·|s)) on row s: −π_a·(log π_a + H).
    void accumulate_grad_entropy(std::size_t s, double scale, std::span<double> grad) const;

    std::size_t num_parameters() const noexcept { return logits_.size(); }
    std::span<const double> parameters() const noexcept { return logits_.values(); }
    std::span<double> parameters() noexcept { return logits_.values(); }
    const Table& logits() const noexcept { return logits_; }

    LogPolicyTable to_log_policy() const;

private:
    Table logits_;
};

/// Diagonal Gaussian policy over R^d with a tabular (per-state) mean.
///
/// Parameters are laid out as [means: states x d][log_std], where log_std is a
/// single d-vector in global mode or states x d in per-state mode.
class DiagonalGaussianPolicy {
public:
    enum class StdMode { global, per_state };

    DiagonalGaussianPolicy(std::size_t num_states, std::size_t action_dim,
                           StdMode mode = StdMode::global, double initial_log_std = 0.0);

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t action_dim() const noexcept { return dim_; }
    StdMode std_mode() const noexcept { return mode_; }

    std::span<const double> mean(std::size_t s) const;
    std::span<double> mean(std::size_t s);
    std::span<const double> log_std(std::size_t s) const;
    std::span<double> log_std(std::size_t s);

    double log_prob(std::size_t s, std::span<const double> action) const;
    std::vector<double> grad_log_prob(std::size_t s, std::span<const double> action) const;
    /// Σ_i (log σ_i + ½·log(2πe)).
    double entropy(std::size_t s) const;
    std::vector<double> sample(std::size_t s, Rng& rng) const;

    std::size_t num_parameters() const noexcept { return params_.size(); }
    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }

private:
    std::size_t std_offset(std::size_t s) const;

    std::size_t num_states_;
    std::size_t dim_;
    StdMode mode_;
    std::vector<double> params_;
};

}  // namespace rpg
