#include "rpg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"

namespace rpg {

std::vector<double> DiscretePolicy::log_probs(std::size_t s) const {
    std::vector<double> out(num_actions());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = log_prob(s, a);
    return out;
}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(std::size_t num_states, std::size_t num_actions)
    : logits_(num_states, num_actions, 0.0) {
    if (num_states == 0 || num_actions == 0) throw DimensionError("empty softmax policy");
}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(Table logits) : logits_(std::move(logits)) {
    for (double x : logits_.values()) {
        if (!std::isfinite(x)) throw ParameterError("softmax logits must be finite");
    }
}

TabularSoftmaxPolicy TabularSoftmaxPolicy::from_log_policy(const LogPolicyTable& prior) {
    Table logits = prior.log_probs();
    for (double& x : logits.values()) x = std::max(x, kMinLogit);
    return TabularSoftmaxPolicy(std::move(logits));
}

double TabularSoftmaxPolicy::log_prob(std::size_t s, std::size_t a) const {
    return logits_(s, a) - log_sum_exp(logits_.row(s));
}

std::vector<double> TabularSoftmaxPolicy::log_probs(std::size_t s) const {
    return log_softmax(logits_.row(s));
}

std::vector<double> TabularSoftmaxPolicy::probabilities(std::size_t s) const {
    return softmax(logits_.row(s));
}

double TabularSoftmaxPolicy::entropy(std::size_t s) const {
    const auto lp = log_probs(s);
    double h = 0.0;
    for (double x : lp) {
        const double p = std::exp(x);
        if (p > 0.0) h -= p * x;
    }
    return h;
}

std::vector<double> TabularSoftmaxPolicy::grad_log_prob(std::size_t s, std::size_t a) const {
    std::vector<double> g(num_parameters(), 0.0);
    accumulate_grad_log_prob(s, a, 1.0, g);
    return g;
}

void TabularSoftmaxPolicy::accumulate_grad_log_prob(std::size_t s, std::size_t a, double scale,
                                                    std::span<double> grad) const {
    const auto p = probabilities(s);
    const std::size_t base = s * num_actions();
    for (std::size_t b = 0; b < p.size(); ++b) grad[base + b] -= scale * p[b];
    grad[base + a] += scale;
}

void TabularSoftmaxPolicy::accumulate_grad_entropy(std::size_t s, double scale,
                                                   std::span<double> grad) const {
    const auto lp = log_probs(s);
    double h = 0.0;
    for (double x : lp) h -= std::exp(x) * x;
    const std::size_t base = s * num_actions();
    for (std::size_t b = 0; b < lp.size(); ++b) {
        grad[base + b] += scale * (-std::exp(lp[b]) * (lp[b] + h));
    }
}

LogPolicyTable TabularSoftmaxPolicy::to_log_policy() const {
    Table lp(num_states(), num_actions());
    for (std::size_t s = 0; s < num_states(); ++s) {
        const auto row = log_probs(s);
        std::copy(row.begin(), row.end(), lp.row(s).begin());
    }
    return LogPolicyTable::unchecked(std::move(lp));
}

DiagonalGaussianPolicy::DiagonalGaussianPolicy(std::size_t num_states, std::size_t action_dim,
                                               StdMode mode, double initial_log_std)
    : num_states_(num_states), dim_(action_dim), mode_(mode) {
    if (num_states == 0 || action_dim == 0) throw DimensionError("empty Gaussian policy");
    const std::size_t std_count = mode == StdMode::global ? dim_ : num_states_ * dim_;
    params_.assign(num_states_ * dim_ + std_count, 0.0);
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(num_states_ * dim_), params_.end(),
              initial_log_std);
}

std::size_t DiagonalGaussianPolicy::std_offset(std::size_t s) const {
    return num_states_ * dim_ + (mode_ == StdMode::global ? 0 : s * dim_);
}

std::span<const double> DiagonalGaussianPolicy::mean(std::size_t s) const {
    return {params_.data() + s * dim_, dim_};
}
std::span<double> DiagonalGaussianPolicy::mean(std::size_t s) {
    return {params_.data() + s * dim_, dim_};
}
std::span<const double> DiagonalGaussianPolicy::log_std(std::size_t s) const {
    return {params_.data() + std_offset(s), dim_};
}
std::span<double> DiagonalGaussianPolicy::log_std(std::size_t s) {
    return {params_.data() + std_offset(s), dim_};
}

double DiagonalGaussianPolicy::log_prob(std::size_t s, std::span<const double> action) const {
    if (action.size() != dim_) throw DimensionError("action dimension mismatch");
    const auto mu = mean(s);
    const auto ls = log_std(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double z = (action[i] - mu[i]) * std::exp(-ls[i]);
        acc += -0.5 * z * z - ls[i] - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return acc;
}

std::vector<double> DiagonalGaussianPolicy::grad_log_prob(std::size_t s,
                                                          std::span<const double> action) const {
    if (action.size() != dim_) throw DimensionError("action dimension mismatch");
    std::vector<double> g(params_.size(), 0.0);
    const auto mu = mean(s);
    const auto ls = log_std(s);
    for (std::size_t i = 0; i < dim_; ++i) {
        const double inv_var = std::exp(-2.0 * ls[i]);
        const double diff = action[i] - mu[i];
        g[s * dim_ + i] = diff * inv_var;
        g[std_offset(s) + i] = diff * diff * inv_var - 1.0;
    }
    return g;
}

double DiagonalGaussianPolicy::entropy(std::size_t s) const {
    const auto ls = log_std(s);
    double h = 0.0;
    for (double x : ls) h += x + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    return h;
}

std::vector<double> DiagonalGaussianPolicy::sample(std::size_t s, Rng& rng) const {
    const auto mu = mean(s);
    const auto ls = log_std(s);
    std::vector<double> a(dim_);
    for (std::size_t i = 0; i < dim_; ++i) a[i] = mu[i] + std::exp(ls[i]) * rng.normal();
    return a;
}

}  // namespace rpg
