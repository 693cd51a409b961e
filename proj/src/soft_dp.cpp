#include "rpg/soft_dp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpg/errors.hpp"
#include "rpg/numerics.hpp"

namespace rpg {

namespace {

void require_positive(double x, const char* name) {
    if (!(x > 0.0)) throw ParameterError(std::string(name) + " must be > 0");
}

// Sup-norm change between successive iterates; equal infinities count as no change.
double sup_change(const Table& a, const Table& b) {
    double worst = 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i] == bv[i]) continue;
        const double d = std::abs(av[i] - bv[i]);
        worst = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(worst, d);
    }
    return worst;
}

void check_discount(const TabularMdp& mdp, const SolveOptions& options) {
    if (mdp.discount() >= 1.0 && !options.horizon) {
        throw ParameterError("discount 1 requires a finite horizon");
    }
    if (options.horizon && *options.horizon < 0) throw ParameterError("horizon must be >= 0");
    if (!options.horizon) require_positive(options.tolerance, "tolerance");
}

// Generic fixed-point / finite-horizon driver over a backup operator.
template <typename Backup>
SoftSolution iterate(const TabularMdp& mdp, SoftQTable q, const SolveOptions& options,
                     Backup&& backup) {
    check_discount(mdp, options);
    SoftSolution out;
    if (options.horizon) {
        // The one-step table is the immediate reward itself (V_0 = 0), so an
        // H-step value collects exactly H rewards and H entropy bonuses.
        if (*options.horizon == 0) q.q = Table(mdp.num_states(), mdp.num_actions());
        double change = 0.0;
        for (int k = 1; k < *options.horizon; ++k) {
            SoftQTable next = backup(q);
            change = sup_change(next.q, q.q);
            q = std::move(next);
        }
        out.iterations = *options.horizon;
        out.residual = change;
    } else {
        double change = std::numeric_limits<double>::infinity();
        int it = 0;
        while (it < options.max_iterations) {
            SoftQTable next = backup(q);
            change = sup_change(next.q, q.q);
            q = std::move(next);
            ++it;
            if (change <= options.tolerance) break;
        }
        if (!(change <= options.tolerance)) {
            throw ConvergenceError("soft value iteration did not converge in " +
                                       std::to_string(options.max_iterations) +
                                       " sweeps (last change " + std::to_string(change) + ")",
                                   change);
        }
        out.iterations = it;
        out.residual = change;
    }
    // Zero steps to go is worth nothing, whatever the (all-zero) Q says.
    out.v = options.horizon == 0 ? SoftValueTable{std::vector<double>(mdp.num_states(), 0.0)}
                                 : soft_values(q);
    out.q = std::move(q);
    return out;
}

}  // namespace

SoftValueTable soft_values(const SoftQTable& q) {
    require_positive(q.entropy_coeff, "entropy coefficient");
    SoftValueTable v;
    v.v.resize(q.q.rows());
    for (std::size_t s = 0; s < q.q.rows(); ++s) v.v[s] = soft_maximum(q.q.row(s), q.entropy_coeff);
    return v;
}

SoftQTable soft_bellman_backup(const SoftQTable& q, const TabularMdp& mdp, double alpha) {
    require_positive(alpha, "alpha");
    require_shape(q.q, mdp.num_states(), mdp.num_actions(), "Q table");
    std::vector<double> v(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) v[s] = soft_maximum(q.q.row(s), alpha);
    SoftQTable out{Table(mdp.num_states(), mdp.num_actions()), alpha};
    const double g = mdp.discount();
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            out.q(s, a) = g == 0.0 ? mdp.reward(s, a) : mdp.reward(s, a) + g * mdp.expected_next(s, a, v);
        }
    }
    return out;
}

SoftSolution soft_value_iteration(const TabularMdp& mdp, double alpha, const SolveOptions& options) {
    require_positive(alpha, "alpha");
    SoftQTable init{mdp.reward(), alpha};
    return iterate(mdp, std::move(init), options,
                   [&](const SoftQTable& q) { return soft_bellman_backup(q, mdp, alpha); });
}

std::vector<SoftQTable> finite_horizon_soft_q(const TabularMdp& mdp, double alpha, int horizon) {
    require_positive(alpha, "alpha");
    if (horizon < 0) throw ParameterError("horizon must be >= 0");
    std::vector<SoftQTable> out;
    out.push_back({Table(mdp.num_states(), mdp.num_actions()), alpha});
    if (horizon >= 1) out.push_back({mdp.reward(), alpha});
    for (int k = 1; k < horizon; ++k) out.push_back(soft_bellman_backup(out.back(), mdp, alpha));
    return out;
}

LogPolicyTable boltzmann_policy(const SoftQTable& q, double alpha) {
    require_positive(alpha, "alpha");
    Table logp(q.q.rows(), q.q.cols());
    std::vector<double> scaled(q.q.cols());
    for (std::size_t s = 0; s < q.q.rows(); ++s) {
        for (std::size_t a = 0; a < q.q.cols(); ++a) scaled[a] = q.q(s, a) / alpha;
        const auto row = log_softmax(scaled);
        std::copy(row.begin(), row.end(), logp.row(s).begin());
    }
    return LogPolicyTable::unchecked(std::move(logp));
}

SoftQTable residual_soft_q_backup(const SoftQTable& q_r, const LogPolicyTable& prior,
                                  const Table& addon_reward, const TabularMdp& mdp,
                                  double omega_prime, double alpha_hat) {
    require_positive(alpha_hat, "alpha_hat");
    const std::size_t n = mdp.num_states();
    const std::size_t m = mdp.num_actions();
    require_shape(q_r.q, n, m, "residual Q table");
    require_shape(prior.log_probs(), n, m, "prior policy");
    require_shape(addon_reward, n, m, "add-on reward");
    std::vector<double> v(n);
    std::vector<double> row(m);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < m; ++a) row[a] = q_r.q(s, a) + scaled_log(omega_prime, prior(s, a));
        v[s] = soft_maximum(row, alpha_hat);
    }
    SoftQTable out{Table(n, m), alpha_hat};
    const double g = mdp.discount();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < m; ++a) {
            out.q(s, a) = g == 0.0 ? addon_reward(s, a)
                                   : addon_reward(s, a) + g * mdp.expected_next(s, a, v);
        }
    }
    return out;
}

SoftSolution residual_soft_q_iteration(const TabularMdp& mdp, const LogPolicyTable& prior,
                                       const Table& addon_reward, double omega_prime,
                                       double alpha_hat, const SolveOptions& options) {
    require_positive(alpha_hat, "alpha_hat");
    SoftQTable init{addon_reward, alpha_hat};
    auto sol = iterate(mdp, std::move(init), options, [&](const SoftQTable& q) {
        return residual_soft_q_backup(q, prior, addon_reward, mdp, omega_prime, alpha_hat);
    });
    return sol;
}

LogPolicyTable customized_policy_from_residual(const SoftQTable& q_r, const LogPolicyTable& prior,
                                               double omega_prime, double alpha_hat) {
    require_positive(alpha_hat, "alpha_hat");
    require_shape(prior.log_probs(), q_r.q.rows(), q_r.q.cols(), "prior policy");
    Table logp(q_r.q.rows(), q_r.q.cols());
    std::vector<double> logits(q_r.q.cols());
    const double k = omega_prime / alpha_hat;
    for (std::size_t s = 0; s < q_r.q.rows(); ++s) {
        for (std::size_t a = 0; a < q_r.q.cols(); ++a) {
            logits[a] = q_r.q(s, a) / alpha_hat + scaled_log(k, prior(s, a));
        }
        const auto row = log_softmax(logits);
        std::copy(row.begin(), row.end(), logp.row(s).begin());
    }
    return LogPolicyTable::unchecked(std::move(logp));
}

SoftQTable lemma1_transform(const SoftQTable& q, double alpha, double beta,
                            std::span<const double> offset) {
    require_positive(alpha, "alpha");
    require_positive(beta, "beta");
    if (offset.size() != q.q.rows()) throw DimensionError("lemma1_transform: offset size mismatch");
    SoftQTable out{Table(q.q.rows(), q.q.cols()), beta};
    for (std::size_t s = 0; s < q.q.rows(); ++s) {
        for (std::size_t a = 0; a < q.q.cols(); ++a) {
            out.q(s, a) = beta == alpha && offset[s] == 0.0 ? q.q(s, a)
                                                            : beta * (q.q(s, a) / alpha + offset[s]);
        }
    }
    return out;
}

Table lemma2_shaped_reward(const Table& r2, double alpha, double beta,
                           std::span<const double> potential, const TabularMdp& mdp) {
    require_positive(alpha, "alpha");
    require_positive(beta, "beta");
    require_shape(r2, mdp.num_states(), mdp.num_actions(), "reward");
    if (potential.size() != mdp.num_states()) {
        throw DimensionError("lemma2_shaped_reward: potential size mismatch");
    }
    const double g = mdp.discount();
    Table r1(r2.rows(), r2.cols());
    for (std::size_t s = 0; s < r2.rows(); ++s) {
        for (std::size_t a = 0; a < r2.cols(); ++a) {
            const double shaping = -alpha * (potential[s] - g * mdp.expected_next(s, a, potential));
            r1(s, a) = (alpha / beta) * r2(s, a) + shaping;
        }
    }
    return r1;
}

TemperatureRescaleResult temperature_rescale_check(const TabularMdp& mdp, double alpha,
                                                   double beta, double tol,
                                                   const SolveOptions& options) {
    require_positive(alpha, "alpha");
    require_positive(beta, "beta");
    const double ratio = alpha / beta;
    Table scaled = mdp.reward();
    for (double& x : scaled.values()) x *= ratio;
    const auto sol_beta = soft_value_iteration(mdp, beta, options);
    const auto sol_alpha = soft_value_iteration(mdp.with_reward(std::move(scaled)), alpha, options);

    TemperatureRescaleResult out;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            out.q_residual = std::max(out.q_residual,
                                      std::abs(sol_alpha.q.q(s, a) - ratio * sol_beta.q.q(s, a)));
        }
    }
    out.policy_residual =
        max_policy_tv(boltzmann_policy(sol_alpha.q, alpha), boltzmann_policy(sol_beta.q, beta));
    out.holds = out.q_residual <= tol && out.policy_residual <= tol;
    return out;
}

std::vector<double> soft_policy_evaluation(const TabularMdp& mdp, const LogPolicyTable& policy,
                                           double alpha, const SolveOptions& options) {
    if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
    check_discount(mdp, options);
    const std::size_t n = mdp.num_states();
    const std::size_t m = mdp.num_actions();
    require_shape(policy.log_probs(), n, m, "policy");
    // Immediate soft reward per state is policy-fixed; precompute it.
    std::vector<double> immediate(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < m; ++a) {
            const double p = std::exp(policy(s, a));
            if (p == 0.0) continue;
            immediate[s] += p * (mdp.reward(s, a) - alpha * policy(s, a));
        }
    }
    const double g = mdp.discount();
    std::vector<double> v(n, 0.0);
    std::vector<double> next(n);
    const int sweeps = options.horizon ? *options.horizon : options.max_iterations;
    double change = std::numeric_limits<double>::infinity();
    for (int it = 0; it < sweeps; ++it) {
        change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double acc = immediate[s];
            for (std::size_t a = 0; a < m; ++a) {
                const double p = std::exp(policy(s, a));
                if (p != 0.0) acc += g * p * mdp.expected_next(s, a, v);
            }
            next[s] = acc;
            change = std::max(change, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (!options.horizon && change <= options.tolerance) return v;
    }
    if (!options.horizon) {
        throw ConvergenceError("policy evaluation did not converge", change);
    }
    return v;
}

std::vector<double> discounted_occupancy(const TabularMdp& mdp, const LogPolicyTable& policy,
                                         std::size_t start_state, const SolveOptions& options) {
    check_discount(mdp, options);
    const std::size_t n = mdp.num_states();
    if (start_state >= n) throw LookupError("start state out of range");
    std::vector<double> dist(n, 0.0);
    dist[start_state] = 1.0;
    std::vector<double> occupancy(n, 0.0);
    const double g = mdp.discount();
    const int steps = options.horizon ? *options.horizon : options.max_iterations;
    double weight = 1.0;
    for (int t = 0; t < steps; ++t) {
        double mass = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            occupancy[s] += weight * dist[s];
            mass += dist[s];
        }
        if (!options.horizon && weight * mass <= options.tolerance * (1.0 - g)) break;
        std::vector<double> next(n, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            if (dist[s] == 0.0) continue;
            for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
                const double pa = dist[s] * std::exp(policy(s, a));
                if (pa == 0.0) continue;
                const auto row = mdp.transition(s, a);
                for (std::size_t sp = 0; sp < n; ++sp) next[sp] += pa * row[sp];
            }
        }
        dist.swap(next);
        weight *= g;
    }
    return occupancy;
}

}  // namespace rpg
