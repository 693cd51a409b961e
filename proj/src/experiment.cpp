#include "rpg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "rpg/errors.hpp"
#include "rpg/gradient.hpp"
#include "rpg/io.hpp"
#include "rpg/numerics.hpp"
#include "rpg/ppo.hpp"
#include "rpg/preference.hpp"
#include "rpg/rng.hpp"
#include "rpg/soft_dp.hpp"
#include "rpg/trajectory.hpp"

namespace rpg {

using nlohmann::json;

Environment build_environment(const ExperimentConfig& cfg) {
    const auto& e = cfg.env;
    switch (e.kind) {
        case EnvKind::gridworld: {
            auto spec = e.grid;
            if (cfg.coeffs.gamma) spec.gamma = *cfg.coeffs.gamma;
            auto grid = make_gridworld(spec);
            return {std::move(grid.mdp), std::move(grid.addon), e.start_state};
        }
        case EnvKind::chain: {
            auto mdp = make_chain(e.chain_length, e.slip, cfg.coeffs.gamma.value_or(e.gamma));
            Table addon(mdp.num_states(), mdp.num_actions());
            return {std::move(mdp), std::move(addon), e.start_state};
        }
        case EnvKind::random: {
            const double gamma = cfg.coeffs.gamma.value_or(e.gamma);
            auto mdp = make_random_mdp(e.num_states, e.num_actions, e.env_seed, e.reward_scale, gamma);
            Table addon = make_random_mdp(e.num_states, e.num_actions, ~e.env_seed, e.addon_scale, gamma).reward();
            return {std::move(mdp), std::move(addon), e.start_state};
        }
    }
    throw ParameterError("unknown environment kind");
}

LogPolicyTable build_prior(const ExperimentConfig& cfg, const Environment& env) {
    if (cfg.prior_checkpoint) {
        auto policy = load_checkpoint(*cfg.prior_checkpoint).to_log_policy();
        require_shape(policy.log_probs(), env.basic.num_states(), env.basic.num_actions(), "prior checkpoint");
        return policy;
    }
    const double alpha = cfg.coeffs.alpha.value_or(1.0);
    return boltzmann_policy(soft_value_iteration(env.basic, alpha).q, alpha);
}

CustomizationSpec customization_spec(const ExperimentConfig& cfg, const Environment& env) {
    CustomizationSpec spec;
    spec.addon_reward = env.addon;
    spec.prior_weight = cfg.coeffs.omega;
    spec.prior_entropy_coeff = cfg.coeffs.alpha.value_or(1.0);
    spec.new_entropy_coeff = cfg.coeffs.alpha_hat.value_or(spec.prior_entropy_coeff);
    spec.augment_override = cfg.coeffs.omega_prime;
    return spec;
}

SearchConfig search_config(const ExperimentConfig& cfg, const Environment& env) {
    SearchConfig sc;
    sc.flavor = cfg.method == Method::mcts_ucb      ? SearchFlavor::ucb
                : cfg.method == Method::mcts_residual ? SearchFlavor::residual
                                                      : SearchFlavor::maxent;
    sc.exploration_c = cfg.coeffs.exploration_c;
    sc.epsilon = cfg.coeffs.epsilon;
    sc.temperature = cfg.coeffs.tau;
    sc.prior_weight = cfg.coeffs.k;
    sc.max_iterations = cfg.mcts_iterations;
    sc.gamma = env.basic.discount();
    sc.max_depth = cfg.mcts_depth;
    if (sc.flavor == SearchFlavor::residual) sc.prior = build_prior(cfg, env);
    return sc;
}

json search_to_json(const SearchTree& tree, const SearchConfig& cfg) {
    json out;
    const auto& root = tree.root();
    if (!root.terminal && !root.children.empty()) {
        out["root_policy"] = extract_root_policy(tree, cfg);
        out["root_value"] = node_soft_value(tree, 0, cfg);
    } else {
        out["root_policy"] = json::array();
        out["root_value"] = 0.0;
    }
    out["root_complete"] = root.complete;
    out["nodes"] = tree.nodes.size();
    json depths = json::array();
    for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
        const auto& n = tree[i];
        const auto d = static_cast<std::size_t>(n.depth);
        while (depths.size() < d) depths.push_back(json::array());
        json entry = {{"node", i}, {"parent", n.parent}, {"state", n.state}, {"action", n.action},
                      {"visits", n.visit_count}, {"reward", n.reward}};
        entry["q"] = cfg.flavor == SearchFlavor::ucb && n.visit_count > 0 ? n.value / n.visit_count : n.value;
        depths[d - 1].push_back(entry);
    }
    out["depth_q"] = depths;
    return out;
}

namespace {

json metrics_json(const IterationMetrics& m) {
    return {{"objective", m.objective},
            {"total_reward", m.total_reward},
            {"basic_reward", m.basic_reward},
            {"addon_reward", m.addon_reward},
            {"entropy", m.entropy}};
}

std::string metrics_csv(const std::vector<IterationMetrics>& metrics) {
    std::ostringstream out;
    write_metrics_csv(metrics, out);
    return out.str();
}

Table total_reward(const Environment& env, double omega = 1.0) {
    Table t = env.basic.reward();
    for (std::size_t k = 0; k < t.size(); ++k) {
        t.values()[k] = omega * t.values()[k] + env.addon.values()[k];
    }
    return t;
}

}  // namespace

void run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Environment env = build_environment(cfg);
    const std::size_t start = env.start_state;
    const double alpha = cfg.coeffs.alpha.value_or(1.0);
    PpoParams ppo = cfg.ppo;
    ppo.start_state = start;

    IterationMetrics final_metrics;
    switch (cfg.method) {
        case Method::soft_vi: {
            const auto total = env.basic.with_reward(total_reward(env));
            const auto sol = soft_value_iteration(total, alpha);
            const auto policy = boltzmann_policy(sol.q, alpha);
            write_text_file(dir / "q.json", to_json(sol.q).dump(2) + "\n");
            write_text_file(dir / "policy.json", to_json(policy).dump(2) + "\n");
            save_checkpoint(dir / "checkpoint.json", TabularSoftmaxPolicy::from_log_policy(policy));
            final_metrics = evaluate_policy(env.basic, env.addon, alpha, policy, start);
            break;
        }
        case Method::residual_vi: {
            const auto prior = build_prior(cfg, env);
            const auto spec = customization_spec(cfg, env);
            spec.validate();
            const auto sol = residual_soft_q_iteration(env.basic, prior, spec.addon_reward,
                                                       spec.augment_coeff(), spec.new_entropy_coeff);
            const auto policy = customized_policy_from_residual(sol.q, prior, spec.augment_coeff(),
                                                                spec.new_entropy_coeff);
            write_text_file(dir / "q.json", to_json(sol.q).dump(2) + "\n");
            write_text_file(dir / "policy.json", to_json(policy).dump(2) + "\n");
            save_checkpoint(dir / "checkpoint.json", TabularSoftmaxPolicy::from_log_policy(policy));
            final_metrics = evaluate_policy(env.basic, env.addon, spec.new_entropy_coeff, policy, start);
            break;
        }
        case Method::soft_ppo: {
            const auto total = env.basic.with_reward(total_reward(env));
            TabularSoftmaxPolicy init(env.basic.num_states(), env.basic.num_actions());
            const auto init_log = init.to_log_policy();
            auto result = train_soft_ppo(total, std::move(init), alpha, ppo, cfg.iterations, seed, env.addon);
            write_text_file(dir / "metrics.csv", metrics_csv(result.metrics));
            save_checkpoint(dir / "checkpoint.json", result.policy);
            final_metrics = result.metrics.empty()
                                ? evaluate_policy(env.basic, env.addon, alpha, init_log, start)
                                : result.metrics.back();
            break;
        }
        case Method::residual_ppo:
        case Method::kl_ppo:
        case Method::greedy_ppo: {
            const auto prior = build_prior(cfg, env);
            const auto spec = customization_spec(cfg, env);
            const auto mode = cfg.method == Method::residual_ppo ? CustomizationMode::residual
                              : cfg.method == Method::kl_ppo     ? CustomizationMode::kl
                                                                 : CustomizationMode::greedy;
            auto result = train_residual_ppo(env.basic, prior, spec, ppo, cfg.iterations, seed, mode);
            write_text_file(dir / "metrics.csv", metrics_csv(result.metrics));
            save_checkpoint(dir / "checkpoint.json", result.policy);
            final_metrics = result.metrics.empty()
                                ? evaluate_policy(env.basic, env.addon, spec.new_entropy_coeff,
                                                  result.policy.to_log_policy(), start)
                                : result.metrics.back();
            break;
        }
        case Method::mcts_ucb:
        case Method::mcts_maxent:
        case Method::mcts_residual: {
            const SearchConfig sc = search_config(cfg, env);
            const MdpSearchModel model(env.basic);
            const auto tree = run_search(start, model, sc, seed);
            const auto plan = search_to_json(tree, sc);
            write_text_file(dir / "plan.json", plan.dump(2) + "\n");
            write_text_file(dir / "final.json",
                            json{{"root_value", plan["root_value"]}}.dump(2) + "\n");
            return;
        }
    }
    write_text_file(dir / "final.json", metrics_json(final_metrics).dump(2) + "\n");
}

void run_experiment(const ExperimentConfig& cfg) {
    require_valid(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    const auto dir_for = [&](std::uint64_t seed) {
        return cfg.output_dir / ("seed_" + std::to_string(seed));
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cfg.seeds.size())));
    if (jobs == 1) {
        for (auto seed : cfg.seeds) run_seed(cfg, seed, dir_for(seed));
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> workers;
            for (unsigned j = 0; j < jobs; ++j) {
                workers.emplace_back([&] {
                    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
                        try {
                            run_seed(cfg, cfg.seeds[i], dir_for(cfg.seeds[i]));
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                        }
                    }
                });
            }
        }
        if (failure) std::rethrow_exception(failure);
    }
    aggregate_summary(cfg.output_dir, cfg.seeds);
}

json aggregate_summary(const std::filesystem::path& output_dir,
                       const std::vector<std::uint64_t>& seeds) {
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    for (auto seed : seeds) {
        const json final_j = read_json_file(output_dir / ("seed_" + std::to_string(seed)) / "final.json");
        for (const auto& [key, value] : final_j.items()) {
            if (!value.is_number()) continue;
            auto it = std::find_if(columns.begin(), columns.end(),
                                   [&](const auto& c) { return c.first == key; });
            if (it == columns.end()) {
                columns.emplace_back(key, std::vector<double>{});
                it = std::prev(columns.end());
            }
            it->second.push_back(value.get<double>());
        }
    }
    json metrics = json::object();
    for (const auto& [key, values] : columns) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        const double std_dev = std::sqrt(var / static_cast<double>(values.size()));
        char text[96];
        std::snprintf(text, sizeof text, "%.4f ± %.4f", mean, std_dev);
        metrics[key] = {{"mean", mean}, {"std", std_dev}, {"n", values.size()}, {"values", values},
                        {"formatted", text}};
    }
    json summary = {{"seeds", seeds}, {"metrics", metrics}};
    write_text_file(output_dir / "summary.json", summary.dump(2) + "\n");
    return summary;
}

ToleranceProfile ToleranceProfile::uniform(double tol) {
    ToleranceProfile p;
    p.residual_equivalence = p.kl_decoupling = p.estimator_exactness = p.estimator_variants = tol;
    p.lemma1 = p.lemma2 = p.temperature_rescale = p.mcts_consistency = p.mcts_residual = tol;
    p.accumulation = p.dpo_decomposition = tol;
    return p;
}

bool VerificationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

json VerificationReport::to_json() const {
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name},
                       {"passed", c.passed},
                       {"residual", encode_real(c.residual)},
                       {"tolerance", encode_real(c.tolerance)},
                       {"detail", c.detail}});
    }
    return {{"passed", passed()}, {"checks", arr}};
}

namespace {

CheckResult make_check(std::string name, double residual, double tol, std::string detail = {}) {
    return {std::move(name), residual <= tol, residual, tol, std::move(detail)};
}

double max_tv(const LogPolicyTable& a, const LogPolicyTable& b) { return max_policy_tv(a, b); }

Table random_table(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
    Table t(rows, cols);
    for (double& x : t.values()) x = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

TabularSoftmaxPolicy random_policy(std::size_t s, std::size_t a, Rng& rng) {
    TabularSoftmaxPolicy p(s, a);
    for (double& x : p.parameters()) x = rng.normal();
    return p;
}

// Largest residual over 5 random MDPs, α = 0.5, ω = 1 and the given α̂.
CheckResult residual_family(const std::string& name, double alpha_hat_factor, double tol,
                            std::uint64_t base_seed) {
    double worst = 0.0;
    std::string detail;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto mdp = make_random_mdp(3 + i % 3, 2 + i % 3, base_seed + i);
        Rng rng(base_seed + i, 7);
        const double alpha = 0.5;
        CustomizationSpec spec;
        spec.addon_reward = random_table(mdp.num_states(), mdp.num_actions(), rng, 0.5);
        spec.prior_entropy_coeff = alpha;
        spec.new_entropy_coeff = alpha * alpha_hat_factor;
        if (alpha_hat_factor == 1.0) spec.augment_override = spec.new_entropy_coeff;
        const auto prior = boltzmann_policy(soft_value_iteration(mdp, alpha).q, alpha);
        const auto r = check_residual_equivalence(mdp, prior, spec, tol);
        if (r.residual >= worst) {
            worst = r.residual;
            detail = r.detail;
        }
    }
    return make_check(name, worst, tol, detail);
}

CheckResult estimator_exactness(double tol) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 3; ++i) {
        const auto mdp = make_random_mdp(3, 2, 100 + i, 1.0, 1.0);
        Rng rng(100 + i, 3);
        const auto policy = random_policy(3, 2, rng);
        const double alpha = 0.3;
        const int horizon = 3;
        const auto batch = enumerate_trajectories(mdp, policy, horizon, 0);
        EstimatorConfig ec;
        ec.alpha = alpha;
        const auto est = estimate_gradient(batch, policy, ec);
        const auto fd = exact_soft_gradient(mdp, policy, alpha, 1.0, horizon, 0);
        for (std::size_t k = 0; k < est.size(); ++k) {
            const double scale = std::max({std::abs(est[k]), std::abs(fd[k]), 1e-4});
            worst = std::max(worst, std::abs(est[k] - fd[k]) / scale);
        }
    }
    return make_check("soft_pg_exactness", worst, tol, "max relative error vs finite differences");
}

CheckResult estimator_variants(double tol) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 3; ++i) {
        const auto mdp = make_random_mdp(3, 3, 200 + i);
        Rng rng(200 + i, 5);
        const auto policy = random_policy(3, 3, rng);
        const double alpha = 0.7, gamma = 0.9;
        const auto batch = enumerate_trajectories(mdp, policy, 2, 0);
        auto expect = [&](EstimatorVariant v) {
            EstimatorConfig ec;
            ec.variant = v;
            ec.alpha = alpha;
            ec.gamma = gamma;
            return estimate_gradient(batch, policy, ec);
        };
        const auto soft = expect(EstimatorVariant::soft_pg);
        const auto repeat = expect(EstimatorVariant::repeat_entropy);
        const auto end = expect(EstimatorVariant::end_entropy);
        std::vector<double> d_repeat(soft.size(), 0.0), d_end(soft.size(), 0.0);
        for (std::size_t p = 0; p < batch.trajectories.size(); ++p) {
            const auto& st = batch.trajectories[p].steps;
            const double w = batch.weight(p);
            for (std::size_t t = 0; t < st.size(); ++t) {
                policy.accumulate_grad_log_prob(st[t].state, st[t].action, -w * alpha * st[t].log_prob, d_repeat);
                double later = 0.0, g = gamma;
                for (std::size_t u = t + 1; u < st.size(); ++u, g *= gamma) later += g * alpha * st[u].log_prob;
                policy.accumulate_grad_log_prob(st[t].state, st[t].action, w * later, d_end);
            }
        }
        for (std::size_t k = 0; k < soft.size(); ++k) {
            worst = std::max(worst, std::abs(repeat[k] - soft[k] - d_repeat[k]));
            worst = std::max(worst, std::abs(end[k] - soft[k] - d_end[k]));
        }
    }
    return make_check("estimator_variants", worst, tol, "max |E[variant] - E[soft_pg] - delta|");
}

CheckResult lemma1_check(double tol) {
    Rng rng(300);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double alpha = 0.1 + rng.uniform(), beta = 0.1 + 2.0 * rng.uniform();
        SoftQTable q{random_table(4, 3, rng, 2.0), alpha};
        std::vector<double> offset(4);
        for (double& c : offset) c = 2.0 * rng.uniform() - 1.0;
        const auto q2 = lemma1_transform(q, alpha, beta, offset);
        worst = std::max(worst, max_tv(boltzmann_policy(q, alpha), boltzmann_policy(q2, beta)));
    }
    return make_check("lemma1_policy_invariance", worst, tol, "max TV over 200 random tables");
}

CheckResult lemma2_check(double tol) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto mdp = make_random_mdp(4, 3, 400 + i);
        Rng rng(400 + i, 1);
        const double alpha = 0.4, beta = 1.3;
        std::vector<double> potential(mdp.num_states());
        for (double& c : potential) c = 2.0 * rng.uniform() - 1.0;
        const auto r1 = lemma2_shaped_reward(mdp.reward(), alpha, beta, potential, mdp);
        const auto p1 = boltzmann_policy(soft_value_iteration(mdp.with_reward(r1), alpha).q, alpha);
        const auto p2 = boltzmann_policy(soft_value_iteration(mdp, beta).q, beta);
        worst = std::max(worst, max_tv(p1, p2));
    }
    return make_check("lemma2_shaping", worst, tol, "max TV over 5 random MDPs");
}

CheckResult temperature_check(double tol) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto mdp = make_random_mdp(4, 3, 500 + i);
        const auto r = temperature_rescale_check(mdp, 0.3, 1.7, tol, SolveOptions{.tolerance = 1e-13, .max_iterations = 100000, .horizon = std::nullopt});
        worst = std::max({worst, r.q_residual, r.policy_residual});
    }
    return make_check("temperature_rescale", worst, tol, "max Q and policy residual");
}

// Node at depth d compares to the (D − d)-step soft Q of the tree-MDP.
double tree_consistency_residual(const TreeModel& tree, double tau, double gamma, std::uint64_t seed) {
    SearchConfig sc;
    sc.flavor = SearchFlavor::maxent;
    sc.temperature = tau;
    sc.gamma = gamma;
    sc.max_iterations = static_cast<int>(64 * tree.num_nodes());
    sc.epsilon = 0.5;  // uniform mixing reaches every subtree; final values ignore it
    const auto search = run_search(0, tree, sc, seed);
    if (!search.root().complete) return std::numeric_limits<double>::infinity();
    const auto qs = finite_horizon_soft_q(tree.to_mdp(gamma), tau, tree.depth());
    double worst = 0.0;
    for (std::size_t i = 1; i < search.nodes.size(); ++i) {
        const auto& n = search[i];
        const auto& parent = search[n.parent];
        const double oracle = qs[static_cast<std::size_t>(tree.depth() - parent.depth)].q(parent.state, n.action);
        worst = std::max(worst, std::abs(n.value - oracle));
    }
    const double root_oracle = soft_maximum(qs.back().q.row(0), tau);
    return std::max(worst, std::abs(node_soft_value(search, 0, sc) - root_oracle));
}

// Prior row of each tree state: the Boltzmann policy of its steps-to-go soft Q.
LogPolicyTable tree_soft_optimal_prior(const TreeModel& tree, double tau, double gamma) {
    const auto qs = finite_horizon_soft_q(tree.to_mdp(gamma), tau, tree.depth());
    Table logp(tree.num_nodes(), tree.num_actions());
    for (std::size_t s = 0; s < tree.num_nodes(); ++s) {
        const auto togo = static_cast<std::size_t>(tree.depth() - tree.depth_of(s));
        std::vector<double> row(tree.num_actions(), 0.0);
        for (std::size_t a = 0; a < row.size(); ++a) row[a] = qs[togo].q(s, a) / tau;
        const auto lp = log_softmax(row);
        std::copy(lp.begin(), lp.end(), logp.row(s).begin());
    }
    return LogPolicyTable(std::move(logp));
}

double residual_tree_residual(const TreeModel& tree, double tau, std::uint64_t seed) {
    SearchConfig sc;
    sc.flavor = SearchFlavor::residual;
    sc.temperature = tau;
    sc.prior_weight = 1.0;
    sc.prior = tree_soft_optimal_prior(tree, tau, 1.0);
    sc.max_iterations = static_cast<int>(64 * tree.num_nodes());
    sc.epsilon = 0.5;  // uniform mixing reaches every subtree; final values ignore it
    const auto zero = tree.with_rewards(std::vector<double>(tree.num_nodes(), 0.0));
    const auto search = run_search(0, zero, sc, seed);
    const auto root = extract_root_policy(search, sc);
    return total_variation(root, sc.prior->probabilities(0));
}

CheckResult dpo_check(double tol) {
    Rng rng(600);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        PreferenceExample ex;
        ex.logp_theta_w = -5.0 * rng.uniform();
        ex.logp_theta_l = -5.0 * rng.uniform();
        ex.logp_prior_w = -5.0 * rng.uniform();
        ex.logp_prior_l = -5.0 * rng.uniform();
        ex.beta = 0.05 + 2.0 * rng.uniform();
        ex.alpha_hat = ex.omega_prime = ex.beta;
        worst = std::max(worst, std::abs(decomposed_dpo_loss(ex) - dpo_loss(ex)));
    }
    return make_check("dpo_decomposition", worst, tol, "max |decomposed - dpo| over 500 examples");
}

}  // namespace

CheckResult check_residual_equivalence(const TabularMdp& mdp, const LogPolicyTable& prior,
                                       const CustomizationSpec& spec, double tol) {
    spec.validate();
    std::string detail;
    for (const auto& msg : prior.normalization_report()) {
        detail += (detail.empty() ? "prior " : "; prior ") + msg;
    }
    const double wp = spec.augment_coeff(), ah = spec.new_entropy_coeff;
    const auto residual = residual_soft_q_iteration(mdp, prior, spec.addon_reward, wp, ah);
    const auto customized = customized_policy_from_residual(residual.q, prior, wp, ah);
    Table total = mdp.reward();
    for (std::size_t k = 0; k < total.size(); ++k) {
        total.values()[k] = spec.prior_weight * total.values()[k] + spec.addon_reward.values()[k];
    }
    const auto full = boltzmann_policy(soft_value_iteration(mdp.with_reward(std::move(total)), ah).q, ah);
    double worst = 0.0;
    std::size_t worst_state = 0;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const double tv = total_variation(customized.probabilities(s), full.probabilities(s));
        if (tv > worst) {
            worst = tv;
            worst_state = s;
        }
    }
    if (detail.empty()) detail = "max TV at state " + std::to_string(worst_state);
    auto out = make_check("residual_equivalence", worst, tol, detail);
    if (!prior.normalization_report().empty()) out.passed = false;
    return out;
}

VerificationReport verify_all(const ToleranceProfile& profile) {
    VerificationReport report;
    report.checks.push_back(residual_family("residual_equivalence", 0.6, profile.residual_equivalence, 10));
    report.checks.push_back(residual_family("kl_decoupling", 1.0, profile.kl_decoupling, 50));
    report.checks.push_back(estimator_exactness(profile.estimator_exactness));
    report.checks.push_back(estimator_variants(profile.estimator_variants));
    report.checks.push_back(lemma1_check(profile.lemma1));
    report.checks.push_back(lemma2_check(profile.lemma2));
    report.checks.push_back(temperature_check(profile.temperature_rescale));

    double mcts = 0.0, mcts_res = 0.0, acc = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto tree = TreeModel::random(1 + static_cast<int>(i % 3), 2 + i % 2, 700 + i);
        mcts = std::max(mcts, tree_consistency_residual(tree, 0.5 + 0.25 * static_cast<double>(i), i % 2 ? 0.9 : 1.0, i));
        mcts_res = std::max(mcts_res, residual_tree_residual(tree, 0.8, i));
        const auto acc_tree = TreeModel::random(2, 2 + i % 2, 800 + i);
        const auto r = accumulation_equivalence_check(acc_tree, 0.7, i);
        acc = std::max({acc, r.policy_residual, r.value_residual});
    }
    report.checks.push_back(make_check("mcts_soft_consistency", mcts, profile.mcts_consistency,
                                       "max |Q_mcts - Q_dp| over 5 trees"));
    report.checks.push_back(make_check("mcts_residual_prior", mcts_res, profile.mcts_residual,
                                       "root TV to the soft-optimal prior, r_R = 0"));
    report.checks.push_back(make_check("accumulation_equivalence", acc, profile.accumulation,
                                       "max policy TV / value offset over 5 depth-2 trees"));
    report.checks.push_back(dpo_check(profile.dpo_decomposition));
    return report;
}

}  // namespace rpg
