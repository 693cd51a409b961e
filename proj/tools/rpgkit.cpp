#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpg/config.hpp"
#include "rpg/errors.hpp"
#include "rpg/experiment.hpp"
#include "rpg/io.hpp"
#include "rpg/preference.hpp"
#include "rpg/soft_dp.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;

using nlohmann::json;

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<double> alpha, alpha_hat, omega_prime, gamma;
    unsigned jobs = 0;
};

rpg::ExperimentConfig load(const GlobalFlags& g, rpg::Method fallback) {
    rpg::ExperimentConfig cfg;
    if (!g.config.empty()) {
        cfg = rpg::load_config(g.config);
    } else {
        cfg.method = fallback;
        cfg.coeffs.alpha = 0.1;
        cfg.coeffs.alpha_hat = 0.1;
        cfg.iterations = 60;
    }
    if (g.seed) cfg.seeds = {*g.seed};
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (g.alpha) cfg.coeffs.alpha = *g.alpha;
    if (g.alpha_hat) cfg.coeffs.alpha_hat = *g.alpha_hat;
    if (g.omega_prime) cfg.coeffs.omega_prime = *g.omega_prime;
    if (g.gamma) cfg.coeffs.gamma = *g.gamma;
    if (g.jobs > 0) cfg.jobs = g.jobs;
    return cfg;
}

int run(rpg::ExperimentConfig cfg, std::optional<rpg::Method> method) {
    if (method) cfg.method = *method;
    rpg::require_valid(cfg);
    rpg::run_experiment(cfg);
    std::cout << rpg::read_json_file(cfg.output_dir / "summary.json").dump(2) << "\n";
    return kOk;
}

rpg::Method parse_method(const std::string& name) {
    auto m = rpg::method_from_string(name);
    if (!m) throw rpg::ConfigError({"method: unknown method \"" + name + "\""});
    return *m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum-entropy RL and policy customization toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    GlobalFlags g;
    app.add_option("--config", g.config, "TOML experiment config")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Run this single seed instead of the config's list");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--alpha", g.alpha, "Entropy coefficient of the prior / soft task");
    app.add_option("--alpha-hat", g.alpha_hat, "Entropy coefficient of the customized policy");
    app.add_option("--omega-prime", g.omega_prime, "Prior augmentation coefficient");
    app.add_option("--gamma", g.gamma, "Discount override");
    app.add_option("--jobs", g.jobs, "Seeds run concurrently");

    std::string solve_method = "soft_vi";
    auto* solve = app.add_subcommand("solve", "Soft or residual value iteration");
    solve->add_option("--method", solve_method)->check(CLI::IsMember({"soft_vi", "residual_vi"}));

    std::string train_method;
    std::optional<int> train_iters;
    auto* train = app.add_subcommand("train", "PPO variants");
    train->add_option("--method", train_method)
        ->check(CLI::IsMember({"soft_ppo", "residual_ppo", "kl_ppo", "greedy_ppo"}));
    train->add_option("--iterations", train_iters);

    std::string mode = "residual";
    std::optional<int> custom_iters;
    auto* customize = app.add_subcommand("customize", "Customize the prior toward the add-on reward");
    customize->add_option("--mode", mode)->check(CLI::IsMember({"residual", "kl", "greedy", "vi"}));
    customize->add_option("--iterations", custom_iters);

    std::string flavor = "maxent";
    std::optional<double> tau, k, epsilon;
    std::optional<int> iters, depth;
    std::optional<int> tree_depth;
    std::size_t branching = 2;
    std::uint64_t tree_seed = 0;
    auto* plan = app.add_subcommand("plan", "Tree search from the start state");
    plan->add_option("--flavor", flavor)->check(CLI::IsMember({"ucb", "maxent", "residual"}));
    plan->add_option("--tau", tau);
    plan->add_option("--k", k);
    plan->add_option("--epsilon", epsilon);
    plan->add_option("--iters", iters);
    plan->add_option("--depth", depth, "Search depth limit");
    plan->add_option("--tree-depth", tree_depth, "Plan on a random tree of this depth instead");
    plan->add_option("--branching", branching);
    plan->add_option("--tree-seed", tree_seed);

    std::optional<double> tolerance;
    std::optional<std::size_t> corrupt_row;
    auto* verify = app.add_subcommand("verify", "Run every oracle check");
    verify->add_option("--tolerance", tolerance, "Use one tolerance for every check");
    verify->add_option("--corrupt-prior-row", corrupt_row,
                       "Scale this prior row to sum to 0.9 and run the residual-equivalence check");

    std::string loss_input, loss_kind = "all";
    auto* losses = app.add_subcommand("losses", "Evaluate preference losses");
    losses->add_option("--input", loss_input, "JSON array of preference examples")
        ->required()
        ->check(CLI::ExistingFile);
    losses->add_option("--loss", loss_kind)->check(CLI::IsMember({"dpo", "cross_entropy", "decomposed", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*solve) {
            const auto m = parse_method(solve_method);
            return run(load(g, m), m);
        }
        if (*train) {
            auto cfg = load(g, rpg::Method::residual_ppo);
            if (train_iters) cfg.iterations = *train_iters;
            std::optional<rpg::Method> m;
            if (!train_method.empty()) m = parse_method(train_method);
            return run(cfg, m);
        }
        if (*customize) {
            auto cfg = load(g, rpg::Method::residual_ppo);
            if (custom_iters) cfg.iterations = *custom_iters;
            const auto m = mode == "vi" ? rpg::Method::residual_vi : parse_method(mode + "_ppo");
            return run(cfg, m);
        }
        if (*plan) {
            auto cfg = load(g, rpg::Method::mcts_maxent);
            cfg.method = parse_method("mcts_" + flavor);
            if (tau) cfg.coeffs.tau = *tau;
            if (k) cfg.coeffs.k = *k;
            if (epsilon) cfg.coeffs.epsilon = *epsilon;
            if (iters) cfg.mcts_iterations = *iters;
            if (depth) cfg.mcts_depth = *depth;
            const std::uint64_t seed = cfg.seeds.front();
            json out;
            if (tree_depth) {
                const auto tree = rpg::TreeModel::random(*tree_depth, branching, tree_seed);
                rpg::SearchConfig sc;
                sc.flavor = cfg.method == rpg::Method::mcts_ucb       ? rpg::SearchFlavor::ucb
                            : cfg.method == rpg::Method::mcts_residual ? rpg::SearchFlavor::residual
                                                                       : rpg::SearchFlavor::maxent;
                sc.exploration_c = cfg.coeffs.exploration_c;
                sc.epsilon = cfg.coeffs.epsilon;
                sc.temperature = cfg.coeffs.tau;
                sc.prior_weight = cfg.coeffs.k;
                sc.max_iterations = cfg.mcts_iterations;
                sc.gamma = cfg.coeffs.gamma.value_or(1.0);
                if (sc.flavor == rpg::SearchFlavor::residual) {
                    sc.prior = rpg::LogPolicyTable::uniform(tree.num_nodes(), tree.num_actions());
                }
                out = rpg::search_to_json(rpg::run_search(0, tree, sc, seed), sc);
            } else {
                rpg::require_valid(cfg);
                const auto env = rpg::build_environment(cfg);
                const auto sc = rpg::search_config(cfg, env);
                const rpg::MdpSearchModel model(env.basic);
                out = rpg::search_to_json(rpg::run_search(env.start_state, model, sc, seed), sc);
            }
            std::cout << out.dump(2) << "\n";
            if (!g.out.empty()) rpg::write_text_file(std::filesystem::path(g.out) / "plan.json", out.dump(2) + "\n");
            return kOk;
        }
        if (*verify) {
            rpg::VerificationReport report;
            if (corrupt_row) {
                auto cfg = load(g, rpg::Method::residual_vi);
                if (cfg.env.kind == rpg::EnvKind::gridworld && g.config.empty()) {
                    cfg.env.kind = rpg::EnvKind::random;
                }
                const auto env = rpg::build_environment(cfg);
                auto spec = rpg::customization_spec(cfg, env);
                auto log_probs = rpg::build_prior(cfg, env).log_probs();
                if (*corrupt_row >= log_probs.rows()) throw rpg::ConfigError({"--corrupt-prior-row: out of range"});
                for (double& x : log_probs.row(*corrupt_row)) x += std::log(0.9);
                const auto prior = rpg::LogPolicyTable::unchecked(std::move(log_probs));
                report.checks.push_back(rpg::check_residual_equivalence(
                    env.basic, prior, spec, tolerance.value_or(rpg::ToleranceProfile{}.residual_equivalence)));
            } else {
                const auto profile = tolerance ? rpg::ToleranceProfile::uniform(*tolerance) : rpg::ToleranceProfile{};
                report = rpg::verify_all(profile);
            }
            const std::string text = report.to_json().dump(2);
            std::cout << text << "\n";
            if (!g.out.empty()) rpg::write_text_file(std::filesystem::path(g.out) / "verify.json", text + "\n");
            return report.passed() ? kOk : kVerifyFailed;
        }
        if (*losses) {
            const json input = rpg::read_json_file(loss_input);
            if (!input.is_array()) throw rpg::ConfigError({loss_input + ": expected a JSON array"});
            json rows = json::array();
            double sums[3] = {0.0, 0.0, 0.0};
            for (const auto& e : input) {
                rpg::PreferenceExample ex;
                ex.logp_theta_w = e.at("logp_theta_w").get<double>();
                ex.logp_theta_l = e.at("logp_theta_l").get<double>();
                ex.logp_prior_w = e.at("logp_prior_w").get<double>();
                ex.logp_prior_l = e.at("logp_prior_l").get<double>();
                ex.label = e.value("label", 1.0);
                ex.beta = e.value("beta", 1.0);
                ex.alpha_hat = e.value("alpha_hat", ex.beta);
                ex.omega_prime = e.value("omega_prime", ex.beta);
                json row = json::object();
                if (loss_kind == "dpo" || loss_kind == "all") sums[0] += (row["dpo"] = rpg::dpo_loss(ex)).get<double>();
                if (loss_kind == "cross_entropy" || loss_kind == "all") sums[1] += (row["cross_entropy"] = rpg::cross_entropy_dpo_loss(ex)).get<double>();
                if (loss_kind == "decomposed" || loss_kind == "all") sums[2] += (row["decomposed"] = rpg::decomposed_dpo_loss(ex)).get<double>();
                rows.push_back(row);
            }
            json mean = json::object();
            const double n = input.empty() ? 1.0 : static_cast<double>(input.size());
            const char* names[3] = {"dpo", "cross_entropy", "decomposed"};
            for (int i = 0; i < 3; ++i) {
                if (loss_kind == names[i] || loss_kind == "all") mean[names[i]] = sums[i] / n;
            }
            std::cout << json{{"examples", rows}, {"mean", mean}}.dump(2) << "\n";
            return kOk;
        }
    } catch (const rpg::ConfigError& e) {
        for (const auto& p : e.problems()) std::cerr << "config error: " << p << "\n";
        return kConfigError;
    } catch (const rpg::ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kVerifyFailed;
    }
    return kOk;
}
