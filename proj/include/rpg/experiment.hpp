#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpg/config.hpp"
#include "rpg/mcts.hpp"
#include "rpg/mdp.hpp"

namespace rpg {

struct Environment {
    TabularMdp basic;
    Table addon;
    std::size_t start_state = 0;
};

/// Builds the configured environment; coefficients.gamma overrides its discount.
Environment build_environment(const ExperimentConfig& cfg);

/// Prior for customization methods: the checkpoint when configured, otherwise
/// the soft-optimal policy of the basic task at α.
LogPolicyTable build_prior(const ExperimentConfig& cfg, const Environment& env);

CustomizationSpec customization_spec(const ExperimentConfig& cfg, const Environment& env);
SearchConfig search_config(const ExperimentConfig& cfg, const Environment& env);

/// Root policy, root value and per-depth node values of a finished search.
nlohmann::json search_to_json(const SearchTree& tree, const SearchConfig& cfg);

/// Runs one seed into `dir` (metrics.csv, checkpoint.json, final.json, ...).
void run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

/// Every seed into output_dir/seed_<n>, then aggregate_summary.
void run_experiment(const ExperimentConfig& cfg);

/// Reads seed_<n>/final.json for each seed and writes summary.json with the
/// mean and population std of every reported metric. Idempotent.
nlohmann::json aggregate_summary(const std::filesystem::path& output_dir,
                                 const std::vector<std::uint64_t>& seeds);

struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ToleranceProfile {
    double residual_equivalence = 1e-6;  // policy TV
    double kl_decoupling = 1e-6;
    double estimator_exactness = 1e-4;  // relative error
    double estimator_variants = 1e-9;
    double lemma1 = 1e-12;
    double lemma2 = 1e-6;
    double temperature_rescale = 1e-8;
    double mcts_consistency = 1e-9;
    double mcts_residual = 1e-6;
    double accumulation = 1e-9;
    double dpo_decomposition = 1e-12;

    static ToleranceProfile uniform(double tol);
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    bool passed() const;
    nlohmann::json to_json() const;
};

VerificationReport verify_all(const ToleranceProfile& profile = {});

/// Customized policy from residual soft-Q iteration against the Boltzmann
/// policy of soft VI on r + r_R at α̂. `prior` is expected to be soft-optimal
/// for `mdp` at spec.prior_entropy_coeff; rows that fail to normalize are named.
CheckResult check_residual_equivalence(const TabularMdp& mdp, const LogPolicyTable& prior,
                                       const CustomizationSpec& spec, double tol);

}  // namespace rpg
