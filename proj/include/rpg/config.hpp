#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpg/envs.hpp"
#include "rpg/ppo.hpp"

namespace rpg {

enum class Method {
    soft_ppo,
    residual_ppo,
    kl_ppo,
    greedy_ppo,
    soft_vi,
    residual_vi,
    mcts_ucb,
    mcts_maxent,
    mcts_residual,
};

std::string to_string(Method m);
std::optional<Method> method_from_string(std::string_view name);
bool is_ppo(Method m);
bool is_mcts(Method m);
/// Methods that start from a prior and customize it toward an add-on reward.
bool is_customization(Method m);

enum class EnvKind { gridworld, chain, random };

struct EnvConfig {
    EnvKind kind = EnvKind::gridworld;
    GridWorldSpec grid;
    std::size_t chain_length = 6;
    double slip = 0.1;
    std::size_t num_states = 5;
    std::size_t num_actions = 3;
    std::uint64_t env_seed = 0;
    double reward_scale = 1.0;
    double addon_scale = 0.5;
    double gamma = 0.9;  // chain and random kinds; the grid carries its own
    std::size_t start_state = 0;
};

struct Coefficients {
    std::optional<double> alpha;      // α: prior / soft-task entropy coefficient
    std::optional<double> alpha_hat;  // α̂
    double omega = 1.0;               // ω
    std::optional<double> omega_prime;
    std::optional<double> gamma;  // overrides the environment's discount
    double tau = 1.0;
    double k = 1.0;
    double epsilon = 0.0;
    double exploration_c = 1.0;
};

struct ExperimentConfig {
    Method method = Method::soft_vi;
    EnvConfig env;
    Coefficients coeffs;
    PpoParams ppo;
    int iterations = 100;
    int mcts_iterations = 2000;
    int mcts_depth = 6;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output_dir = "runs/default";
    unsigned jobs = 1;
    std::optional<std::filesystem::path> prior_checkpoint;
};

/// Reads a TOML document. Syntax errors, unknown keys and type mismatches are
/// all collected into one ConfigError.
ExperimentConfig parse_config(std::string_view text, std::string_view origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Semantic problems (missing method-required fields, out-of-range values).
std::vector<std::string> validate_config(const ExperimentConfig& cfg);
/// Throws ConfigError listing every problem.
void require_valid(const ExperimentConfig& cfg);

}  // namespace rpg
