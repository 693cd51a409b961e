#include "rpg/config.hpp"

#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

#include <toml.hpp>

#include "rpg/errors.hpp"

namespace rpg {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 9> kMethods{{
    {Method::soft_ppo, "soft_ppo"},
    {Method::residual_ppo, "residual_ppo"},
    {Method::kl_ppo, "kl_ppo"},
    {Method::greedy_ppo, "greedy_ppo"},
    {Method::soft_vi, "soft_vi"},
    {Method::residual_vi, "residual_vi"},
    {Method::mcts_ucb, "mcts_ucb"},
    {Method::mcts_maxent, "mcts_maxent"},
    {Method::mcts_residual, "mcts_residual"},
}};

// Collects problems while walking the document so that one run reports all.
class Reader {
public:
    std::vector<std::string> problems;

    template <typename T>
    void number(const toml::node& node, const std::string& key, T& out) {
        if constexpr (std::is_floating_point_v<T>) {
            if (auto v = node.value<double>()) {
                out = *v;
                return;
            }
            problems.push_back(key + ": expected a number");
        } else {
            auto v = node.value<std::int64_t>();
            if (!v || !node.is_integer()) {
                problems.push_back(key + ": expected an integer");
                return;
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (*v < 0) {
                    problems.push_back(key + ": must be >= 0");
                    return;
                }
            }
            out = static_cast<T>(*v);
        }
    }

    void optional_number(const toml::node& node, const std::string& key, std::optional<double>& out) {
        double x = 0.0;
        const auto before = problems.size();
        number(node, key, x);
        if (problems.size() == before) out = x;
    }

    std::optional<std::string> string(const toml::node& node, const std::string& key) {
        if (auto v = node.value<std::string>(); v && node.is_string()) return *v;
        problems.push_back(key + ": expected a string");
        return std::nullopt;
    }

    using Handler = std::function<void(const toml::node&, const std::string&)>;

    void table(const toml::node* node, const std::string& prefix,
               const std::map<std::string, Handler>& handlers) {
        if (!node) return;
        const auto* tbl = node->as_table();
        if (!tbl) {
            problems.push_back(prefix + ": expected a table");
            return;
        }
        for (const auto& [k, v] : *tbl) {
            const std::string key(k.str());
            const std::string full = prefix.empty() ? key : prefix + "." + key;
            auto it = handlers.find(key);
            if (it == handlers.end()) {
                problems.push_back(full + ": unknown key");
                continue;
            }
            it->second(v, full);
        }
    }
};

}  // namespace

std::string to_string(Method m) {
    for (const auto& [method, name] : kMethods) {
        if (method == m) return std::string(name);
    }
    return "unknown";
}

std::optional<Method> method_from_string(std::string_view name) {
    for (const auto& [method, n] : kMethods) {
        if (n == name) return method;
    }
    return std::nullopt;
}

bool is_ppo(Method m) {
    return m == Method::soft_ppo || m == Method::residual_ppo || m == Method::kl_ppo ||
           m == Method::greedy_ppo;
}

bool is_mcts(Method m) {
    return m == Method::mcts_ucb || m == Method::mcts_maxent || m == Method::mcts_residual;
}

bool is_customization(Method m) {
    return m == Method::residual_ppo || m == Method::kl_ppo || m == Method::greedy_ppo ||
           m == Method::residual_vi || m == Method::mcts_residual;
}

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
    toml::table doc;
    try {
        doc = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
            << e.description();
        throw ConfigError({msg.str()});
    }

    ExperimentConfig cfg;
    Reader rd;
    bool have_method = false;
    auto& env = cfg.env;
    auto& grid = env.grid;
    auto& co = cfg.coeffs;
    auto& ppo = cfg.ppo;
    using H = Reader::Handler;
    auto num = [&](auto& field) -> H {
        return [&rd, &field](const toml::node& n, const std::string& k) { rd.number(n, k, field); };
    };
    auto opt = [&](std::optional<double>& field) -> H {
        return [&rd, &field](const toml::node& n, const std::string& k) { rd.optional_number(n, k, field); };
    };

    const std::map<std::string, H> env_keys{
        {"kind",
         [&](const toml::node& n, const std::string& k) {
             if (auto s = rd.string(n, k)) {
                 if (*s == "gridworld") env.kind = EnvKind::gridworld;
                 else if (*s == "chain") env.kind = EnvKind::chain;
                 else if (*s == "random") env.kind = EnvKind::random;
                 else rd.problems.push_back(k + ": unknown environment \"" + *s + "\"");
             }
         }},
        {"width", num(grid.width)},
        {"height", num(grid.height)},
        {"goal_x", num(grid.goal_x)},
        {"goal_y", num(grid.goal_y)},
        {"goal_reward", num(grid.goal_reward)},
        {"step_cost", num(grid.step_cost)},
        {"addon",
         [&](const toml::node& n, const std::string& k) {
             if (auto s = rd.string(n, k)) {
                 if (*s == "none") grid.addon = AddonKind::none;
                 else if (*s == "lane_bonus") grid.addon = AddonKind::lane_bonus;
                 else if (*s == "hazard_penalty") grid.addon = AddonKind::hazard_penalty;
                 else rd.problems.push_back(k + ": unknown add-on kind \"" + *s + "\"");
             }
         }},
        {"addon_magnitude", num(grid.addon_magnitude)},
        {"chain_length", num(env.chain_length)},
        {"slip", num(env.slip)},
        {"num_states", num(env.num_states)},
        {"num_actions", num(env.num_actions)},
        {"env_seed", num(env.env_seed)},
        {"reward_scale", num(env.reward_scale)},
        {"addon_scale", num(env.addon_scale)},
        {"gamma",
         [&](const toml::node& n, const std::string& k) {
             rd.number(n, k, env.gamma);
             grid.gamma = env.gamma;
         }},
        {"start_state", num(env.start_state)},
    };
    const std::map<std::string, H> coeff_keys{
        {"alpha", opt(co.alpha)},
        {"alpha_hat", opt(co.alpha_hat)},
        {"omega", num(co.omega)},
        {"omega_prime", opt(co.omega_prime)},
        {"gamma", opt(co.gamma)},
        {"tau", num(co.tau)},
        {"k", num(co.k)},
        {"epsilon", num(co.epsilon)},
        {"exploration_c", num(co.exploration_c)},
    };
    const std::map<std::string, H> ppo_keys{
        {"clip_epsilon", num(ppo.clip_epsilon)},
        {"epochs", num(ppo.epochs)},
        {"minibatch_size", num(ppo.minibatch_size)},
        {"step_size", num(ppo.step_size)},
        {"batch_size", num(ppo.batch_size)},
        {"horizon", num(ppo.horizon)},
        {"gae_lambda", num(ppo.gae_lambda)},
        {"optimizer",
         [&](const toml::node& n, const std::string& k) {
             if (auto s = rd.string(n, k)) {
                 if (*s == "sgd") ppo.optimizer = OptimizerKind::sgd;
                 else if (*s == "adam") ppo.optimizer = OptimizerKind::adam;
                 else rd.problems.push_back(k + ": unknown optimizer \"" + *s + "\"");
             }
         }},
        {"value_step_size", num(ppo.value_step_size)},
        {"warmup_fraction", num(ppo.warmup_fraction)},
        {"threads", num(ppo.threads)},
    };
    const std::map<std::string, H> mcts_keys{
        {"iterations", num(cfg.mcts_iterations)},
        {"depth", num(cfg.mcts_depth)},
    };
    const std::map<std::string, H> top_keys{
        {"method",
         [&](const toml::node& n, const std::string& k) {
             if (auto s = rd.string(n, k)) {
                 if (auto m = method_from_string(*s)) {
                     cfg.method = *m;
                     have_method = true;
                 } else {
                     rd.problems.push_back(k + ": unknown method \"" + *s + "\"");
                     have_method = true;
                 }
             }
         }},
        {"iterations", num(cfg.iterations)},
        {"jobs", num(cfg.jobs)},
        {"output_dir",
         [&](const toml::node& n, const std::string& k) {
             if (auto s = rd.string(n, k)) cfg.output_dir = *s;
         }},
        {"prior_checkpoint",
         [&](const toml::node& n, const std::string& k) {
             if (auto s = rd.string(n, k)) cfg.prior_checkpoint = *s;
         }},
        {"seeds",
         [&](const toml::node& n, const std::string& k) {
             const auto* arr = n.as_array();
             if (!arr) {
                 rd.problems.push_back(k + ": expected an array of integers");
                 return;
             }
             cfg.seeds.clear();
             for (std::size_t i = 0; i < arr->size(); ++i) {
                 std::uint64_t seed = 0;
                 const auto before = rd.problems.size();
                 rd.number(*arr->get(i), k + "[" + std::to_string(i) + "]", seed);
                 if (rd.problems.size() == before) cfg.seeds.push_back(seed);
             }
         }},
        {"env", [&](const toml::node& n, const std::string& k) { rd.table(&n, k, env_keys); }},
        {"coefficients",
         [&](const toml::node& n, const std::string& k) { rd.table(&n, k, coeff_keys); }},
        {"ppo", [&](const toml::node& n, const std::string& k) { rd.table(&n, k, ppo_keys); }},
        {"mcts", [&](const toml::node& n, const std::string& k) { rd.table(&n, k, mcts_keys); }},
    };
    rd.table(&doc, "", top_keys);
    if (!have_method) rd.problems.push_back("method: required key missing");
    if (!rd.problems.empty()) throw ConfigError(std::move(rd.problems));
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({path.string() + ": cannot open config file"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> p;
    const auto m = cfg.method;
    const bool needs_alpha = m != Method::mcts_ucb && m != Method::mcts_maxent;
    if (needs_alpha && !cfg.coeffs.alpha) p.push_back("coefficients.alpha: required by " + to_string(m));
    if (cfg.coeffs.alpha && !(*cfg.coeffs.alpha > 0.0)) p.push_back("coefficients.alpha: must be > 0");
    if (is_customization(m) && m != Method::mcts_residual && !cfg.coeffs.alpha_hat) {
        p.push_back("coefficients.alpha_hat: required by " + to_string(m));
    }
    if (cfg.coeffs.alpha_hat && !(*cfg.coeffs.alpha_hat > 0.0)) {
        p.push_back("coefficients.alpha_hat: must be > 0");
    }
    if (!(cfg.coeffs.omega >= 0.0)) p.push_back("coefficients.omega: must be >= 0");
    if (cfg.coeffs.gamma && !(*cfg.coeffs.gamma >= 0.0 && *cfg.coeffs.gamma < 1.0)) {
        p.push_back("coefficients.gamma: must lie in [0, 1)");
    }
    if (!(cfg.coeffs.tau > 0.0)) p.push_back("coefficients.tau: must be > 0");
    if (!(cfg.coeffs.epsilon >= 0.0)) p.push_back("coefficients.epsilon: must be >= 0");
    if (cfg.seeds.empty()) p.push_back("seeds: must list at least one seed");
    if (cfg.iterations < 0) p.push_back("iterations: must be >= 0");
    if (cfg.jobs < 1) p.push_back("jobs: must be >= 1");
    if (cfg.mcts_iterations < 0) p.push_back("mcts.iterations: must be >= 0");
    if (cfg.mcts_depth < 1) p.push_back("mcts.depth: must be >= 1");
    try {
        cfg.ppo.validate();
    } catch (const ParameterError& e) {
        p.push_back(std::string("ppo: ") + e.what());
    }
    const auto& env = cfg.env;
    switch (env.kind) {
        case EnvKind::gridworld:
            if (env.grid.width < 1 || env.grid.height < 1) p.push_back("env: grid must be at least 1x1");
            if (env.grid.goal_x >= env.grid.width || env.grid.goal_y >= env.grid.height) {
                p.push_back("env.goal_x/goal_y: goal lies outside the grid");
            }
            if (env.start_state >= env.grid.width * env.grid.height) {
                p.push_back("env.start_state: outside the grid");
            }
            break;
        case EnvKind::chain:
            if (env.chain_length < 2) p.push_back("env.chain_length: must be >= 2");
            if (!(env.slip >= 0.0 && env.slip < 1.0)) p.push_back("env.slip: must lie in [0, 1)");
            if (env.start_state >= env.chain_length) p.push_back("env.start_state: outside the chain");
            if (is_mcts(m) && env.slip > 0.0) p.push_back("env.slip: tree search needs slip = 0");
            break;
        case EnvKind::random:
            if (env.num_states < 1 || env.num_actions < 1) p.push_back("env: empty random MDP");
            if (env.start_state >= env.num_states) p.push_back("env.start_state: outside the MDP");
            if (is_mcts(m)) p.push_back("env.kind: random MDPs are stochastic; tree search needs a deterministic model");
            break;
    }
    if (!(env.gamma >= 0.0 && env.gamma < 1.0)) p.push_back("env.gamma: must lie in [0, 1)");
    return p;
}

void require_valid(const ExperimentConfig& cfg) {
    auto problems = validate_config(cfg);
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

}  // namespace rpg
