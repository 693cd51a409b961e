#include "rpg/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rpg/errors.hpp"

namespace rpg {

using nlohmann::json;

std::string encode_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double decode_real(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw ParseError("expected a real encoded as a string", 0);
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw ParseError("malformed real \"" + s + "\"", 0);
    }
    return x;
}

namespace {

json reals(std::span<const double> xs) {
    json arr = json::array();
    for (double x : xs) arr.push_back(encode_real(x));
    return arr;
}

std::vector<double> reals_from(const json& j, std::size_t expected, const char* what) {
    if (!j.is_array() || j.size() != expected) {
        throw ParseError(std::string(what) + ": expected " + std::to_string(expected) + " values", 0);
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& x : j) out.push_back(decode_real(x));
    return out;
}

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(std::string("missing field \"") + key + "\"", 0);
    }
    return j.at(key);
}

std::size_t count_field(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_unsigned()) throw ParseError(std::string("field \"") + key + "\" must be a count", 0);
    return v.get<std::size_t>();
}

}  // namespace

json to_json(const Table& t) {
    return {{"rows", t.rows()}, {"cols", t.cols()}, {"values", reals(t.values())}};
}

Table table_from_json(const json& j) {
    const auto rows = count_field(j, "rows");
    const auto cols = count_field(j, "cols");
    return Table(rows, cols, reals_from(field(j, "values"), rows * cols, "table values"));
}

json to_json(const TabularMdp& mdp) {
    json terminal = json::array();
    for (bool t : mdp.terminal_mask()) terminal.push_back(t);
    return {{"num_states", mdp.num_states()},
            {"num_actions", mdp.num_actions()},
            {"gamma", encode_real(mdp.discount())},
            {"reward", reals(mdp.reward().values())},
            {"transition", reals(mdp.transition_kernel())},
            {"terminal", terminal}};
}

TabularMdp mdp_from_json(const json& j) {
    const auto n = count_field(j, "num_states");
    const auto a = count_field(j, "num_actions");
    const auto& term = field(j, "terminal");
    if (!term.is_array() || term.size() != n) throw ParseError("terminal mask size mismatch", 0);
    std::vector<bool> terminal;
    for (const auto& t : term) {
        if (!t.is_boolean()) throw ParseError("terminal mask entries must be booleans", 0);
        terminal.push_back(t.get<bool>());
    }
    return TabularMdp(n, a, Table(n, a, reals_from(field(j, "reward"), n * a, "reward")),
                      reals_from(field(j, "transition"), n * a * n, "transition"),
                      decode_real(field(j, "gamma")), std::move(terminal));
}

json to_json(const SoftQTable& q) {
    return {{"entropy_coeff", encode_real(q.entropy_coeff)}, {"q", to_json(q.q)}};
}

SoftQTable soft_q_from_json(const json& j) {
    return {table_from_json(field(j, "q")), decode_real(field(j, "entropy_coeff"))};
}

json to_json(const LogPolicyTable& policy) {
    json rows = json::array();
    for (std::size_t s = 0; s < policy.num_states(); ++s) {
        json row = json::array();
        for (double p : policy.probabilities(s)) row.push_back(p);
        rows.push_back(row);
    }
    return {{"log_probs", to_json(policy.log_probs())}, {"probabilities", rows}};
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json(buf.str());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

std::string checkpoint_text(const TabularSoftmaxPolicy& policy) {
    const json j = {{"format", "rpgkit-checkpoint"},
                    {"version", kCheckpointVersion},
                    {"policy", "tabular_softmax"},
                    {"logits", to_json(policy.logits())}};
    return j.dump(2) + "\n";
}

TabularSoftmaxPolicy checkpoint_from_text(std::string_view text) {
    const json j = parse_json(text);
    if (field(j, "format") != "rpgkit-checkpoint") throw ParseError("not an rpgkit checkpoint", 0);
    if (field(j, "version") != kCheckpointVersion) throw ParseError("unsupported checkpoint version", 0);
    if (field(j, "policy") != "tabular_softmax") throw ParseError("unsupported policy kind", 0);
    return TabularSoftmaxPolicy(table_from_json(field(j, "logits")));
}

void save_checkpoint(const std::filesystem::path& path, const TabularSoftmaxPolicy& policy) {
    write_text_file(path, checkpoint_text(policy));
}

TabularSoftmaxPolicy load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_text(buf.str());
}

}  // namespace rpg
