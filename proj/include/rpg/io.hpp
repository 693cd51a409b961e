#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rpg/mdp.hpp"
#include "rpg/policy.hpp"
#include "rpg/soft_dp.hpp"

namespace rpg {

// Reals are stored as 17-significant-digit decimal strings so that every
// finite double round-trips bit-exactly.

std::string encode_real(double x);
double decode_real(const nlohmann::json& j);

nlohmann::json to_json(const Table& t);
Table table_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SoftQTable& q);
SoftQTable soft_q_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LogPolicyTable& policy);

/// Parses text; syntax errors become ParseError carrying the byte offset.
nlohmann::json parse_json(std::string_view text);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const TabularSoftmaxPolicy& policy);
/// Throws ParseError on malformed or truncated input.
TabularSoftmaxPolicy load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_text(const TabularSoftmaxPolicy& policy);
TabularSoftmaxPolicy checkpoint_from_text(std::string_view text);

}  // namespace rpg
