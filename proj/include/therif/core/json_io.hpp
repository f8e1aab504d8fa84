#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "therif/core/participant.hpp"
#include "therif/core/refinement.hpp"
#include "therif/core/theme.hpp"

namespace therif {

using nlohmann::json;

void to_json(json& j, FontId f);
void from_json(const json& j, FontId& f);
void to_json(json& j, const TextSettings& s);
// Missing font_size_px is derived from the built-in metric table.
void from_json(const json& j, TextSettings& s);
void to_json(json& j, Provenance p);
void from_json(const json& j, Provenance& p);
void to_json(json& j, const Theme& t);
void from_json(const json& j, Theme& t);
void to_json(json& j, const Participant& p);
void from_json(const json& j, Participant& p);
void to_json(json& j, SettingKey k);
void from_json(const json& j, SettingKey& k);
void to_json(json& j, const RefinementEvent& e);
void from_json(const json& j, RefinementEvent& e);
void to_json(json& j, const RefinementLog& log);
void from_json(const json& j, RefinementLog& log);
void to_json(json& j, const RatingRecord& r);
void from_json(const json& j, RatingRecord& r);

// themes.json: a JSON array of Theme records.
std::vector<Theme> load_themes(const std::filesystem::path& path);
void save_themes(const std::filesystem::path& path, const std::vector<Theme>& themes);

// Stable, indented rendering used for every on-disk snapshot.
std::string dump_pretty(const json& j);

}  // namespace therif
