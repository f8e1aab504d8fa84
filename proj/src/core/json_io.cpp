#include "therif/core/json_io.hpp"

#include <fstream>
#include <sstream>

namespace therif {

void to_json(json& j, FontId f) { j = std::string(font_name(f)); }
void from_json(const json& j, FontId& f) { f = parse_font(j.get<std::string>()); }

void to_json(json& j, const TextSettings& s) {
  j = json{{"font", s.font},
           {"character_spacing_em", s.character_spacing_em},
           {"word_spacing_em", s.word_spacing_em},
           {"line_height", s.line_height},
           {"font_size_px", s.font_size_px}};
}

void from_json(const json& j, TextSettings& s) {
  s.font = j.at("font").get<FontId>();
  s.character_spacing_em = j.at("character_spacing_em").get<double>();
  s.word_spacing_em = j.at("word_spacing_em").get<double>();
  s.line_height = j.at("line_height").get<double>();
  s.font_size_px = j.contains("font_size_px") ? j.at("font_size_px").get<double>() : normalized_font_size(s.font);
}

void to_json(json& j, Provenance p) { j = std::string(provenance_name(p)); }
void from_json(const json& j, Provenance& p) { p = parse_provenance(j.get<std::string>()); }

void to_json(json& j, const Theme& t) {
  j = json{{"theme_id", t.theme_id}, {"settings", t.settings}, {"provenance", t.provenance}, {"iteration", t.iteration}};
}

void from_json(const json& j, Theme& t) {
  t.theme_id = j.at("theme_id").get<std::string>();
  t.settings = j.at("settings").get<TextSettings>();
  t.provenance = j.value("provenance", Provenance::Designer);
  t.iteration = j.value("iteration", 0);
}

void to_json(json& j, const Participant& p) {
  j = json{{"participant_id", p.participant_id},
           {"age_years", p.age_years},
           {"dyslexia", p.dyslexia},
           {"dyslexia_score", p.dyslexia_score},
           {"age_bucket", std::string(age_bucket_label(p.bucket()))}};
}

void from_json(const json& j, Participant& p) {
  p.participant_id = j.at("participant_id").get<std::string>();
  p.age_years = j.at("age_years").get<int>();
  age_bucket(p.age_years);
  p.dyslexia_score = j.value("dyslexia_score", 0.0);
  p.dyslexia = j.contains("dyslexia") ? j.at("dyslexia").get<bool>() : p.dyslexia_score > kDefaultDyslexiaThreshold;
}

void to_json(json& j, SettingKey k) { j = std::string(setting_key_name(k)); }
void from_json(const json& j, SettingKey& k) { k = parse_setting_key(j.get<std::string>()); }

namespace {

json value_to_json(const SettingValue& v) {
  if (const auto* f = std::get_if<FontId>(&v)) return json(*f);
  return json(std::get<double>(v));
}

SettingValue value_from_json(const json& j, SettingKey key) {
  if (key == SettingKey::Font) return j.get<FontId>();
  return j.get<double>();
}

}  // namespace

void to_json(json& j, const RefinementEvent& e) {
  j = json{{"t_ms", e.t_ms}, {"setting_key", e.key}, {"old_value", value_to_json(e.old_value)},
           {"new_value", value_to_json(e.new_value)}};
}

void from_json(const json& j, RefinementEvent& e) {
  e.t_ms = j.at("t_ms").get<std::int64_t>();
  e.key = j.at("setting_key").get<SettingKey>();
  e.old_value = value_from_json(j.at("old_value"), e.key);
  e.new_value = value_from_json(j.at("new_value"), e.key);
}

void to_json(json& j, const RefinementLog& log) {
  j = json{{"session_id", log.session_id},     {"participant_id", log.participant_id},
           {"start_theme_id", log.start_theme_id}, {"start_settings", log.start_settings},
           {"events", log.events},             {"final_settings", log.final_settings},
           {"adjust_duration_ms", log.adjust_duration_ms}};
}

void from_json(const json& j, RefinementLog& log) {
  log.session_id = j.at("session_id").get<std::string>();
  log.participant_id = j.at("participant_id").get<std::string>();
  log.start_theme_id = j.at("start_theme_id").get<std::string>();
  log.start_settings = j.at("start_settings").get<TextSettings>();
  log.events = j.at("events").get<std::vector<RefinementEvent>>();
  log.final_settings = j.at("final_settings").get<TextSettings>();
  log.adjust_duration_ms = j.at("adjust_duration_ms").get<std::int64_t>();
}

void to_json(json& j, const RatingRecord& r) {
  j = json{{"session_id", r.session_id},
           {"theme_id", r.theme_id},
           {"phase", std::string(review_phase_name(r.phase))},
           {"value", std::string(rating_value_name(r.value))},
           {"is_favorite", r.is_favorite}};
}

void from_json(const json& j, RatingRecord& r) {
  r.session_id = j.at("session_id").get<std::string>();
  r.theme_id = j.at("theme_id").get<std::string>();
  r.phase = parse_review_phase(j.at("phase").get<std::string>());
  r.value = parse_rating_value(j.at("value").get<std::string>());
  r.is_favorite = j.value("is_favorite", false);
}

std::vector<Theme> load_themes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    auto themes = json::parse(in).get<std::vector<Theme>>();
    for (const auto& t : themes) validate(t);
    require_unique_ids(themes);
    return themes;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_themes(const std::filesystem::path& path, const std::vector<Theme>& themes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << dump_pretty(json(themes));
}

std::string dump_pretty(const json& j) { return j.dump(2) + "\n"; }

}  // namespace therif
