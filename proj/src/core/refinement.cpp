#include "therif/core/refinement.hpp"

#include <cmath>
#include <sstream>

#include "therif/core/error.hpp"

namespace therif {

namespace {

constexpr double kValueTolerance = 1e-9;

bool same_value(const SettingValue& a, const SettingValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* fa = std::get_if<FontId>(&a)) return *fa == std::get<FontId>(b);
  return std::fabs(std::get<double>(a) - std::get<double>(b)) <= kValueTolerance;
}

std::string describe(const SettingValue& v) {
  if (const auto* f = std::get_if<FontId>(&v)) return std::string(font_name(*f));
  std::ostringstream ss;
  ss << std::get<double>(v);
  return ss.str();
}

const SliderSpec& slider_for(SettingKey key) {
  switch (key) {
    case SettingKey::CharacterSpacing: return kCharacterSpacing;
    case SettingKey::WordSpacing: return kWordSpacing;
    default: return kLineHeight;
  }
}

}  // namespace

std::string_view setting_key_name(SettingKey key) {
  switch (key) {
    case SettingKey::Font: return "font";
    case SettingKey::CharacterSpacing: return "character_spacing_em";
    case SettingKey::WordSpacing: return "word_spacing_em";
    case SettingKey::LineHeight: return "line_height";
  }
  return "?";
}

SettingKey parse_setting_key(std::string_view name) {
  for (auto k : kAllSettingKeys) {
    if (setting_key_name(k) == name) return k;
  }
  throw ParseError("unknown setting key '" + std::string(name) + "'");
}

SettingValue get_setting(const TextSettings& s, SettingKey key) {
  switch (key) {
    case SettingKey::Font: return s.font;
    case SettingKey::CharacterSpacing: return s.character_spacing_em;
    case SettingKey::WordSpacing: return s.word_spacing_em;
    case SettingKey::LineHeight: return s.line_height;
  }
  return 0.0;
}

TextSettings apply_events(const TextSettings& start, std::span<const RefinementEvent> events,
                          const FontMetricTable& table) {
  TextSettings s = start;
  std::int64_t last_t = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto key = std::string(setting_key_name(e.key));
    if (e.t_ms < last_t || e.t_ms < 0) {
      throw LogCorruptionError(i, key, "event " + std::to_string(i) + ": timestamp goes backwards");
    }
    last_t = e.t_ms;
    const bool font_key = e.key == SettingKey::Font;
    if (std::holds_alternative<FontId>(e.new_value) != font_key ||
        std::holds_alternative<FontId>(e.old_value) != font_key) {
      throw LogCorruptionError(i, key, "event " + std::to_string(i) + ": value type does not match " + key);
    }
    const auto current = get_setting(s, e.key);
    if (!same_value(current, e.old_value)) {
      throw LogCorruptionError(i, key,
                               "event " + std::to_string(i) + ": stale old_value for " + key + " (log says " +
                                   describe(e.old_value) + ", state is " + describe(current) + ")");
    }
    if (font_key) {
      s.font = std::get<FontId>(e.new_value);
      s.font_size_px = normalized_font_size(s.font, table);
      continue;
    }
    const double v = std::get<double>(e.new_value);
    if (!std::isfinite(v) || !slider_for(e.key).contains(v)) {
      throw LogCorruptionError(i, key, "event " + std::to_string(i) + ": " + key + " out of range");
    }
    switch (e.key) {
      case SettingKey::CharacterSpacing: s.character_spacing_em = v; break;
      case SettingKey::WordSpacing: s.word_spacing_em = v; break;
      case SettingKey::LineHeight: s.line_height = v; break;
      case SettingKey::Font: break;
    }
  }
  return s;
}

std::optional<std::string> first_divergent_key(const TextSettings& a, const TextSettings& b, double tol) {
  for (auto k : kAllSettingKeys) {
    if (const auto va = get_setting(a, k), vb = get_setting(b, k); va.index() != vb.index()) {
      return std::string(setting_key_name(k));
    } else if (const auto* fa = std::get_if<FontId>(&va)) {
      if (*fa != std::get<FontId>(vb)) return std::string(setting_key_name(k));
    } else if (std::fabs(std::get<double>(va) - std::get<double>(vb)) > tol) {
      return std::string(setting_key_name(k));
    }
  }
  if (std::fabs(a.font_size_px - b.font_size_px) > tol) return std::string("font_size_px");
  return std::nullopt;
}

void verify_log(const RefinementLog& log, const FontMetricTable& table) {
  const auto rebuilt = apply_events(log.start_settings, log.events, table);
  if (auto key = first_divergent_key(rebuilt, log.final_settings)) {
    throw LogCorruptionError(log.events.size(), *key, "final settings diverge from replayed events at " + *key);
  }
  if (!log.events.empty() && log.adjust_duration_ms < log.events.back().t_ms) {
    throw LogCorruptionError(log.events.size() - 1, "adjust_duration_ms",
                             "adjust duration shorter than the last event timestamp");
  }
}

std::string_view review_phase_name(ReviewPhase p) { return p == ReviewPhase::Primary ? "primary" : "secondary"; }

ReviewPhase parse_review_phase(std::string_view name) {
  if (name == "primary") return ReviewPhase::Primary;
  if (name == "secondary") return ReviewPhase::Secondary;
  throw ParseError("unknown review phase '" + std::string(name) + "'");
}

std::string_view rating_value_name(RatingValue v) {
  switch (v) {
    case RatingValue::Good: return "good";
    case RatingValue::Unsure: return "unsure";
    case RatingValue::Bad: return "bad";
  }
  return "?";
}

RatingValue parse_rating_value(std::string_view name) {
  if (name == "good") return RatingValue::Good;
  if (name == "unsure") return RatingValue::Unsure;
  if (name == "bad") return RatingValue::Bad;
  throw ParseError("unknown rating '" + std::string(name) + "'");
}

}  // namespace therif
