#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "therif/core/text_settings.hpp"

namespace therif {

enum class SettingKey { Font, CharacterSpacing, WordSpacing, LineHeight };

inline constexpr SettingKey kAllSettingKeys[] = {SettingKey::Font, SettingKey::CharacterSpacing,
                                                 SettingKey::WordSpacing, SettingKey::LineHeight};

std::string_view setting_key_name(SettingKey key);
SettingKey parse_setting_key(std::string_view name);

// Font events carry a FontId, spacing events a number.
using SettingValue = std::variant<FontId, double>;

SettingValue get_setting(const TextSettings& s, SettingKey key);

struct RefinementEvent {
  std::int64_t t_ms = 0;
  SettingKey key = SettingKey::LineHeight;
  SettingValue old_value;
  SettingValue new_value;

  bool operator==(const RefinementEvent&) const = default;
};

struct RefinementLog {
  std::string session_id;
  std::string participant_id;
  std::string start_theme_id;
  TextSettings start_settings;
  std::vector<RefinementEvent> events;
  TextSettings final_settings;
  std::int64_t adjust_duration_ms = 0;

  bool operator==(const RefinementLog&) const = default;
};

// Left fold of `events` over `start`. A font change re-derives the font size
// from `table`. Throws LogCorruptionError at the first event whose old value
// does not match the running state, whose timestamp goes backwards, whose
// value type mismatches the key, or whose new value is out of range.
TextSettings apply_events(const TextSettings& start, std::span<const RefinementEvent> events,
                          const FontMetricTable& table = FontMetricTable::builtin());

// First key on which two settings differ (font size is compared as well,
// reported as nullopt-free "font_size_px" via the string overload).
std::optional<std::string> first_divergent_key(const TextSettings& a, const TextSettings& b,
                                               double tol = 1e-9);

// Checks every RefinementLog invariant; throws LogCorruptionError.
void verify_log(const RefinementLog& log, const FontMetricTable& table = FontMetricTable::builtin());

enum class ReviewPhase { Primary, Secondary };
enum class RatingValue { Good, Unsure, Bad };

std::string_view review_phase_name(ReviewPhase p);
ReviewPhase parse_review_phase(std::string_view name);
std::string_view rating_value_name(RatingValue v);
RatingValue parse_rating_value(std::string_view name);

struct RatingRecord {
  std::string session_id;
  std::string theme_id;
  ReviewPhase phase = ReviewPhase::Primary;
  RatingValue value = RatingValue::Unsure;
  bool is_favorite = false;

  bool operator==(const RatingRecord&) const = default;
};

}  // namespace therif
