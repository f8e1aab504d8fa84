#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "therif/core/error.hpp"

namespace therif {

enum class FontId {
  Montserrat,
  OpenSans,
  Arial,
  Roboto,
  Merriweather,
  Georgia,
  SourceSerifPro,
  Times,
  Poppins,
};

inline constexpr std::array<FontId, 9> kAllFonts = {
    FontId::Montserrat, FontId::OpenSans,       FontId::Arial,
    FontId::Roboto,     FontId::Merriweather,   FontId::Georgia,
    FontId::SourceSerifPro, FontId::Times,      FontId::Poppins,
};

// Fonts a participant can pick in a session. Poppins is renderable only.
inline constexpr std::array<FontId, 8> kStudyFonts = {
    FontId::Montserrat, FontId::OpenSans, FontId::Arial,          FontId::Roboto,
    FontId::Merriweather, FontId::Georgia, FontId::SourceSerifPro, FontId::Times,
};

inline constexpr FontId kReferenceFont = FontId::Times;
inline constexpr double kReferenceFontSizePx = 17.0;

std::string_view font_name(FontId font);
std::optional<FontId> font_from_name(std::string_view name);
// Throws ParseError on unknown names.
FontId parse_font(std::string_view name);

struct FontMetrics {
  double x_height_ratio = 0.0;     // x-height / em
  bool serif = false;
  double avg_advance_ratio = 0.0;  // mean lowercase advance / em
  std::string source;              // where the numbers came from
};

class FontMetricTable {
 public:
  FontMetricTable() = default;
  explicit FontMetricTable(std::map<FontId, FontMetrics> entries);

  // The table checked in under data/font_metrics.json, compiled in.
  static const FontMetricTable& builtin();
  static FontMetricTable load(const std::filesystem::path& path);
  static FontMetricTable from_json_text(std::string_view text);

  bool contains(FontId font) const { return entries_.count(font) != 0; }
  const FontMetrics& at(FontId font) const;
  const std::map<FontId, FontMetrics>& entries() const { return entries_; }

 private:
  std::map<FontId, FontMetrics> entries_;
};

// Pixel size giving `font` the same x-height as Times at 17px, rounded to 0.1px.
double normalized_font_size(FontId font, const FontMetricTable& table = FontMetricTable::builtin());

// Slider lattice for one spacing control.
struct SliderSpec {
  double min;
  double max;
  double step;

  bool contains(double v) const;
  double clamp(double v) const;
  // Nearest lattice value (multiples of `step`), clamped into range.
  double snap(double v) const;
};

inline constexpr SliderSpec kCharacterSpacing{-0.05, 0.50, 0.01};
inline constexpr SliderSpec kWordSpacing{-0.05, 1.00, 0.05};
inline constexpr SliderSpec kLineHeight{1.0, 5.0, 0.1};

struct TextSettings {
  FontId font = FontId::Arial;
  double character_spacing_em = 0.0;
  double word_spacing_em = 0.0;
  double line_height = 1.0;
  double font_size_px = 0.0;

  bool operator==(const TextSettings&) const = default;
};

// Builds settings with the font size derived from the metric table.
TextSettings make_settings(FontId font, double character_spacing_em, double word_spacing_em,
                           double line_height,
                           const FontMetricTable& table = FontMetricTable::builtin());

// Throws RangeError naming the first property outside its range.
void validate(const TextSettings& settings);
bool is_valid(const TextSettings& settings);

// Snaps all three spacings onto the slider lattice and re-derives font size.
TextSettings snap_to_lattice(const TextSettings& settings,
                             const FontMetricTable& table = FontMetricTable::builtin());

// Equality up to floating noise (1e-9 on every numeric field).
bool nearly_equal(const TextSettings& a, const TextSettings& b, double tol = 1e-9);

}  // namespace therif
