#include "therif/core/text_settings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace therif {

namespace {

struct FontName {
  FontId id;
  std::string_view name;
};

constexpr FontName kFontNames[] = {
    {FontId::Montserrat, "Montserrat"},
    {FontId::OpenSans, "Open Sans"},
    {FontId::Arial, "Arial"},
    {FontId::Roboto, "Roboto"},
    {FontId::Merriweather, "Merriweather"},
    {FontId::Georgia, "Georgia"},
    {FontId::SourceSerifPro, "Source Serif Pro"},
    {FontId::Times, "Times"},
    {FontId::Poppins, "Poppins"},
};

}  // namespace

// Generated from data/font_metrics.json at configure time.
extern const char* const kBuiltinFontMetricsJson;

std::string_view font_name(FontId font) {
  for (const auto& f : kFontNames) {
    if (f.id == font) return f.name;
  }
  return "?";
}

std::optional<FontId> font_from_name(std::string_view name) {
  // Accept surrounding quotes as written in CSS font-family values.
  if (name.size() >= 2 && (name.front() == '"' || name.front() == '\'') && name.back() == name.front()) {
    name = name.substr(1, name.size() - 2);
  }
  for (const auto& f : kFontNames) {
    if (f.name == name) return f.id;
  }
  return std::nullopt;
}

FontId parse_font(std::string_view name) {
  if (auto f = font_from_name(name)) return *f;
  throw ParseError("unknown font '" + std::string(name) + "'");
}

FontMetricTable::FontMetricTable(std::map<FontId, FontMetrics> entries) : entries_(std::move(entries)) {
  for (const auto& [font, m] : entries_) {
    for (double r : {m.x_height_ratio, m.avg_advance_ratio}) {
      if (!(r > 0.30 && r < 0.70)) {
        throw RangeError(std::string(font_name(font)),
                         "font metric ratio for " + std::string(font_name(font)) + " outside (0.30, 0.70)");
      }
    }
  }
}

FontMetricTable FontMetricTable::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("font metric table: ") + e.what());
  }
  std::map<FontId, FontMetrics> entries;
  for (const auto& f : doc.at("fonts")) {
    FontMetrics m;
    m.x_height_ratio = f.at("x_height_ratio").get<double>();
    m.serif = f.at("serif").get<bool>();
    m.avg_advance_ratio = f.at("avg_advance_ratio").get<double>();
    m.source = f.value("source", "");
    entries[parse_font(f.at("name").get<std::string>())] = m;
  }
  return FontMetricTable(std::move(entries));
}

FontMetricTable FontMetricTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open font metric table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const FontMetricTable& FontMetricTable::builtin() {
  static const FontMetricTable table = from_json_text(kBuiltinFontMetricsJson);
  return table;
}

const FontMetrics& FontMetricTable::at(FontId font) const {
  auto it = entries_.find(font);
  if (it == entries_.end()) {
    throw MissingMetricError("no metrics for font " + std::string(font_name(font)));
  }
  return it->second;
}

double normalized_font_size(FontId font, const FontMetricTable& table) {
  const double reference = table.at(kReferenceFont).x_height_ratio * kReferenceFontSizePx;
  const double size = reference / table.at(font).x_height_ratio;
  return std::round(size * 10.0) / 10.0;
}

bool SliderSpec::contains(double v) const {
  constexpr double eps = 1e-9;
  return v >= min - eps && v <= max + eps;
}

double SliderSpec::clamp(double v) const { return std::fmin(std::fmax(v, min), max); }

double SliderSpec::snap(double v) const {
  double s = std::round(clamp(v) / step) * step;
  // Strip the representation noise left by the multiply (0.30000000000000004).
  s = std::round(s * 1e6) / 1e6;
  if (s == 0.0) s = 0.0;  // no negative zero
  return clamp(s);
}

TextSettings make_settings(FontId font, double character_spacing_em, double word_spacing_em,
                           double line_height, const FontMetricTable& table) {
  TextSettings s;
  s.font = font;
  s.character_spacing_em = character_spacing_em;
  s.word_spacing_em = word_spacing_em;
  s.line_height = line_height;
  s.font_size_px = normalized_font_size(font, table);
  return s;
}

void validate(const TextSettings& s) {
  auto check = [](const SliderSpec& spec, double v, const char* name) {
    if (!std::isfinite(v) || !spec.contains(v)) {
      std::ostringstream msg;
      msg << name << " " << v << " out of range [" << spec.min << ", " << spec.max << "]";
      throw RangeError(name, msg.str());
    }
  };
  check(kCharacterSpacing, s.character_spacing_em, "letter-spacing");
  check(kWordSpacing, s.word_spacing_em, "word-spacing");
  check(kLineHeight, s.line_height, "line-height");
  if (!std::isfinite(s.font_size_px) || s.font_size_px <= 0.0 || s.font_size_px > 200.0) {
    throw RangeError("font-size", "font-size must be in (0, 200] px");
  }
}

bool is_valid(const TextSettings& settings) {
  try {
    validate(settings);
    return true;
  } catch (const RangeError&) {
    return false;
  }
}

TextSettings snap_to_lattice(const TextSettings& s, const FontMetricTable& table) {
  return make_settings(s.font, kCharacterSpacing.snap(s.character_spacing_em),
                       kWordSpacing.snap(s.word_spacing_em), kLineHeight.snap(s.line_height), table);
}

bool nearly_equal(const TextSettings& a, const TextSettings& b, double tol) {
  return a.font == b.font && std::fabs(a.character_spacing_em - b.character_spacing_em) <= tol &&
         std::fabs(a.word_spacing_em - b.word_spacing_em) <= tol &&
         std::fabs(a.line_height - b.line_height) <= tol && std::fabs(a.font_size_px - b.font_size_px) <= tol;
}

}  // namespace therif
