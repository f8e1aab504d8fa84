#include "therif/core/theme.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>

namespace therif {

namespace {

constexpr std::array<std::pair<Provenance, std::string_view>, 5> kProvenanceNames = {{
    {Provenance::ClusterRepresentative, "cluster_representative"},
    {Provenance::Designer, "designer"},
    {Provenance::Validation, "validation"},
    {Provenance::PilotPreset, "pilot_preset"},
    {Provenance::Control, "control"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Parses "<number><unit>" where unit must match exactly (possibly empty).
double parse_length(std::string_view property, std::string_view value, std::string_view unit) {
  value = trim(value);
  if (value.size() < unit.size() || value.substr(value.size() - unit.size()) != unit) {
    throw ParseError(std::string(property) + ": expected unit '" + std::string(unit) + "'");
  }
  value = trim(value.substr(0, value.size() - unit.size()));
  double out = 0.0;
  const auto* begin = value.data();
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ParseError(std::string(property) + ": malformed number '" + std::string(value) + "'");
  }
  return out;
}

void check_range(std::string_view property, double v, const SliderSpec& spec) {
  if (!std::isfinite(v) || !spec.contains(v)) {
    throw RangeError(std::string(property), std::string(property) + " " + format_decimal(v) +
                                                " out of range [" + format_decimal(spec.min) + ", " +
                                                format_decimal(spec.max) + "]");
  }
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  for (const auto& [value, name] : kProvenanceNames) {
    if (value == p) return name;
  }
  return "?";
}

Provenance parse_provenance(std::string_view name) {
  for (const auto& [value, n] : kProvenanceNames) {
    if (n == name) return value;
  }
  throw ParseError("unknown provenance '" + std::string(name) + "'");
}

void validate(const Theme& theme) {
  if (theme.theme_id.empty()) throw Error("theme id must not be empty");
  if (theme.iteration < 0) throw RangeError("iteration", "iteration must be >= 0");
  validate(theme.settings);
}

void require_unique_ids(const std::vector<Theme>& themes) {
  std::set<std::string> seen;
  for (const auto& t : themes) {
    if (!seen.insert(t.theme_id).second) throw Error("duplicate theme id '" + t.theme_id + "'");
  }
}

Theme compact_theme() {
  return {"compact", make_settings(FontId::Georgia, 0.0, 0.1, 1.4), Provenance::Designer, 4};
}

Theme open_theme() {
  return {"open", make_settings(FontId::Merriweather, 0.02, 0.2, 2.2), Provenance::Designer, 4};
}

Theme relaxed_theme() {
  return {"relaxed", make_settings(FontId::Poppins, 0.04, 0.3, 4.5), Provenance::Designer, 4};
}

Theme control_theme() {
  return {"control", make_settings(FontId::Arial, 0.0, 0.0, 1.0), Provenance::Control, 0};
}

std::vector<Theme> cor_themes() { return {compact_theme(), open_theme(), relaxed_theme()}; }

std::string format_decimal(double value) {
  if (value == 0.0) return "0";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf.data(), ptr);
}

std::string theme_to_css(const Theme& theme) {
  const auto& s = theme.settings;
  std::string out;
  out += "letter-spacing: " + format_decimal(s.character_spacing_em) + "em;\n";
  out += "word-spacing: " + format_decimal(s.word_spacing_em) + "em;\n";
  out += "line-height: " + format_decimal(s.line_height) + ";\n";
  out += "font-family: " + std::string(font_name(s.font)) + ";\n";
  out += "font-size: " + format_decimal(s.font_size_px) + "px;\n";
  return out;
}

std::string theme_to_css_rule(const Theme& theme) {
  std::string out = ".theme-" + theme.theme_id + " {\n";
  const std::string body = theme_to_css(theme);
  std::string_view rest = body;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    out += "  ";
    out += rest.substr(0, nl + 1);
    rest.remove_prefix(nl + 1);
  }
  out += "}\n";
  return out;
}

Theme parse_css_theme(std::string_view text) {
  Theme theme;
  theme.theme_id = "parsed";
  std::string_view body = text;
  if (const auto open = text.find('{'); open != std::string_view::npos) {
    auto selector = trim(text.substr(0, open));
    if (selector.starts_with(".theme-")) selector.remove_prefix(7);
    if (selector.starts_with(".")) selector.remove_prefix(1);
    if (!selector.empty()) theme.theme_id = std::string(selector);
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) throw ParseError("unterminated CSS rule");
    body = text.substr(open + 1, close - open - 1);
  }

  std::optional<double> letter, word, line, size;
  std::optional<FontId> family;
  while (!body.empty()) {
    const auto semi = body.find(';');
    const auto decl = trim(body.substr(0, semi));
    body = semi == std::string_view::npos ? std::string_view{} : body.substr(semi + 1);
    if (decl.empty()) continue;
    const auto colon = decl.find(':');
    if (colon == std::string_view::npos) throw ParseError("malformed declaration '" + std::string(decl) + "'");
    const auto prop = trim(decl.substr(0, colon));
    const auto value = trim(decl.substr(colon + 1));
    if (prop == "letter-spacing") {
      letter = parse_length(prop, value, "em");
      check_range(prop, *letter, kCharacterSpacing);
    } else if (prop == "word-spacing") {
      word = parse_length(prop, value, "em");
      check_range(prop, *word, kWordSpacing);
    } else if (prop == "line-height") {
      line = parse_length(prop, value, "");
      check_range(prop, *line, kLineHeight);
    } else if (prop == "font-family") {
      family = font_from_name(value);
      if (!family) throw ParseError("font-family: unknown font '" + std::string(value) + "'");
    } else if (prop == "font-size") {
      size = parse_length(prop, value, "px");
      if (!(*size > 0.0 && *size <= 200.0)) throw RangeError("font-size", "font-size out of range (0, 200]");
    } else {
      throw ParseError("unsupported property '" + std::string(prop) + "'");
    }
  }
  if (!letter) throw ParseError("missing letter-spacing");
  if (!word) throw ParseError("missing word-spacing");
  if (!line) throw ParseError("missing line-height");
  if (!family) throw ParseError("missing font-family");
  if (!size) throw ParseError("missing font-size");

  theme.settings = TextSettings{*family, *letter, *word, *line, *size};
  return theme;
}

}  // namespace therif
