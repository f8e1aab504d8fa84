#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "therif/core/text_settings.hpp"

namespace therif {

enum class Provenance { ClusterRepresentative, Designer, Validation, PilotPreset, Control };

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

struct Theme {
  std::string theme_id;
  TextSettings settings;
  Provenance provenance = Provenance::Designer;
  int iteration = 0;

  bool operator==(const Theme&) const = default;
};

// Throws RangeError/Error when settings are invalid, iteration is negative,
// or id is empty.
void validate(const Theme& theme);

// Throws Error on duplicate ids.
void require_unique_ids(const std::vector<Theme>& themes);

// The final Compact, Open and Relaxed themes plus the plain control format
// used in reading trials.
Theme compact_theme();
Theme open_theme();
Theme relaxed_theme();
Theme control_theme();
std::vector<Theme> cor_themes();

// The five CSS declarations, one per line, each terminated by ";\n".
std::string theme_to_css(const Theme& theme);
// Wraps theme_to_css in a `.theme-<id> { ... }` rule.
std::string theme_to_css_rule(const Theme& theme);
// Accepts bare declarations or a single rule; whitespace-insensitive.
// The selector (if any) becomes the theme id.
Theme parse_css_theme(std::string_view text);

// Shortest decimal that round-trips; "0" for zero.
std::string format_decimal(double value);

}  // namespace therif
