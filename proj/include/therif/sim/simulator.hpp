#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "therif/core/participant.hpp"
#include "therif/core/refinement.hpp"
#include "therif/core/theme.hpp"

namespace therif::sim {

// Per-setting radius used to normalize distances.
struct Tolerance {
  double character_spacing_em = 0.05;
  double word_spacing_em = 0.15;
  double line_height = 0.5;

  bool operator==(const Tolerance&) const = default;
};

struct PreferenceProfile {
  TextSettings ideal;
  Tolerance tolerance;
  double good_r = 1.0;
  double bad_r = 2.5;
  std::map<FontId, double> font_affinity;  // missing fonts count as 0
  double stickiness = 0.7;                 // chance of keeping the start font
  double step_noise = 0.5;                 // sd of the per-event step count
  double events_per_second = 0.5;
  double label_noise = 0.1;                // chance a secondary rating drifts one level

  double affinity(FontId font) const;
};

// Throws RangeError on broken invariants.
void validate(const PreferenceProfile& profile);

struct PopulationComponent {
  std::string name;
  double weight = 1.0;
  std::vector<AgeBucket> age_buckets;  // drawn uniformly; empty means all five
  bool dyslexia = false;
  double mean_character_spacing_em = 0.0;
  double mean_word_spacing_em = 0.0;
  double mean_line_height = 1.5;
  double sd_character_spacing_em = 0.0;
  double sd_word_spacing_em = 0.0;
  double sd_line_height = 0.0;
  std::map<FontId, double> font_weights;  // ideal font draw; empty means uniform over study fonts
  double affinity_floor = 0.7;            // other fonts' affinity is uniform in [floor, 1)
  Tolerance tolerance;
  double good_r = 1.0;
  double bad_r = 2.5;
  double stickiness = 0.7;
  double step_noise = 0.5;
  double events_per_second = 0.5;
  double label_noise = 0.1;
};

struct PopulationSpec {
  std::vector<PopulationComponent> components;
};

// Dyslexic / non-dyslexic mixture built from the reported means and SDs.
PopulationSpec default_population_spec();
// Three zero-spread modes at the Compact, Open and Relaxed spacings, one slider
// step of tolerance, fonts Georgia / Merriweather / Montserrat.
PopulationSpec planted_population_spec();

// Weights must be positive and sum to 1 (1e-9); throws RangeError.
void validate(const PopulationSpec& spec);

void to_json(nlohmann::json& j, const PopulationSpec& spec);
void from_json(const nlohmann::json& j, PopulationSpec& spec);
PopulationSpec load_population_spec(const std::filesystem::path& path);

struct SimParticipant {
  Participant participant;
  PreferenceProfile profile;
  int component = 0;
};

// Ids are `<id_prefix><index>`.
std::vector<SimParticipant> sample_population(const PopulationSpec& spec, int n, std::uint64_t seed,
                                              const std::string& id_prefix = "P");

// Chebyshev distance over tolerance-normalized spacings plus (1 - font affinity).
double preference_distance(const PreferenceProfile& profile, const TextSettings& settings);
RatingValue rate_theme(const PreferenceProfile& profile, const Theme& theme);

struct SessionOptions {
  std::string session_id = "S";
  std::string participant_id = "P";
  bool review = true;  // false for R0: straight to refinement from the first theme
  int max_events = 200;
};

struct SessionOutcome {
  std::vector<RatingRecord> ratings;  // primary then secondary
  std::string favorite_theme_id;
  Theme start_theme;
  RefinementLog log;
};

// Throws Error on an empty theme list.
SessionOutcome simulate_session(const PreferenceProfile& profile, std::span<const Theme> shown, std::uint64_t seed,
                                const SessionOptions& options = {});

}  // namespace therif::sim
