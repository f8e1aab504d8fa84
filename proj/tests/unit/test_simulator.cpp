#include <doctest.h>

#include <cmath>

#include "therif/core/error.hpp"
#include "therif/core/theme.hpp"
#include "therif/sim/simulator.hpp"

using namespace therif;
using namespace therif::sim;

namespace {

PreferenceProfile tight_profile(const TextSettings& ideal) {
  PreferenceProfile p;
  p.ideal = ideal;
  p.tolerance = {kCharacterSpacing.step, kWordSpacing.step, kLineHeight.step};
  for (FontId f : kAllFonts) p.font_affinity[f] = f == ideal.font ? 1.0 : 0.8;
  return p;
}

Theme theme(const std::string& id, const TextSettings& s) { return Theme{id, s, Provenance::Designer, 1}; }

double steps_off(const TextSettings& a, const TextSettings& b) {
  return std::max({std::fabs(a.character_spacing_em - b.character_spacing_em) / kCharacterSpacing.step,
                   std::fabs(a.word_spacing_em - b.word_spacing_em) / kWordSpacing.step,
                   std::fabs(a.line_height - b.line_height) / kLineHeight.step});
}

}  // namespace

TEST_CASE("default population matches the reported cohort means") {
  const auto pop = sample_population(default_population_spec(), 1000, 3);
  REQUIRE(pop.size() == 1000);
  double sum = 0;
  int n = 0;
  for (const auto& p : pop) {
    CHECK_NOTHROW(validate(p.profile));
    CHECK(p.participant.dyslexia == (p.component == 0));
    CHECK(snap_to_lattice(p.profile.ideal) == p.profile.ideal);
    if (p.participant.dyslexia) {
      sum += p.profile.ideal.line_height;
      ++n;
    }
  }
  CHECK(n > 400);
  CHECK(std::fabs(sum / n - 2.25) <= 0.07);
  CHECK(pop[17].participant.participant_id == "P17");
}

TEST_CASE("population sampling is deterministic and honours zero spread") {
  const auto a = sample_population(default_population_spec(), 50, 9, "X");
  const auto b = sample_population(default_population_spec(), 50, 9, "X");
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].participant == b[i].participant);
    CHECK(a[i].profile.ideal == b[i].profile.ideal);
  }
  PopulationSpec one{{planted_population_spec().components[1]}};
  one.components[0].weight = 1.0;
  const auto same = sample_population(one, 30, 1);
  for (const auto& p : same) CHECK(p.profile.ideal == same[0].profile.ideal);
  CHECK(same[0].profile.ideal == make_settings(FontId::Merriweather, 0.02, 0.2, 2.2));
}

TEST_CASE("population spec validation and json round trip") {
  auto spec = default_population_spec();
  spec.components[0].weight = 0.7;
  CHECK_THROWS_AS(validate(spec), RangeError);
  CHECK_THROWS_AS(sample_population(default_population_spec(), 0, 1), RangeError);

  const auto planted = planted_population_spec();
  const auto back = nlohmann::json(planted).get<PopulationSpec>();
  REQUIRE(back.components.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.components[i].name == planted.components[i].name);
    CHECK(back.components[i].mean_line_height == planted.components[i].mean_line_height);
    CHECK(back.components[i].font_weights == planted.components[i].font_weights);
    CHECK(back.components[i].tolerance == planted.components[i].tolerance);
  }
  CHECK(sample_population(back, 20, 4)[5].profile.ideal == sample_population(planted, 20, 4)[5].profile.ideal);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"components":[{"weight":1}]})").get<PopulationSpec>(), ParseError);
}

TEST_CASE("rating thresholds") {
  const auto p = tight_profile(open_theme().settings);
  CHECK(rate_theme(p, open_theme()) == RatingValue::Good);
  auto far = open_theme().settings;
  far.line_height += 10 * p.tolerance.line_height;
  CHECK(rate_theme(p, theme("far", far)) == RatingValue::Bad);
  auto mid = open_theme().settings;
  mid.line_height += 0.2;
  CHECK(rate_theme(p, theme("mid", mid)) == RatingValue::Unsure);

  // validation-style format against sampled dyslexic profiles
  const auto pop = sample_population(default_population_spec(), 1000, 5);
  const Theme bad{"v", make_settings(FontId::Arial, 0.0, 1.0, 1.0), Provenance::Validation, 0};
  int dyslexic = 0, rated_bad = 0;
  for (const auto& sp : pop) {
    if (!sp.participant.dyslexia) continue;
    ++dyslexic;
    rated_bad += rate_theme(sp.profile, bad) == RatingValue::Bad;
  }
  CHECK(rated_bad >= 0.9 * dyslexic);
}

TEST_CASE("favorite within reach needs no refinement") {
  const auto p = tight_profile(compact_theme().settings);
  const std::vector<Theme> shown{open_theme(), compact_theme(), relaxed_theme()};
  const auto out = simulate_session(p, shown, 1, {.session_id = "s1"});
  CHECK(out.favorite_theme_id == compact_theme().theme_id);
  CHECK(out.log.events.empty());
  CHECK(out.log.adjust_duration_ms == 0);
  CHECK(out.log.final_settings == compact_theme().settings);
  REQUIRE(out.ratings.size() == 6);
  int favorites[2] = {0, 0};
  for (const auto& r : out.ratings) favorites[r.phase == ReviewPhase::Secondary] += r.is_favorite;
  CHECK(favorites[0] == 1);
  CHECK(favorites[1] == 1);
  for (int i = 0; i < 3; ++i) CHECK(out.ratings[i].theme_id == shown[i].theme_id);
}

TEST_CASE("greedy refinement reaches the ideal from a distant theme") {
  auto p = tight_profile(make_settings(FontId::Georgia, 0.12, 0.45, 3.7));
  p.stickiness = 0.0;
  const std::vector<Theme> shown{theme("start", make_settings(FontId::Arial, 0.0, 0.0, 1.5))};
  const auto out = simulate_session(p, shown, 2, {.review = false});
  CHECK(out.ratings.empty());
  CHECK(out.log.final_settings.font == FontId::Georgia);
  CHECK(steps_off(out.log.final_settings, p.ideal) <= 1.0 + 1e-9);
  CHECK_NOTHROW(verify_log(out.log));
  CHECK(out.log.adjust_duration_ms == out.log.events.back().t_ms);
  for (std::size_t i = 1; i < out.log.events.size(); ++i) CHECK(out.log.events[i].t_ms > out.log.events[i - 1].t_ms);
}

TEST_CASE("favorite follows the closest planted mode") {
  const auto pop = sample_population(planted_population_spec(), 60, 8);
  const std::vector<Theme> shown{compact_theme(), open_theme(), relaxed_theme()};
  for (const auto& sp : pop) {
    const auto out = simulate_session(sp.profile, shown, 3);
    CHECK(out.favorite_theme_id == shown[sp.component].theme_id);
  }
}

TEST_CASE("sessions are deterministic, well formed and move toward the ideal") {
  const auto pop = sample_population(default_population_spec(), 150, 11);
  const std::vector<Theme> shown{compact_theme(), open_theme(), relaxed_theme(), control_theme()};
  double before = 0, after = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& prof = pop[i].profile;
    const auto a = simulate_session(prof, shown, 100 + i);
    const auto b = simulate_session(prof, shown, 100 + i);
    CHECK(a.log == b.log);
    CHECK(a.ratings == b.ratings);
    CHECK_NOTHROW(verify_log(a.log));
    CHECK(a.log.events.size() <= 200);
    for (const auto* s : {&a.log.start_settings, &a.log.final_settings}) {
      const double d = std::fabs(s->character_spacing_em - prof.ideal.character_spacing_em) +
                       std::fabs(s->word_spacing_em - prof.ideal.word_spacing_em) +
                       std::fabs(s->line_height - prof.ideal.line_height);
      (s == &a.log.start_settings ? before : after) += d;
    }
  }
  CHECK(after <= before);
  CHECK_THROWS_AS(simulate_session(pop[0].profile, std::span<const Theme>{}, 1), Error);
}
