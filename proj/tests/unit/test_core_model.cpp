#include <cmath>
#include <random>

#include "doctest.h"
#include "therif/core/json_io.hpp"
#include "therif/core/participant.hpp"
#include "therif/core/refinement.hpp"
#include "therif/core/theme.hpp"

using namespace therif;

namespace {

RefinementEvent ev(std::int64_t t, SettingKey k, SettingValue from, SettingValue to) {
  return RefinementEvent{t, k, from, to};
}

TextSettings random_valid_settings(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> font(0, static_cast<int>(kAllFonts.size()) - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](const SliderSpec& s) { return s.snap(s.min + u(rng) * (s.max - s.min)); };
  return make_settings(kAllFonts[font(rng)], draw(kCharacterSpacing), draw(kWordSpacing), draw(kLineHeight));
}

}  // namespace

TEST_CASE("normalized font sizes reproduce the published theme sizes") {
  CHECK(normalized_font_size(FontId::Times) == 17.0);
  CHECK(std::fabs(normalized_font_size(FontId::Georgia) - 15.8) < 0.05);
  CHECK(std::fabs(normalized_font_size(FontId::Merriweather) - 15.8) < 0.05);
  CHECK(std::fabs(normalized_font_size(FontId::Poppins) - 14.1) < 0.05);
}

TEST_CASE("normalization equalizes the rendered x-height") {
  const auto& table = FontMetricTable::builtin();
  const double reference = table.at(FontId::Times).x_height_ratio * 17.0;
  for (auto f : kAllFonts) {
    CHECK(std::fabs(normalized_font_size(f) * table.at(f).x_height_ratio - reference) < 0.05);
  }
}

TEST_CASE("metric table covers every font within ratio bounds") {
  const auto& table = FontMetricTable::builtin();
  for (auto f : kAllFonts) {
    REQUIRE(table.contains(f));
    CHECK(table.at(f).x_height_ratio > 0.30);
    CHECK(table.at(f).x_height_ratio < 0.70);
    CHECK(table.at(f).avg_advance_ratio > 0.30);
    CHECK(table.at(f).avg_advance_ratio < 0.70);
  }
  const auto from_disk = FontMetricTable::load(std::string(THERIF_SOURCE_DIR) + "/data/font_metrics.json");
  for (auto f : kAllFonts) CHECK(from_disk.at(f).x_height_ratio == table.at(f).x_height_ratio);
}

TEST_CASE("missing metric is reported") {
  FontMetricTable partial({{FontId::Times, FontMetrics{0.4473, true, 0.44, "t"}}});
  CHECK_THROWS_AS(normalized_font_size(FontId::Georgia, partial), MissingMetricError);
  CHECK_THROWS_AS(FontMetricTable({{FontId::Times, FontMetrics{0.2, true, 0.44, ""}}}), RangeError);
}

TEST_CASE("theme_to_css emits the five declarations in order") {
  CHECK(theme_to_css(open_theme()) ==
        "letter-spacing: 0.02em;\nword-spacing: 0.2em;\nline-height: 2.2;\n"
        "font-family: Merriweather;\nfont-size: 15.8px;\n");
  CHECK(theme_to_css(compact_theme()) ==
        "letter-spacing: 0em;\nword-spacing: 0.1em;\nline-height: 1.4;\n"
        "font-family: Georgia;\nfont-size: 15.8px;\n");
  const auto control = theme_to_css(control_theme());
  CHECK(control.find("letter-spacing: 0em;\nword-spacing: 0em;\nline-height: 1;\nfont-family: Arial;") == 0);
}

TEST_CASE("parse_css_theme round-trips and reports errors") {
  const auto relaxed = parse_css_theme(theme_to_css(relaxed_theme()));
  CHECK(relaxed.settings == relaxed_theme().settings);
  CHECK(relaxed.settings.font == FontId::Poppins);
  CHECK(relaxed.settings.line_height == 4.5);
  CHECK(relaxed.settings.font_size_px == 14.1);

  const auto rule = parse_css_theme(theme_to_css_rule(open_theme()));
  CHECK(rule.theme_id == "open");
  CHECK(rule.settings == open_theme().settings);

  CHECK(parse_css_theme("  letter-spacing:0em ;word-spacing : 0.1em;line-height:1.4;font-family:'Open Sans';"
                        "font-size:16px").settings.font == FontId::OpenSans);

  try {
    parse_css_theme("");
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()) == "missing letter-spacing");
  }
  try {
    parse_css_theme("line-height: 9");
    FAIL("expected range error");
  } catch (const RangeError& e) {
    CHECK(e.property() == "line-height");
  }
  CHECK_THROWS_AS(parse_css_theme("letter-spacing: 0em; word-spacing: 0em; line-height: 1.2; "
                                  "font-family: Comic Sans; font-size: 16px;"),
                  ParseError);
  CHECK_THROWS_AS(parse_css_theme("letter-spacing: 0.1px;"), ParseError);
}

TEST_CASE("css export is a bijection on random valid lattice settings") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    Theme t{"t" + std::to_string(i), random_valid_settings(rng), Provenance::Designer, 1};
    const auto css = theme_to_css(t);
    CHECK(parse_css_theme(css).settings == t.settings);
    CHECK(theme_to_css(parse_css_theme(css)) == css);
  }
}

TEST_CASE("css export round-trips arbitrary in-range doubles") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(-0.05, 0.5), w(-0.05, 1.0), l(1.0, 5.0), px(8.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    Theme t{"x", TextSettings{FontId::Roboto, c(rng), w(rng), l(rng), px(rng)}, Provenance::Designer, 0};
    CHECK(parse_css_theme(theme_to_css(t)).settings == t.settings);
  }
}

TEST_CASE("apply_events folds the log") {
  const auto compact = compact_theme().settings;
  CHECK(apply_events(compact, {}) == compact);

  const std::vector<RefinementEvent> events = {
      ev(100, SettingKey::LineHeight, 1.4, 2.2),
      ev(250, SettingKey::Font, FontId::Georgia, FontId::Merriweather),
      ev(300, SettingKey::WordSpacing, 0.1, 0.2),
      ev(900, SettingKey::CharacterSpacing, 0.0, 0.02),
  };
  CHECK(apply_events(compact, events) == open_theme().settings);

  const std::vector<RefinementEvent> stale = {ev(0, SettingKey::LineHeight, 1.6, 2.0)};
  try {
    apply_events(compact, stale);
    FAIL("expected corruption");
  } catch (const LogCorruptionError& e) {
    CHECK(e.index() == 0);
    CHECK(e.key() == "line_height");
  }

  const std::vector<RefinementEvent> backwards = {ev(10, SettingKey::LineHeight, 1.4, 1.5),
                                                  ev(5, SettingKey::LineHeight, 1.5, 1.6)};
  CHECK_THROWS_AS(apply_events(compact, backwards), LogCorruptionError);
  const std::vector<RefinementEvent> wrong_type = {ev(0, SettingKey::Font, 1.4, 1.5)};
  CHECK_THROWS_AS(apply_events(compact, wrong_type), LogCorruptionError);
  const std::vector<RefinementEvent> out_of_range = {ev(0, SettingKey::LineHeight, 1.4, 7.0)};
  CHECK_THROWS_AS(apply_events(compact, out_of_range), LogCorruptionError);
}

TEST_CASE("verify_log checks reconstruction and duration") {
  RefinementLog log;
  log.start_settings = compact_theme().settings;
  log.events = {ev(100, SettingKey::LineHeight, 1.4, 1.5)};
  log.final_settings = log.start_settings;
  log.final_settings.line_height = 1.5;
  log.adjust_duration_ms = 200;
  CHECK_NOTHROW(verify_log(log));
  log.adjust_duration_ms = 50;
  CHECK_THROWS_AS(verify_log(log), LogCorruptionError);
  log.adjust_duration_ms = 200;
  log.final_settings.word_spacing_em = 0.3;
  CHECK(first_divergent_key(apply_events(log.start_settings, log.events), log.final_settings) == "word_spacing_em");
  CHECK_THROWS_AS(verify_log(log), LogCorruptionError);
}

TEST_CASE("age buckets follow the recruitment brackets") {
  CHECK(age_bucket_label(age_bucket(25)) == "18-25");
  CHECK(age_bucket_label(age_bucket(26)) == "26-35");
  for (int age = kMinAge; age <= kMaxAge; ++age) {
    const auto label = std::string(age_bucket_label(age_bucket(age)));
    const auto dash = label.find('-');
    const int lo = std::stoi(label.substr(0, dash));
    const int hi = std::stoi(label.substr(dash + 1));
    CHECK(age >= lo);
    CHECK(age <= hi);
  }
  CHECK_THROWS_AS(age_bucket(17), RangeError);
  CHECK_THROWS_AS(age_bucket(88), RangeError);
}

TEST_CASE("dyslexia flag derives from the score threshold") {
  CHECK(make_participant("a", 30, 60.0).dyslexia);
  CHECK_FALSE(make_participant("b", 30, 20.0).dyslexia);
  CHECK_FALSE(make_participant("c", 30, 60.0, 70.0).dyslexia);
}

TEST_CASE("slider lattice snapping") {
  CHECK(kLineHeight.snap(2.23) == 2.2);
  CHECK(kWordSpacing.snap(0.28) == 0.3);
  CHECK(kCharacterSpacing.snap(0.7) == 0.5);
  CHECK(format_decimal(kLineHeight.snap(0.1 * 3 + 1.0)) == "1.3");
  CHECK(format_decimal(kCharacterSpacing.snap(-0.001)) == "0");
}

TEST_CASE("json records round-trip") {
  RefinementLog log;
  log.session_id = "s1";
  log.participant_id = "p1";
  log.start_theme_id = "compact";
  log.start_settings = compact_theme().settings;
  log.events = {ev(12, SettingKey::Font, FontId::Georgia, FontId::Poppins), ev(40, SettingKey::WordSpacing, 0.1, 0.15)};
  log.final_settings = apply_events(log.start_settings, log.events);
  log.adjust_duration_ms = 50;
  const json j = log;
  CHECK(j.get<RefinementLog>() == log);

  const auto themes = cor_themes();
  CHECK(json(themes).get<std::vector<Theme>>() == themes);

  Participant p = make_participant("p", 56, 50.0);
  CHECK(json(p)["age_bucket"] == "56-87");
  CHECK(json(p).get<Participant>() == p);
}
