#include "therif/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "therif/core/error.hpp"
#include "therif/core/json_io.hpp"

namespace therif::sim {

namespace {

struct Axis {
  SettingKey key;
  const SliderSpec* slider;
  double TextSettings::*field;
  double Tolerance::*tolerance;
};

constexpr Axis kAxes[] = {
    {SettingKey::CharacterSpacing, &kCharacterSpacing, &TextSettings::character_spacing_em,
     &Tolerance::character_spacing_em},
    {SettingKey::WordSpacing, &kWordSpacing, &TextSettings::word_spacing_em, &Tolerance::word_spacing_em},
    {SettingKey::LineHeight, &kLineHeight, &TextSettings::line_height, &Tolerance::line_height},
};

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw RangeError(name, std::string(name) + " must be positive");
}

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw RangeError(name, std::string(name) + " must lie in [0, 1]");
}

void check_tolerance(const Tolerance& t) {
  check_positive(t.character_spacing_em, "tolerance.character_spacing_em");
  check_positive(t.word_spacing_em, "tolerance.word_spacing_em");
  check_positive(t.line_height, "tolerance.line_height");
}

std::pair<int, int> bucket_range(AgeBucket b) {
  switch (b) {
    case AgeBucket::Age18To25: return {18, 25};
    case AgeBucket::Age26To35: return {26, 35};
    case AgeBucket::Age36To45: return {36, 45};
    case AgeBucket::Age46To55: return {46, 55};
    case AgeBucket::Age56To87: return {56, 87};
  }
  return {kMinAge, kMaxAge};
}

RatingValue drift(RatingValue v, std::mt19937_64& rng) {
  if (v != RatingValue::Unsure) return RatingValue::Unsure;
  return std::bernoulli_distribution(0.5)(rng) ? RatingValue::Good : RatingValue::Bad;
}

}  // namespace

double PreferenceProfile::affinity(FontId font) const {
  auto it = font_affinity.find(font);
  return it == font_affinity.end() ? 0.0 : it->second;
}

void validate(const PreferenceProfile& p) {
  validate(p.ideal);
  check_tolerance(p.tolerance);
  if (!(p.good_r > 0.0 && p.good_r < p.bad_r)) throw RangeError("good_r", "need 0 < good_r < bad_r");
  check_unit(p.stickiness, "stickiness");
  check_unit(p.label_noise, "label_noise");
  if (!(p.step_noise >= 0.0)) throw RangeError("step_noise", "step_noise must be non-negative");
  check_positive(p.events_per_second, "events_per_second");
  for (const auto& [font, a] : p.font_affinity) check_unit(a, "font_affinity");
}

PopulationSpec default_population_spec() {
  PopulationComponent dys;
  dys.name = "dyslexic";
  dys.weight = 0.5;
  dys.dyslexia = true;
  dys.mean_character_spacing_em = 0.03;
  dys.mean_word_spacing_em = 0.28;
  dys.mean_line_height = 2.25;
  dys.sd_character_spacing_em = 0.07;
  dys.sd_word_spacing_em = 0.35;
  dys.sd_line_height = 0.73;

  PopulationComponent non;
  non.name = "non-dyslexic";
  non.weight = 0.5;
  non.dyslexia = false;
  non.mean_character_spacing_em = 0.02;
  non.mean_word_spacing_em = 0.18;
  non.mean_line_height = 1.93;
  non.sd_character_spacing_em = 0.05;
  non.sd_word_spacing_em = 0.18;
  non.sd_line_height = 0.52;
  return {{dys, non}};
}

PopulationSpec planted_population_spec() {
  auto mode = [](std::string name, bool dyslexia, double c, double w, double l, FontId font) {
    PopulationComponent m;
    m.name = std::move(name);
    m.weight = 1.0 / 3.0;
    m.dyslexia = dyslexia;
    m.mean_character_spacing_em = c;
    m.mean_word_spacing_em = w;
    m.mean_line_height = l;
    m.font_weights = {{font, 1.0}};
    m.tolerance = {kCharacterSpacing.step, kWordSpacing.step, kLineHeight.step};
    m.good_r = 1.0;
    m.bad_r = 3.0;
    m.stickiness = 0.5;
    return m;
  };
  return {{mode("compact", false, 0.0, 0.1, 1.4, FontId::Georgia),
           mode("open", false, 0.02, 0.2, 2.2, FontId::Merriweather),
           mode("relaxed", true, 0.04, 0.3, 4.5, FontId::Montserrat)}};
}

void validate(const PopulationSpec& spec) {
  if (spec.components.empty()) throw RangeError("components", "population needs at least one component");
  double total = 0.0;
  for (const auto& c : spec.components) {
    check_positive(c.weight, "weight");
    total += c.weight;
    check_tolerance(c.tolerance);
    if (!(c.good_r > 0.0 && c.good_r < c.bad_r)) throw RangeError("good_r", "need 0 < good_r < bad_r");
    for (double sd : {c.sd_character_spacing_em, c.sd_word_spacing_em, c.sd_line_height}) {
      if (!(sd >= 0.0)) throw RangeError("sd", "spreads must be non-negative");
    }
    check_unit(c.stickiness, "stickiness");
    check_unit(c.label_noise, "label_noise");
    check_unit(c.affinity_floor, "affinity_floor");
    check_positive(c.events_per_second, "events_per_second");
    for (const auto& [f, w] : c.font_weights) {
      if (!(w >= 0.0)) throw RangeError("font_weights", "font weights must be non-negative");
    }
  }
  if (std::fabs(total - 1.0) > 1e-9) throw RangeError("weight", "component weights must sum to 1");
}

void to_json(nlohmann::json& j, const PopulationSpec& spec) {
  j = nlohmann::json::array();
  for (const auto& c : spec.components) {
    nlohmann::json buckets = nlohmann::json::array();
    for (auto b : c.age_buckets) buckets.push_back(age_bucket_label(b));
    nlohmann::json fonts = nlohmann::json::object();
    for (const auto& [f, w] : c.font_weights) fonts[std::string(font_name(f))] = w;
    j.push_back({{"name", c.name},
                 {"weight", c.weight},
                 {"age_buckets", buckets},
                 {"dyslexia", c.dyslexia},
                 {"mean", {{"character_spacing_em", c.mean_character_spacing_em},
                           {"word_spacing_em", c.mean_word_spacing_em},
                           {"line_height", c.mean_line_height}}},
                 {"sd", {{"character_spacing_em", c.sd_character_spacing_em},
                         {"word_spacing_em", c.sd_word_spacing_em},
                         {"line_height", c.sd_line_height}}},
                 {"font_weights", fonts},
                 {"affinity_floor", c.affinity_floor},
                 {"tolerance", {{"character_spacing_em", c.tolerance.character_spacing_em},
                                {"word_spacing_em", c.tolerance.word_spacing_em},
                                {"line_height", c.tolerance.line_height}}},
                 {"good_r", c.good_r},
                 {"bad_r", c.bad_r},
                 {"stickiness", c.stickiness},
                 {"step_noise", c.step_noise},
                 {"events_per_second", c.events_per_second},
                 {"label_noise", c.label_noise}});
  }
  j = {{"components", j}};
}

void from_json(const nlohmann::json& j, PopulationSpec& spec) {
  spec.components.clear();
  try {
    for (const auto& e : j.at("components")) {
      PopulationComponent c;
      c.name = e.value("name", "");
      c.weight = e.at("weight").get<double>();
      for (const auto& b : e.value("age_buckets", nlohmann::json::array())) {
        c.age_buckets.push_back(parse_age_bucket(b.get<std::string>()));
      }
      c.dyslexia = e.value("dyslexia", false);
      const auto& mean = e.at("mean");
      c.mean_character_spacing_em = mean.at("character_spacing_em").get<double>();
      c.mean_word_spacing_em = mean.at("word_spacing_em").get<double>();
      c.mean_line_height = mean.at("line_height").get<double>();
      if (e.contains("sd")) {
        const auto& sd = e.at("sd");
        c.sd_character_spacing_em = sd.value("character_spacing_em", 0.0);
        c.sd_word_spacing_em = sd.value("word_spacing_em", 0.0);
        c.sd_line_height = sd.value("line_height", 0.0);
      }
      if (e.contains("font_weights")) {
        for (const auto& [name, w] : e.at("font_weights").items()) c.font_weights[parse_font(name)] = w.get<double>();
      }
      c.affinity_floor = e.value("affinity_floor", c.affinity_floor);
      if (e.contains("tolerance")) {
        const auto& t = e.at("tolerance");
        c.tolerance.character_spacing_em = t.value("character_spacing_em", c.tolerance.character_spacing_em);
        c.tolerance.word_spacing_em = t.value("word_spacing_em", c.tolerance.word_spacing_em);
        c.tolerance.line_height = t.value("line_height", c.tolerance.line_height);
      }
      c.good_r = e.value("good_r", c.good_r);
      c.bad_r = e.value("bad_r", c.bad_r);
      c.stickiness = e.value("stickiness", c.stickiness);
      c.step_noise = e.value("step_noise", c.step_noise);
      c.events_per_second = e.value("events_per_second", c.events_per_second);
      c.label_noise = e.value("label_noise", c.label_noise);
      spec.components.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("population spec: ") + ex.what());
  }
  validate(spec);
}

PopulationSpec load_population_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<PopulationSpec>();
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(path.string() + ": " + ex.what());
  }
}

std::vector<SimParticipant> sample_population(const PopulationSpec& spec, int n, std::uint64_t seed,
                                              const std::string& id_prefix) {
  validate(spec);
  if (n < 1) throw RangeError("n", "population size must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (const auto& c : spec.components) weights.push_back(c.weight);
  std::discrete_distribution<int> pick_component(weights.begin(), weights.end());
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<SimParticipant> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    SimParticipant sp;
    sp.component = pick_component(rng);
    const auto& c = spec.components[sp.component];

    const auto& buckets = c.age_buckets.empty() ? std::vector<AgeBucket>(std::begin(kAllAgeBuckets), std::end(kAllAgeBuckets))
                                                : c.age_buckets;
    const auto bucket = buckets[std::uniform_int_distribution<std::size_t>(0, buckets.size() - 1)(rng)];
    const auto [lo, hi] = bucket_range(bucket);
    const int age = std::uniform_int_distribution<int>(lo, hi)(rng);
    const double score = c.dyslexia ? kDefaultDyslexiaThreshold + 1.0 + 30.0 * u(rng)
                                    : kDefaultDyslexiaThreshold - 1.0 - 30.0 * u(rng);
    sp.participant = make_participant(id_prefix + std::to_string(i), age, score);

    const double cs = c.mean_character_spacing_em + c.sd_character_spacing_em * z(rng);
    const double ws = c.mean_word_spacing_em + c.sd_word_spacing_em * z(rng);
    const double lh = c.mean_line_height + c.sd_line_height * z(rng);

    FontId font;
    if (c.font_weights.empty()) {
      font = kStudyFonts[std::uniform_int_distribution<std::size_t>(0, kStudyFonts.size() - 1)(rng)];
    } else {
      std::vector<FontId> fonts;
      std::vector<double> fw;
      for (const auto& [f, w] : c.font_weights) {
        fonts.push_back(f);
        fw.push_back(w);
      }
      font = fonts[std::discrete_distribution<std::size_t>(fw.begin(), fw.end())(rng)];
    }

    auto& p = sp.profile;
    p.ideal = snap_to_lattice(make_settings(font, cs, ws, lh));
    p.tolerance = c.tolerance;
    p.good_r = c.good_r;
    p.bad_r = c.bad_r;
    p.stickiness = c.stickiness;
    p.step_noise = c.step_noise;
    p.events_per_second = c.events_per_second;
    p.label_noise = c.label_noise;
    for (FontId f : kAllFonts) {
      const double a = c.affinity_floor + (1.0 - c.affinity_floor) * u(rng);
      p.font_affinity[f] = f == font ? 1.0 : a;
    }
    out.push_back(std::move(sp));
  }
  return out;
}

double preference_distance(const PreferenceProfile& profile, const TextSettings& s) {
  double d = 0.0;
  for (const auto& axis : kAxes) {
    d = std::max(d, std::fabs(s.*axis.field - profile.ideal.*axis.field) / (profile.tolerance.*axis.tolerance));
  }
  return d + (1.0 - profile.affinity(s.font));
}

RatingValue rate_theme(const PreferenceProfile& profile, const Theme& theme) {
  const double d = preference_distance(profile, theme.settings);
  if (d <= profile.good_r) return RatingValue::Good;
  if (d >= profile.bad_r) return RatingValue::Bad;
  return RatingValue::Unsure;
}

SessionOutcome simulate_session(const PreferenceProfile& profile, std::span<const Theme> shown, std::uint64_t seed,
                                const SessionOptions& options) {
  if (shown.empty()) throw Error("simulate_session needs at least one theme");
  std::mt19937_64 rng(seed);
  SessionOutcome out;

  std::size_t fav = 0;
  if (options.review) {
    double best = preference_distance(profile, shown[0].settings);
    for (std::size_t i = 1; i < shown.size(); ++i) {
      const double d = preference_distance(profile, shown[i].settings);
      if (d < best) {
        best = d;
        fav = i;
      }
    }
    std::vector<RatingValue> primary;
    for (std::size_t i = 0; i < shown.size(); ++i) {
      primary.push_back(rate_theme(profile, shown[i]));
      out.ratings.push_back({options.session_id, shown[i].theme_id, ReviewPhase::Primary, primary.back(), i == fav});
    }
    std::vector<std::size_t> order(shown.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution noisy(profile.label_noise);
    for (std::size_t i : order) {
      RatingValue v = primary[i];
      if (i != fav && noisy(rng)) v = drift(v, rng);
      out.ratings.push_back({options.session_id, shown[i].theme_id, ReviewPhase::Secondary, v, i == fav});
    }
  }
  out.start_theme = shown[fav];
  out.favorite_theme_id = shown[fav].theme_id;

  const TextSettings start = shown[fav].settings;
  TextSettings cur = start;
  std::vector<RefinementEvent> events;
  std::exponential_distribution<double> wait(profile.events_per_second);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::int64_t t = 0;
  auto tick = [&] {
    t += std::max<std::int64_t>(1, std::llround(wait(rng) * 1000.0));
    return t;
  };

  const auto max_events = static_cast<std::size_t>(options.max_events);
  if (cur.font != profile.ideal.font && preference_distance(profile, cur) > profile.good_r &&
      std::bernoulli_distribution(1.0 - profile.stickiness)(rng)) {
    events.push_back({tick(), SettingKey::Font, cur.font, profile.ideal.font});
    cur = make_settings(profile.ideal.font, cur.character_spacing_em, cur.word_spacing_em, cur.line_height);
  }
  while (events.size() < max_events && preference_distance(profile, cur) > profile.good_r) {
    const Axis* worst = nullptr;
    double worst_dev = 0.0;
    for (const auto& axis : kAxes) {
      const double target = axis.slider->snap(profile.ideal.*axis.field);
      if (std::fabs(target - cur.*axis.field) < 1e-9) continue;
      const double dev = std::fabs(cur.*axis.field - profile.ideal.*axis.field) / (profile.tolerance.*axis.tolerance);
      if (!worst || dev > worst_dev) {
        worst = &axis;
        worst_dev = dev;
      }
    }
    if (!worst) break;  // every spacing already sits on the ideal lattice point
    const double target = worst->slider->snap(profile.ideal.*worst->field);
    const double old = cur.*worst->field;
    const long steps = std::max(1L, std::lround(1.0 + profile.step_noise * noise(rng)));
    const double move = std::min(steps * worst->slider->step, std::fabs(target - old));
    const double next = worst->slider->snap(old + (target > old ? move : -move));
    events.push_back({tick(), worst->key, old, next});
    cur.*worst->field = next;
  }

  out.log.session_id = options.session_id;
  out.log.participant_id = options.participant_id;
  out.log.start_theme_id = shown[fav].theme_id;
  out.log.start_settings = start;
  out.log.final_settings = apply_events(start, events);
  out.log.events = std::move(events);
  out.log.adjust_duration_ms = t;
  return out;
}

}  // namespace therif::sim
