#include "therif/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "therif/cluster/report_json.hpp"
#include "therif/core/error.hpp"
#include "therif/core/json_io.hpp"
#include "therif/core/seed.hpp"
#include "therif/render/renderer.hpp"

namespace therif {
extern const char* const kBuiltinValidationThemesJson;
}

namespace therif::pipeline {

using nlohmann::json;

namespace {

std::string compact_font_name(FontId f) {
  std::string s(font_name(f));
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  return s;
}

std::vector<Theme> parse_pool(const json& j, const std::string& origin) {
  std::vector<Theme> pool;
  try {
    pool = j.get<std::vector<Theme>>();
  } catch (const json::exception& ex) {
    throw PipelineError(origin + ": " + ex.what());
  }
  if (static_cast<int>(pool.size()) != kValidationPoolSize) {
    throw PipelineError(origin + ": expected " + std::to_string(kValidationPoolSize) + " validation themes, found " +
                        std::to_string(pool.size()));
  }
  for (const auto& t : pool) {
    validate(t);
    if (t.provenance != Provenance::Validation) throw PipelineError(origin + ": " + t.theme_id + " is not a validation theme");
  }
  require_unique_ids(pool);
  return pool;
}

std::string settings_key(const TextSettings& s) {
  return std::string(font_name(s.font)) + "|" + format_decimal(s.character_spacing_em) + "|" +
         format_decimal(s.word_spacing_em) + "|" + format_decimal(s.line_height) + "|" + format_decimal(s.font_size_px);
}

const raster::PassageText& stage2_passage() { return raster::grade12_passage(); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << text;
    if (!out.flush()) throw Error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path iteration_dir(const std::filesystem::path& root, int index) {
  return root / "iterations" / ("R" + std::to_string(index));
}

void to_json(json& j, const IterationMetrics& m) {
  j = json{{"iteration", m.iteration},
           {"sessions", m.sessions},
           {"cluster_count", m.cluster_count},
           {"silhouette", m.silhouette},
           {"delta_character_spacing_em", m.delta_character_spacing_em},
           {"delta_word_spacing_em", m.delta_word_spacing_em},
           {"delta_line_height", m.delta_line_height},
           {"delta_steps", m.delta_steps},
           {"mean_adjust_duration_ms", m.mean_adjust_duration_ms},
           {"font_keep_rate", m.font_keep_rate},
           {"validation_favorite_rate", m.validation_favorite_rate}};
}

}  // namespace

Theme init_r0(const Participant& participant, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, participant.participant_id));
  const auto preset = std::uniform_int_distribution<std::size_t>(0, kPilotPresets.size() - 1)(rng);
  const auto font = kStudyFonts[std::uniform_int_distribution<std::size_t>(0, kStudyFonts.size() - 1)(rng)];
  const auto& p = kPilotPresets[preset];
  return Theme{"pilot-" + std::to_string(preset + 1) + "-" + compact_font_name(font),
               make_settings(font, p.character_spacing_em, p.word_spacing_em, p.line_height), Provenance::PilotPreset, 0};
}

const std::vector<Theme>& builtin_validation_pool() {
  static const std::vector<Theme> pool = parse_pool(json::parse(kBuiltinValidationThemesJson), "built-in validation pool");
  return pool;
}

std::vector<Theme> load_validation_pool(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& ex) {
    throw PipelineError(path.string() + ": " + ex.what());
  }
  return parse_pool(j, path.string());
}

std::vector<Theme> assemble_iteration_themes(std::span<const Theme> reps, std::span<const Theme> designer,
                                             std::span<const Theme> pool, std::uint64_t session_seed) {
  if (reps.empty()) throw PipelineError("no cluster representatives to show");
  if (static_cast<int>(pool.size()) != kValidationPoolSize) {
    throw PipelineError("validation pool must hold " + std::to_string(kValidationPoolSize) + " themes");
  }
  std::mt19937_64 rng(session_seed);
  std::vector<Theme> out(reps.begin(), reps.end());
  out.insert(out.end(), designer.begin(), designer.end());
  out.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

void to_json(json& j, const Stage2Options& o) {
  j = json{{"crops_per_format", o.crops_per_format},
           {"train_crops_per_format", o.train_crops_per_format},
           {"train", {{"learning_rate", o.train.learning_rate},
                      {"momentum", o.train.momentum},
                      {"batch_size", o.train.batch_size},
                      {"epochs", o.train.epochs},
                      {"seed", o.train.seed}}},
           {"policy", o.policy == ModelPolicy::Reuse ? "reuse" : "retrain"},
           {"cluster", {{"k_max", o.cluster.k_max},
                        {"smoothing", o.cluster.smoothing},
                        {"restarts", o.cluster.restarts},
                        {"seed", o.cluster.seed}}},
           {"seed", o.seed}};
}

void from_json(const json& j, Stage2Options& o) {
  o.crops_per_format = j.value("crops_per_format", o.crops_per_format);
  o.train_crops_per_format = j.value("train_crops_per_format", o.train_crops_per_format);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    o.train.learning_rate = t.value("learning_rate", o.train.learning_rate);
    o.train.momentum = t.value("momentum", o.train.momentum);
    o.train.batch_size = t.value("batch_size", o.train.batch_size);
    o.train.epochs = t.value("epochs", o.train.epochs);
    o.train.seed = t.value("seed", o.train.seed);
  }
  const auto policy = j.value("policy", std::string("reuse"));
  if (policy == "reuse") {
    o.policy = ModelPolicy::Reuse;
  } else if (policy == "retrain") {
    o.policy = ModelPolicy::Retrain;
  } else {
    throw ParseError("unknown model policy " + policy);
  }
  if (j.contains("cluster")) {
    const auto& c = j.at("cluster");
    o.cluster.k_max = c.value("k_max", o.cluster.k_max);
    o.cluster.smoothing = c.value("smoothing", o.cluster.smoothing);
    o.cluster.restarts = c.value("restarts", o.cluster.restarts);
    o.cluster.seed = c.value("seed", o.cluster.seed);
  }
  o.seed = j.value("seed", o.seed);
  if (o.crops_per_format < 1 || o.train_crops_per_format < 2) throw RangeError("crops_per_format", "crop counts too small");
}

Stage2Result run_stage2(std::span<const RefinementLog> logs, std::span<const Participant> participants, int iteration,
                        std::optional<learn::CnnModel>& model, const Stage2Options& options) {
  if (logs.size() < 2) throw PipelineError("stage 2 needs at least 2 refinement logs");
  if (!participants.empty() && participants.size() != logs.size()) {
    throw PipelineError("participants must align with logs");
  }

  // One render per distinct setting; identical formats share crops and embeddings.
  struct Format {
    std::string key;
    TextSettings settings;
    std::optional<raster::RasterImage> image;
  };
  std::vector<Format> formats;
  std::map<std::string, std::size_t> by_key;
  std::vector<std::size_t> log_format(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto key = settings_key(logs[i].final_settings);
    auto [it, inserted] = by_key.emplace(key, formats.size());
    if (inserted) {
      Format f{key, logs[i].final_settings, std::nullopt};
      try {
        auto img = raster::render(f.settings, stage2_passage());
        // probe once so unsamplable formats are known before training
        raster::sample_crops(img, 1, derive_seed(options.seed, "probe/" + key));
        f.image = std::move(img);
      } catch (const Error&) {
      }
      formats.push_back(std::move(f));
    }
    log_format[i] = it->second;
  }

  Stage2Result out;
  std::vector<std::size_t> usable;
  for (std::size_t f = 0; f < formats.size(); ++f) {
    if (formats[f].image) usable.push_back(f);
  }
  if (usable.empty()) throw PipelineError("no refined format could be rendered");

  if (!model || options.policy == ModelPolicy::Retrain) {
    if (usable.size() >= 2) {
      std::vector<raster::Crop> crops;
      for (auto f : usable) {
        auto c = raster::sample_crops(*formats[f].image, options.train_crops_per_format,
                                      derive_seed(options.seed, "train/" + formats[f].key), formats[f].key);
        crops.insert(crops.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
      }
      auto ds = learn::make_dataset(std::move(crops), 0.2, options.train.seed);
      auto trained = learn::train(ds, options.train);
      model = std::move(trained.model);
      out.trained = true;
      out.train_accuracy = trained.test_accuracy;
    } else if (!model) {
      model = learn::CnnModel(2, {.seed = options.train.seed});
    }
  }

  std::vector<learn::FeatureVector> embeddings(formats.size());
  for (auto f : usable) {
    const auto crops = raster::sample_crops(*formats[f].image, options.crops_per_format,
                                            derive_seed(options.seed, "embed/" + formats[f].key), formats[f].key);
    embeddings[f] = learn::embed_format(*model, crops);
    formats[f].image.reset();
  }

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<cluster::FormatRecord> records;
  std::vector<Participant> people;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& f = formats[log_format[i]];
    if (embeddings[log_format[i]].empty()) {
      out.report.skipped_formats.push_back(logs[i].session_id);
      continue;
    }
    ids.push_back(logs[i].session_id);
    rows.push_back(embeddings[log_format[i]]);
    records.push_back({logs[i].session_id, f.settings, logs[i].participant_id});
    if (!participants.empty()) people.push_back(participants[i]);
  }
  const auto x = cluster::FeatureMatrix::from_rows(ids, rows);
  auto outcome = cluster::cluster_formats(x, records, people, iteration, options.cluster);
  outcome.report.skipped_formats = std::move(out.report.skipped_formats);
  out.report = std::move(outcome.report);
  out.themes = std::move(outcome.themes);
  for (std::size_t c = 0; c < out.themes.size(); ++c) {
    out.themes[c].theme_id = "R" + std::to_string(iteration + 1) + "-C" + std::to_string(c + 1);
    out.themes[c].iteration = iteration + 1;
  }
  return out;
}

void to_json(json& j, const SessionRecord& s) {
  j = json{{"participant", s.participant},       {"iteration", s.iteration}, {"ratings", s.ratings},
           {"favorite_theme_id", s.favorite_theme_id}, {"start_theme", s.start_theme}, {"log", s.log}};
}

void from_json(const json& j, SessionRecord& s) {
  s.participant = j.at("participant").get<Participant>();
  s.iteration = j.at("iteration").get<int>();
  s.ratings = j.at("ratings").get<std::vector<RatingRecord>>();
  s.favorite_theme_id = j.at("favorite_theme_id").get<std::string>();
  s.start_theme = j.at("start_theme").get<Theme>();
  s.log = j.at("log").get<RefinementLog>();
}

IterationMetrics iteration_metrics(const IterationState& state) {
  IterationMetrics m;
  m.iteration = state.index;
  m.cluster_count = state.clustering.chosen_k;
  m.silhouette = state.clustering.silhouette;
  std::vector<const SessionRecord*> sessions;
  for (const auto& s : state.sessions) sessions.push_back(&s);
  std::sort(sessions.begin(), sessions.end(),
            [](const SessionRecord* a, const SessionRecord* b) { return a->log.session_id < b->log.session_id; });
  m.sessions = static_cast<int>(sessions.size());
  if (sessions.empty()) return m;
  double dc = 0, dw = 0, dl = 0, steps = 0, duration = 0;
  int kept = 0, validation = 0;
  for (const auto* s : sessions) {
    const auto& a = s->log.start_settings;
    const auto& b = s->log.final_settings;
    const double c = std::fabs(b.character_spacing_em - a.character_spacing_em);
    const double w = std::fabs(b.word_spacing_em - a.word_spacing_em);
    const double l = std::fabs(b.line_height - a.line_height);
    dc += c;
    dw += w;
    dl += l;
    steps += c / kCharacterSpacing.step + w / kWordSpacing.step + l / kLineHeight.step;
    duration += static_cast<double>(s->log.adjust_duration_ms);
    kept += a.font == b.font;
    validation += s->start_theme.provenance == Provenance::Validation;
  }
  const double n = static_cast<double>(sessions.size());
  m.delta_character_spacing_em = dc / n;
  m.delta_word_spacing_em = dw / n;
  m.delta_line_height = dl / n;
  m.delta_steps = steps / n;
  m.mean_adjust_duration_ms = duration / n;
  m.font_keep_rate = kept / n;
  m.validation_favorite_rate = validation / n;
  return m;
}

ConvergenceReport convergence_report(std::span<const IterationState> states) {
  if (states.empty()) throw PipelineError("convergence report needs at least one iteration");
  ConvergenceReport r;
  for (const auto& s : states) r.iterations.push_back(iteration_metrics(s));
  return r;
}

void to_json(json& j, const ConvergenceReport& r) {
  j = json::object();
  for (const auto& m : r.iterations) {
    json row;
    to_json(row, m);
    for (const auto& [key, value] : row.items()) j[key].push_back(value);
  }
}

std::string convergence_csv(const ConvergenceReport& r) {
  std::ostringstream out;
  out << "iteration,sessions,cluster_count,silhouette,delta_character_spacing_em,delta_word_spacing_em,"
         "delta_line_height,delta_steps,mean_adjust_duration_ms,font_keep_rate,validation_favorite_rate\n";
  out.precision(17);
  for (const auto& m : r.iterations) {
    out << m.iteration << ',' << m.sessions << ',' << m.cluster_count << ',' << m.silhouette << ','
        << m.delta_character_spacing_em << ',' << m.delta_word_spacing_em << ',' << m.delta_line_height << ','
        << m.delta_steps << ',' << m.mean_adjust_duration_ms << ',' << m.font_keep_rate << ','
        << m.validation_favorite_rate << '\n';
  }
  return out.str();
}

void to_json(json& j, const SimulationConfig& c) {
  json designer = json::object();
  for (const auto& [n, themes] : c.designer_themes) designer[std::to_string(n)] = themes;
  j = json{{"iterations", c.iterations}, {"participants", c.participants}, {"seed", c.seed},
           {"population", c.population}, {"stage2", c.stage2},           {"validation_pool", c.validation_pool},
           {"designer_themes", designer}};
}

void from_json(const json& j, SimulationConfig& c) {
  try {
    c.iterations = j.value("iterations", c.iterations);
    c.participants = j.value("participants", c.participants);
    c.seed = j.value("seed", c.seed);
    if (j.contains("population")) c.population = j.at("population").get<sim::PopulationSpec>();
    if (j.contains("stage2")) c.stage2 = j.at("stage2").get<Stage2Options>();
    if (j.contains("validation_pool")) c.validation_pool = parse_pool(j.at("validation_pool"), "validation_pool");
    if (j.contains("designer_themes")) {
      c.designer_themes.clear();
      for (const auto& [n, themes] : j.at("designer_themes").items()) {
        auto list = themes.get<std::vector<Theme>>();
        for (auto& t : list) {
          validate(t);
          t.provenance = Provenance::Designer;
        }
        c.designer_themes[std::stoi(n)] = std::move(list);
      }
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("simulation config: ") + ex.what());
  }
  if (c.iterations < 1) throw RangeError("iterations", "need at least one iteration");
  if (c.participants < 2) throw RangeError("participants", "need at least two participants per iteration");
}

void save_iteration(const std::filesystem::path& root, const IterationState& s) {
  const auto dir = iteration_dir(root, s.index);
  std::filesystem::create_directories(dir);
  write_text(dir / "themes.json", dump_pretty(json(s.themes_shown)));
  std::string lines;
  for (const auto& session : s.sessions) lines += json(session).dump() + "\n";
  write_text(dir / "sessions.jsonl", lines);
  write_text(dir / "clustering.json", dump_pretty(json(s.clustering)));
  json metrics;
  to_json(metrics, iteration_metrics(s));
  write_text(dir / "report.json", dump_pretty(json{{"metrics", metrics},
                                                   {"designer_themes", s.designer_themes},
                                                   {"next_themes", s.next_themes}}));
  const auto next = iteration_dir(root, s.index + 1);
  std::filesystem::create_directories(next);
  write_text(next / "themes.json", dump_pretty(json(s.next_themes)));
}

IterationState load_iteration(const std::filesystem::path& root, int index) {
  const auto dir = iteration_dir(root, index);
  IterationState s;
  s.index = index;
  try {
    s.themes_shown = json::parse(read_text(dir / "themes.json")).get<std::vector<Theme>>();
    std::istringstream lines(read_text(dir / "sessions.jsonl"));
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty()) s.sessions.push_back(json::parse(line).get<SessionRecord>());
    }
    s.clustering = json::parse(read_text(dir / "clustering.json")).get<cluster::ClusteringReport>();
    const auto report = json::parse(read_text(dir / "report.json"));
    s.designer_themes = report.at("designer_themes").get<std::vector<Theme>>();
    s.next_themes = report.at("next_themes").get<std::vector<Theme>>();
  } catch (const json::exception& ex) {
    throw ParseError(dir.string() + ": " + ex.what());
  }
  return s;
}

std::vector<IterationState> load_iterations(const std::filesystem::path& root) {
  std::vector<IterationState> out;
  for (int n = 0; std::filesystem::exists(iteration_dir(root, n) / "report.json"); ++n) {
    out.push_back(load_iteration(root, n));
  }
  return out;
}

SimulationResult simulate_pipeline(const SimulationConfig& config, const std::optional<std::filesystem::path>& state_dir) {
  sim::validate(config.population);
  if (config.iterations < 1 || config.participants < 2) throw RangeError("participants", "invalid simulation size");
  if (state_dir) {
    std::filesystem::create_directories(*state_dir);
    write_text(*state_dir / "config.json", dump_pretty(json(config)));
  }

  SimulationResult result;
  std::optional<learn::CnnModel> model;
  std::vector<Theme> reps;
  std::vector<Theme> designer;
  for (int n = 0; n < config.iterations; ++n) {
    IterationState state;
    state.index = n;
    const std::string tag = "R" + std::to_string(n);
    const auto people =
        sim::sample_population(config.population, config.participants, derive_seed(config.seed, "population/" + tag), tag + "-P");

    std::map<std::string, Theme> shown;
    for (std::size_t i = 0; i < people.size(); ++i) {
      const auto& sp = people[i];
      SessionRecord rec;
      rec.participant = sp.participant;
      rec.iteration = n;
      const std::string session_id = tag + "-S" + std::to_string(i);
      sim::SessionOptions opts{.session_id = session_id, .participant_id = sp.participant.participant_id};
      std::vector<Theme> themes;
      if (n == 0) {
        themes = {init_r0(sp.participant, config.seed)};
        opts.review = false;
        shown.emplace(themes[0].theme_id, themes[0]);
      } else {
        themes = assemble_iteration_themes(reps, designer, config.validation_pool,
                                           derive_seed(config.seed, "display/" + session_id));
      }
      auto outcome = sim::simulate_session(sp.profile, themes, derive_seed(config.seed, "session/" + session_id), opts);
      rec.ratings = std::move(outcome.ratings);
      rec.favorite_theme_id = std::move(outcome.favorite_theme_id);
      rec.start_theme = std::move(outcome.start_theme);
      rec.log = std::move(outcome.log);
      state.sessions.push_back(std::move(rec));
    }
    if (n == 0) {
      for (auto& [id, t] : shown) state.themes_shown.push_back(t);
    } else {
      state.themes_shown = reps;
      state.themes_shown.insert(state.themes_shown.end(), designer.begin(), designer.end());
    }

    std::vector<RefinementLog> logs;
    std::vector<Participant> participants;
    for (const auto& s : state.sessions) {
      logs.push_back(s.log);
      participants.push_back(s.participant);
    }
    auto stage2 = config.stage2;
    stage2.seed = derive_seed(config.seed, "stage2");
    stage2.train.seed = derive_seed(config.seed, "train");
    stage2.cluster.seed = derive_seed(config.seed, "cluster/" + tag);
    auto s2 = run_stage2(logs, participants, n, model, stage2);
    state.clustering = std::move(s2.report);

    auto it = config.designer_themes.find(n);
    state.designer_themes = it == config.designer_themes.end() ? std::vector<Theme>{} : it->second;
    for (auto& t : state.designer_themes) t.iteration = n + 1;
    reps = std::move(s2.themes);
    designer = state.designer_themes;
    state.next_themes = reps;
    state.next_themes.insert(state.next_themes.end(), designer.begin(), designer.end());

    if (state_dir) save_iteration(*state_dir, state);
    result.states.push_back(std::move(state));
  }
  result.report = convergence_report(result.states);
  if (state_dir) {
    write_text(*state_dir / "convergence.json", dump_pretty(json(result.report)));
    if (model) learn::save_model(*state_dir / "model.bin", *model);
  }
  return result;
}

}  // namespace therif::pipeline
