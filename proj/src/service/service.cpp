#include "therif/service/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "therif/cluster/report_json.hpp"
#include "therif/core/error.hpp"
#include "therif/core/json_io.hpp"
#include "therif/core/seed.hpp"
#include "therif/render/renderer.hpp"

namespace therif::service {

using nlohmann::json;

namespace {

// Raised inside handlers; becomes the HTTP error body.
struct HttpError {
  int status;
  std::string code;
  std::string message;
  json detail = json::object();
};

[[noreturn]] void fail(int status, std::string code, std::string message, json detail = json::object()) {
  throw HttpError{status, std::move(code), std::move(message), std::move(detail)};
}

Response error_response(const HttpError& e) {
  return {e.status, json{{"code", e.code}, {"message", e.message}, {"detail", e.detail}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

int parse_index(const std::string& s) {
  if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    fail(404, "not_found", "no such iteration " + s);
  }
  return std::stoi(s);
}

std::string numbered(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
  return buf;
}

ReviewPhase review_phase_of(const json& body) {
  try {
    return parse_review_phase(body.at("phase").get<std::string>());
  } catch (const json::exception&) {
    fail(400, "bad_request", "phase is required");
  }
}

Phase phase_for(ReviewPhase p) { return p == ReviewPhase::Primary ? Phase::PrimaryReview : Phase::SecondaryReview; }

const Theme& find_theme(const Session& s, const std::string& theme_id) {
  for (const auto& t : s.themes) {
    if (t.theme_id == theme_id) return t;
  }
  fail(404, "not_found", "theme " + theme_id + " is not assigned to session " + s.session_id);
}

json theme_view(const Theme& t) {
  return json{{"theme_id", t.theme_id}, {"settings", t.settings}, {"css", theme_to_css(t)}};
}

const raster::PassageText& passage_by_id(const std::string& id) {
  for (const auto& p : raster::grade8_trial_passages()) {
    if (p.passage_id == id) return p;
  }
  throw Error("unknown passage " + id);
}

void require_phase(const Session& s, Phase expected, const std::string& action) {
  if (s.phase != expected) {
    fail(422, "phase_violation",
         action + " requires phase " + std::string(phase_name(expected)) + ", session is in " +
             std::string(phase_name(s.phase)),
         {{"phase", phase_name(s.phase)}});
  }
}

}  // namespace

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::PrimaryReview: return "primary_review";
    case Phase::Exploration: return "exploration";
    case Phase::SecondaryReview: return "secondary_review";
    case Phase::Refinement: return "refinement";
    case Phase::Done: return "done";
  }
  return "?";
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.clock) {
    config_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (static_cast<int>(config_.validation_pool.size()) != pipeline::kValidationPoolSize) {
    throw PipelineError("validation pool must hold 11 themes");
  }
  const bool ro = config_.read_only;
  if (!ro) std::filesystem::create_directories(config_.root);
  iterations_log_ = JsonlLog(config_.root / "iterations.jsonl", ro);
  sessions_log_ = JsonlLog(config_.root / "sessions.jsonl", ro);
  trials_log_ = JsonlLog(config_.root / "trials.jsonl", ro);
  for (const auto& r : iterations_log_.records()) apply_iteration(r);
  for (const auto& r : sessions_log_.records()) apply_session(r);
  for (const auto& r : trials_log_.records()) apply_trial(r);
  if (ro) return;
  if (iterations_.empty()) commit(iterations_log_, json{{"type", "opened"}, {"iteration", 0}, {"themes", json::array()}});
  const auto model_path = config_.root / "model.bin";
  if (std::filesystem::exists(model_path)) model_ = learn::load_model(model_path);
}

std::int64_t Service::now() const { return config_.clock(); }

std::uintmax_t Service::recovered_bytes() const {
  return sessions_log_.recovered_bytes() + trials_log_.recovered_bytes() + iterations_log_.recovered_bytes();
}

int Service::current_iteration() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(iterations_.size()) - 1;
}

std::optional<Session> Service::session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::vector<Session> Service::sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<Session> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

std::optional<Trial> Service::trial(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = trials_.find(id);
  if (it == trials_.end()) return std::nullopt;
  return it->second;
}

std::vector<Trial> Service::trials() const {
  std::lock_guard lock(mutex_);
  std::vector<Trial> out;
  for (const auto& [id, t] : trials_) out.push_back(t);
  return out;
}

void Service::commit(JsonlLog& log, const json& record) {
  log.append(record);
  apply(record);
}

void Service::apply(const json& record) {
  const auto type = record.at("type").get<std::string>();
  if (type == "opened" || type == "clustered" || type == "designer_themes") {
    apply_iteration(record);
  } else if (type.rfind("trial", 0) == 0 || type == "screen_served" || type == "keypress" || type == "answers" ||
             type == "comfort") {
    apply_trial(record);
  } else {
    apply_session(record);
  }
}

// ---------------------------------------------------------------- routing

Response Service::handle(const std::string& method, const std::string& path, const std::string& body_text,
                         const std::string& admin_token) {
  std::lock_guard lock(mutex_);
  try {
    json body = json::object();
    if (!body_text.empty()) {
      try {
        body = json::parse(body_text);
      } catch (const json::parse_error& ex) {
        fail(400, "bad_request", std::string("malformed JSON: ") + ex.what());
      }
    }
    if (config_.read_only && method != "GET") fail(405, "read_only", "store is open read-only");
    const auto p = split_path(path);
    const bool get = method == "GET", post = method == "POST";

    if (p.size() == 1 && p[0] == "health" && get) return {200, json{{"status", "ok"}}};
    if (!p.empty() && p[0] == "sessions") {
      if (p.size() == 1 && post) return create_session(body);
      if (p.size() == 2 && get) return get_session(p[1]);
      if (p.size() == 3 && post) {
        if (p[2] == "ratings") return post_ratings(p[1], body);
        if (p[2] == "favorite") return post_favorite(p[1], body);
        if (p[2] == "exploration") return post_exploration(p[1], body);
        if (p[2] == "refinements") return post_refinements(p[1], body);
        if (p[2] == "final") return post_final(p[1], body);
      }
    }
    if (!p.empty() && p[0] == "iterations" && p.size() >= 2) {
      const int n = parse_index(p[1]);
      if (p.size() == 2 && get) return get_iteration(n);
      if (p.size() == 3 && post) {
        if (config_.admin_token.empty() || admin_token != config_.admin_token) {
          fail(401, "unauthorized", "admin token required");
        }
        if (p[2] == "cluster") return cluster_iteration(n);
        if (p[2] == "designer-themes") return post_designer_themes(n, body);
        if (p[2] == "open") return open_iteration(n);
      }
    }
    if (!p.empty() && p[0] == "trials") {
      if (p.size() == 1 && post) return create_trial(body);
      if (p.size() == 2 && get) return get_trial(p[1]);
      if (p.size() == 3 && get && p[2] == "screen") return get_screen(p[1]);
      if (p.size() == 3 && post) {
        if (p[2] == "keypress") return post_keypress(p[1], body);
        if (p[2] == "answers") return post_answers(p[1], body);
        if (p[2] == "comfort") return post_comfort(p[1], body);
      }
    }
    fail(404, "not_found", "no route for " + method + " " + path);
  } catch (const HttpError& e) {
    return error_response(e);
  } catch (const LogCorruptionError& e) {
    return error_response({422, "log_corruption", e.what(), {{"index", e.index()}, {"key", e.key()}}});
  } catch (const RangeError& e) {
    return error_response({422, "range_error", e.what(), {{"property", e.property()}}});
  } catch (const PipelineError& e) {
    return error_response({422, "pipeline_error", e.what()});
  } catch (const ParseError& e) {
    return error_response({400, "bad_request", e.what()});
  } catch (const json::exception& e) {
    return error_response({400, "bad_request", e.what()});
  } catch (const Error& e) {
    return error_response({422, "invalid", e.what()});
  } catch (const std::exception& e) {
    return error_response({500, "internal", e.what()});
  }
}

// ---------------------------------------------------------------- sessions

json Service::session_view(const Session& s) const {
  json themes = json::array();
  for (const auto& t : s.themes) themes.push_back(theme_view(t));
  json primary = json::object(), secondary = json::object();
  for (const auto& [id, v] : s.primary) primary[id] = rating_value_name(v);
  for (const auto& [id, v] : s.secondary) secondary[id] = rating_value_name(v);
  json out{{"session_id", s.session_id},
           {"participant_id", s.participant.participant_id},
           {"iteration", s.iteration},
           {"phase", phase_name(s.phase)},
           {"created_at", s.created_at},
           {"themes", themes},
           {"secondary_order", s.secondary_order},
           {"ratings", {{"primary", primary}, {"secondary", secondary}}},
           {"favorites", {{"primary", s.primary_favorite}, {"secondary", s.secondary_favorite}}},
           {"explored", s.explored},
           {"event_count", s.events.size()}};
  if (s.phase == Phase::Refinement || s.phase == Phase::Done) {
    out["start_theme"] = theme_view(s.start_theme);
    out["current_settings"] = s.current;
  }
  if (s.final_settings) {
    out["final_settings"] = *s.final_settings;
    out["adjust_duration_ms"] = s.adjust_duration_ms;
  }
  return out;
}

Response Service::create_session(const json& body) {
  Participant p;
  try {
    const auto id = body.at("participant_id").get<std::string>();
    if (id.empty()) fail(400, "bad_request", "participant_id must not be empty");
    const int age = body.at("age_years").get<int>();
    if (body.contains("dyslexia_score")) {
      p = make_participant(id, age, body.at("dyslexia_score").get<double>());
      if (body.contains("dyslexia")) p.dyslexia = body.at("dyslexia").get<bool>();
    } else {
      p = make_participant(id, age, 0.0);
      p.dyslexia = body.value("dyslexia", false);
    }
  } catch (const json::exception& ex) {
    fail(400, "bad_request", std::string("participant_id and age_years are required: ") + ex.what());
  }
  if (participant_sessions_.count(p.participant_id)) {
    fail(409, "conflict", "participant " + p.participant_id + " already took part",
         {{"session_id", participant_sessions_.at(p.participant_id)}});
  }
  if (iterations_.empty()) fail(409, "conflict", "no open iteration");
  const auto& it = iterations_.back();
  if (it.clustered) fail(409, "conflict", "iteration " + std::to_string(it.index) + " is closed; open the next one");

  Session s;
  s.session_id = numbered('S', sessions_.size() + 1);
  s.participant = p;
  s.iteration = it.index;
  s.created_at = now();
  json record{{"type", "session_created"},
              {"session_id", s.session_id},
              {"participant", p},
              {"iteration", s.iteration},
              {"created_at", s.created_at}};
  if (it.index == 0) {
    const auto theme = pipeline::init_r0(p, config_.seed);
    record["themes"] = json::array({theme});
    record["secondary_order"] = json::array();
    record["phase"] = phase_name(Phase::Refinement);
  } else {
    const auto themes = pipeline::assemble_iteration_themes(it.themes, {}, config_.validation_pool,
                                                            derive_seed(config_.seed, "display/" + s.session_id));
    std::vector<std::string> order;
    for (const auto& t : themes) order.push_back(t.theme_id);
    std::mt19937_64 rng(derive_seed(config_.seed, "secondary/" + s.session_id));
    std::shuffle(order.begin(), order.end(), rng);
    record["themes"] = themes;
    record["secondary_order"] = order;
    record["phase"] = phase_name(Phase::PrimaryReview);
  }
  commit(sessions_log_, record);
  return {201, session_view(sessions_.at(s.session_id))};
}

Response Service::get_session(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "not_found", "no session " + id);
  return {200, session_view(it->second)};
}

Response Service::post_ratings(const std::string& id, const json& body) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "not_found", "no session " + id);
  const auto& s = it->second;
  const auto phase = review_phase_of(body);
  require_phase(s, phase_for(phase), "rating");
  json ratings = json::array();
  if (!body.contains("ratings") || !body.at("ratings").is_array() || body.at("ratings").empty()) {
    fail(400, "bad_request", "ratings must be a non-empty array");
  }
  for (const auto& r : body.at("ratings")) {
    const auto theme_id = r.at("theme_id").get<std::string>();
    find_theme(s, theme_id);
    RatingValue v;
    try {
      v = parse_rating_value(r.at("value").get<std::string>());
    } catch (const Error&) {
      fail(400, "bad_request", "rating must be good, unsure or bad");
    }
    ratings.push_back({{"theme_id", theme_id}, {"value", rating_value_name(v)}});
  }
  commit(sessions_log_, json{{"type", "ratings"}, {"session_id", id}, {"phase", review_phase_name(phase)}, {"ratings", ratings}});
  return {200, session_view(s)};
}

Response Service::post_favorite(const std::string& id, const json& body) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "not_found", "no session " + id);
  const auto& s = it->second;
  const auto phase = review_phase_of(body);
  require_phase(s, phase_for(phase), "choosing a favorite");
  const auto theme_id = body.at("theme_id").get<std::string>();
  find_theme(s, theme_id);
  const auto& rated = phase == ReviewPhase::Primary ? s.primary : s.secondary;
  std::vector<std::string> missing;
  for (const auto& t : s.themes) {
    if (!rated.count(t.theme_id)) missing.push_back(t.theme_id);
  }
  if (!missing.empty()) fail(422, "phase_violation", "rate every theme before choosing a favorite", {{"unrated", missing}});
  commit(sessions_log_, json{{"type", "favorite"},
                             {"session_id", id},
                             {"phase", review_phase_name(phase)},
                             {"theme_id", theme_id},
                             {"server_ms", now()}});
  return {200, session_view(s)};
}

Response Service::post_exploration(const std::string& id, const json& body) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "not_found", "no session " + id);
  require_phase(it->second, Phase::Exploration, "finishing exploration");
  commit(sessions_log_, json{{"type", "exploration_done"}, {"session_id", id}, {"events", body.value("events", 0)}});
  return {200, session_view(it->second)};
}

Response Service::post_refinements(const std::string& id, const json& body) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "not_found", "no session " + id);
  const auto& s = it->second;
  if (s.phase == Phase::Exploration) {
    // exploration changes are a UI step only; count them
    const auto n = body.contains("events") ? body.at("events").size() : 0;
    commit(sessions_log_, json{{"type", "exploration_events"}, {"session_id", id}, {"count", n}});
    return {200, session_view(s)};
  }
  require_phase(s, Phase::Refinement, "refinement events");
  std::vector<RefinementEvent> events;
  try {
    events = body.at("events").get<std::vector<RefinementEvent>>();
  } catch (const json::exception& ex) {
    fail(400, "bad_request", std::string("events: ") + ex.what());
  } catch (const ParseError& ex) {
    fail(400, "bad_request", std::string("events: ") + ex.what());
  }
  if (events.empty()) fail(400, "bad_request", "events must be a non-empty array");
  std::vector<RefinementEvent> all = s.events;
  all.insert(all.end(), events.begin(), events.end());
  apply_events(s.start_theme.settings, all);  // throws LogCorruptionError with the global index
  commit(sessions_log_, json{{"type", "events"}, {"session_id", id}, {"events", events}});
  return {200, session_view(s)};
}

Response Service::post_final(const std::string& id, const json& body) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "not_found", "no session " + id);
  const auto& s = it->second;
  require_phase(s, Phase::Refinement, "closing a session");
  TextSettings final_settings;
  try {
    final_settings = body.at("final_settings").get<TextSettings>();
  } catch (const json::exception& ex) {
    fail(400, "bad_request", std::string("final_settings: ") + ex.what());
  }
  validate(final_settings);
  if (const auto key = first_divergent_key(s.current, final_settings)) {
    fail(422, "log_corruption", "final settings do not match the replayed refinement log",
         {{"key", *key}, {"expected", s.current}});
  }
  const std::int64_t duration = std::max<std::int64_t>(0, now() - s.refinement_started_ms);
  commit(sessions_log_,
         json{{"type", "final"},
              {"session_id", id},
              {"final_settings", final_settings},
              {"adjust_duration_ms", duration},
              {"client_adjust_duration_ms", body.value("adjust_duration_ms", json(nullptr))}});
  return {200, session_view(s)};
}

void Service::apply_session(const json& r) {
  const auto type = r.at("type").get<std::string>();
  if (type == "session_created") {
    Session s;
    s.session_id = r.at("session_id").get<std::string>();
    s.participant = r.at("participant").get<Participant>();
    s.iteration = r.at("iteration").get<int>();
    s.created_at = r.at("created_at").get<std::int64_t>();
    s.themes = r.at("themes").get<std::vector<Theme>>();
    s.secondary_order = r.at("secondary_order").get<std::vector<std::string>>();
    const auto phase = r.at("phase").get<std::string>();
    if (phase == phase_name(Phase::Refinement)) {
      s.phase = Phase::Refinement;
      s.start_theme = s.themes.at(0);
      s.current = s.start_theme.settings;
      s.refinement_started_ms = s.created_at;
    }
    participant_sessions_[s.participant.participant_id] = s.session_id;
    sessions_[s.session_id] = std::move(s);
    return;
  }
  auto& s = sessions_.at(r.at("session_id").get<std::string>());
  if (type == "ratings") {
    auto& target = parse_review_phase(r.at("phase").get<std::string>()) == ReviewPhase::Primary ? s.primary : s.secondary;
    for (const auto& x : r.at("ratings")) target[x.at("theme_id").get<std::string>()] = parse_rating_value(x.at("value").get<std::string>());
  } else if (type == "favorite") {
    const auto theme_id = r.at("theme_id").get<std::string>();
    if (parse_review_phase(r.at("phase").get<std::string>()) == ReviewPhase::Primary) {
      s.primary_favorite = theme_id;
      s.phase = Phase::Exploration;
    } else {
      s.secondary_favorite = theme_id;
      s.phase = Phase::Refinement;
      s.start_theme = find_theme(s, theme_id);
      s.current = s.start_theme.settings;
      s.refinement_started_ms = r.at("server_ms").get<std::int64_t>();
    }
  } else if (type == "exploration_events") {
    s.exploration_events += r.at("count").get<int>();
  } else if (type == "exploration_done") {
    s.explored = true;
    s.phase = Phase::SecondaryReview;
  } else if (type == "events") {
    const auto events = r.at("events").get<std::vector<RefinementEvent>>();
    s.current = apply_events(s.current, events);
    s.events.insert(s.events.end(), events.begin(), events.end());
  } else if (type == "final") {
    s.final_settings = r.at("final_settings").get<TextSettings>();
    s.adjust_duration_ms = r.at("adjust_duration_ms").get<std::int64_t>();
    s.phase = Phase::Done;
  } else {
    throw ParseError("unknown session record type " + type);
  }
}

// ---------------------------------------------------------------- iterations

Response Service::get_iteration(int n) {
  if (n >= static_cast<int>(iterations_.size())) fail(404, "not_found", "iteration " + std::to_string(n) + " is not open");
  const auto& it = iterations_[n];
  int total = 0, closed = 0;
  for (const auto& [id, s] : sessions_) {
    if (s.iteration != n) continue;
    ++total;
    closed += s.phase == Phase::Done;
  }
  json out{{"iteration", n},
           {"themes", it.themes},
           {"clustered", it.clustered},
           {"sessions", total},
           {"closed_sessions", closed},
           {"representatives", it.representatives},
           {"designer_themes", it.designer_themes}};
  if (it.clustered) out["report"] = it.report;
  return {200, out};
}

Response Service::cluster_iteration(int n) {
  if (n >= static_cast<int>(iterations_.size())) fail(404, "not_found", "iteration " + std::to_string(n) + " is not open");
  if (iterations_[n].clustered) fail(409, "conflict", "iteration " + std::to_string(n) + " is already clustered");
  std::vector<RefinementLog> logs;
  std::vector<Participant> people;
  for (const auto& [id, s] : sessions_) {
    if (s.iteration != n || s.phase != Phase::Done) continue;
    RefinementLog log;
    log.session_id = s.session_id;
    log.participant_id = s.participant.participant_id;
    log.start_theme_id = s.start_theme.theme_id;
    log.start_settings = s.start_theme.settings;
    log.events = s.events;
    log.final_settings = *s.final_settings;
    log.adjust_duration_ms = s.adjust_duration_ms;
    logs.push_back(std::move(log));
    people.push_back(s.participant);
  }
  if (logs.size() < 2) {
    fail(422, "precondition", "clustering needs at least 2 closed sessions", {{"closed_sessions", logs.size()}});
  }
  auto opts = config_.stage2;
  opts.seed = derive_seed(config_.seed, "stage2");
  opts.train.seed = derive_seed(config_.seed, "train");
  opts.cluster.seed = derive_seed(config_.seed, "cluster/R" + std::to_string(n));
  const bool had_model = model_.has_value();
  auto result = pipeline::run_stage2(logs, people, n, model_, opts);
  if (result.trained || (!had_model && model_)) learn::save_model(config_.root / "model.bin", *model_);
  commit(iterations_log_, json{{"type", "clustered"}, {"iteration", n}, {"report", result.report}, {"themes", result.themes}});
  snapshot(n);
  return {200, json{{"report", result.report}, {"themes", result.themes}}};
}

Response Service::post_designer_themes(int n, const json& body) {
  if (n >= static_cast<int>(iterations_.size())) fail(404, "not_found", "iteration " + std::to_string(n) + " is not open");
  const auto& it = iterations_[n];
  if (!it.clustered) fail(409, "conflict", "cluster iteration " + std::to_string(n) + " before adding designer themes");
  if (n + 1 < static_cast<int>(iterations_.size())) fail(409, "conflict", "iteration " + std::to_string(n + 1) + " is already open");
  if (!body.contains("themes") || !body.at("themes").is_array() || body.at("themes").empty()) {
    fail(400, "bad_request", "themes must be a non-empty array");
  }
  std::vector<Theme> themes;
  std::size_t k = it.designer_themes.size();
  for (const auto& t : body.at("themes")) {
    Theme theme;
    theme.settings = t.at("settings").get<TextSettings>();
    validate(theme.settings);
    theme.theme_id = t.value("theme_id", "R" + std::to_string(n + 1) + "-D" + std::to_string(++k));
    theme.provenance = Provenance::Designer;
    theme.iteration = n + 1;
    themes.push_back(std::move(theme));
  }
  auto all = it.representatives;
  all.insert(all.end(), it.designer_themes.begin(), it.designer_themes.end());
  all.insert(all.end(), themes.begin(), themes.end());
  for (const auto& v : config_.validation_pool) all.push_back(v);
  try {
    require_unique_ids(all);
  } catch (const Error& e) {
    fail(409, "conflict", e.what());
  }
  commit(iterations_log_, json{{"type", "designer_themes"}, {"iteration", n}, {"themes", themes}});
  snapshot(n);
  return {200, json{{"designer_themes", iterations_[n].designer_themes}}};
}

Response Service::open_iteration(int n) {
  if (n < static_cast<int>(iterations_.size())) fail(409, "conflict", "iteration " + std::to_string(n) + " is already open");
  if (n != static_cast<int>(iterations_.size()) || !iterations_.back().clustered) {
    fail(409, "conflict", "iteration " + std::to_string(n - 1) + " must be clustered first");
  }
  const auto& prev = iterations_.back();
  auto themes = prev.representatives;
  themes.insert(themes.end(), prev.designer_themes.begin(), prev.designer_themes.end());
  commit(iterations_log_, json{{"type", "opened"}, {"iteration", n}, {"themes", themes}});
  return {201, json{{"iteration", n}, {"themes", themes}}};
}

void Service::apply_iteration(const json& r) {
  const auto type = r.at("type").get<std::string>();
  const int n = r.at("iteration").get<int>();
  if (type == "opened") {
    IterationInfo info;
    info.index = n;
    info.themes = r.at("themes").get<std::vector<Theme>>();
    iterations_.push_back(std::move(info));
  } else if (type == "clustered") {
    auto& it = iterations_.at(n);
    it.clustered = true;
    it.report = r.at("report").get<cluster::ClusteringReport>();
    it.representatives = r.at("themes").get<std::vector<Theme>>();
  } else if (type == "designer_themes") {
    auto more = r.at("themes").get<std::vector<Theme>>();
    auto& d = iterations_.at(n).designer_themes;
    d.insert(d.end(), more.begin(), more.end());
  } else {
    throw ParseError("unknown iteration record type " + type);
  }
}

void Service::snapshot(int n) {
  const auto& it = iterations_.at(n);
  pipeline::IterationState state;
  state.index = n;
  state.themes_shown = it.themes;
  for (const auto& [id, s] : sessions_) {
    if (s.iteration != n || s.phase != Phase::Done) continue;
    pipeline::SessionRecord rec;
    rec.participant = s.participant;
    rec.iteration = n;
    for (const auto& t : s.themes) {
      if (s.primary.count(t.theme_id)) {
        rec.ratings.push_back({id, t.theme_id, ReviewPhase::Primary, s.primary.at(t.theme_id), t.theme_id == s.primary_favorite});
      }
    }
    for (const auto& tid : s.secondary_order) {
      if (s.secondary.count(tid)) {
        rec.ratings.push_back({id, tid, ReviewPhase::Secondary, s.secondary.at(tid), tid == s.secondary_favorite});
      }
    }
    rec.favorite_theme_id = s.start_theme.theme_id;
    rec.start_theme = s.start_theme;
    rec.log.session_id = id;
    rec.log.participant_id = s.participant.participant_id;
    rec.log.start_theme_id = s.start_theme.theme_id;
    rec.log.start_settings = s.start_theme.settings;
    rec.log.events = s.events;
    rec.log.final_settings = *s.final_settings;
    rec.log.adjust_duration_ms = s.adjust_duration_ms;
    state.sessions.push_back(std::move(rec));
  }
  state.clustering = it.report;
  state.designer_themes = it.designer_themes;
  state.next_themes = it.representatives;
  state.next_themes.insert(state.next_themes.end(), it.designer_themes.begin(), it.designer_themes.end());
  pipeline::save_iteration(config_.root, state);
}

// ---------------------------------------------------------------- trials

json Service::trial_view(const Trial& t) const {
  json conditions = json::array();
  for (const auto& c : t.conditions) {
    conditions.push_back({{"theme_id", c.theme.theme_id},
                          {"passage_id", c.passage_id},
                          {"screens_read", std::count(c.pressed.begin(), c.pressed.end(), true)},
                          {"answered", c.answers.has_value()},
                          {"comfort", c.comfort ? json(*c.comfort) : json(nullptr)}});
  }
  json measurements = json::array();
  for (const auto& m : t.measurements) {
    measurements.push_back({{"participant_id", m.participant_id},
                            {"theme_id", m.theme_id},
                            {"comfort", m.comfort},
                            {"comprehension", m.comprehension},
                            {"screen_wpm", m.screen_wpm}});
  }
  return json{{"trial_id", t.trial_id},
              {"participant_id", t.participant_id},
              {"current_condition", t.current},
              {"closed", t.closed()},
              {"conditions", conditions},
              {"measurements", measurements}};
}

Response Service::create_trial(const json& body) {
  std::string participant;
  try {
    participant = body.at("participant_id").get<std::string>();
  } catch (const json::exception&) {
    fail(400, "bad_request", "participant_id is required");
  }
  if (participant.empty()) fail(400, "bad_request", "participant_id must not be empty");
  json demographics = nullptr;
  if (body.contains("age_years")) {
    Participant p;
    try {
      p = make_participant(participant, body.at("age_years").get<int>(), body.value("dyslexia_score", 0.0));
      if (body.contains("dyslexia")) p.dyslexia = body.at("dyslexia").get<bool>();
    } catch (const json::exception& ex) {
      fail(400, "bad_request", ex.what());
    }
    demographics = p;
  }
  for (const auto& [id, t] : trials_) {
    if (t.participant_id == participant) fail(409, "conflict", "participant already has trial " + id, {{"trial_id", id}});
  }
  const auto id = numbered('T', trials_.size() + 1);
  std::vector<Theme> themes{compact_theme(), open_theme(), relaxed_theme(), control_theme()};
  std::mt19937_64 rng(derive_seed(config_.seed, "trial/" + id));
  std::shuffle(themes.begin(), themes.end(), rng);
  const auto& passages = raster::grade8_trial_passages();
  json conditions = json::array();
  for (std::size_t i = 0; i < themes.size(); ++i) {
    conditions.push_back({{"theme", themes[i]}, {"passage_id", passages[i % passages.size()].passage_id}});
  }
  commit(trials_log_, json{{"type", "trial_created"},
                           {"trial_id", id},
                           {"participant_id", participant},
                           {"participant", demographics},
                           {"conditions", conditions}});
  return {201, trial_view(trials_.at(id))};
}

Response Service::get_trial(const std::string& id) {
  auto it = trials_.find(id);
  if (it == trials_.end()) fail(404, "not_found", "no trial " + id);
  return {200, trial_view(it->second)};
}

Response Service::get_screen(const std::string& id) {
  auto it = trials_.find(id);
  if (it == trials_.end()) fail(404, "not_found", "no trial " + id);
  const auto& t = it->second;
  if (t.closed()) fail(422, "phase_violation", "trial is complete");
  const auto& c = t.conditions[t.current];
  const auto& passage = passage_by_id(c.passage_id);
  const int screens = passage.screen_count();
  const int served = static_cast<int>(c.timings.size());
  int screen;
  if (served > 0 && !c.pressed.back()) {
    screen = served - 1;  // still on display: serve it again without a new timestamp
  } else if (served == screens) {
    fail(422, "phase_violation", "all screens read; submit answers and comfort", {{"condition", t.current}});
  } else {
    screen = served;
    commit(trials_log_, json{{"type", "screen_served"},
                             {"trial_id", id},
                             {"condition", t.current},
                             {"screen", screen},
                             {"server_ms", now()}});
  }
  const auto words = raster::screen_words(passage, screen);
  std::string text;
  for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
  json questions = json::array();
  if (screen == screens - 1) {
    for (const auto& q : passage.questions) questions.push_back({{"prompt", q.prompt}, {"options", q.options}});
  }
  return {200, json{{"trial_id", id},
                    {"condition", t.current},
                    {"screen", screen},
                    {"screens", screens},
                    {"theme_id", c.theme.theme_id},
                    {"settings", c.theme.settings},
                    {"css", theme_to_css(c.theme)},
                    {"passage_id", c.passage_id},
                    {"text", text},
                    {"word_count", words.size()},
                    {"questions", questions}}};
}

Response Service::post_keypress(const std::string& id, const json& body) {
  auto it = trials_.find(id);
  if (it == trials_.end()) fail(404, "not_found", "no trial " + id);
  const auto& t = it->second;
  if (t.closed()) fail(422, "phase_violation", "trial is complete");
  const int condition = body.value("condition", t.current);
  const int screen = body.at("screen").get<int>();
  const auto& c = t.conditions[t.current];
  const int served = static_cast<int>(c.timings.size());
  if (condition != t.current || screen != served - 1 || served == 0 || c.pressed.back()) {
    fail(422, "phase_violation", "keypress for a screen that is not on display",
         {{"condition", t.current}, {"screen_on_display", served > 0 && !c.pressed.back() ? json(served - 1) : json(nullptr)}});
  }
  const auto server_ms = now();
  if (server_ms <= c.timings.back().shown_ms) fail(422, "phase_violation", "keypress at or before the screen was shown");
  commit(trials_log_, json{{"type", "keypress"},
                           {"trial_id", id},
                           {"condition", condition},
                           {"screen", screen},
                           {"server_ms", server_ms},
                           {"client_ms", body.value("client_ms", json(nullptr))}});
  return {200, trial_view(t)};
}

Response Service::post_answers(const std::string& id, const json& body) {
  auto it = trials_.find(id);
  if (it == trials_.end()) fail(404, "not_found", "no trial " + id);
  const auto& t = it->second;
  if (t.closed()) fail(422, "phase_violation", "trial is complete");
  const auto& c = t.conditions[t.current];
  const auto& passage = passage_by_id(c.passage_id);
  if (static_cast<int>(std::count(c.pressed.begin(), c.pressed.end(), true)) != passage.screen_count()) {
    fail(422, "phase_violation", "answers come after every screen is read");
  }
  if (c.answers) fail(422, "phase_violation", "answers already recorded for this condition");
  const auto answers = body.at("answers").get<std::vector<int>>();
  if (answers.size() != passage.questions.size()) {
    fail(422, "range_error", "expected " + std::to_string(passage.questions.size()) + " answers");
  }
  commit(trials_log_, json{{"type", "answers"}, {"trial_id", id}, {"condition", t.current}, {"answers", answers}});
  return {200, trial_view(t)};
}

Response Service::post_comfort(const std::string& id, const json& body) {
  auto it = trials_.find(id);
  if (it == trials_.end()) fail(404, "not_found", "no trial " + id);
  const auto& t = it->second;
  if (t.closed()) fail(422, "phase_violation", "trial is complete");
  const auto& c = t.conditions[t.current];
  const auto& passage = passage_by_id(c.passage_id);
  if (static_cast<int>(std::count(c.pressed.begin(), c.pressed.end(), true)) != passage.screen_count()) {
    fail(422, "phase_violation", "comfort comes after every screen is read");
  }
  if (c.comfort) fail(422, "phase_violation", "comfort already recorded for this condition");
  const int value = body.at("value").get<int>();
  if (value < 1 || value > 5) fail(422, "range_error", "comfort must be 1..5", {{"property", "comfort"}});
  commit(trials_log_, json{{"type", "comfort"}, {"trial_id", id}, {"condition", t.current}, {"value", value}});
  return {200, trial_view(t)};
}

void Service::close_condition(Trial& t) {
  auto& c = t.conditions[t.current];
  if (!c.answers || !c.comfort) return;
  const auto& passage = passage_by_id(c.passage_id);
  std::vector<int> words, key;
  for (int s = 0; s < passage.screen_count(); ++s) words.push_back(static_cast<int>(raster::screen_words(passage, s).size()));
  for (const auto& q : passage.questions) key.push_back(q.answer);
  const auto score = stats::score_trial(c.timings, words, *c.answers, key);
  stats::ReadingMeasurement m;
  m.participant_id = t.participant_id;
  m.theme_id = c.theme.theme_id;
  m.comfort = *c.comfort;
  m.comprehension = score.comprehension;
  m.screen_wpm = score.screen_wpm;
  t.measurements.push_back(std::move(m));
  ++t.current;
}

void Service::apply_trial(const json& r) {
  const auto type = r.at("type").get<std::string>();
  const auto id = r.at("trial_id").get<std::string>();
  if (type == "trial_created") {
    Trial t;
    t.trial_id = id;
    t.participant_id = r.at("participant_id").get<std::string>();
    if (r.contains("participant") && !r.at("participant").is_null()) t.participant = r.at("participant").get<Participant>();
    for (const auto& c : r.at("conditions")) {
      TrialCondition tc;
      tc.theme = c.at("theme").get<Theme>();
      tc.passage_id = c.at("passage_id").get<std::string>();
      t.conditions.push_back(std::move(tc));
    }
    trials_[id] = std::move(t);
    return;
  }
  auto& t = trials_.at(id);
  auto& c = t.conditions.at(r.at("condition").get<int>());
  if (type == "screen_served") {
    c.timings.push_back({r.at("server_ms").get<std::int64_t>(), 0});
    c.pressed.push_back(false);
  } else if (type == "keypress") {
    c.timings.back().keypress_ms = r.at("server_ms").get<std::int64_t>();
    c.pressed.back() = true;
  } else if (type == "answers") {
    c.answers = r.at("answers").get<std::vector<int>>();
    close_condition(t);
  } else if (type == "comfort") {
    c.comfort = r.at("value").get<int>();
    close_condition(t);
  } else {
    throw ParseError("unknown trial record type " + type);
  }
}

}  // namespace therif::service
