#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "therif/core/json_io.hpp"
#include "therif/core/seed.hpp"
#include "therif/render/renderer.hpp"
#include "therif/service/http.hpp"
#include "therif/service/service.hpp"
#include "therif/service/store.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

using namespace therif;
using namespace therif::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kToken = "secret";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() / ("therif_service_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ServiceConfig config_for(const fs::path& root, std::function<std::int64_t()> clock = {}) {
  ServiceConfig c;
  c.root = root;
  c.admin_token = kToken;
  c.seed = 11;
  c.stage2.crops_per_format = 6;
  c.stage2.train_crops_per_format = 5;
  c.stage2.train.epochs = 1;
  c.stage2.cluster.restarts = 2;
  c.clock = std::move(clock);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Response call(Service& s, const std::string& method, const std::string& path, const json& body = nullptr,
              const std::string& token = "") {
  return s.handle(method, path, body.is_null() ? "" : body.dump(), token);
}

json participant(const std::string& id, int age = 30, bool dyslexia = false) {
  return {{"participant_id", id}, {"age_years", age}, {"dyslexia", dyslexia}};
}

json event(std::int64_t t, SettingKey key, SettingValue from, SettingValue to) {
  return json(RefinementEvent{t, key, from, to});
}

// Events moving `from` to `to`, one per differing setting.
json events_to(const TextSettings& from, const TextSettings& to, std::int64_t t0 = 1000) {
  json out = json::array();
  std::int64_t t = t0;
  for (auto key : kAllSettingKeys) {
    const auto a = get_setting(from, key), b = get_setting(to, key);
    if (a != b) out.push_back(event(t += 1500, key, a, b));
  }
  return out;
}

std::string create(Service& s, const std::string& pid, bool dyslexia = false) {
  const auto r = call(s, "POST", "/sessions", participant(pid, 30, dyslexia));
  REQUIRE(r.status == 201);
  return r.body.at("session_id").get<std::string>();
}

// Drives a session already in refinement to `target` and closes it.
void refine_and_close(Service& s, const std::string& sid, const TextSettings& target) {
  const auto cur = call(s, "GET", "/sessions/" + sid).body.at("current_settings").get<TextSettings>();
  const auto events = events_to(cur, target);
  if (!events.empty()) REQUIRE(call(s, "POST", "/sessions/" + sid + "/refinements", {{"events", events}}).status == 200);
  const auto r = call(s, "POST", "/sessions/" + sid + "/final", {{"final_settings", target}});
  REQUIRE(r.status == 200);
  REQUIRE(r.body.at("phase") == "done");
}

void rate_all(Service& s, const std::string& sid, const std::string& phase, const std::string& favorite) {
  const auto v = call(s, "GET", "/sessions/" + sid).body;
  json ratings = json::array();
  for (const auto& t : v.at("themes")) {
    ratings.push_back({{"theme_id", t.at("theme_id")}, {"value", t.at("theme_id") == favorite ? "good" : "bad"}});
  }
  REQUIRE(call(s, "POST", "/sessions/" + sid + "/ratings", {{"phase", phase}, {"ratings", ratings}}).status == 200);
  REQUIRE(call(s, "POST", "/sessions/" + sid + "/favorite", {{"phase", phase}, {"theme_id", favorite}}).status == 200);
}

const std::vector<TextSettings>& r0_targets() {
  static const std::vector<TextSettings> t{
      make_settings(FontId::Georgia, 0.0, 0.1, 1.4),       make_settings(FontId::Georgia, 0.01, 0.1, 1.5),
      make_settings(FontId::Georgia, 0.0, 0.15, 1.4),      make_settings(FontId::Merriweather, 0.03, 0.3, 2.3),
      make_settings(FontId::Merriweather, 0.02, 0.35, 2.2), make_settings(FontId::Merriweather, 0.03, 0.3, 2.4)};
  return t;
}

// Store with R0 closed and clustered, one designer theme and R1 open.
const fs::path& r1_store() {
  static TempDir dir("r1_template");
  static bool built = false;
  if (!built) {
    Service s(config_for(dir.path));
    for (std::size_t i = 0; i < r0_targets().size(); ++i) {
      refine_and_close(s, create(s, "r0-" + std::to_string(i)), r0_targets()[i]);
    }
    REQUIRE(call(s, "POST", "/iterations/0/cluster", nullptr, kToken).status == 200);
    json tall{{"themes", json::array({{{"settings", {{"font", "Georgia"}, {"character_spacing_em", 0.0},
                                                     {"word_spacing_em", 0.1}, {"line_height", 9.0}}}}})}};
    const auto bad = call(s, "POST", "/iterations/0/designer-themes", tall, kToken);
    REQUIRE(bad.status == 422);
    REQUIRE(bad.body.at("code") == "range_error");
    json designer{{"themes", json::array({{{"settings", make_settings(FontId::SourceSerifPro, 0.02, 0.2, 1.8)}}})}};
    REQUIRE(call(s, "POST", "/iterations/0/designer-themes", designer, kToken).status == 200);
    REQUIRE(call(s, "POST", "/iterations/1/open", nullptr, kToken).status == 201);
    built = true;
  }
  return dir.path;
}

void copy_store(const fs::path& from, const fs::path& to) {
  fs::remove_all(to);
  fs::copy(from, to, fs::copy_options::recursive);
}

}  // namespace

TEST_CASE("jsonl log drops a torn tail and rejects a corrupt middle") {
  TempDir dir("jsonl");
  const auto p = dir.path / "log.jsonl";
  {
    JsonlLog log(p);
    log.append({{"a", 1}});
    log.append({{"a", 2}});
  }
  std::ofstream(p, std::ios::app) << "{\"a\": 3";
  {
    JsonlLog log(p);
    CHECK(log.records().size() == 2);
    CHECK(log.recovered_bytes() == 7);
    log.append({{"a", 4}});
  }
  JsonlLog log(p);
  REQUIRE(log.records().size() == 3);
  CHECK(log.records()[2].at("a") == 4);
  CHECK(log.recovered_bytes() == 0);

  std::ofstream(p, std::ios::trunc) << "{\"a\":1}\nnot json\n{\"a\":2}\n";
  CHECK_THROWS_AS(JsonlLog{p}, ParseError);
}

TEST_CASE("R0 session: refinement only, final replay check") {
  TempDir dir("r0");
  std::int64_t clock = 5000;
  Service s(config_for(dir.path, [&] { return clock; }));
  CHECK(s.current_iteration() == 0);
  const auto sid = create(s, "alice", true);
  auto v = call(s, "GET", "/sessions/" + sid).body;
  CHECK(v.at("phase") == "refinement");
  CHECK(v.at("themes").size() == 1);
  CHECK(v.at("start_theme").at("theme_id").get<std::string>().rfind("pilot-", 0) == 0);
  const auto start = v.at("current_settings").get<TextSettings>();

  // ratings are not part of R0
  CHECK(call(s, "POST", "/sessions/" + sid + "/ratings", {{"phase", "primary"}, {"ratings", json::array()}}).status == 422);
  auto r = call(s, "POST", "/sessions/" + sid + "/favorite", {{"phase", "primary"}, {"theme_id", "x"}});
  CHECK(r.status == 422);
  CHECK(r.body.at("code") == "phase_violation");

  auto target = start;
  target.line_height = start.line_height + 0.5;
  r = call(s, "POST", "/sessions/" + sid + "/refinements", {{"events", events_to(start, target)}});
  REQUIRE(r.status == 200);

  SUBCASE("final that disagrees with the log names the key") {
    auto wrong = target;
    wrong.word_spacing_em = start.word_spacing_em == 0.5 ? 0.55 : 0.5;
    r = call(s, "POST", "/sessions/" + sid + "/final", {{"final_settings", wrong}});
    CHECK(r.status == 422);
    CHECK(r.body.at("code") == "log_corruption");
    CHECK(r.body.at("detail").at("key") == "word_spacing_em");
    CHECK(s.session(sid)->phase == Phase::Refinement);
  }
  SUBCASE("event whose old value disagrees is rejected with its index") {
    json bad = json::array({event(9000, SettingKey::LineHeight, 4.9, 5.0)});
    r = call(s, "POST", "/sessions/" + sid + "/refinements", {{"events", bad}});
    CHECK(r.status == 422);
    CHECK(r.body.at("detail").at("index") == 1);
    CHECK(r.body.at("detail").at("key") == "line_height");
    CHECK(s.session(sid)->events.size() == 1);
  }
  SUBCASE("matching final closes the session") {
    clock += 42'000;
    r = call(s, "POST", "/sessions/" + sid + "/final", {{"final_settings", target}});
    REQUIRE(r.status == 200);
    CHECK(r.body.at("phase") == "done");
    CHECK(r.body.at("adjust_duration_ms") == 42'000);
    CHECK(call(s, "POST", "/sessions/" + sid + "/final", {{"final_settings", target}}).status == 422);
    CHECK(call(s, "POST", "/sessions/" + sid + "/refinements", {{"events", events_to(target, start)}}).status == 422);
  }
}

TEST_CASE("error codes") {
  TempDir dir("errors");
  Service s(config_for(dir.path));
  create(s, "bob");
  auto r = call(s, "POST", "/sessions", participant("bob"));
  CHECK(r.status == 409);
  CHECK(r.body.at("code") == "conflict");
  CHECK(r.body.contains("message"));
  CHECK(r.body.contains("detail"));
  CHECK(call(s, "GET", "/sessions/S999999").status == 404);
  CHECK(call(s, "GET", "/nope").status == 404);
  CHECK(s.handle("POST", "/sessions", "{bad").status == 400);
  CHECK(call(s, "POST", "/sessions", {{"participant_id", "x"}}).status == 400);
  CHECK(call(s, "POST", "/sessions", participant("kid", 3)).status == 422);

  CHECK(call(s, "POST", "/iterations/0/cluster").status == 401);
  CHECK(call(s, "POST", "/iterations/0/cluster", nullptr, "wrong").status == 401);
  r = call(s, "POST", "/iterations/0/cluster", nullptr, kToken);
  CHECK(r.status == 422);
  CHECK(r.body.at("detail").at("closed_sessions") == 0);
  CHECK(call(s, "POST", "/iterations/1/open", nullptr, kToken).status == 409);
  CHECK(call(s, "POST", "/iterations/0/designer-themes", {{"themes", json::array()}}, kToken).status == 409);
  CHECK(call(s, "GET", "/iterations/3").status == 404);
  CHECK(call(s, "GET", "/iterations/x").status == 404);
  CHECK(call(s, "GET", "/iterations/0").body.at("sessions") == 1);

  auto cfg = config_for(dir.path / "open");
  cfg.admin_token.clear();
  Service no_admin(cfg);
  CHECK(call(no_admin, "POST", "/iterations/0/cluster", nullptr, "").status == 401);
}

TEST_CASE("R1 session walks every phase in order") {
  TempDir dir("r1");
  copy_store(r1_store(), dir.path);
  Service s(config_for(dir.path));
  REQUIRE(s.current_iteration() == 1);

  const auto it = call(s, "GET", "/iterations/0").body;
  CHECK(it.at("clustered") == true);
  CHECK(it.at("closed_sessions") == 6);
  const auto reps = it.at("representatives").size();
  CHECK(reps >= 1);
  CHECK(it.at("designer_themes").size() == 1);
  CHECK(it.at("designer_themes")[0].at("theme_id") == "R1-D1");
  CHECK(fs::exists(dir.path / "iterations" / "R0" / "report.json"));
  CHECK(fs::exists(dir.path / "iterations" / "R0" / "sessions.jsonl"));
  CHECK(fs::exists(dir.path / "model.bin"));
  const auto next = load_themes(dir.path / "iterations" / "R1" / "themes.json");
  CHECK(next.size() == reps + 1);
  CHECK(next.back().theme_id == "R1-D1");

  // R0 no longer accepts sessions; re-clustering is refused
  CHECK(call(s, "POST", "/iterations/0/cluster", nullptr, kToken).status == 409);
  CHECK(call(s, "POST", "/iterations/1/open", nullptr, kToken).status == 409);

  const auto sid = create(s, "carol");
  auto v = call(s, "GET", "/sessions/" + sid).body;
  CHECK(v.at("iteration") == 1);
  CHECK(v.at("phase") == "primary_review");
  REQUIRE(v.at("themes").size() == reps + 2);
  int validation = 0;
  for (const auto& t : v.at("themes")) validation += t.at("theme_id").get<std::string>()[0] == 'V';
  CHECK(validation == 1);
  CHECK(v.at("secondary_order").size() == v.at("themes").size());
  CHECK(!v.contains("current_settings"));

  const auto first = v.at("themes")[0].at("theme_id").get<std::string>();
  const auto last = v.at("themes").back().at("theme_id").get<std::string>();

  // favourite before rating everything
  auto r = call(s, "POST", "/sessions/" + sid + "/ratings",
                {{"phase", "primary"}, {"ratings", json::array({{{"theme_id", first}, {"value", "good"}}})}});
  REQUIRE(r.status == 200);
  r = call(s, "POST", "/sessions/" + sid + "/favorite", {{"phase", "primary"}, {"theme_id", first}});
  CHECK(r.status == 422);
  CHECK(!r.body.at("detail").at("unrated").empty());
  CHECK(call(s, "POST", "/sessions/" + sid + "/ratings",
             {{"phase", "primary"}, {"ratings", json::array({{{"theme_id", "R9-C9"}, {"value", "good"}}})}})
            .status == 404);
  CHECK(call(s, "POST", "/sessions/" + sid + "/ratings",
             {{"phase", "primary"}, {"ratings", json::array({{{"theme_id", first}, {"value", "great"}}})}})
            .status == 400);
  CHECK(call(s, "POST", "/sessions/" + sid + "/ratings",
             {{"phase", "secondary"}, {"ratings", json::array({{{"theme_id", first}, {"value", "good"}}})}})
            .status == 422);

  rate_all(s, sid, "primary", first);
  CHECK(s.session(sid)->phase == Phase::Exploration);
  CHECK(call(s, "POST", "/sessions/" + sid + "/final", {{"final_settings", make_settings(FontId::Arial, 0, 0, 1)}}).status ==
        422);
  r = call(s, "POST", "/sessions/" + sid + "/refinements",
           {{"events", json::array({event(10, SettingKey::LineHeight, 1.0, 1.1)})}});
  CHECK(r.status == 200);
  CHECK(s.session(sid)->exploration_events == 1);
  CHECK(s.session(sid)->events.empty());
  REQUIRE(call(s, "POST", "/sessions/" + sid + "/exploration", json::object()).status == 200);
  CHECK(s.session(sid)->phase == Phase::SecondaryReview);

  rate_all(s, sid, "secondary", last);
  v = call(s, "GET", "/sessions/" + sid).body;
  CHECK(v.at("phase") == "refinement");
  CHECK(v.at("start_theme").at("theme_id") == last);
  CHECK(v.at("favorites").at("primary") == first);
  CHECK(v.at("favorites").at("secondary") == last);

  auto target = v.at("current_settings").get<TextSettings>();
  target.character_spacing_em = target.character_spacing_em > 0.2 ? 0.1 : 0.3;
  refine_and_close(s, sid, target);
  CHECK(s.session(sid)->final_settings == target);
}

TEST_CASE("reopening a store replays it exactly") {
  TempDir dir("replay");
  copy_store(r1_store(), dir.path);
  json before_it, before_session;
  std::string sid;
  {
    Service s(config_for(dir.path));
    sid = create(s, "dave");
    rate_all(s, sid, "primary", call(s, "GET", "/sessions/" + sid).body.at("themes")[1].at("theme_id"));
    before_session = call(s, "GET", "/sessions/" + sid).body;
    before_it = call(s, "GET", "/iterations/0").body;
  }
  Service s(config_for(dir.path));
  CHECK(s.recovered_bytes() == 0);
  CHECK(call(s, "GET", "/sessions/" + sid).body == before_session);
  CHECK(call(s, "GET", "/iterations/0").body == before_it);
  CHECK(s.current_iteration() == 1);
  CHECK(call(s, "POST", "/sessions", participant("dave")).status == 409);
}

TEST_CASE("crash at any byte of the session log recovers a committed prefix") {
  TempDir dir("crash");
  const auto seed_root = dir.path / "full";
  std::vector<json> views;  // session view after each committed record
  std::string sid;
  {
    Service s(config_for(seed_root));
    sid = create(s, "erin");
    views.push_back(call(s, "GET", "/sessions/" + sid).body);
    const auto start = views[0].at("current_settings").get<TextSettings>();
    auto t = start;
    t.line_height = std::min(5.0, t.line_height + 1.0);
    REQUIRE(call(s, "POST", "/sessions/" + sid + "/refinements", {{"events", events_to(start, t)}}).status == 200);
    views.push_back(call(s, "GET", "/sessions/" + sid).body);
    auto u = t;
    u.word_spacing_em = u.word_spacing_em > 0.5 ? 0.2 : 0.8;
    REQUIRE(call(s, "POST", "/sessions/" + sid + "/refinements", {{"events", events_to(t, u, 9000)}}).status == 200);
    views.push_back(call(s, "GET", "/sessions/" + sid).body);
    REQUIRE(call(s, "POST", "/sessions/" + sid + "/final", {{"final_settings", u}}).status == 200);
    views.push_back(call(s, "GET", "/sessions/" + sid).body);
  }
  const auto full = slurp(seed_root / "sessions.jsonl");
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full[i] == '\n') ends.push_back(i + 1);
  }
  REQUIRE(ends.size() == views.size());

  const auto root = dir.path / "cut";
  for (std::size_t cut = 0; cut <= full.size(); ++cut) {
    copy_store(seed_root, root);
    std::ofstream(root / "sessions.jsonl", std::ios::binary | std::ios::trunc) << full.substr(0, cut);
    const auto committed = static_cast<std::size_t>(std::upper_bound(ends.begin(), ends.end(), cut) - ends.begin());
    Service s(config_for(root));
    const std::size_t kept = committed == 0 ? 0 : ends[committed - 1];
    CHECK(s.recovered_bytes() == cut - kept);
    if (committed == 0) {
      CHECK(!s.session(sid));
      CHECK(call(s, "POST", "/sessions", participant("erin")).status == 201);
    } else {
      CHECK(call(s, "GET", "/sessions/" + sid).body == views[committed - 1]);
    }
    // the store stays appendable after recovery
    CHECK(call(s, "POST", "/sessions", participant("frank")).status == 201);
  }
}

TEST_CASE("random request sequences never break the phase order") {
  TempDir dir("fuzz");
  copy_store(r1_store(), dir.path);
  Service s(config_for(dir.path));
  std::mt19937_64 rng(7);
  const std::vector<std::string> actions{"ratings", "favorite", "exploration", "refinements", "final"};
  const std::vector<std::string> phases{"primary", "secondary"};
  const std::vector<std::string> values{"good", "unsure", "bad"};
  auto order = [](Phase p) { return static_cast<int>(p); };

  for (int n = 0; n < 25; ++n) {
    const auto sid = create(s, "fuzz-" + std::to_string(n));
    const auto view = call(s, "GET", "/sessions/" + sid).body;
    std::vector<std::string> ids;
    for (const auto& t : view.at("themes")) ids.push_back(t.at("theme_id").get<std::string>());
    ids.push_back("bogus");
    Phase prev = Phase::PrimaryReview;
    for (int step = 0; step < 60; ++step) {
      const auto& action = actions[rng() % actions.size()];
      const auto& rp = phases[rng() % 2];
      json body;
      if (action == "ratings") {
        json ratings = json::array();
        const auto k = 1 + rng() % ids.size();
        for (std::size_t i = 0; i < k; ++i) {
          ratings.push_back({{"theme_id", ids[rng() % ids.size()]}, {"value", values[rng() % 3]}});
        }
        body = {{"phase", rp}, {"ratings", ratings}};
      } else if (action == "favorite") {
        body = {{"phase", rp}, {"theme_id", ids[rng() % ids.size()]}};
      } else if (action == "refinements") {
        const auto cur = s.session(sid)->current;
        auto next = cur;
        next.line_height = cur.line_height < 4.0 ? cur.line_height + 0.5 : 1.0;
        body = {{"events", events_to(rng() % 4 == 0 ? make_settings(FontId::Arial, 0, 0, 1) : cur, next)}};
      } else if (action == "final") {
        auto f = s.session(sid)->current;
        if (rng() % 3 == 0) f.line_height = f.line_height < 4.0 ? f.line_height + 0.1 : 1.0;
        body = {{"final_settings", f}};
      } else {
        body = json::object();
      }
      const auto before = *s.session(sid);
      const auto r = call(s, "POST", "/sessions/" + sid + "/" + action, body);
      const auto after = *s.session(sid);
      CHECK(r.status < 500);
      if (r.status != 200) {
        CHECK(after.phase == before.phase);
        CHECK(after.events.size() == before.events.size());
      }
      CHECK(order(after.phase) >= order(prev));
      CHECK(order(after.phase) <= order(prev) + 1);
      if (after.phase == Phase::Refinement || after.phase == Phase::Done) {
        CHECK(apply_events(after.start_theme.settings, after.events) == after.current);
        CHECK(after.start_theme.theme_id == after.secondary_favorite);
        CHECK(after.explored);
      }
      if (after.phase == Phase::Done) CHECK(after.final_settings == after.current);
      prev = after.phase;
    }
  }
  // replay of the fuzzed log reproduces every session
  const auto live = s.sessions();
  Service replay(config_for(dir.path));
  const auto replayed = replay.sessions();
  REQUIRE(replayed.size() == live.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    CHECK(replayed[i].phase == live[i].phase);
    CHECK(replayed[i].events == live[i].events);
    CHECK(replayed[i].primary == live[i].primary);
    CHECK(replayed[i].secondary == live[i].secondary);
  }
}

TEST_CASE("reading trial with a scripted clock") {
  TempDir dir("trial");
  std::int64_t clock = 1'000'000;
  Service s(config_for(dir.path, [&] { return clock; }));
  auto r = call(s, "POST", "/trials", {{"participant_id", "gina"}});
  REQUIRE(r.status == 201);
  const auto tid = r.body.at("trial_id").get<std::string>();
  CHECK(call(s, "POST", "/trials", {{"participant_id", "gina"}}).status == 409);
  CHECK(call(s, "GET", "/trials/T999999").status == 404);

  std::set<std::string> themes, passages;
  for (const auto& c : r.body.at("conditions")) {
    themes.insert(c.at("theme_id").get<std::string>());
    passages.insert(c.at("passage_id").get<std::string>());
  }
  CHECK(themes == std::set<std::string>{"compact", "open", "relaxed", "control"});
  CHECK(passages.size() == 4);

  // keypress before any screen is served
  CHECK(call(s, "POST", "/trials/" + tid + "/keypress", {{"screen", 0}}).status == 422);

  const auto& bank = raster::grade8_trial_passages();
  std::vector<std::vector<double>> expected_wpm;
  for (int cond = 0; cond < 4; ++cond) {
    const auto pid = s.trial(tid)->conditions[cond].passage_id;
    const auto& passage = *std::find_if(bank.begin(), bank.end(), [&](const auto& p) { return p.passage_id == pid; });
    REQUIRE(passage.screen_count() == 4);
    std::vector<double> wpm;
    for (int screen = 0; screen < 4; ++screen) {
      r = call(s, "GET", "/trials/" + tid + "/screen");
      REQUIRE(r.status == 200);
      CHECK(r.body.at("condition") == cond);
      CHECK(r.body.at("screen") == screen);
      CHECK(r.body.at("questions").size() == (screen == 3 ? 4u : 0u));
      const int words = r.body.at("word_count").get<int>();
      CHECK(words == static_cast<int>(raster::screen_words(passage, screen).size()));
      // re-fetching the same screen keeps the first timestamp
      clock += 1000;
      CHECK(call(s, "GET", "/trials/" + tid + "/screen").body.at("screen") == screen);
      CHECK(call(s, "POST", "/trials/" + tid + "/answers", {{"answers", {0, 0, 0, 0}}}).status == 422);
      const std::int64_t read_ms = 20'000 + 5'000 * screen + 1'000 * cond;
      clock += read_ms - 1000;
      CHECK(call(s, "POST", "/trials/" + tid + "/keypress", {{"screen", screen + 1}}).status == 422);
      REQUIRE(call(s, "POST", "/trials/" + tid + "/keypress", {{"screen", screen}, {"client_ms", 5}}).status == 200);
      CHECK(call(s, "POST", "/trials/" + tid + "/keypress", {{"screen", screen}}).status == 422);
      wpm.push_back(words * 60000.0 / static_cast<double>(read_ms));
      clock += 300;
    }
    CHECK(call(s, "GET", "/trials/" + tid + "/screen").status == 422);
    CHECK(call(s, "POST", "/trials/" + tid + "/comfort", {{"value", 6}}).status == 422);
    std::vector<int> answers;
    for (const auto& q : passage.questions) answers.push_back(q.answer);
    if (cond == 1) answers[0] = (answers[0] + 1) % 4;
    REQUIRE(call(s, "POST", "/trials/" + tid + "/answers", {{"answers", answers}}).status == 200);
    REQUIRE(call(s, "POST", "/trials/" + tid + "/comfort", {{"value", cond + 1}}).status == 200);
    expected_wpm.push_back(wpm);
  }
  const auto t = *s.trial(tid);
  REQUIRE(t.closed());
  REQUIRE(t.measurements.size() == 4);
  for (int cond = 0; cond < 4; ++cond) {
    const auto& m = t.measurements[cond];
    CHECK(m.participant_id == "gina");
    CHECK(m.theme_id == t.conditions[cond].theme.theme_id);
    CHECK(m.comfort == cond + 1);
    CHECK(m.comprehension == doctest::Approx(cond == 1 ? 0.75 : 1.0));
    REQUIRE(m.screen_wpm.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(m.screen_wpm[i] == doctest::Approx(expected_wpm[cond][i]));
  }
  CHECK(call(s, "GET", "/trials/" + tid + "/screen").status == 422);

  // the trial log replays to the same measurements
  Service replay(config_for(dir.path));
  const auto t2 = *replay.trial(tid);
  REQUIRE(t2.measurements.size() == 4);
  CHECK(t2.measurements[2].screen_wpm == t.measurements[2].screen_wpm);
}

TEST_CASE("hand-computed words per minute") {
  TempDir dir("wpm");
  std::int64_t clock = 0;
  Service s(config_for(dir.path, [&] { return clock; }));
  const auto tid = call(s, "POST", "/trials", {{"participant_id", "h"}}).body.at("trial_id").get<std::string>();
  const auto words = call(s, "GET", "/trials/" + tid + "/screen").body.at("word_count").get<int>();
  clock = 30'000;  // half a minute
  REQUIRE(call(s, "POST", "/trials/" + tid + "/keypress", {{"screen", 0}}).status == 200);
  const auto c = s.trial(tid)->conditions[0];
  CHECK(c.timings[0].shown_ms == 0);
  CHECK(c.timings[0].keypress_ms == 30'000);
  CHECK(words > 0);
  // words / 0.5 min
  const std::vector<stats::ScreenTiming> timings{{0, 30'000}};
  const std::vector<int> wc{words}, ans{1}, key{1};
  CHECK(stats::score_trial(timings, wc, ans, key).screen_wpm[0] == doctest::Approx(2.0 * words));
  // a keypress in the same millisecond as the screen is refused
  clock += 100;
  REQUIRE(call(s, "GET", "/trials/" + tid + "/screen").status == 200);
  CHECK(call(s, "POST", "/trials/" + tid + "/keypress", {{"screen", 1}}).status == 422);
}

TEST_CASE("http front end") {
  TempDir dir("http");
  Service s(config_for(dir.path));
  HttpServer server(s);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 50 && !client.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));

  auto res = client.Get("/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("status") == "ok");

  res = client.Post("/sessions", participant("ivy").dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const auto sid = json::parse(res->body).at("session_id").get<std::string>();
  res = client.Get(("/sessions/" + sid).c_str());
  REQUIRE(res);
  CHECK(json::parse(res->body).at("phase") == "refinement");

  res = client.Post("/iterations/0/cluster", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 401);
  httplib::Headers h{{"X-Admin-Token", kToken}};
  res = client.Post("/iterations/0/cluster", h, "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);

  server.stop();
  t.join();
}
