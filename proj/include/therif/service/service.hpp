#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "therif/core/participant.hpp"
#include "therif/core/refinement.hpp"
#include "therif/core/theme.hpp"
#include "therif/learn/cnn.hpp"
#include "therif/pipeline/pipeline.hpp"
#include "therif/service/store.hpp"
#include "therif/stats/reading.hpp"

namespace therif::service {

enum class Phase { PrimaryReview, Exploration, SecondaryReview, Refinement, Done };

std::string_view phase_name(Phase p);

struct ServiceConfig {
  std::filesystem::path root;
  std::string admin_token;  // empty disables the /iterations endpoints
  std::uint64_t seed = 0;
  pipeline::Stage2Options stage2;
  std::vector<Theme> validation_pool = pipeline::builtin_validation_pool();
  std::function<std::int64_t()> clock;  // server time in ms; defaults to the system clock
  bool read_only = false;               // replay only; every mutating request fails
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

struct Session {
  std::string session_id;
  Participant participant;
  int iteration = 0;
  std::vector<Theme> themes;  // primary display order
  std::vector<std::string> secondary_order;
  Phase phase = Phase::PrimaryReview;
  std::int64_t created_at = 0;
  std::map<std::string, RatingValue> primary;
  std::map<std::string, RatingValue> secondary;
  std::string primary_favorite;
  std::string secondary_favorite;
  bool explored = false;
  int exploration_events = 0;
  Theme start_theme;
  TextSettings current;
  std::vector<RefinementEvent> events;
  std::optional<TextSettings> final_settings;
  std::int64_t refinement_started_ms = 0;  // server clock
  std::int64_t adjust_duration_ms = 0;     // server clock, refinement phase only
};

struct TrialCondition {
  Theme theme;
  std::string passage_id;
  std::vector<stats::ScreenTiming> timings;  // one per served screen
  std::vector<bool> pressed;
  std::optional<std::vector<int>> answers;
  std::optional<int> comfort;
};

struct Trial {
  std::string trial_id;
  std::string participant_id;
  std::optional<Participant> participant;  // when demographics were given
  std::vector<TrialCondition> conditions;
  int current = 0;  // condition index; == size() when closed
  std::vector<stats::ReadingMeasurement> measurements;

  bool closed() const { return current == static_cast<int>(conditions.size()); }
};

struct IterationInfo {
  int index = 0;
  std::vector<Theme> themes;  // reps + designer themes shown this iteration (empty for R0)
  bool clustered = false;
  cluster::ClusteringReport report;
  std::vector<Theme> representatives;  // for the next iteration
  std::vector<Theme> designer_themes;  // for the next iteration
};

// Event-sourced session/trial/iteration state persisted as three JSONL logs
// (sessions.jsonl, trials.jsonl, iterations.jsonl) under the root. Every
// mutation is appended before it is applied, so reopening a root replays
// exactly the committed records. Closed iterations are also snapshotted to
// iterations/R<n>/ in the pipeline state layout. Thread-safe.
class Service {
 public:
  explicit Service(ServiceConfig config);

  // Routes one request. `body` is raw JSON text (may be empty).
  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::string& admin_token = "");

  std::optional<Session> session(const std::string& id) const;
  std::vector<Session> sessions() const;
  std::optional<Trial> trial(const std::string& id) const;
  std::vector<Trial> trials() const;
  int current_iteration() const;
  std::uintmax_t recovered_bytes() const;

 private:
  Response create_session(const nlohmann::json& body);
  Response get_session(const std::string& id);
  Response post_ratings(const std::string& id, const nlohmann::json& body);
  Response post_favorite(const std::string& id, const nlohmann::json& body);
  Response post_exploration(const std::string& id, const nlohmann::json& body);
  Response post_refinements(const std::string& id, const nlohmann::json& body);
  Response post_final(const std::string& id, const nlohmann::json& body);
  Response get_iteration(int n);
  Response cluster_iteration(int n);
  Response post_designer_themes(int n, const nlohmann::json& body);
  Response open_iteration(int n);
  Response create_trial(const nlohmann::json& body);
  Response get_trial(const std::string& id);
  Response get_screen(const std::string& id);
  Response post_keypress(const std::string& id, const nlohmann::json& body);
  Response post_answers(const std::string& id, const nlohmann::json& body);
  Response post_comfort(const std::string& id, const nlohmann::json& body);

  void commit(JsonlLog& log, const nlohmann::json& record);
  void apply(const nlohmann::json& record);
  void apply_session(const nlohmann::json& record);
  void apply_trial(const nlohmann::json& record);
  void apply_iteration(const nlohmann::json& record);
  void close_condition(Trial& trial);
  void snapshot(int n);
  nlohmann::json session_view(const Session& s) const;
  nlohmann::json trial_view(const Trial& t) const;
  std::int64_t now() const;

  ServiceConfig config_;
  mutable std::mutex mutex_;
  JsonlLog sessions_log_;
  JsonlLog trials_log_;
  JsonlLog iterations_log_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, std::string> participant_sessions_;
  std::map<std::string, Trial> trials_;
  std::vector<IterationInfo> iterations_;
  std::optional<learn::CnnModel> model_;
};

}  // namespace therif::service
