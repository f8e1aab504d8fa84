#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "therif/cluster/selection.hpp"
#include "therif/core/participant.hpp"
#include "therif/core/refinement.hpp"
#include "therif/core/theme.hpp"
#include "therif/learn/cnn.hpp"
#include "therif/sim/simulator.hpp"

namespace therif::pipeline {

struct PilotPreset {
  double character_spacing_em;
  double word_spacing_em;
  double line_height;
};

inline constexpr std::array<PilotPreset, 6> kPilotPresets = {{
    {0.0, 0.2, 1.9},
    {0.0, 0.2, 1.6},
    {0.0, 0.1, 1.6},
    {0.0, 0.1, 1.5},
    {0.0, 0.0, 1.6},
    {0.0, 0.0, 1.5},
}};

inline constexpr int kValidationPoolSize = 11;

// Uniform preset x study font, keyed on (participant id, seed). Theme ids
// are "pilot-<preset>-<font>" so equal starting themes share an id.
Theme init_r0(const Participant& participant, std::uint64_t seed);

// The checked-in pool from data/validation_themes.json.
const std::vector<Theme>& builtin_validation_pool();
// Throws PipelineError unless the file holds 11 validation themes.
std::vector<Theme> load_validation_pool(const std::filesystem::path& path);

// reps + designer themes + one validation theme, shuffled by session_seed.
// Throws PipelineError on an empty rep list or a pool that is not 11 themes.
std::vector<Theme> assemble_iteration_themes(std::span<const Theme> cluster_reps, std::span<const Theme> designer_themes,
                                             std::span<const Theme> validation_pool, std::uint64_t session_seed);

enum class ModelPolicy { Reuse, Retrain };

struct Stage2Options {
  int crops_per_format = 1000;       // embedding crops per format
  int train_crops_per_format = 100;  // classifier crops per distinct format
  learn::TrainConfig train;
  ModelPolicy policy = ModelPolicy::Reuse;
  cluster::ClusterOptions cluster;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const Stage2Options& o);
void from_json(const nlohmann::json& j, Stage2Options& o);

struct Stage2Result {
  cluster::ClusteringReport report;
  std::vector<Theme> themes;  // ids "R<iteration+1>-C<c>", iteration + 1
  bool trained = false;
  double train_accuracy = 0.0;
};

// Renders each log's final settings, samples crops, embeds them (training the
// classifier into `model` when it is empty or the policy is Retrain) and
// clusters one row per log. participants may be empty or aligned with logs.
// Formats whose crops cannot be sampled are skipped and listed in the report.
// Throws PipelineError for fewer than 2 logs or fewer than 1 renderable format.
Stage2Result run_stage2(std::span<const RefinementLog> logs, std::span<const Participant> participants,
                        int iteration, std::optional<learn::CnnModel>& model, const Stage2Options& options);

struct SessionRecord {
  Participant participant;
  int iteration = 0;
  std::vector<RatingRecord> ratings;
  std::string favorite_theme_id;
  Theme start_theme;
  RefinementLog log;

  bool operator==(const SessionRecord&) const = default;
};

void to_json(nlohmann::json& j, const SessionRecord& s);
void from_json(const nlohmann::json& j, SessionRecord& s);

struct IterationState {
  int index = 0;
  std::vector<Theme> themes_shown;
  std::vector<SessionRecord> sessions;
  cluster::ClusteringReport clustering;
  std::vector<Theme> designer_themes;
  std::vector<Theme> next_themes;
};

struct IterationMetrics {
  int iteration = 0;
  int sessions = 0;
  int cluster_count = 0;
  double silhouette = 0.0;
  double delta_character_spacing_em = 0.0;  // mean |final - start| per setting
  double delta_word_spacing_em = 0.0;
  double delta_line_height = 0.0;
  double delta_steps = 0.0;                 // mean of the three deltas summed in slider steps
  double mean_adjust_duration_ms = 0.0;
  double font_keep_rate = 1.0;
  double validation_favorite_rate = 0.0;
};

struct ConvergenceReport {
  std::vector<IterationMetrics> iterations;
};

// Sessions are summed in session-id order, so the result ignores input order.
IterationMetrics iteration_metrics(const IterationState& state);
// Throws PipelineError on an empty list.
ConvergenceReport convergence_report(std::span<const IterationState> states);

// Aligned arrays keyed by metric name.
void to_json(nlohmann::json& j, const ConvergenceReport& r);
std::string convergence_csv(const ConvergenceReport& r);

struct SimulationConfig {
  int iterations = 4;
  int participants = 90;
  std::uint64_t seed = 42;
  sim::PopulationSpec population = sim::default_population_spec();
  Stage2Options stage2;
  std::vector<Theme> validation_pool = builtin_validation_pool();
  std::map<int, std::vector<Theme>> designer_themes;  // iteration n -> themes added after clustering Rn
};

void to_json(nlohmann::json& j, const SimulationConfig& c);
// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, SimulationConfig& c);

struct SimulationResult {
  std::vector<IterationState> states;
  ConvergenceReport report;
};

// Runs R0..R(iterations-1) headless. When state_dir is given every iteration is
// written to iterations/R<n>/{themes.json, sessions.jsonl, clustering.json, report.json}
// next to config.json and convergence.json.
SimulationResult simulate_pipeline(const SimulationConfig& config,
                                   const std::optional<std::filesystem::path>& state_dir = std::nullopt);

void save_iteration(const std::filesystem::path& state_dir, const IterationState& state);
IterationState load_iteration(const std::filesystem::path& state_dir, int index);
// Iterations present under state_dir/iterations, in order.
std::vector<IterationState> load_iterations(const std::filesystem::path& state_dir);

}  // namespace therif::pipeline
