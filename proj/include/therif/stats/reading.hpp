#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace therif::stats {

inline constexpr double kMinWpm = 50.0;
inline constexpr double kMaxWpm = 650.0;

// Weights in integer percent so the sum is exactly 100.
struct CompositeWeights {
  int comprehension = 42;
  int comfort = 39;
  int speed = 19;

  double comprehension_weight() const { return comprehension / 100.0; }
  double comfort_weight() const { return comfort / 100.0; }
  double speed_weight() const { return speed / 100.0; }
  int total() const { return comprehension + comfort + speed; }
};

struct ReadingMeasurement {
  std::string participant_id;
  std::string theme_id;
  int comfort = 3;             // Likert 1..5
  double comprehension = 0.0;  // correct / 4
  std::vector<double> screen_wpm;

  bool operator==(const ReadingMeasurement&) const = default;
};

// Throws RangeError when comfort or comprehension are off their lattice.
void validate(const ReadingMeasurement& m);

// Keeps values in [50, 650], boundaries included.
std::vector<double> filter_wpm(std::span<const double> wpm);

// Mean of the filtered screen speeds; 0 when nothing survives the filter.
double mean_filtered_wpm(const ReadingMeasurement& m);

struct CohortBounds {
  double min_wpm = 0.0;
  double max_wpm = 0.0;
};

// Min / max of per-measurement mean filtered WPM over the cohort.
CohortBounds cohort_bounds(std::span<const ReadingMeasurement> cohort);

struct CompositeScore {
  double score = 0.0;
  double comprehension = 0.0;  // normalized terms, each in [0, 1]
  double comfort = 0.0;
  double speed = 0.0;
  bool degenerate_speed = false;  // max == min: speed term fixed at 0.5
};

CompositeScore composite_score(const ReadingMeasurement& m, const CohortBounds& bounds,
                               const CompositeWeights& weights = {});

// Timestamps (ms) of one screen: when it was shown and when the reader pressed a key.
struct ScreenTiming {
  std::int64_t shown_ms = 0;
  std::int64_t keypress_ms = 0;
};

struct TrialScore {
  std::vector<double> screen_wpm;
  double comprehension = 0.0;
};

// Throws StatsError when timestamps are not strictly increasing or the
// inputs disagree in length.
TrialScore score_trial(std::span<const ScreenTiming> screens, std::span<const int> word_counts,
                       std::span<const int> answers, std::span<const int> key);

struct ConsistencyResult {
  double speed = 0.0;
  double comprehension = 0.0;
  double comfort = 0.0;
  int compared = 0;  // participant x theme pairs evaluated
  int skipped = 0;   // pairs missing from one study
};

// Fraction of participant x theme pairs whose sign of (theme - control)
// agrees across two studies, per metric.
ConsistencyResult consistency(std::span<const ReadingMeasurement> study1,
                              std::span<const ReadingMeasurement> study2, const std::string& control_id);

// CSV with header participant,theme,comfort,comprehension,mean_wpm,composite.
std::string trial_results_csv(std::span<const ReadingMeasurement> measurements,
                              const CompositeWeights& weights = {});

// Markdown tables, one row per theme, columns composite / comfort /
// comprehension / speed, for each group in `groups` (group -> participant ids).
std::string performance_report_markdown(std::span<const ReadingMeasurement> measurements,
                                        const std::map<std::string, std::vector<std::string>>& groups,
                                        bool per_group_bounds = false, const CompositeWeights& weights = {});

}  // namespace therif::stats
