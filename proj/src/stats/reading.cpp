#include "therif/stats/reading.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "therif/core/error.hpp"

namespace therif::stats {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

void validate(const ReadingMeasurement& m) {
  if (m.comfort < 1 || m.comfort > 5) throw RangeError("comfort", "comfort must be in [1, 5]");
  const double quarters = m.comprehension * 4.0;
  if (m.comprehension < 0.0 || m.comprehension > 1.0 || std::fabs(quarters - std::round(quarters)) > 1e-12) {
    throw RangeError("comprehension", "comprehension must be one of 0, .25, .5, .75, 1");
  }
}

std::vector<double> filter_wpm(std::span<const double> wpm) {
  std::vector<double> out;
  std::copy_if(wpm.begin(), wpm.end(), std::back_inserter(out),
               [](double v) { return v >= kMinWpm && v <= kMaxWpm; });
  return out;
}

double mean_filtered_wpm(const ReadingMeasurement& m) {
  const auto kept = filter_wpm(m.screen_wpm);
  if (kept.empty()) return 0.0;
  return std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
}

CohortBounds cohort_bounds(std::span<const ReadingMeasurement> cohort) {
  CohortBounds b;
  bool first = true;
  for (const auto& m : cohort) {
    if (filter_wpm(m.screen_wpm).empty()) continue;
    const double s = mean_filtered_wpm(m);
    if (first) {
      b.min_wpm = b.max_wpm = s;
      first = false;
    } else {
      b.min_wpm = std::min(b.min_wpm, s);
      b.max_wpm = std::max(b.max_wpm, s);
    }
  }
  return b;
}

CompositeScore composite_score(const ReadingMeasurement& m, const CohortBounds& bounds,
                               const CompositeWeights& weights) {
  if (weights.comprehension < 0 || weights.comfort < 0 || weights.speed < 0 || weights.total() != 100) {
    throw RangeError("weights", "composite weights must be non-negative and sum to 100%");
  }
  validate(m);
  CompositeScore s;
  s.comprehension = m.comprehension;
  s.comfort = (m.comfort - 1) / 4.0;
  if (bounds.max_wpm <= bounds.min_wpm) {
    s.speed = 0.5;
    s.degenerate_speed = true;
  } else {
    const double raw = (mean_filtered_wpm(m) - bounds.min_wpm) / (bounds.max_wpm - bounds.min_wpm);
    s.speed = std::clamp(raw, 0.0, 1.0);
  }
  // Integer-percent weights keep 0.42/0.39/0.19 exact up to one final division.
  s.score = (weights.comprehension * s.comprehension + weights.comfort * s.comfort + weights.speed * s.speed) / 100.0;
  return s;
}

TrialScore score_trial(std::span<const ScreenTiming> screens, std::span<const int> word_counts,
                       std::span<const int> answers, std::span<const int> key) {
  if (screens.size() != word_counts.size()) throw StatsError("score_trial: one word count per screen required");
  if (answers.size() != key.size()) throw StatsError("score_trial: answers and key differ in length");
  if (key.empty()) throw StatsError("score_trial: empty answer key");
  TrialScore out;
  std::int64_t previous = std::numeric_limits<std::int64_t>::min();
  for (std::size_t i = 0; i < screens.size(); ++i) {
    const auto& s = screens[i];
    if (s.shown_ms < previous || s.keypress_ms <= s.shown_ms) {
      throw StatsError("score_trial: non-monotonic timestamps on screen " + std::to_string(i));
    }
    previous = s.keypress_ms;
    const double minutes = static_cast<double>(s.keypress_ms - s.shown_ms) / 60000.0;
    out.screen_wpm.push_back(word_counts[i] / minutes);
  }
  int correct = 0;
  for (std::size_t i = 0; i < key.size(); ++i) correct += answers[i] == key[i];
  out.comprehension = static_cast<double>(correct) / static_cast<double>(key.size());
  return out;
}

ConsistencyResult consistency(std::span<const ReadingMeasurement> study1, std::span<const ReadingMeasurement> study2,
                              const std::string& control_id) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, const ReadingMeasurement*> second;
  for (const auto& m : study2) second[{m.participant_id, m.theme_id}] = &m;
  std::map<Key, const ReadingMeasurement*> first;
  for (const auto& m : study1) first[{m.participant_id, m.theme_id}] = &m;

  ConsistencyResult r;
  int speed = 0, comprehension = 0, comfort = 0;
  for (const auto& [key, m1] : first) {
    if (key.second == control_id) continue;
    const auto c1 = first.find({key.first, control_id});
    const auto m2 = second.find(key);
    const auto c2 = second.find({key.first, control_id});
    if (c1 == first.end() || m2 == second.end() || c2 == second.end()) {
      ++r.skipped;
      continue;
    }
    ++r.compared;
    const auto* a = m1;
    const auto* b = m2->second;
    speed += sign(mean_filtered_wpm(*a) - mean_filtered_wpm(*c1->second)) ==
             sign(mean_filtered_wpm(*b) - mean_filtered_wpm(*c2->second));
    comprehension += sign(a->comprehension - c1->second->comprehension) ==
                     sign(b->comprehension - c2->second->comprehension);
    comfort += sign(a->comfort - c1->second->comfort) == sign(b->comfort - c2->second->comfort);
  }
  if (r.compared > 0) {
    r.speed = static_cast<double>(speed) / r.compared;
    r.comprehension = static_cast<double>(comprehension) / r.compared;
    r.comfort = static_cast<double>(comfort) / r.compared;
  }
  return r;
}

std::string trial_results_csv(std::span<const ReadingMeasurement> measurements, const CompositeWeights& weights) {
  const auto bounds = cohort_bounds(measurements);
  std::ostringstream out;
  out << "participant,theme,comfort,comprehension,mean_wpm,composite\n";
  for (const auto& m : measurements) {
    out << m.participant_id << ',' << m.theme_id << ',' << m.comfort << ',' << fixed(m.comprehension, 2) << ','
        << fixed(mean_filtered_wpm(m), 2) << ',' << fixed(composite_score(m, bounds, weights).score, 4) << '\n';
  }
  return out.str();
}

std::string performance_report_markdown(std::span<const ReadingMeasurement> measurements,
                                        const std::map<std::string, std::vector<std::string>>& groups,
                                        bool per_group_bounds, const CompositeWeights& weights) {
  const auto global_bounds = cohort_bounds(measurements);
  std::ostringstream out;
  for (const auto& [group, ids] : groups) {
    const std::set<std::string> members(ids.begin(), ids.end());
    std::vector<ReadingMeasurement> subset;
    for (const auto& m : measurements) {
      if (members.count(m.participant_id)) subset.push_back(m);
    }
    const auto bounds = per_group_bounds ? cohort_bounds(subset) : global_bounds;
    std::set<std::string> themes;
    for (const auto& m : subset) themes.insert(m.theme_id);

    out << "### " << group << " (n=" << members.size() << ")\n\n";
    out << "| theme | composite | comfort | comprehension | speed (wpm) |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& theme : themes) {
      double composite = 0.0, comfort = 0.0, comprehension = 0.0, speed = 0.0;
      int n = 0;
      for (const auto& m : subset) {
        if (m.theme_id != theme) continue;
        composite += composite_score(m, bounds, weights).score;
        comfort += m.comfort;
        comprehension += m.comprehension;
        speed += mean_filtered_wpm(m);
        ++n;
      }
      out << "| " << theme << " | " << fixed(composite / n, 3) << " | " << fixed(comfort / n, 2) << " | "
          << fixed(comprehension / n, 2) << " | " << fixed(speed / n, 1) << " |\n";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace therif::stats
