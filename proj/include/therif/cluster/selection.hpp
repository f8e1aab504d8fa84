#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "therif/cluster/kmeans.hpp"
#include "therif/core/participant.hpp"
#include "therif/core/theme.hpp"

namespace therif::cluster {

inline constexpr int kMaxClusters = 20;

// Kneedle knee of a decreasing convex curve (y over x), sensitivity S.
// Returns the x value of the knee, or nullopt when none is detected.
std::optional<double> kneedle_decreasing_convex(std::span<const double> x, std::span<const double> y,
                                                double sensitivity = 2.0);

struct KSelection {
  int k = 0;
  std::optional<int> knee_k;
  bool fallback = false;  // no knee: plain silhouette argmax over [2, k_max]
};

// inertia[i] and silhouettes[i] belong to k = i + 1; silhouettes[0] is ignored.
KSelection choose_k(std::span<const double> inertia_curve, std::span<const double> silhouettes,
                    int k_max = kMaxClusters, double smoothing = 2.0);

// A refined reading format: the source of one row of the feature matrix.
struct FormatRecord {
  std::string format_id;
  TextSettings settings;
  std::string participant_id;
};

// Per cluster, the row nearest the centroid; ties go to the smaller format id.
std::vector<std::size_t> representative_rows(const KmeansResult& result, const FeatureMatrix& x);

// Representatives as themes with ids "R<iteration>-C<cluster+1>".
std::vector<Theme> select_representatives(const KmeansResult& result, const FeatureMatrix& x,
                                          std::span<const FormatRecord> formats, int iteration);

struct ClusterDemographics {
  int size = 0;
  double share = 0.0;                     // of the whole population
  double dyslexic_share = 0.0;            // within the cluster
  std::map<std::string, double> age_share;  // bucket label -> share within the cluster
};

// One entry per cluster; labels[i] belongs to participants[i].
std::vector<ClusterDemographics> cluster_demographics(std::span<const int> labels,
                                                      std::span<const Participant> participants, int k);

struct ClusteringReport {
  int iteration = 0;
  int chosen_k = 1;
  double silhouette = 0.0;
  std::vector<double> inertia_curve;     // k = 1..k_max
  std::vector<double> silhouette_curve;  // k = 1..k_max, NaN at k = 1
  std::optional<int> knee_k;
  bool knee_fallback = false;
  bool degenerate = false;  // every format identical
  std::vector<std::vector<std::string>> members;  // format ids per cluster
  std::vector<std::string> representatives;       // format id per cluster
  std::vector<ClusterDemographics> demographics;
  std::vector<std::string> skipped_formats;  // could not be rendered or cropped
};

struct ClusterOptions {
  int k_max = kMaxClusters;
  double smoothing = 2.0;
  int restarts = 10;
  std::uint64_t seed = 0;
};

struct ClusterOutcome {
  ClusteringReport report;
  KmeansResult kmeans;
  std::vector<Theme> themes;
};

// Sweeps k, picks k with choose_k, extracts representatives and demographics.
// participants may be empty (no breakdown) or aligned with the rows of x.
ClusterOutcome cluster_formats(const FeatureMatrix& x, std::span<const FormatRecord> formats,
                               std::span<const Participant> participants, int iteration,
                               const ClusterOptions& options = {});

// CSV with header k,inertia,silhouette.
std::string curves_csv(const ClusteringReport& report);

}  // namespace therif::cluster
