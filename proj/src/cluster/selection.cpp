#include "therif/cluster/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "therif/core/error.hpp"

namespace therif::cluster {

namespace {

std::vector<double> normalize(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  return out;
}

// argrelextrema with order 1 and clipped ends: an endpoint compares with itself.
template <class Cmp>
std::vector<std::size_t> rel_extrema(const std::vector<double>& v, Cmp cmp) {
  std::vector<std::size_t> out;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double left = v[i == 0 ? 0 : i - 1];
    const double right = v[i + 1 >= n ? n - 1 : i + 1];
    if (cmp(v[i], left) && cmp(v[i], right)) out.push_back(i);
  }
  return out;
}

}  // namespace

std::optional<double> kneedle_decreasing_convex(std::span<const double> x, std::span<const double> y,
                                                double sensitivity) {
  if (x.size() != y.size()) throw ShapeError("kneedle: x and y differ in length");
  if (x.size() < 2) return std::nullopt;
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  if (*xhi == *xlo || *yhi == *ylo) return std::nullopt;

  const auto xn = normalize(x);
  auto yn = normalize(y);
  const double ymax = *std::max_element(yn.begin(), yn.end());
  for (double& v : yn) v = ymax - v;
  std::vector<double> diff(xn.size());
  for (std::size_t i = 0; i < xn.size(); ++i) diff[i] = yn[i] - xn[i];

  const auto maxima = rel_extrema(diff, std::greater_equal<double>());
  const auto minima = rel_extrema(diff, std::less_equal<double>());
  if (maxima.empty()) return std::nullopt;
  double step = 0.0;
  for (std::size_t i = 1; i < xn.size(); ++i) step += xn[i] - xn[i - 1];
  step = std::fabs(step / static_cast<double>(xn.size() - 1));

  std::size_t next_max = 0;
  double threshold = 0.0;
  std::size_t threshold_index = 0;
  bool active = true;
  for (std::size_t i = maxima.front(); i + 1 < diff.size(); ++i) {
    if (std::find(maxima.begin(), maxima.end(), i) != maxima.end()) {
      threshold = diff[maxima[next_max]] - sensitivity * step;
      threshold_index = i;
      ++next_max;
      active = true;
    }
    if (std::find(minima.begin(), minima.end(), i) != minima.end()) {
      threshold = 0.0;
      active = false;
    }
    if (active && diff[i + 1] < threshold) return x[threshold_index];
  }
  return std::nullopt;
}

KSelection choose_k(std::span<const double> inertia_curve, std::span<const double> silhouettes, int k_max,
                    double smoothing) {
  if (inertia_curve.empty()) throw Error("choose_k: empty inertia curve");
  if (silhouettes.size() != inertia_curve.size()) throw ShapeError("choose_k: curves differ in length");
  if (k_max < 1 || k_max > kMaxClusters) throw RangeError("k_max", "k_max must be in [1, 20]");
  if (std::any_of(inertia_curve.begin(), inertia_curve.end(), [](double v) { return !(v > 0.0); })) {
    throw Error("choose_k: inertia curve must be strictly positive");
  }
  const int n = std::min<int>(k_max, static_cast<int>(inertia_curve.size()));
  std::vector<double> ks(n);
  std::iota(ks.begin(), ks.end(), 1.0);

  KSelection out;
  const auto knee = kneedle_decreasing_convex(ks, inertia_curve.first(n), smoothing);
  int lo = 2, hi = n;
  if (knee) {
    out.knee_k = static_cast<int>(*knee);
    lo = std::max(2, *out.knee_k - 1);
    hi = std::min(n, *out.knee_k + 1);
  } else {
    out.fallback = true;
  }
  out.k = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = lo; k <= hi; ++k) {
    const double s = silhouettes[k - 1];
    if (std::isfinite(s) && s > best) {
      best = s;
      out.k = k;
    }
  }
  return out;
}

std::vector<std::size_t> representative_rows(const KmeansResult& result, const FeatureMatrix& x) {
  if (result.labels.size() != x.rows() || result.centroids.size() != static_cast<std::size_t>(result.k) * x.cols()) {
    throw ShapeError("k-means result does not match the feature matrix");
  }
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> best(result.k, kNone);
  std::vector<double> best_d(result.k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int c = result.labels[i];
    if (c < 0 || c >= result.k) throw ShapeError("label out of range");
    const double d = squared_distance(x.row(i), result.centroid(c, x.cols()));
    if (d < best_d[c] || (d == best_d[c] && x.ids()[i] < x.ids()[best[c]])) {
      best_d[c] = d;
      best[c] = i;
    }
  }
  if (std::find(best.begin(), best.end(), kNone) != best.end()) throw Error("empty cluster in k-means result");
  return best;
}

std::vector<Theme> select_representatives(const KmeansResult& result, const FeatureMatrix& x,
                                          std::span<const FormatRecord> formats, int iteration) {
  std::map<std::string, const FormatRecord*> by_id;
  for (const auto& f : formats) by_id[f.format_id] = &f;
  std::vector<Theme> themes;
  const auto rows = representative_rows(result, x);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const auto it = by_id.find(x.ids()[rows[c]]);
    if (it == by_id.end()) throw Error("no format record for row " + x.ids()[rows[c]]);
    Theme t{"R" + std::to_string(iteration) + "-C" + std::to_string(c + 1), it->second->settings,
            Provenance::ClusterRepresentative, iteration};
    validate(t);
    themes.push_back(std::move(t));
  }
  return themes;
}

std::vector<ClusterDemographics> cluster_demographics(std::span<const int> labels,
                                                      std::span<const Participant> participants, int k) {
  if (labels.size() != participants.size()) throw ShapeError("one label per participant required");
  std::vector<ClusterDemographics> out(k);
  std::vector<int> dyslexic(k, 0);
  std::vector<std::map<std::string, int>> ages(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= k) throw ShapeError("label out of range");
    ++out[c].size;
    dyslexic[c] += participants[i].dyslexia;
    ++ages[c][std::string(age_bucket_label(participants[i].bucket()))];
  }
  const double total = static_cast<double>(labels.size());
  for (int c = 0; c < k; ++c) {
    auto& d = out[c];
    for (auto b : kAllAgeBuckets) d.age_share[std::string(age_bucket_label(b))] = 0.0;
    if (d.size == 0) continue;
    d.share = d.size / total;
    d.dyslexic_share = static_cast<double>(dyslexic[c]) / d.size;
    for (const auto& [bucket, n] : ages[c]) d.age_share[bucket] = static_cast<double>(n) / d.size;
  }
  return out;
}

ClusterOutcome cluster_formats(const FeatureMatrix& x, std::span<const FormatRecord> formats,
                               std::span<const Participant> participants, int iteration,
                               const ClusterOptions& options) {
  if (x.rows() == 0) throw Error("nothing to cluster");
  if (!participants.empty() && participants.size() != x.rows()) {
    throw ShapeError("participants must align with feature rows");
  }
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < x.rows(); ++i) distinct.emplace(x.row(i).begin(), x.row(i).end());
  const int k_cap = std::min<int>(options.k_max, static_cast<int>(distinct.size()));

  ClusterOutcome out;
  auto& report = out.report;
  report.iteration = iteration;
  std::vector<KmeansResult> fits;
  for (int k = 1; k <= std::max(1, k_cap); ++k) {
    fits.push_back(kmeans_best_of(x, k, options.seed + 1000u * static_cast<std::uint64_t>(k), options.restarts));
    report.inertia_curve.push_back(fits.back().inertia);
    report.silhouette_curve.push_back(k == 1 ? std::numeric_limits<double>::quiet_NaN()
                                             : silhouette(x, fits.back().labels));
  }

  const bool positive = std::all_of(report.inertia_curve.begin(), report.inertia_curve.end(),
                                    [](double v) { return v > 0.0; });
  if (k_cap < 2 || !positive) {
    report.degenerate = k_cap < 2;
    report.chosen_k = k_cap < 2 ? 1 : 2;
    report.knee_fallback = true;
    if (!report.degenerate) {
      // Zero inertia somewhere: pick the silhouette maximum directly.
      int best = 2;
      for (int k = 2; k <= k_cap; ++k) {
        if (report.silhouette_curve[k - 1] > report.silhouette_curve[best - 1]) best = k;
      }
      report.chosen_k = best;
    }
  } else {
    const auto sel = choose_k(report.inertia_curve, report.silhouette_curve, k_cap, options.smoothing);
    report.chosen_k = sel.k;
    report.knee_k = sel.knee_k;
    report.knee_fallback = sel.fallback;
  }
  out.kmeans = fits[report.chosen_k - 1];
  report.silhouette = report.chosen_k < 2 ? 0.0 : report.silhouette_curve[report.chosen_k - 1];

  report.members.assign(report.chosen_k, {});
  for (std::size_t i = 0; i < x.rows(); ++i) report.members[out.kmeans.labels[i]].push_back(x.ids()[i]);
  for (auto& m : report.members) std::sort(m.begin(), m.end());
  for (auto row : representative_rows(out.kmeans, x)) report.representatives.push_back(x.ids()[row]);
  out.themes = select_representatives(out.kmeans, x, formats, iteration);
  if (!participants.empty()) {
    report.demographics = cluster_demographics(out.kmeans.labels, participants, report.chosen_k);
  }
  return out;
}

std::string curves_csv(const ClusteringReport& report) {
  std::ostringstream out;
  out << std::setprecision(17) << "k,inertia,silhouette\n";
  for (std::size_t i = 0; i < report.inertia_curve.size(); ++i) {
    out << i + 1 << ',' << report.inertia_curve[i] << ',';
    if (i < report.silhouette_curve.size() && std::isfinite(report.silhouette_curve[i])) {
      out << report.silhouette_curve[i];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace therif::cluster
