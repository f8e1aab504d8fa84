#include "therif/cluster/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "therif/core/error.hpp"

namespace therif::cluster {

FeatureMatrix::FeatureMatrix(std::size_t cols, std::vector<std::string> ids, std::vector<double> data)
    : cols_(cols), ids_(std::move(ids)), data_(std::move(data)) {
  if (data_.size() != ids_.size() * cols_) throw ShapeError("feature matrix data does not match rows x cols");
  if (std::set<std::string>(ids_.begin(), ids_.end()).size() != ids_.size()) {
    throw Error("feature matrix has duplicate row ids");
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error("feature matrix has non-finite entries");
  }
}

FeatureMatrix FeatureMatrix::from_rows(std::vector<std::string> ids, const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("ragged feature rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return FeatureMatrix(cols, std::move(ids), std::move(data));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

void check_k(const FeatureMatrix& x, int k) {
  if (k < 1) throw Error("k must be >= 1");
  if (static_cast<std::size_t>(k) > x.rows()) throw Error("k exceeds the number of rows");
}

// Nearest centroid; lowest index wins ties.
int nearest(std::span<const double> point, const std::vector<double>& centroids, int k, std::size_t cols,
            double* best_distance) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    const double d = squared_distance(point, {centroids.data() + static_cast<std::size_t>(c) * cols, cols});
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_distance) *best_distance = best_d;
  return best;
}

double total_inertia(const FeatureMatrix& x, const std::vector<double>& centroids, const std::vector<int>& labels) {
  double sum = 0.0;  // fixed row order
  for (std::size_t i = 0; i < x.rows(); ++i) {
    sum += squared_distance(x.row(i), {centroids.data() + static_cast<std::size_t>(labels[i]) * x.cols(), x.cols()});
  }
  return sum;
}

// Moves the point farthest from its centroid into each empty cluster.
void repair_empty_clusters(const FeatureMatrix& x, std::vector<double>& centroids, std::vector<int>& labels, int k) {
  const std::size_t cols = x.cols();
  for (;;) {
    std::vector<int> counts(k, 0);
    for (int l : labels) ++counts[l];
    const auto empty = std::find(counts.begin(), counts.end(), 0);
    if (empty == counts.end()) return;
    const int target = static_cast<int>(empty - counts.begin());
    std::size_t farthest = 0;
    double farthest_d = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (counts[labels[i]] < 2) continue;
      const double d = squared_distance(x.row(i), {centroids.data() + labels[i] * cols, cols});
      if (d > farthest_d) {
        farthest_d = d;
        farthest = i;
      }
    }
    labels[farthest] = target;
    std::copy_n(x.row(farthest).begin(), cols, centroids.begin() + static_cast<std::ptrdiff_t>(target * cols));
  }
}

}  // namespace

std::vector<double> kmeans_plus_plus(const FeatureMatrix& x, int k, std::mt19937_64& rng) {
  check_k(x, k);
  const std::size_t n = x.rows();
  const std::size_t cols = x.cols();
  std::vector<double> centroids;
  centroids.reserve(static_cast<std::size_t>(k) * cols);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t first = pick(rng);
  centroids.insert(centroids.end(), x.row(first).begin(), x.row(first).end());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), x.row(first));
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double r = u(rng);
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.insert(centroids.end(), x.row(chosen).begin(), x.row(chosen).end());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(chosen)));
  }
  return centroids;
}

KmeansResult kmeans_fit_from(const FeatureMatrix& x, std::vector<double> centroids, const KmeansOptions& options) {
  const std::size_t cols = x.cols();
  if (cols == 0 || centroids.size() % cols != 0) throw ShapeError("initial centroids do not match feature width");
  const int k = static_cast<int>(centroids.size() / cols);
  check_k(x, k);

  KmeansResult r;
  r.k = k;
  std::vector<int> labels(x.rows(), 0);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (std::size_t i = 0; i < x.rows(); ++i) labels[i] = nearest(x.row(i), centroids, k, cols, nullptr);
    repair_empty_clusters(x, centroids, labels, k);

    std::vector<double> updated(static_cast<std::size_t>(k) * cols, 0.0);
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      ++counts[labels[i]];
      auto row = x.row(i);
      for (std::size_t j = 0; j < cols; ++j) updated[labels[i] * cols + j] += row[j];
    }
    double max_shift = 0.0;
    for (int c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < cols; ++j) updated[c * cols + j] /= counts[c];
      max_shift = std::max(max_shift, std::sqrt(squared_distance({updated.data() + c * cols, cols},
                                                                  {centroids.data() + c * cols, cols})));
    }
    centroids = std::move(updated);
    r.iterations = iter + 1;
    r.inertia_trace.push_back(total_inertia(x, centroids, labels));
    if (max_shift < options.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.centroids = std::move(centroids);
  r.labels = std::move(labels);
  r.inertia = r.inertia_trace.empty() ? total_inertia(x, r.centroids, r.labels) : r.inertia_trace.back();
  return r;
}

KmeansResult kmeans_fit(const FeatureMatrix& x, int k, std::uint64_t seed, const KmeansOptions& options) {
  check_k(x, k);
  std::mt19937_64 rng(seed);
  auto result = kmeans_fit_from(x, kmeans_plus_plus(x, k, rng), options);
  result.seed = seed;
  return result;
}

KmeansResult kmeans_best_of(const FeatureMatrix& x, int k, std::uint64_t seed, int restarts,
                            const KmeansOptions& options) {
  KmeansResult best = kmeans_fit(x, k, seed, options);
  for (int r = 1; r < restarts; ++r) {
    auto candidate = kmeans_fit(x, k, seed + static_cast<std::uint64_t>(r), options);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

double silhouette(const FeatureMatrix& x, std::span<const int> labels) {
  const std::size_t n = x.rows();
  if (labels.size() != n) throw ShapeError("one label per row required");
  if (n == 0) throw Error("silhouette of an empty matrix");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw Error("negative cluster label");
  std::vector<int> sizes(k, 0);
  for (int l : labels) ++sizes[l];
  if (std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; }) < 2) {
    throw Error("silhouette is undefined for a single cluster");
  }

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
  }
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    const int own = labels[i];
    if (sizes[own] < 2) continue;  // singleton scores 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[labels[j]] += dist[i * n + j];
    const double a = sums[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / sizes[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double silhouette_sampled(const FeatureMatrix& x, std::span<const int> labels, std::size_t cap, std::uint64_t seed) {
  if (x.rows() <= cap) return silhouette(x, labels);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(cap);
  std::sort(order.begin(), order.end());
  std::vector<std::string> ids;
  std::vector<double> data;
  std::vector<int> sub_labels;
  for (auto i : order) {
    ids.push_back(x.ids()[i]);
    data.insert(data.end(), x.row(i).begin(), x.row(i).end());
    sub_labels.push_back(labels[i]);
  }
  return silhouette(FeatureMatrix(x.cols(), std::move(ids), std::move(data)), sub_labels);
}

}  // namespace therif::cluster
