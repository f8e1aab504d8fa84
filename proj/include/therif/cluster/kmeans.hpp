#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace therif::cluster {

// Dense row-major matrix of format embeddings, one row per format.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t cols, std::vector<std::string> ids, std::vector<double> data);
  static FeatureMatrix from_rows(std::vector<std::string> ids, const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return cols_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t cols_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

struct KmeansResult {
  int k = 0;
  std::vector<double> centroids;  // k x cols, row-major
  std::vector<int> labels;
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  // Inertia after every Lloyd update, in order; non-increasing.
  std::vector<double> inertia_trace;

  std::span<const double> centroid(int c, std::size_t cols) const {
    return {centroids.data() + static_cast<std::size_t>(c) * cols, cols};
  }
};

struct KmeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-6;  // stop when every centroid moves less than this
};

// k-means++ seeding followed by Lloyd iterations.
KmeansResult kmeans_fit(const FeatureMatrix& x, int k, std::uint64_t seed, const KmeansOptions& options = {});

// Lloyd iterations from explicit initial centroids (k x cols, row-major).
KmeansResult kmeans_fit_from(const FeatureMatrix& x, std::vector<double> initial_centroids,
                             const KmeansOptions& options = {});

// Best-of-n restarts (lowest inertia, first wins ties); seeds are seed, seed+1, ...
KmeansResult kmeans_best_of(const FeatureMatrix& x, int k, std::uint64_t seed, int restarts,
                            const KmeansOptions& options = {});

std::vector<double> kmeans_plus_plus(const FeatureMatrix& x, int k, std::mt19937_64& rng);

// Mean silhouette over all rows; rows in singleton clusters score 0.
// Throws Error when fewer than two clusters are present.
double silhouette(const FeatureMatrix& x, std::span<const int> labels);

// Silhouette on a seeded subsample of at most `cap` rows.
double silhouette_sampled(const FeatureMatrix& x, std::span<const int> labels, std::size_t cap, std::uint64_t seed);

}  // namespace therif::cluster
