#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "therif/render/renderer.hpp"

namespace therif::learn {

inline constexpr int kInputSide = raster::kCropSide;
inline constexpr int kFeatureDim = 128;
inline constexpr std::array<int, 3> kConvChannels = {16, 32, 64};
inline constexpr int kFlatDim = 64 * 16 * 16;

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum ParamId { kConv1W, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B, kFc1W, kFc1B, kFc2W, kFc2B, kParamCount };

std::string param_name(int id);

struct InitOptions {
  std::uint64_t seed = 0;
  bool random_output = false;  // default: output layer starts at zero
  double bias_range = 0.0;     // biases uniform in [-bias_range, bias_range]
};

// 3 x [3x3 conv, ReLU, 2x2 max-pool] with 16/32/64 channels, a 128-wide
// ReLU feature layer and a K-way softmax output.
// Conv weights are stored as (9*Cin) x Cout, dense weights as out x in.
template <class T>
class Cnn {
 public:
  Cnn() = default;
  Cnn(int num_classes, const InitOptions& init);

  int num_classes() const { return num_classes_; }
  std::array<Mat<T>, kParamCount>& params() { return params_; }
  const std::array<Mat<T>, kParamCount>& params() const { return params_; }

  template <class U>
  Cnn<U> cast() const {
    Cnn<U> out;
    out.num_classes_ = num_classes_;
    for (int i = 0; i < kParamCount; ++i) out.params_[i] = params_[i].template cast<U>();
    return out;
  }

  // Input batch: one column per crop, 128*128 values in row-major pixel order, ink = 1.
  Mat<T> features(const Mat<T>& input) const;        // 128 x B, post-ReLU
  Mat<T> probabilities(const Mat<T>& input) const;   // K x B, softmax
  // Mean cross-entropy; when grads is non-null it receives d loss / d param.
  T loss(const Mat<T>& input, std::span<const int> labels, std::array<Mat<T>, kParamCount>* grads) const;

 private:
  template <class U>
  friend class Cnn;

  int num_classes_ = 0;
  std::array<Mat<T>, kParamCount> params_;
};

using CnnModel = Cnn<float>;

// Converts crops to a network input batch (ink = 1, background = 0).
template <class T>
Mat<T> to_input(std::span<const raster::Crop> crops);

struct CropDataset {
  std::vector<raster::Crop> crops;
  std::vector<int> labels;          // dense 0..K-1
  std::vector<bool> is_test;
  std::vector<std::string> format_ids;  // label -> format id

  int num_formats() const { return static_cast<int>(format_ids.size()); }
};

// Labels follow first appearance of each source_format_id; a stratified
// split sends round(test_fraction * n) crops of every format to test,
// at least one and at most n - 1.
CropDataset make_dataset(std::vector<raster::Crop> crops, double test_fraction = 0.2, std::uint64_t seed = 0);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;  // mean mini-batch loss over the epoch
  double test_accuracy = 0.0;
};

struct TrainResult {
  CnnModel model;
  double test_accuracy = 0.0;
  std::vector<EpochLog> log;
};

// Throws Error for single-format datasets or formats missing from a split.
TrainResult train(const CropDataset& dataset, const TrainConfig& config);

double accuracy(const CnnModel& model, const CropDataset& dataset, bool test_split = true);

// CSV with header epoch,loss,test_accuracy.
std::string training_log_csv(std::span<const EpochLog> log);

using FeatureVector = std::vector<double>;

// Throws ShapeError when the crop is not 128 x 128.
FeatureVector embed_crop(const CnnModel& model, const raster::Crop& crop);
// Component-wise mean over crops; throws Error on an empty list.
FeatureVector embed_format(const CnnModel& model, std::span<const raster::Crop> crops);

struct GradientCheck {
  double max_relative_error = 0.0;
  int checked = 0;
  int skipped = 0;  // entries whose perturbation crossed a ReLU/max-pool kink
};

// Central differences (h = 1e-4) in double precision on `per_param`
// randomly chosen entries of every parameter tensor. Entries where the
// perturbation flips any ReLU or max-pool decision are skipped and resampled.
GradientCheck gradient_check(const Cnn<double>& model, std::span<const raster::Crop> crops,
                             std::span<const int> labels, std::uint64_t seed, int per_param = 6, double h = 1e-4);

void save_model(const std::filesystem::path& path, const CnnModel& model);
CnnModel load_model(const std::filesystem::path& path);

}  // namespace therif::learn
