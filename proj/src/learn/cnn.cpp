#include "therif/learn/cnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "therif/core/error.hpp"

namespace therif::learn {

std::string param_name(int id) {
  static const char* names[kParamCount] = {"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
                                           "conv3.weight", "conv3.bias", "fc1.weight",   "fc1.bias",
                                           "fc2.weight",   "fc2.bias"};
  if (id < 0 || id >= kParamCount) throw Error("bad parameter id");
  return names[id];
}

namespace {

using Index = Eigen::Index;

// Activations are (B*H*W) x C, column-major: one column per channel,
// pixels of sample b at rows [b*H*W, (b+1)*H*W), row-major within a sample.

template <class T>
void im2col(const T* in, int batch, int h, int w, int cin, Mat<T>& patches) {
  const Index hw = static_cast<Index>(h) * w;
  const Index n = batch * hw;
  patches.resize(n, 9 * cin);
  for (int c = 0; c < cin; ++c) {
    const T* src = in + c * n;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* col = patches.col(c * 9 + ky * 3 + kx).data();
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);
        for (int b = 0; b < batch; ++b) {
          for (int y = 0; y < h; ++y) {
            T* d = col + b * hw + static_cast<Index>(y) * w;
            const int sy = y + dy;
            if (sy < 0 || sy >= h) {
              std::fill(d, d + w, T(0));
              continue;
            }
            const T* s = src + b * hw + static_cast<Index>(sy) * w + dx;
            std::fill(d, d + x0, T(0));
            std::copy(s + x0, s + x1, d + x0);
            std::fill(d + x1, d + w, T(0));
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const Mat<T>& dpatches, int batch, int h, int w, int cin, Mat<T>& din) {
  const Index hw = static_cast<Index>(h) * w;
  const Index n = batch * hw;
  din.setZero(n, cin);
  for (int c = 0; c < cin; ++c) {
    T* dst = din.col(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* col = dpatches.col(c * 9 + ky * 3 + kx).data();
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);
        for (int b = 0; b < batch; ++b) {
          for (int y = 0; y < h; ++y) {
            const int sy = y + dy;
            if (sy < 0 || sy >= h) continue;
            const T* s = col + b * hw + static_cast<Index>(y) * w;
            T* d = dst + b * hw + static_cast<Index>(sy) * w + dx;
            for (int x = x0; x < x1; ++x) d[x] += s[x];
          }
        }
      }
    }
  }
}

template <class T>
void max_pool(const Mat<T>& in, int batch, int h, int w, Mat<T>& out, std::vector<std::int32_t>* argmax) {
  const int oh = h / 2, ow = w / 2;
  const Index hw = static_cast<Index>(h) * w, ohw = static_cast<Index>(oh) * ow;
  out.resize(batch * ohw, in.cols());
  if (argmax) argmax->resize(static_cast<std::size_t>(out.size()));
  for (Index c = 0; c < in.cols(); ++c) {
    const T* src = in.col(c).data();
    T* dst = out.col(c).data();
    std::int32_t* idx = argmax ? argmax->data() + c * out.rows() : nullptr;
    for (int b = 0; b < batch; ++b) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          const Index base = b * hw + static_cast<Index>(2 * y) * w + 2 * x;
          const Index cand[4] = {base, base + 1, base + w, base + w + 1};
          Index best = cand[0];
          for (int k = 1; k < 4; ++k) {
            if (src[cand[k]] > src[best]) best = cand[k];
          }
          const Index o = b * ohw + static_cast<Index>(y) * ow + x;
          dst[o] = src[best];
          if (idx) idx[o] = static_cast<std::int32_t>(best);
        }
      }
    }
  }
}

// Per-thread scratch; buffers keep their allocation between calls.
template <class T>
struct Cache {
  int batch = 0;
  Mat<T> input;
  Mat<T> p[3];       // im2col patches per stage
  Mat<T> act[3];     // conv output after ReLU
  Mat<T> pooled[3];
  std::vector<std::int32_t> idx[3];
  Mat<T> flat;       // kFlatDim x B
  Mat<T> hidden;     // 128 x B, post-ReLU
  Mat<T> logits;     // K x B
  Mat<T> dact, dpatches, dpooled, dflat, dhidden;
};

template <class T>
Cache<T>& scratch() {
  thread_local Cache<T> cache;
  return cache;
}

constexpr int kSides[3] = {128, 64, 32};
constexpr int kInChannels[3] = {1, 16, 32};

template <class T>
void forward(const std::array<Mat<T>, kParamCount>& params, const Mat<T>& input, Cache<T>& cache) {
  const int batch = static_cast<int>(input.cols());
  if (input.rows() != kInputSide * kInputSide) throw ShapeError("input must have 128*128 rows");
  cache.batch = batch;
  const T* stage_in = input.data();
  for (int s = 0; s < 3; ++s) {
    const int side = kSides[s];
    im2col(stage_in, batch, side, side, kInChannels[s], cache.p[s]);
    Mat<T>& act = cache.act[s];
    act.resize(cache.p[s].rows(), params[2 * s].cols());
    act.noalias() = cache.p[s] * params[2 * s];
    act = (act.rowwise() + params[2 * s + 1].row(0)).cwiseMax(T(0));
    max_pool(act, batch, side, side, cache.pooled[s], &cache.idx[s]);
    stage_in = cache.pooled[s].data();
  }
  // pooled[2]: (B*256) x 64 -> flat (64*256) x B, channel-major per sample
  const Mat<T>& last = cache.pooled[2];
  const Index area = 16 * 16;
  cache.flat.resize(kFlatDim, batch);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < 64; ++c) {
      cache.flat.col(b).segment(c * area, area) = last.col(c).segment(b * area, area);
    }
  }
  cache.hidden.resize(kFeatureDim, batch);
  cache.hidden.noalias() = params[kFc1W] * cache.flat;
  cache.hidden = (cache.hidden.colwise() + params[kFc1B].col(0)).cwiseMax(T(0));
  cache.logits.resize(params[kFc2W].rows(), batch);
  cache.logits.noalias() = params[kFc2W] * cache.hidden;
  cache.logits.colwise() += params[kFc2B].col(0);
}

template <class T>
Mat<T> softmax(const Mat<T>& logits) {
  Mat<T> p(logits.rows(), logits.cols());
  for (Index b = 0; b < logits.cols(); ++b) {
    const T m = logits.col(b).maxCoeff();
    p.col(b) = (logits.col(b).array() - m).exp().matrix();
    p.col(b) /= p.col(b).sum();
  }
  return p;
}

template <class T>
void backward(const std::array<Mat<T>, kParamCount>& params, Cache<T>& cache, const Mat<T>& dlogits,
              std::array<Mat<T>, kParamCount>& g) {
  const int batch = cache.batch;
  g[kFc2W].noalias() = dlogits * cache.hidden.transpose();
  g[kFc2B] = dlogits.rowwise().sum();
  cache.dhidden.noalias() = params[kFc2W].transpose() * dlogits;
  cache.dhidden = (cache.hidden.array() > T(0)).select(cache.dhidden, T(0));
  g[kFc1W].noalias() = cache.dhidden * cache.flat.transpose();
  g[kFc1B] = cache.dhidden.rowwise().sum();
  cache.dflat.noalias() = params[kFc1W].transpose() * cache.dhidden;

  const Index area = 16 * 16;
  Mat<T>& dpooled = cache.dpooled;
  dpooled.resize(batch * area, 64);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < 64; ++c) dpooled.col(c).segment(b * area, area) = cache.dflat.col(b).segment(c * area, area);
  }
  for (int s = 2; s >= 0; --s) {
    const int side = kSides[s];
    const Mat<T>& act = cache.act[s];
    Mat<T>& dact = cache.dact;
    dact.setZero(act.rows(), act.cols());
    for (Index c = 0; c < act.cols(); ++c) {
      const std::int32_t* idx = cache.idx[s].data() + c * dpooled.rows();
      T* d = dact.col(c).data();
      const T* src = dpooled.col(c).data();
      for (Index o = 0; o < dpooled.rows(); ++o) d[idx[o]] += src[o];
    }
    dact = (act.array() > T(0)).select(dact, T(0));
    g[2 * s].noalias() = cache.p[s].transpose() * dact;
    g[2 * s + 1] = dact.colwise().sum();
    if (s == 0) break;
    cache.dpatches.resize(dact.rows(), params[2 * s].rows());
    cache.dpatches.noalias() = dact * params[2 * s].transpose();
    col2im(cache.dpatches, batch, side, side, kInChannels[s], dpooled);
  }
}

// Fingerprint of every ReLU and max-pool decision in the last forward pass.
template <class T>
std::uint64_t decision_hash(const Cache<T>& cache) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (int s = 0; s < 3; ++s) {
    const T* a = cache.act[s].data();
    for (Eigen::Index i = 0; i < cache.act[s].size(); ++i) mix(a[i] > T(0));
    for (auto v : cache.idx[s]) mix(static_cast<std::uint64_t>(v));
  }
  for (Eigen::Index i = 0; i < cache.hidden.size(); ++i) mix(cache.hidden.data()[i] > T(0));
  return h;
}

template <class T>
void init_uniform(Mat<T>& m, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
}

}  // namespace

template <class T>
Cnn<T>::Cnn(int num_classes, const InitOptions& init) : num_classes_(num_classes) {
  if (num_classes < 1) throw Error("model needs at least one class");
  std::mt19937_64 rng(init.seed);
  const int cin[3] = {1, 16, 32};
  for (int s = 0; s < 3; ++s) {
    params_[2 * s].resize(9 * cin[s], kConvChannels[s]);
    init_uniform(params_[2 * s], std::sqrt(6.0 / (9 * cin[s])), rng);
    params_[2 * s + 1].setZero(1, kConvChannels[s]);
  }
  params_[kFc1W].resize(kFeatureDim, kFlatDim);
  init_uniform(params_[kFc1W], std::sqrt(6.0 / kFlatDim), rng);
  params_[kFc1B].setZero(kFeatureDim, 1);
  params_[kFc2W].setZero(num_classes, kFeatureDim);
  if (init.random_output) init_uniform(params_[kFc2W], std::sqrt(6.0 / kFeatureDim), rng);
  params_[kFc2B].setZero(num_classes, 1);
  if (init.bias_range > 0.0) {
    for (int id : {kConv1B, kConv2B, kConv3B, kFc1B, kFc2B}) init_uniform(params_[id], init.bias_range, rng);
  }
}

template <class T>
Mat<T> Cnn<T>::features(const Mat<T>& input) const {
  Mat<T> out(kFeatureDim, input.cols());
  constexpr Index kChunk = 32;
  auto& cache = scratch<T>();
  for (Index start = 0; start < input.cols(); start += kChunk) {
    const Index n = std::min(kChunk, input.cols() - start);
    cache.input = input.middleCols(start, n);
    forward(params_, cache.input, cache);
    out.middleCols(start, n) = cache.hidden;
  }
  return out;
}

template <class T>
Mat<T> Cnn<T>::probabilities(const Mat<T>& input) const {
  Mat<T> out(num_classes_, input.cols());
  constexpr Index kChunk = 32;
  auto& cache = scratch<T>();
  for (Index start = 0; start < input.cols(); start += kChunk) {
    const Index n = std::min(kChunk, input.cols() - start);
    cache.input = input.middleCols(start, n);
    forward(params_, cache.input, cache);
    out.middleCols(start, n) = softmax(cache.logits);
  }
  return out;
}

template <class T>
T Cnn<T>::loss(const Mat<T>& input, std::span<const int> labels, std::array<Mat<T>, kParamCount>* grads) const {
  if (static_cast<Index>(labels.size()) != input.cols()) throw ShapeError("one label per input column required");
  auto& cache = scratch<T>();
  forward(params_, input, cache);
  const Index batch = input.cols();
  Mat<T> probs = softmax(cache.logits);
  T total = 0;
  for (Index b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= num_classes_) throw ShapeError("label out of range");
    const T m = cache.logits.col(b).maxCoeff();
    const T lse = m + std::log((cache.logits.col(b).array() - m).exp().sum());
    total += lse - cache.logits(y, b);
  }
  if (grads) {
    Mat<T> d = probs;
    for (Index b = 0; b < batch; ++b) d(labels[b], b) -= T(1);
    d /= static_cast<T>(batch);
    backward(params_, cache, d, *grads);
  }
  return total / static_cast<T>(batch);
}

template class Cnn<float>;
template class Cnn<double>;

template <class T>
Mat<T> to_input(std::span<const raster::Crop> crops) {
  Mat<T> input(kInputSide * kInputSide, static_cast<Index>(crops.size()));
  for (std::size_t b = 0; b < crops.size(); ++b) {
    const auto& c = crops[b];
    if (c.side != kInputSide || c.pixels.size() != static_cast<std::size_t>(kInputSide * kInputSide)) {
      throw ShapeError("crop must be 128 x 128");
    }
    T* col = input.col(static_cast<Index>(b)).data();
    for (std::size_t i = 0; i < c.pixels.size(); ++i) col[i] = static_cast<T>(255 - c.pixels[i]) / T(255);
  }
  return input;
}

template Mat<float> to_input<float>(std::span<const raster::Crop>);
template Mat<double> to_input<double>(std::span<const raster::Crop>);

CropDataset make_dataset(std::vector<raster::Crop> crops, double test_fraction, std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) throw RangeError("test_fraction", "must be in (0, 1)");
  CropDataset ds;
  std::map<std::string, int> label_of;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    auto [it, inserted] = label_of.emplace(crops[i].source_format_id, static_cast<int>(ds.format_ids.size()));
    if (inserted) {
      ds.format_ids.push_back(crops[i].source_format_id);
      members.emplace_back();
    }
    ds.labels.push_back(it->second);
    members[it->second].push_back(i);
  }
  ds.is_test.assign(crops.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    const auto n = static_cast<long>(m.size());
    const long n_test = n < 2 ? 0 : std::clamp(std::lround(test_fraction * n), 1L, n - 1);
    for (long i = 0; i < n_test; ++i) ds.is_test[m[i]] = true;
  }
  ds.crops = std::move(crops);
  return ds;
}

namespace {

Mat<float> gather_input(const CropDataset& ds, std::span<const std::size_t> rows) {
  Mat<float> input(kInputSide * kInputSide, static_cast<Index>(rows.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    input.col(static_cast<Index>(b)) = to_input<float>(std::span(&ds.crops[rows[b]], 1)).col(0);
  }
  return input;
}

}  // namespace

double accuracy(const CnnModel& model, const CropDataset& ds, bool test_split) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.crops.size(); ++i) {
    if (ds.is_test[i] == test_split) rows.push_back(i);
  }
  if (rows.empty()) return 0.0;
  int correct = 0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const auto part = std::span(rows).subspan(start, std::min(kChunk, rows.size() - start));
    const auto probs = model.probabilities(gather_input(ds, part));
    for (Index b = 0; b < probs.cols(); ++b) {
      Index best = 0;
      probs.col(b).maxCoeff(&best);
      correct += static_cast<int>(best) == ds.labels[part[b]];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

TrainResult train(const CropDataset& ds, const TrainConfig& config) {
  if (config.learning_rate <= 0.0) throw RangeError("learning_rate", "learning rate must be positive");
  if (config.batch_size < 1) throw RangeError("batch_size", "batch size must be >= 1");
  if (config.epochs < 0) throw RangeError("epochs", "epochs must be >= 0");
  const int k = ds.num_formats();
  if (k < 2) throw Error("degenerate task: training needs at least two formats");
  std::vector<int> train_count(k, 0), test_count(k, 0);
  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < ds.crops.size(); ++i) {
    (ds.is_test[i] ? test_count : train_count)[ds.labels[i]]++;
    if (!ds.is_test[i]) train_rows.push_back(i);
  }
  for (int c = 0; c < k; ++c) {
    if (train_count[c] == 0 || test_count[c] == 0) {
      throw Error("format " + ds.format_ids[c] + " is missing from the train or test split");
    }
  }

  TrainResult result;
  result.model = CnnModel(k, {.seed = config.seed});
  auto& params = result.model.params();
  std::array<Mat<float>, kParamCount> velocity, grads;
  for (int i = 0; i < kParamCount; ++i) velocity[i].setZero(params[i].rows(), params[i].cols());
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eedf00dULL);
  const auto lr = static_cast<float>(config.learning_rate);
  const auto mu = static_cast<float>(config.momentum);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_rows.begin(), train_rows.end(), shuffle_rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const auto part = std::span(train_rows).subspan(
          start, std::min<std::size_t>(config.batch_size, train_rows.size() - start));
      std::vector<int> labels;
      for (auto r : part) labels.push_back(ds.labels[r]);
      loss_sum += result.model.loss(gather_input(ds, part), labels, &grads);
      ++batches;
      for (int i = 0; i < kParamCount; ++i) {
        velocity[i] = mu * velocity[i] - lr * grads[i];
        params[i] += velocity[i];
      }
    }
    result.log.push_back({epoch, loss_sum / batches, accuracy(result.model, ds, true)});
  }
  result.test_accuracy = result.log.empty() ? accuracy(result.model, ds, true) : result.log.back().test_accuracy;
  return result;
}

std::string training_log_csv(std::span<const EpochLog> log) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,loss,test_accuracy\n";
  for (const auto& e : log) out << e.epoch << ',' << e.loss << ',' << e.test_accuracy << '\n';
  return out.str();
}

FeatureVector embed_crop(const CnnModel& model, const raster::Crop& crop) {
  const auto f = model.features(to_input<float>(std::span(&crop, 1)));
  return FeatureVector(f.data(), f.data() + f.size());
}

FeatureVector embed_format(const CnnModel& model, std::span<const raster::Crop> crops) {
  if (crops.empty()) throw Error("embed_format needs at least one crop");
  FeatureVector mean(kFeatureDim, 0.0);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < crops.size(); start += kChunk) {
    const auto part = crops.subspan(start, std::min(kChunk, crops.size() - start));
    const auto f = model.features(to_input<float>(part));
    for (Index b = 0; b < f.cols(); ++b) {
      for (int d = 0; d < kFeatureDim; ++d) mean[d] += f(d, b);
    }
  }
  for (auto& v : mean) v /= static_cast<double>(crops.size());
  return mean;
}

GradientCheck gradient_check(const Cnn<double>& model, std::span<const raster::Crop> crops,
                             std::span<const int> labels, std::uint64_t seed, int per_param, double h) {
  const auto input = to_input<double>(crops);
  std::array<Mat<double>, kParamCount> grads;
  model.loss(input, labels, &grads);
  const auto base = decision_hash(scratch<double>());
  Cnn<double> probe = model;
  std::mt19937_64 rng(seed);
  GradientCheck out;
  constexpr int kAttemptsPerParam = 200;
  for (int id = 0; id < kParamCount; ++id) {
    auto& p = probe.params()[id];
    std::uniform_int_distribution<Index> pick(0, p.size() - 1);
    int found = 0;
    for (int attempt = 0; attempt < kAttemptsPerParam && found < per_param; ++attempt) {
      const Index i = pick(rng);
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = probe.loss(input, labels, nullptr);
      const bool up_smooth = decision_hash(scratch<double>()) == base;
      p.data()[i] = saved - h;
      const double down = probe.loss(input, labels, nullptr);
      const bool down_smooth = decision_hash(scratch<double>()) == base;
      p.data()[i] = saved;
      if (!up_smooth || !down_smooth) {
        ++out.skipped;  // a ReLU or max-pool winner changed inside [w-h, w+h]
        continue;
      }
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[id].data()[i];
      const double scale = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
      out.max_relative_error = std::max(out.max_relative_error, std::fabs(numeric - analytic) / scale);
      ++out.checked;
      ++found;
    }
  }
  return out;
}

namespace {

constexpr char kModelMagic[8] = {'T', 'H', 'R', 'F', 'C', 'N', 'N', '\0'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated model file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_model(const std::filesystem::path& path, const CnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  put_u32(out, kInputSide);
  put_u32(out, kFeatureDim);
  put_u32(out, kParamCount);
  for (const auto& p : model.params()) {
    put_u32(out, static_cast<std::uint32_t>(p.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.cols()));
    for (Index i = 0; i < p.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(p.data()[i]));
  }
  if (!out) throw Error("write failed for " + path.string());
}

CnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kModelMagic)) throw ParseError("not a model checkpoint");
  if (get_u32(in) != kModelVersion) throw ParseError("unsupported checkpoint version");
  const auto classes = static_cast<int>(get_u32(in));
  if (get_u32(in) != static_cast<std::uint32_t>(kInputSide) || get_u32(in) != static_cast<std::uint32_t>(kFeatureDim) ||
      get_u32(in) != static_cast<std::uint32_t>(kParamCount)) {
    throw ParseError("checkpoint dimensions do not match this network");
  }
  CnnModel model(classes, {});
  for (auto& p : model.params()) {
    const auto rows = get_u32(in), cols = get_u32(in);
    if (rows != static_cast<std::uint32_t>(p.rows()) || cols != static_cast<std::uint32_t>(p.cols())) {
      throw ParseError("checkpoint layer shape mismatch");
    }
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = std::bit_cast<float>(get_u32(in));
  }
  return model;
}

}  // namespace therif::learn
