#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vphoto/errors.hpp"
#include "vphoto/features.hpp"
#include "vphoto/image.hpp"
#include "vphoto/model_io.hpp"
#include "vphoto/rng.hpp"

namespace vphoto {

struct TrainingExample {
  RasterImage image;
  SimilarityScore target;
};

enum class Activation : std::uint32_t { Tanh = 1 };

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Multilayer perceptron regressor: tanh hidden layers, one sigmoid output.
///
/// Parameters live in one flat vector, layer by layer, each layer stored as
/// its row-major (out x in) weight matrix followed by its bias vector.
class MlpModel {
 public:
  MlpModel() = default;

  /// Zero-initialized model with the given layer sizes (input first, output last).
  explicit MlpModel(std::vector<int> layer_sizes, std::uint32_t extractor_version = kExtractorVersion)
      : sizes_(std::move(layer_sizes)), extractor_version_(extractor_version) {
    if (sizes_.size() < 2) throw std::invalid_argument("MlpModel: need at least input and output sizes");
    if (sizes_.back() != 1) throw std::invalid_argument("MlpModel: output dimension must be 1");
    for (int s : sizes_) {
      if (s < 1) throw std::invalid_argument("MlpModel: layer sizes must be positive");
    }
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(total);
      total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + static_cast<std::size_t>(sizes_[l + 1]);
    }
    params_.assign(total, 0.0);
  }

  /// Uniform +-1/sqrt(fan_in) weights, zero biases.
  static MlpModel seeded(std::vector<int> layer_sizes, std::uint64_t seed) {
    MlpModel m(std::move(layer_sizes));
    Rng rng(derive_seed(seed, {hash_name("mlp-init")}));
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(m.sizes_[l]));
      auto w = m.weights(l);
      for (double& v : w) v = rng.uniform(-bound, bound);
    }
    return m;
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t input_size() const { return static_cast<std::size_t>(sizes_.front()); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  Activation activation() const { return activation_; }
  std::uint32_t extractor_version() const { return extractor_version_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> weights(std::size_t l) {
    return {params_.data() + offsets_[l], static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1]};
  }
  std::span<const double> weights(std::size_t l) const {
    return {params_.data() + offsets_[l], static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1]};
  }
  std::span<double> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1],
            static_cast<std::size_t>(sizes_[l + 1])};
  }
  std::span<const double> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1],
            static_cast<std::size_t>(sizes_[l + 1])};
  }

  /// Output in [0,1] for one feature vector.
  double forward(std::span<const double> x) const {
    check_input(x);
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> z;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      affine(l, a, z);
      if (l + 1 < layer_count()) {
        for (double& v : z) v = std::tanh(v);
      }
      a.swap(z);
    }
    return sigmoid(a[0]);
  }

  /// Squared error (pred - target)^2; accumulates scale * dLoss/dParams into grad.
  double loss_and_gradient(std::span<const double> x, double target, std::span<double> grad,
                           double scale = 1.0) const {
    check_input(x);
    const std::size_t L = layer_count();
    std::vector<std::vector<double>> acts(L + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
      affine(l, acts[l], acts[l + 1]);
      if (l + 1 < L) {
        for (double& v : acts[l + 1]) v = std::tanh(v);
      }
    }
    const double pred = sigmoid(acts[L][0]);
    const double err = pred - target;
    std::vector<double> delta = {2.0 * err * pred * (1.0 - pred)};
    for (std::size_t li = L; li-- > 0;) {
      const std::size_t in = static_cast<std::size_t>(sizes_[li]);
      const std::size_t out = static_cast<std::size_t>(sizes_[li + 1]);
      double* gw = grad.data() + offsets_[li];
      double* gb = gw + in * out;
      const auto& a = acts[li];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = scale * delta[o];
        gb[o] += d;
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += d * a[i];
      }
      if (li == 0) break;
      std::vector<double> prev(in, 0.0);
      const auto w = weights(li);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) prev[i] += w[o * in + i] * delta[o];
      }
      for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];  // tanh'
      delta.swap(prev);
    }
    return err * err;
  }

  ModelFile to_file() const {
    ModelFile f;
    f.extractor_version = extractor_version_;
    f.activation = static_cast<std::uint32_t>(activation_);
    for (int s : sizes_) f.dims.push_back(static_cast<std::uint32_t>(s));
    f.params = params_;
    return f;
  }

  static MlpModel from_file(const ModelFile& f) {
    if (f.activation != static_cast<std::uint32_t>(Activation::Tanh)) {
      throw IncompatibleModel("unsupported activation id " + std::to_string(f.activation));
    }
    std::vector<int> sizes(f.dims.begin(), f.dims.end());
    MlpModel m(sizes, f.extractor_version);
    if (f.params.size() != m.params_.size()) {
      throw IncompatibleModel("parameter count does not match layer dims");
    }
    m.params_ = f.params;
    return m;
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  void check_input(std::span<const double> x) const {
    if (x.size() != input_size()) {
      throw IncompatibleModel("feature length " + std::to_string(x.size()) + " does not match model input " +
                              std::to_string(input_size()));
    }
  }

  void affine(std::size_t l, const std::vector<double>& a, std::vector<double>& z) const {
    const std::size_t in = static_cast<std::size_t>(sizes_[l]);
    const std::size_t out = static_cast<std::size_t>(sizes_[l + 1]);
    const auto w = weights(l);
    const auto b = bias(l);
    z.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * a[i];
      z[o] = acc;
    }
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  Activation activation_ = Activation::Tanh;
  std::uint32_t extractor_version_ = kExtractorVersion;
};

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 1;
  std::vector<int> hidden = {64};
  bool shuffle = true;
  double weight_decay = 0.01;  // L2 coefficient on all parameters

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be positive");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight decay must be >= 0");
  }

  nlohmann::json to_json() const {
    return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"batch_size", batch_size},
            {"seed", seed},                   {"hidden", hidden}, {"shuffle", shuffle},
            {"weight_decay", weight_decay}};
  }
};

struct FeatureDataset {
  std::vector<FeatureVector> features;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
};

inline FeatureDataset featurize(const std::vector<TrainingExample>& data) {
  FeatureDataset ds;
  ds.features.reserve(data.size());
  ds.targets.reserve(data.size());
  for (const auto& ex : data) {
    ds.features.push_back(extract_features(ex.image));
    ds.targets.push_back(ex.target.value());
  }
  return ds;
}

struct TrainReport {
  MlpModel model;
  std::vector<double> epoch_loss;  // mean of batch-averaged losses per epoch
};

inline std::vector<int> layer_sizes_for(std::size_t inputs, const TrainConfig& cfg) {
  std::vector<int> sizes = {static_cast<int>(inputs)};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  return sizes;
}

/// Mini-batch SGD on mean squared error. Single-threaded and bit-reproducible
/// for a given (data, cfg).
inline TrainReport train_features(const FeatureDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  TrainReport report{MlpModel::seeded(layer_sizes_for(data.features.front().size(), cfg), cfg.seed), {}};
  MlpModel& model = report.model;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, {hash_name("mlp-shuffle")}));
  std::vector<double> grad(model.params().size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t k = order[i];
        batch_loss += model.loss_and_gradient(data.features[k], data.targets[k], grad, inv);
      }
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << batches
            << " (non-finite loss); learning rate " << cfg.learning_rate << " is likely too high";
        throw TrainingDiverged(msg.str());
      }
      auto p = model.params();
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= cfg.learning_rate * (grad[j] + cfg.weight_decay * p[j]);
      loss_sum += batch_loss;
      ++batches;
    }
    report.epoch_loss.push_back(loss_sum / batches);
  }
  return report;
}

inline MlpModel train(const std::vector<TrainingExample>& data, const TrainConfig& cfg) {
  return train_features(featurize(data), cfg).model;
}

inline double mean_squared_error(const MlpModel& model, const FeatureDataset& data) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = model.forward(data.features[i]) - data.targets[i];
    acc += e * e;
  }
  return acc / static_cast<double>(data.size());
}

inline double predict(const MlpModel& model, const RasterImage& img) {
  if (model.extractor_version() != kExtractorVersion) {
    throw IncompatibleModel("model expects feature extractor v" + std::to_string(model.extractor_version()) +
                            ", this build provides v" + std::to_string(kExtractorVersion));
  }
  return model.forward(extract_features(img));
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

/// Relative error between an analytic and a numeric derivative. The
/// denominator is floored so parameters with (near-)zero gradient are judged
/// on absolute error at that floor.
inline constexpr double kGradientFloor = 1e-9;

inline double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradientFloor});
}

/// Indices to check: all parameters when there are at most `limit`, else a
/// seeded random subset of `limit` distinct indices.
inline std::vector<std::size_t> gradient_check_indices(std::size_t count, std::size_t limit, std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  if (count <= limit) return idx;
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Max relative error between the analytic loss gradient and central finite
/// differences for one example.
inline double gradient_check(const MlpModel& model, std::span<const double> x, double target, double epsilon,
                             std::size_t max_params = 100, std::uint64_t seed = 7) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
  std::vector<double> grad(model.params().size(), 0.0);
  model.loss_and_gradient(x, target, grad);
  MlpModel probe = model;
  double worst = 0.0;
  for (std::size_t j : gradient_check_indices(grad.size(), max_params, seed)) {
    const double orig = probe.params()[j];
    probe.params()[j] = orig + epsilon;
    const double e1 = probe.forward(x) - target;
    probe.params()[j] = orig - epsilon;
    const double e2 = probe.forward(x) - target;
    probe.params()[j] = orig;
    const double numeric = (e1 * e1 - e2 * e2) / (2.0 * epsilon);
    worst = std::max(worst, gradient_relative_error(grad[j], numeric));
  }
  return worst;
}

inline double gradient_check(const MlpModel& model, const TrainingExample& ex, double epsilon) {
  const auto f = extract_features(ex.image);
  return gradient_check(model, f, ex.target.value(), epsilon);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void save_model(const std::filesystem::path& path, const MlpModel& model,
                       nlohmann::json meta = nlohmann::json::object()) {
  meta["kind"] = meta.value("kind", "scorer");
  meta["extractor_version"] = model.extractor_version();
  meta["layer_sizes"] = model.layer_sizes();
  write_model_file(path, model.to_file(), meta);
}

inline MlpModel load_model(const std::filesystem::path& path) {
  return MlpModel::from_file(read_model_file(path));
}

/// Order-sensitive FNV-1a over 8-bit pixels and targets; identifies the
/// dataset a model was trained on.
inline std::string dataset_hash(const std::vector<TrainingExample>& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint64_t byte) {
    h ^= byte;
    h *= 0x100000001B3ULL;
  };
  for (const auto& ex : data) {
    mix(static_cast<std::uint64_t>(ex.image.width()));
    mix(static_cast<std::uint64_t>(ex.image.height()));
    for (double v : ex.image.data()) mix(static_cast<std::uint64_t>(std::lround(clamp01(v) * 255.0)));
    mix(static_cast<std::uint64_t>(std::lround(ex.target.value() * 1e6)));
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace vphoto
