#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "vphoto/learner.hpp"

using namespace vphoto;
using testutil::random_image;

namespace {

RasterImage rotate_cw(const RasterImage& img) {
  const int n = img.width();
  RasterImage out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) out.set_pixel(n - 1 - y, x, img.pixel(x, y));
  }
  return out;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// Synthetic regression set whose targets come from a fixed linear teacher.
FeatureDataset linear_task(std::size_t n, std::size_t dim, std::uint64_t seed) {
  const auto teacher = random_vector(dim, seed);
  FeatureDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = random_vector(dim, seed + 1 + i);
    double z = 0;
    for (std::size_t k = 0; k < dim; ++k) z += teacher[k] * x[k];
    ds.features.push_back(std::move(x));
    ds.targets.push_back(sigmoid(z));
  }
  return ds;
}

}  // namespace

TEST(Features, LengthIsSumOfComponents) {
  EXPECT_EQ(kFeatureLength, 3u * 16 + 16 + 16 + 16 + 16);
  EXPECT_EQ(extract_features(random_image(16, 16, 1)).size(), kFeatureLength);
  EXPECT_THROW(extract_features(random_image(16, 12, 1)), std::invalid_argument);
}

TEST(Features, ConstantMidGray) {
  const auto f = extract_features(RasterImage(16, 16, {0.5, 0.5, 0.5}));
  EXPECT_DOUBLE_EQ(f[kSatHistOffset], 16.0);
  for (int b = 1; b < 16; ++b) EXPECT_EQ(f[kSatHistOffset + b], 0.0);
  for (int c = 0; c < 16; ++c) {
    EXPECT_NEAR(f[kGridMeanOffset + c], 0.5, 1e-15);
    EXPECT_NEAR(f[kGridStdOffset + c], 0.0, 1e-6);
  }
}

TEST(Features, RotationKeepsHistogramsAndPermutesGrid) {
  const auto img = random_image(32, 32, 2);
  const auto a = extract_features(img);
  const auto b = extract_features(rotate_cw(img));
  for (std::size_t i = 0; i < kGridMeanOffset; ++i) EXPECT_NEAR(a[i], b[i], 1e-12) << i;
  for (int cy = 0; cy < 4; ++cy) {
    for (int cx = 0; cx < 4; ++cx) {
      const int src = cy * 4 + cx, dst = cx * 4 + (3 - cy);
      EXPECT_NEAR(a[kGridMeanOffset + src], b[kGridMeanOffset + dst], 1e-12);
      EXPECT_NEAR(a[kGridStdOffset + src], b[kGridStdOffset + dst], 1e-9);
    }
  }
}

TEST(Mlp, ForwardMatchesHandComputation) {
  MlpModel m({2, 2, 1});
  // layer 0: W (2x2) row-major, b (2); layer 1: W (1x2), b (1)
  const double p[] = {0.5, -1.0, 0.25, 2.0, 0.1, -0.2, 1.5, -0.75, 0.3};
  std::copy(std::begin(p), std::end(p), m.params().begin());
  const std::vector<double> x = {0.4, -0.6};
  const double h0 = std::tanh(0.5 * 0.4 - 1.0 * -0.6 + 0.1);
  const double h1 = std::tanh(0.25 * 0.4 + 2.0 * -0.6 - 0.2);
  const double want = 1.0 / (1.0 + std::exp(-(1.5 * h0 - 0.75 * h1 + 0.3)));
  EXPECT_NEAR(m.forward(x), want, 1e-15);
}

TEST(Mlp, ZeroModelPredictsHalf) {
  const MlpModel m({static_cast<int>(kFeatureLength), 1});
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto img = random_image(16, 16, s);
    EXPECT_EQ(predict(m, img), 0.5);
    EXPECT_EQ(predict(m, img), predict(m, img));
  }
}

TEST(Mlp, VersionAndShapeMismatch) {
  const MlpModel old({static_cast<int>(kFeatureLength), 1}, kExtractorVersion + 1);
  EXPECT_THROW(predict(old, random_image(8, 8, 1)), IncompatibleModel);
  const MlpModel small({3, 1});
  EXPECT_THROW(small.forward(std::vector<double>(4, 0.0)), IncompatibleModel);
  EXPECT_THROW(MlpModel({3, 2}), std::invalid_argument);
}

TEST(GradientCheck, LinearModel) {
  const auto m = MlpModel::seeded({20, 1}, 3);
  const auto x = random_vector(20, 4);
  EXPECT_LT(gradient_check(m, x, 0.8, 1e-5), 1e-7);
}

TEST(GradientCheck, OneHiddenLayerTanh) {
  const auto m = MlpModel::seeded({static_cast<int>(kFeatureLength), 16, 1}, 5);
  const TrainingExample ex{random_image(16, 16, 6), SimilarityScore(0.3)};
  EXPECT_LT(gradient_check(m, ex, 1e-4), 1e-4);
}

TEST(GradientCheck, TwoHiddenLayers) {
  const auto m = MlpModel::seeded({12, 8, 6, 1}, 7);
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LT(gradient_check(m, random_vector(12, 10 + s), 0.9, 1e-5), 1e-5);
}

TEST(GradientCheck, ZeroLossExampleHasZeroGradient) {
  const MlpModel m({10, 4, 1});  // all-zero: predicts exactly 0.5
  std::vector<double> grad(m.params().size(), 0.0);
  const double loss = m.loss_and_gradient(random_vector(10, 11), 0.5, grad);
  EXPECT_EQ(loss, 0.0);
  double norm = 0;
  for (double g : grad) norm += g * g;
  EXPECT_LT(std::sqrt(norm), 1e-9);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  const auto ds = linear_task(10, 6, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = {5};
  cfg.seed = 42;
  EXPECT_EQ(train_features(ds, cfg).model, MlpModel::seeded({6, 5, 1}, 42));
}

TEST(Train, BitReproducible) {
  const auto ds = linear_task(40, 8, 2);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.hidden = {6};
  const auto a = train_features(ds, cfg);
  const auto b = train_features(ds, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(Train, DuplicatedDatasetHasSameTrajectory) {
  const auto ds = linear_task(24, 6, 3);
  FeatureDataset dup;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int r = 0; r < 2; ++r) {
      dup.features.push_back(ds.features[i]);
      dup.targets.push_back(ds.targets[i]);
    }
  }
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.hidden = {4};
  cfg.shuffle = false;
  cfg.batch_size = 6;
  const auto a = train_features(ds, cfg);
  cfg.batch_size = 12;
  const auto b = train_features(dup, cfg);
  ASSERT_EQ(a.epoch_loss.size(), b.epoch_loss.size());
  for (std::size_t e = 0; e < a.epoch_loss.size(); ++e) {
    EXPECT_NEAR(a.epoch_loss[e], b.epoch_loss[e], 1e-12 * std::max(1.0, a.epoch_loss[e]));
  }
}

TEST(Train, LossNonIncreasingWithSmallSteps) {
  const auto ds = linear_task(30, 5, 4);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.hidden = {};
  cfg.batch_size = 30;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  const auto rep = train_features(ds, cfg);
  for (std::size_t e = 1; e < rep.epoch_loss.size(); ++e) EXPECT_LE(rep.epoch_loss[e], rep.epoch_loss[e - 1]);
  EXPECT_LT(rep.epoch_loss.back(), rep.epoch_loss.front());
}

TEST(Train, NonFiniteLossAborts) {
  auto ds = linear_task(4, 3, 5);
  ds.features[2][1] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.hidden = {2};
  cfg.batch_size = 4;
  EXPECT_THROW(train_features(ds, cfg), TrainingDiverged);
}

TEST(Train, ConfigValidation) {
  const auto ds = linear_task(4, 3, 6);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train_features(ds, cfg), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(train_features(ds, cfg), std::invalid_argument);
  EXPECT_THROW(train_features(FeatureDataset{}, TrainConfig{}), std::invalid_argument);
}

TEST(ModelFile, SaveLoadPredictIdentical) {
  testutil::TempDir dir("model");
  const auto m = MlpModel::seeded({static_cast<int>(kFeatureLength), 7, 1}, 9);
  save_model(dir.path() / "m.crtm", m);
  const auto back = load_model(dir.path() / "m.crtm");
  EXPECT_EQ(back, m);
  const auto img = random_image(16, 16, 10);
  EXPECT_EQ(predict(back, img), predict(m, img));
  const auto meta = read_model_sidecar(dir.path() / "m.crtm");
  EXPECT_EQ(meta.at("extractor_version").get<int>(), static_cast<int>(kExtractorVersion));
}

TEST(ModelFile, RejectsCorruptFiles) {
  auto bytes = encode_model_file(MlpModel({3, 1}).to_file());
  EXPECT_EQ(bytes.substr(0, 4), "CRTM");
  EXPECT_NO_THROW(decode_model_file(bytes));
  EXPECT_THROW(decode_model_file(bytes.substr(0, bytes.size() - 3)), IncompatibleModel);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_model_file(bad), IncompatibleModel);
  EXPECT_THROW(decode_model_file(bytes + "x"), IncompatibleModel);
}

TEST(DatasetHash, OrderSensitive) {
  std::vector<TrainingExample> a = {{random_image(4, 4, 1), SimilarityScore(0.2)},
                                    {random_image(4, 4, 2), SimilarityScore(0.9)}};
  auto b = a;
  std::swap(b[0], b[1]);
  EXPECT_EQ(dataset_hash(a), dataset_hash(a));
  EXPECT_NE(dataset_hash(a), dataset_hash(b));
}
