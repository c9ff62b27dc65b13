#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "vphoto/image.hpp"
#include "vphoto/image_io.hpp"

using namespace vphoto;
using testutil::random_image;

namespace {

// Plain bilinear interpolation with pixel centers at i + 0.5 and edge clamping.
double bilinear_oracle(const RasterImage& img, int c, double sx, double sy) {
  sx = std::clamp(sx, 0.0, img.width() - 1.0);
  sy = std::clamp(sy, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = sx - x0, ay = sy - y0;
  const double top = img.at(x0, y0, c) * (1 - ax) + img.at(x1, y0, c) * ax;
  const double bot = img.at(x0, y1, c) * (1 - ax) + img.at(x1, y1, c) * ax;
  return top * (1 - ay) + bot * ay;
}

}  // namespace

TEST(Resize, ConstantStaysConstant) {
  const RasterImage gray(10, 10, {0.4, 0.4, 0.4});
  for (auto [w, h] : {std::pair{4, 4}, {17, 3}, {1, 1}, {40, 25}}) {
    const auto out = resize_bilinear(gray, w, h);
    ASSERT_EQ(out.width(), w);
    for (double v : out.data()) EXPECT_NEAR(v, 0.4, 1e-15);
  }
}

TEST(Resize, IdentityIsBitExact) {
  const auto img = random_image(9, 7, 1);
  EXPECT_EQ(resize_bilinear(img, 9, 7), img);
}

TEST(Resize, TwoPixelRowUpsample) {
  RasterImage img(2, 1);
  img.set_pixel(0, 0, {0, 0, 0});
  img.set_pixel(1, 0, {1, 1, 1});
  const auto out = resize_bilinear(img, 4, 1);
  const double want[4] = {0.0, 0.25, 0.75, 1.0};
  for (int x = 0; x < 4; ++x) {
    EXPECT_NEAR(out.at(x, 0, 0), want[x], 1e-15);
    EXPECT_NEAR(out.at(x, 0, 0), bilinear_oracle(img, 0, (x + 0.5) * 0.5 - 0.5, 0.0), 1e-15);
  }
}

TEST(Resize, UpsampleMatchesBilinearOracle) {
  const auto img = random_image(5, 4, 2);
  const int ow = 13, oh = 11;
  const auto out = resize_bilinear(img, ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double sx = (x + 0.5) * img.width() / ow - 0.5;
      const double sy = (y + 0.5) * img.height() / oh - 0.5;
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(x, y, c), bilinear_oracle(img, c, sx, sy), 1e-12);
    }
  }
}

TEST(Resize, ZeroTargetThrows) {
  const auto img = random_image(4, 4, 3);
  EXPECT_THROW(resize_bilinear(img, 0, 4), std::invalid_argument);
  EXPECT_THROW(resize_bilinear(img, 4, 0), std::invalid_argument);
}

TEST(Grayscale, WhiteAndRed) {
  const auto white = to_grayscale(RasterImage(3, 3, {1, 1, 1}));
  for (double v : white.data()) EXPECT_DOUBLE_EQ(v, 1.0);
  const auto red = to_grayscale(RasterImage(3, 3, {1, 0, 0}));
  for (double v : red.data()) EXPECT_DOUBLE_EQ(v, 0.299);
}

TEST(Blur, ConstantUnchanged) {
  const RasterImage img(12, 9, {0.3, 0.6, 0.9});
  for (double sigma : {0.5, 1.0, 3.7}) {
    const auto out = gaussian_blur(img, sigma);
    EXPECT_LT(testutil::max_abs_diff(out, img), 1e-15);
  }
}

TEST(Blur, ImpulseRecoversKernel) {
  const int n = 21, c0 = 10;
  RasterImage img(n, n);
  img.set_pixel(c0, c0, {1, 1, 1});
  const double sigma = 1.5;
  const auto out = gaussian_blur(img, sigma);
  const auto k = testutil::gauss_weights(sigma);
  const int r = static_cast<int>(k.size() / 2);
  for (int dy = -r - 1; dy <= r + 1; ++dy) {
    for (int dx = -r - 1; dx <= r + 1; ++dx) {
      const double want = (std::abs(dx) <= r && std::abs(dy) <= r) ? k[dx + r] * k[dy + r] : 0.0;
      EXPECT_NEAR(out.at(c0 + dx, c0 + dy, 1), want, 1e-15);
    }
  }
}

TEST(Blur, MatchesDirectConvolutionWithEdgeReplication) {
  const auto img = random_image(15, 11, 4);
  for (double sigma : {0.7, 2.0}) {
    EXPECT_LT(testutil::max_abs_diff(gaussian_blur(img, sigma), testutil::direct_blur(img, sigma)), 1e-13);
  }
}

TEST(Blur, NonPositiveSigmaThrows) {
  const auto img = random_image(4, 4, 5);
  EXPECT_THROW(gaussian_blur(img, 0.0), std::invalid_argument);
  EXPECT_THROW(gaussian_blur(img, -1.0), std::invalid_argument);
}

TEST(MeanAbsDiff, Examples) {
  const auto a = random_image(6, 6, 6);
  EXPECT_EQ(mean_abs_diff(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mean_abs_diff(RasterImage(4, 4, {0, 0, 0}), RasterImage(4, 4, {1, 1, 1})), 1.0);

  RasterImage b(4, 2, {0.5, 0.5, 0.5});
  RasterImage c = b;
  for (int x = 0; x < 4; ++x) c.set_pixel(x, 0, {0.7, 0.7, 0.7});
  EXPECT_NEAR(mean_abs_diff(b, c), 0.1, 1e-15);
}

TEST(MeanAbsDiff, SymmetricAndRejectsMismatch) {
  const auto a = random_image(5, 5, 7), b = random_image(5, 5, 8);
  EXPECT_EQ(mean_abs_diff(a, b), mean_abs_diff(b, a));
  EXPECT_THROW(mean_abs_diff(a, random_image(5, 4, 9)), std::invalid_argument);
}

TEST(PerturbationScore, Anchors) {
  EXPECT_EQ(perturbation_score(0.0, 0.06).value(), 1.0);
  EXPECT_EQ(perturbation_score(0.06, 0.06).value(), 0.0);
  EXPECT_DOUBLE_EQ(perturbation_score(0.03, 0.06).value(), 0.5);
  EXPECT_EQ(perturbation_score(0.5, 0.06).value(), 0.0);
  EXPECT_THROW(perturbation_score(0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(perturbation_score(0.1, -1.0), std::invalid_argument);
}

TEST(PerturbationScore, NonIncreasingInDelta) {
  double prev = 1.0;
  for (int i = 0; i <= 300; ++i) {
    const double s = perturbation_score(i * 0.001, 0.2).value();
    EXPECT_LE(s, prev);
    prev = s;
  }
}

TEST(Clamp, OperationsKeepValidImagesValid) {
  const auto img = random_image(16, 16, 10);
  for (const auto& out : {resize_bilinear(img, 7, 5), resize_bilinear(img, 33, 40), gaussian_blur(img, 1.3),
                          to_grayscale(img), crop(img, 2, 3, 5, 6), center_square(img, 9)}) {
    for (double v : out.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Crop, RejectsWindowsOutsideTheImage) {
  const auto img = random_image(8, 8, 11);
  EXPECT_THROW(crop(img, 4, 4, 5, 2), std::invalid_argument);
  EXPECT_THROW(crop(img, -1, 0, 2, 2), std::invalid_argument);
  const auto c = crop(img, 1, 2, 3, 4);
  EXPECT_EQ(c.pixel(0, 0).g, img.pixel(1, 2).g);
}

TEST(Hsv, SaturationValues) {
  EXPECT_EQ(hsv_saturation(0.5, 0.5, 0.5), 0.0);
  EXPECT_EQ(hsv_saturation(1, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(hsv_saturation(0.8, 0.4, 0.2), 0.75);
  EXPECT_EQ(hsv_saturation(0, 0, 0), 0.0);
}

TEST(ImageIo, PngRoundTripQuantizesTo8Bits) {
  testutil::TempDir dir("png");
  const auto img = random_image(13, 7, 12);
  write_png(dir.path() / "a.png", img);
  const auto back = read_png(dir.path() / "a.png");
  ASSERT_TRUE(back.same_size(img));
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_DOUBLE_EQ(back.data()[i], std::round(img.data()[i] * 255.0) / 255.0);
  }
  EXPECT_THROW(read_png(dir.path() / "missing.png"), IoError);
}
