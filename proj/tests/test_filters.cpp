#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "vphoto/filters.hpp"

using namespace vphoto;
using testutil::max_abs_diff;
using testutil::random_image;

namespace {

RasterImage step_edge(int w, int h, double left, double right) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = x < w / 2 ? left : right;
      img.set_pixel(x, y, {v, v, v});
    }
  }
  return img;
}

RasterImage gradient_image(int w, int h) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = static_cast<double>(x) / (w - 1);
      img.set_pixel(x, y, {0.1 + 0.8 * t, 0.3 + 0.2 * t * t, 0.9 - 0.5 * t});
    }
  }
  return img;
}

// hdr oracle: M + 1.5 s (M - blur(M)), clamped; blur by direct 2-D convolution.
RasterImage hdr_oracle(const RasterImage& img, double s) {
  const auto base = testutil::direct_blur(img, 0.03 * (img.width() + img.height()));
  RasterImage out = img;
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = clamp01(img.data()[i] + 1.5 * s * (img.data()[i] - base.data()[i]));
  }
  return out;
}

bool is_gray(const RasterImage& img) {
  for (std::size_t i = 0; i < img.data().size(); i += 3) {
    if (img.data()[i] != img.data()[i + 1] || img.data()[i] != img.data()[i + 2]) return false;
  }
  return true;
}

}  // namespace

TEST(Saturation, Examples) {
  const auto img = random_image(8, 8, 1);
  EXPECT_LT(max_abs_diff(saturation(img, 0.0), to_grayscale(img)), 1e-15);
  EXPECT_EQ(saturation(img, 0.5), img);
  const auto gray = to_grayscale(img);
  EXPECT_LT(max_abs_diff(saturation(gray, 1.0), gray), 1e-15);
  EXPECT_THROW(saturation(img, 1.1), std::invalid_argument);
  EXPECT_THROW(saturation(img, -0.1), std::invalid_argument);
}

TEST(Hdr, IdentityAndConstant) {
  const auto img = random_image(10, 10, 2);
  EXPECT_EQ(hdr(img, 0.0), img);
  const RasterImage flat(12, 12, {0.4, 0.5, 0.6});
  EXPECT_LT(max_abs_diff(hdr(flat, 0.7), flat), 1e-14);
  EXPECT_THROW(hdr(img, 1.5), std::invalid_argument);
  EXPECT_THROW(hdr(img, -0.5), std::invalid_argument);
}

TEST(Hdr, StepEdgeContrastGrowsAndMatchesOracle) {
  const auto img = step_edge(20, 10, 0.4, 0.6);
  const auto out = hdr(img, 0.5);
  EXPECT_LT(max_abs_diff(out, hdr_oracle(img, 0.5)), 1e-13);
  const double before = img.at(10, 5, 0) - img.at(9, 5, 0);
  const double after = out.at(10, 5, 0) - out.at(9, 5, 0);
  EXPECT_GT(after, before);
}

TEST(Negate, IdentityInnerFilterReturnsInputExactly) {
  const auto img = random_image(9, 9, 3);
  EXPECT_EQ(negate_effect(FilterId::Hdr, 0.0, img), img);
  EXPECT_EQ(negate_effect(FilterId::FlattenBrightness, 0.0, img), img);
  EXPECT_EQ(negate_effect(FilterId::Saturation, 0.5, img), img);
  EXPECT_EQ(negate_effect(FilterId::TuneBrightness, 0.5, img), img);
}

TEST(Negate, TuneBrightnessSubtractsTheOffset) {
  const auto img = random_image(6, 6, 4, 0.3, 0.7);
  const double p = 0.7, d = (p - 0.5) * kTuneBrightnessRange;
  const auto out = negate_effect(FilterId::TuneBrightness, p, img);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(out.data()[i], img.data()[i] - d, 1e-15);
}

TEST(Negate, HdrOnGradientMatchesPixelArithmetic) {
  const auto img = gradient_image(16, 12);
  const auto base = testutil::direct_blur(img, 0.03 * 28);
  const auto out = negate_effect(FilterId::Hdr, 0.5, img);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    const double m = img.data()[i];
    const double f = m + 0.75 * (m - base.data()[i]);
    EXPECT_NEAR(out.data()[i], clamp01(2 * m - f), 1e-13);
  }
}

TEST(Negate, InvolutionAroundInputBeforeClamping) {
  const auto img = random_image(12, 12, 5, 0.4, 0.6);
  const PreparedFilter pf(FilterId::Hdr, img);
  const auto once = pf.apply_unclamped(std::array{0.3});
  const auto neg = pf.negated(0.3);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_NEAR(2 * img.data()[i] - neg.data()[i], once.data()[i], 1e-14);
  }
}

TEST(Brighten, Examples) {
  const auto img = random_image(5, 5, 6);
  EXPECT_EQ(brighten(img, 0.0), img);
  const RasterImage white(4, 4, {1, 1, 1});
  for (double a : {0.1, 0.5, 1.0}) EXPECT_EQ(brighten(white, a), white);
  const auto mid = brighten(RasterImage(2, 2, {0.5, 0.5, 0.5}), 0.4);
  for (double v : mid.data()) EXPECT_NEAR(v, 0.7, 1e-15);
  EXPECT_THROW(brighten(img, 1.2), std::invalid_argument);
}

TEST(Vignette, NeutralCenterAndCorner) {
  const auto img = random_image(15, 11, 7);
  EXPECT_EQ(vignette(img, 0.5), img);
  for (double outer : {0.0, 0.2, 0.8, 1.0}) {
    const auto out = vignette(img, outer);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(7, 5, c), img.at(7, 5, c));
  }
  // Radial oracle at the corner pixel for outer = 0.
  const RasterImage flat(15, 11, {0.6, 0.6, 0.6});
  const auto out = vignette(flat, 0.0);
  const double g = 1.0 - 0.5 * 1.2;
  const double rho = std::hypot(0.5 - 7.5, 0.5 - 5.5) / std::hypot(7.5, 5.5);
  const double cosv = std::cos(std::numbers::pi / 2 * rho);
  EXPECT_NEAR(out.at(0, 0, 0), 0.6 * (g + (1 - g) * cosv * cosv), 1e-14);
  EXPECT_LT(out.at(0, 0, 0), 0.6);
  EXPECT_GT(vignette(flat, 1.0).at(0, 0, 0), 0.6);
  EXPECT_THROW(vignette(img, 2.0), std::invalid_argument);
}

TEST(Tune, NeutralIsIdentity) {
  const auto img = random_image(6, 6, 8);
  EXPECT_EQ(tune_brightness(img, 0.5), img);
  EXPECT_EQ(tune_contrast(img, 0.5), img);
  EXPECT_THROW(tune_brightness(img, -0.1), std::invalid_argument);
  EXPECT_THROW(tune_contrast(img, 1.1), std::invalid_argument);
}

TEST(Curve, ZeroAndUniformOffsets) {
  const auto img = random_image(7, 7, 9, 0.0, 0.85);
  EXPECT_EQ(curve_filter(img, std::array<double, 6>{}), img);
  const auto up = curve_filter(img, std::array<double, 6>{0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(up.data()[i], img.data()[i] + 0.1, 1e-14);
}

TEST(Curve, MatchesLookupTable) {
  const std::array<double, 6> off = {0, 0.1, -0.1, 0, 0.05, 0};
  const double xs[6] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::array<double, 256> lut{};
  for (int i = 0; i < 256; ++i) {
    const double v = i / 255.0;
    int seg = 0;
    while (seg < 4 && v > xs[seg + 1]) ++seg;
    const double t = (v - xs[seg]) / (xs[seg + 1] - xs[seg]);
    lut[i] = std::clamp((xs[seg] + off[seg]) * (1 - t) + (xs[seg + 1] + off[seg + 1]) * t, 0.0, 1.0);
  }
  RasterImage img(16, 16);
  for (int i = 0; i < 256; ++i) {
    const double v = i / 255.0;
    img.set_pixel(i % 16, i / 16, {v, v, v});
  }
  const auto out = curve_filter(img, off);
  for (int i = 0; i < 256; ++i) EXPECT_NEAR(out.at(i % 16, i / 16, 1), lut[i], 1e-14) << i;
}

TEST(Curve, RejectsBadOffsets) {
  const auto img = random_image(4, 4, 10);
  EXPECT_THROW(curve_filter(img, std::array<double, 5>{}), std::invalid_argument);
  EXPECT_THROW(curve_filter(img, std::array<double, 6>{0.2, 0, 0, 0, 0, 0}), std::invalid_argument);
}

TEST(Flatten, Examples) {
  const auto img = random_image(12, 12, 11, 0.3, 0.7);
  EXPECT_EQ(flatten_brightness(img, 0.0), img);
  const RasterImage flat(10, 10, {0.2, 0.4, 0.6});
  EXPECT_LT(max_abs_diff(flatten_brightness(flat, 0.9), flat), 1e-14);
  EXPECT_THROW(flatten_brightness(img, 1.5), std::invalid_argument);
}

TEST(Flatten, FullStrengthLuminanceIsItsSmoothAverage) {
  const auto img = random_image(14, 10, 12, 0.35, 0.65);
  const auto out = flatten_brightness(img, 1.0);
  std::vector<double> lum;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 14; ++x) lum.push_back(luma(img.pixel(x, y)));
  }
  const auto smooth = testutil::direct_blur(lum, 14, 10, 0.05 * 24);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 14; ++x) EXPECT_NEAR(luma(out.pixel(x, y)), smooth[y * 14 + x], 1e-13);
  }
}

TEST(Filters, NeutralParametersAreIdentity) {
  const auto img = random_image(9, 7, 13);
  for (FilterId f : kAllFilters) {
    const auto dom = parameter_domain(f);
    EXPECT_EQ(apply_filter({f, dom.neutral}, img), img) << filter_name(f);
  }
}

TEST(Filters, HdrAndFlattenCommuteWithOffsets) {
  const auto img = random_image(12, 12, 14, 0.2, 0.6);
  RasterImage shifted = img;
  for (double& v : shifted.data()) v += 0.15;
  for (FilterId f : {FilterId::Hdr, FilterId::FlattenBrightness}) {
    const auto a = PreparedFilter(f, img).apply_unclamped(std::array{0.6});
    const auto b = PreparedFilter(f, shifted).apply_unclamped(std::array{0.6});
    for (std::size_t i = 0; i < a.data().size(); ++i) EXPECT_NEAR(b.data()[i], a.data()[i] + 0.15, 1e-13);
  }
}

TEST(Filters, OutputsStayInRange) {
  const auto img = random_image(10, 10, 15);
  for (FilterId f : kAllFilters) {
    const auto dom = parameter_domain(f);
    std::vector<double> p;
    for (const auto& r : dom.ranges) p.push_back(r.max);
    for (double v : apply_filter({f, p}, img).data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ParameterDomain, Examples) {
  auto sat = parameter_domain(FilterId::Saturation);
  EXPECT_EQ(sat.dimension(), 1u);
  EXPECT_EQ(sat.ranges[0].min, 0.0);
  EXPECT_EQ(sat.ranges[0].max, 1.0);
  auto curve = parameter_domain(FilterId::Curve);
  EXPECT_EQ(curve.dimension(), 6u);
  for (const auto& r : curve.ranges) {
    EXPECT_EQ(r.min, -0.15);
    EXPECT_EQ(r.max, 0.15);
  }
  auto flat = parameter_domain(FilterId::FlattenBrightness);
  EXPECT_EQ(flat.dimension(), 1u);
  EXPECT_EQ(flat.ranges[0].max, 1.0);
}

TEST(FilterParams, TextRoundTrip) {
  const FilterParams fp{FilterId::Curve, {0.1, -0.05, 0, 0, 0.15, -0.15}};
  EXPECT_EQ(FilterParams::parse(fp.to_string()), fp);
  EXPECT_EQ((FilterParams{FilterId::Hdr, {-0.25}}.to_string()), "filter=hdr;p=-0.25");
  EXPECT_TRUE(FilterParams::parse("filter=hdr;p=-0.25").negated());
  EXPECT_THROW(FilterParams::parse("filter=nope;p=1"), std::invalid_argument);
  EXPECT_THROW(FilterParams::parse("filter=saturation;p=2"), std::invalid_argument);
  EXPECT_THROW(FilterParams::parse("saturation=1"), std::invalid_argument);
  EXPECT_THROW(FilterParams::parse("filter=saturation;p=-0.2"), std::invalid_argument);
}

TEST(Filters, GrayInputsStayGray) {
  const auto gray = to_grayscale(random_image(8, 8, 16));
  EXPECT_TRUE(is_gray(saturation(gray, 0.9)));
  EXPECT_TRUE(is_gray(brighten(gray, 0.3)));
}
