#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vphoto/image.hpp"

namespace vphoto {

inline constexpr std::uint32_t kExtractorVersion = 1;
inline constexpr int kHistBins = 16;
inline constexpr int kGridCells = 4;
inline constexpr std::size_t kFeatureLength = 3 * kHistBins + kHistBins + kHistBins + 2 * kGridCells * kGridCells;

// Layout offsets inside the feature vector.
inline constexpr std::size_t kRgbHistOffset = 0;
inline constexpr std::size_t kSatHistOffset = 48;
inline constexpr std::size_t kGradHistOffset = 64;
inline constexpr std::size_t kGridMeanOffset = 80;
inline constexpr std::size_t kGridStdOffset = 96;

static_assert(kFeatureLength == 112);

using FeatureVector = std::vector<double>;

namespace detail {

// Linear (tent) binning: bin centers at k/(bins-1) over [0,1].
inline void soft_bin(double* hist, double v, double weight) {
  const double t = std::clamp(v, 0.0, 1.0) * (kHistBins - 1);
  const int lo = std::min(kHistBins - 2, static_cast<int>(t));
  const double a = t - lo;
  hist[lo] += weight * (1.0 - a);
  hist[lo + 1] += weight * a;
}

// Gradient magnitudes are compressed with a square root so the common
// small-gradient range is resolved: t = sqrt(min(|g| / 0.5, 1)).
inline double gradient_bin_position(double mag) { return std::sqrt(std::min(mag / 0.5, 1.0)); }

}  // namespace detail

/// 112-d descriptor of a square image:
///   [0,48)  16-bin histograms of R, G, B
///   [48,64) 16-bin HSV saturation histogram
///   [64,80) 16-bin luminance gradient-magnitude histogram
///   [80,96) 4x4 grid of luminance means, [96,112) the grid stds (x4)
/// Histograms are scaled so that a uniform histogram has entries of 1; grid
/// standard deviations are scaled by 4.
inline FeatureVector extract_features(const RasterImage& img) {
  if (img.width() != img.height()) {
    throw std::invalid_argument("extract_features: image must be square");
  }
  const int n = img.width();
  FeatureVector f(kFeatureLength, 0.0);
  const double pix_weight = static_cast<double>(kHistBins) / static_cast<double>(img.pixel_count());

  const Plane lum = luminance(img);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const Rgb p = img.pixel(x, y);
      detail::soft_bin(&f[kRgbHistOffset + 0 * kHistBins], p.r, pix_weight);
      detail::soft_bin(&f[kRgbHistOffset + 1 * kHistBins], p.g, pix_weight);
      detail::soft_bin(&f[kRgbHistOffset + 2 * kHistBins], p.b, pix_weight);
      detail::soft_bin(&f[kSatHistOffset], hsv_saturation(p.r, p.g, p.b), pix_weight);

      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, n - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, n - 1);
      const double gx = 0.5 * (lum.at(xr, y) - lum.at(xl, y));
      const double gy = 0.5 * (lum.at(x, yd) - lum.at(x, yu));
      detail::soft_bin(&f[kGradHistOffset], detail::gradient_bin_position(std::sqrt(gx * gx + gy * gy)),
                       pix_weight);
    }
  }

  for (int cy = 0; cy < kGridCells; ++cy) {
    for (int cx = 0; cx < kGridCells; ++cx) {
      const int x0 = cx * n / kGridCells, x1 = (cx + 1) * n / kGridCells;
      const int y0 = cy * n / kGridCells, y1 = (cy + 1) * n / kGridCells;
      double sum = 0.0, sq = 0.0;
      int count = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double v = lum.at(x, y);
          sum += v;
          sq += v * v;
          ++count;
        }
      }
      const std::size_t cell = static_cast<std::size_t>(cy * kGridCells + cx);
      if (count == 0) continue;
      const double mean = sum / count;
      f[kGridMeanOffset + cell] = mean;
      f[kGridStdOffset + cell] = 4.0 * std::sqrt(std::max(0.0, sq / count - mean * mean));
    }
  }
  return f;
}

}  // namespace vphoto
