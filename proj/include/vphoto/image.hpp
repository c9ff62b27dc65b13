#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vphoto {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Rec. 601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline double luma(double r, double g, double b) { return kLumaR * r + kLumaG * g + kLumaB * b; }
inline double luma(const Rgb& p) { return luma(p.r, p.g, p.b); }

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// Interleaved RGB raster with channel values in [0,1].
///
/// Public operations return clamped images. Filters that need the unclamped
/// intermediate (the negation trick) go through the `*_unclamped` entry points
/// in filters.hpp and clamp once at the end.
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("RasterImage: dimensions must be >= 1, got " +
                                  std::to_string(width) + "x" + std::to_string(height));
    }
    data_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }

  /// Adopts an interleaved RGB buffer of width*height*3 values.
  static RasterImage from_interleaved(int width, int height, std::vector<double> interleaved) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("RasterImage: dimensions must be >= 1");
    }
    if (interleaved.size() != static_cast<std::size_t>(width) * height * 3) {
      throw std::invalid_argument("RasterImage: buffer length does not match width*height*3");
    }
    RasterImage img;
    img.width_ = width;
    img.height_ = height;
    img.data_ = std::move(interleaved);
    return img;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  double at(int x, int y, int c) const { return data_[index(x, y) + c]; }

  Rgb pixel(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_pixel(int x, int y, const Rgb& p) {
    const std::size_t i = index(x, y);
    data_[i] = p.r;
    data_[i + 1] = p.g;
    data_[i + 2] = p.b;
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void clamp() {
    for (double& v : data_) v = clamp01(v);
  }

  bool same_size(const RasterImage& o) const { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Single-channel real plane (luminance, masks).
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Plane&, const Plane&) = default;
};

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

struct ResampleTap {
  int index;
  double weight;
};

/// Per-output-sample taps for a 1-d linear resample of `in` samples to `out`.
///
/// Pixel centers sit at i + 0.5. Upsampling reduces to plain bilinear
/// interpolation with clamp-to-edge; downsampling widens the triangle kernel
/// by the scale factor so the result is antialiased. Weights are normalized.
inline std::vector<std::vector<ResampleTap>> linear_resample_taps(int in, int out) {
  std::vector<std::vector<ResampleTap>> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  const double support = std::max(scale, 1.0);
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) * scale;
    int lo = static_cast<int>(std::floor(center - support));
    int hi = static_cast<int>(std::ceil(center + support));
    lo = std::max(lo, 0);
    hi = std::min(hi, in - 1);
    auto& row = taps[static_cast<std::size_t>(o)];
    double total = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = 1.0 - std::abs((i + 0.5 - center) / support);
      if (w > 0.0) {
        row.push_back({i, w});
        total += w;
      }
    }
    if (row.empty()) {
      // Only reachable when the center lies beyond the last sample's support.
      row.push_back({std::clamp(static_cast<int>(center), 0, in - 1), 1.0});
      total = 1.0;
    }
    for (auto& t : row) t.weight /= total;
  }
  return taps;
}

inline RasterImage resize_bilinear(const RasterImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) {
    throw std::invalid_argument("resize_bilinear: target dimensions must be >= 1");
  }
  if (out_w == img.width() && out_h == img.height()) return img;

  const auto xt = linear_resample_taps(img.width(), out_w);
  const auto yt = linear_resample_taps(img.height(), out_h);

  // Horizontal pass into an intermediate of size out_w x in_h.
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * img.height() * 3, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& t : xt[static_cast<std::size_t>(x)]) {
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * img.at(t.index, y, c);
      }
      const std::size_t i = (static_cast<std::size_t>(y) * out_w + x) * 3;
      for (int c = 0; c < 3; ++c) tmp[i + c] = acc[c];
    }
  }

  RasterImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& t : yt[static_cast<std::size_t>(y)]) {
        const std::size_t i = (static_cast<std::size_t>(t.index) * out_w + x) * 3;
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * tmp[i + c];
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(acc[c]);
    }
  }
  return out;
}

inline Plane resize_bilinear(const Plane& p, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) {
    throw std::invalid_argument("resize_bilinear: target dimensions must be >= 1");
  }
  const auto xt = linear_resample_taps(p.width, out_w);
  const auto yt = linear_resample_taps(p.height, out_h);
  Plane out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (const auto& ty : yt[static_cast<std::size_t>(y)]) {
        for (const auto& tx : xt[static_cast<std::size_t>(x)]) {
          acc += ty.weight * tx.weight * p.at(tx.index, ty.index);
        }
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline RasterImage crop(const RasterImage& img, int x, int y, int w, int h) {
  if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > img.width() || y + h > img.height()) {
    throw std::invalid_argument("crop: window not contained in image");
  }
  RasterImage out(w, h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) out.set_pixel(i, j, img.pixel(x + i, y + j));
  }
  return out;
}

/// Largest centered square, resized to `size` x `size`.
inline RasterImage center_square(const RasterImage& img, int size) {
  const int side = std::min(img.width(), img.height());
  const int x = (img.width() - side) / 2;
  const int y = (img.height() - side) / 2;
  return resize_bilinear(crop(img, x, y, side, side), size, size);
}

// ---------------------------------------------------------------------------
// Color
// ---------------------------------------------------------------------------

inline RasterImage to_grayscale(const RasterImage& img) {
  RasterImage out = img;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); i += 3) {
    const double y = clamp01(luma(d[i], d[i + 1], d[i + 2]));
    d[i] = d[i + 1] = d[i + 2] = y;
  }
  return out;
}

inline Plane luminance(const RasterImage& img) {
  Plane out(img.width(), img.height());
  auto d = img.data();
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    out.values[p] = luma(d[3 * p], d[3 * p + 1], d[3 * p + 2]);
  }
  return out;
}

/// HSV saturation (max - min) / max; zero for black.
inline double hsv_saturation(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  if (mx <= 0.0) return 0.0;
  const double mn = std::min({r, g, b});
  return (mx - mn) / mx;
}

inline double mean_hsv_saturation(const RasterImage& img) {
  auto d = img.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); i += 3) acc += hsv_saturation(d[i], d[i + 1], d[i + 2]);
  return acc / static_cast<double>(img.pixel_count());
}

inline Rgb hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double hh = h * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s);
  const double q = v * (1 - s * f);
  const double t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// ---------------------------------------------------------------------------
// Blur
// ---------------------------------------------------------------------------

/// Discrete Gaussian truncated at ceil(3 sigma) and renormalized.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  }
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

namespace detail {

// Separable convolution with clamp-to-edge on `channels` interleaved values.
inline void convolve_separable(std::span<const double> src, std::span<double> dst, int w, int h,
                               int channels, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, w - 1);
          acc += k[static_cast<std::size_t>(i + radius)] *
                 src[(static_cast<std::size_t>(y) * w + sx) * channels + c];
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * channels + c] = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = std::clamp(y + i, 0, h - 1);
          acc += k[static_cast<std::size_t>(i + radius)] *
                 tmp[(static_cast<std::size_t>(sy) * w + x) * channels + c];
        }
        dst[(static_cast<std::size_t>(y) * w + x) * channels + c] = acc;
      }
    }
  }
}

}  // namespace detail

inline RasterImage gaussian_blur(const RasterImage& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  RasterImage out(img.width(), img.height());
  detail::convolve_separable(img.data(), out.data(), img.width(), img.height(), 3, k);
  out.clamp();
  return out;
}

inline Plane gaussian_blur(const Plane& p, double sigma) {
  const auto k = gaussian_kernel(sigma);
  Plane out(p.width, p.height);
  detail::convolve_separable(p.values, out.values, p.width, p.height, 1, k);
  return out;
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

/// Similarity in [0,1]; 1 means identical under the generating metric.
class SimilarityScore {
 public:
  constexpr SimilarityScore() = default;
  explicit SimilarityScore(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("SimilarityScore must lie in [0,1]");
    }
  }
  constexpr double value() const { return value_; }
  friend bool operator==(const SimilarityScore&, const SimilarityScore&) = default;

 private:
  double value_ = 1.0;
};

/// Mean absolute per-pixel-channel difference.
inline double mean_abs_diff(const RasterImage& a, const RasterImage& b) {
  if (!a.same_size(b)) throw std::invalid_argument("mean_abs_diff: dimension mismatch");
  auto da = a.data();
  auto db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(da[i] - db[i]);
  return acc / static_cast<double>(da.size());
}

/// max(0, 1 - delta / cap).
inline SimilarityScore perturbation_score(double delta, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("perturbation_score: cap must be positive");
  if (!(delta >= 0.0)) throw std::invalid_argument("perturbation_score: delta must be >= 0");
  return SimilarityScore(std::max(0.0, 1.0 - delta / cap));
}

}  // namespace vphoto
