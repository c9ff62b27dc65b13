#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "vphoto/aspect_data.hpp"
#include "vphoto/filters.hpp"
#include "vphoto/image.hpp"
#include "vphoto/learner.hpp"
#include "vphoto/rng.hpp"
#include "vphoto/scoring.hpp"

// Procedural stand-ins for the photo corpora: "professional" landscapes with a
// consistent colorfulness and detail level, amateur-grade degradations of them
// with a ranked quality label, and equirectangular panoramas.

namespace vphoto {

/// Lattice value noise with smoothstep interpolation, optionally periodic in x.
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, int cells_x, int cells_y, bool periodic_x)
      : cx_(cells_x), cy_(cells_y), periodic_(periodic_x) {
    Rng rng(seed);
    values_.resize(static_cast<std::size_t>(cx_ + 1) * (cy_ + 1));
    for (double& v : values_) v = rng.uniform(-1.0, 1.0);
    if (periodic_) {
      for (int y = 0; y <= cy_; ++y) lattice(cx_, y) = lattice(0, y);
    }
  }

  /// u, v in [0,1].
  double operator()(double u, double v) const {
    if (periodic_) u -= std::floor(u);
    const double fx = std::clamp(u, 0.0, 1.0) * cx_;
    const double fy = std::clamp(v, 0.0, 1.0) * cy_;
    const int x0 = std::min(static_cast<int>(fx), cx_ - 1);
    const int y0 = std::min(static_cast<int>(fy), cy_ - 1);
    const double tx = smooth(fx - x0), ty = smooth(fy - y0);
    const double a = lattice(x0, y0) * (1 - tx) + lattice(x0 + 1, y0) * tx;
    const double b = lattice(x0, y0 + 1) * (1 - tx) + lattice(x0 + 1, y0 + 1) * tx;
    return a * (1 - ty) + b * ty;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double& lattice(int x, int y) { return values_[static_cast<std::size_t>(y) * (cx_ + 1) + x]; }
  double lattice(int x, int y) const { return values_[static_cast<std::size_t>(y) * (cx_ + 1) + x]; }

  int cx_, cy_;
  bool periodic_;
  std::vector<double> values_;
};

struct LandscapeStyle {
  double min_saturation = 0.60;  // target mean HSV saturation band
  double max_saturation = 0.70;
  double detail = 0.07;          // texture amplitude on land
  double vignette = 0.25;        // corner darkening of the "professional" look
};

namespace detail {

// Multiplies chroma (distance from luma) by k, clamped.
inline RasterImage scale_chroma(const RasterImage& img, double k) {
  RasterImage out = img;
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); i += 3) {
    const double y = luma(o[i], o[i + 1], o[i + 2]);
    for (int c = 0; c < 3; ++c) o[i + c] = clamp01(y + k * (o[i + c] - y));
  }
  return out;
}

// Chroma scale that brings the mean HSV saturation to `target` (bisection).
inline RasterImage normalize_saturation(const RasterImage& img, double target) {
  double lo = 0.0, hi = 4.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_hsv_saturation(scale_chroma(img, mid)) < target ? lo : hi) = mid;
  }
  return scale_chroma(img, 0.5 * (lo + hi));
}

struct SceneParams {
  double horizon;          // fraction of height
  double sky_hue, sky_sat, sky_val;
  double glow_hue;         // warm band near the horizon
  double land_hue, land_val;
  double mountain_hue;
  double ridge_amp, ridge2_amp;
  double sun_u, sun_v, sun_r;
  double cloud_cover;
};

inline SceneParams draw_scene(Rng& rng) {
  SceneParams s{};
  s.horizon = rng.uniform(0.50, 0.66);
  s.sky_hue = rng.uniform(0.54, 0.62);
  s.sky_sat = rng.uniform(0.45, 0.75);
  s.sky_val = rng.uniform(0.75, 0.95);
  s.glow_hue = rng.uniform(0.02, 0.12);
  s.land_hue = rng.uniform(0.18, 0.34);
  s.land_val = rng.uniform(0.35, 0.55);
  s.mountain_hue = rng.uniform(0.60, 0.75);
  s.ridge_amp = rng.uniform(0.10, 0.22);
  s.ridge2_amp = rng.uniform(0.05, 0.12);
  s.sun_u = rng.uniform(0.2, 0.8);
  s.sun_v = rng.uniform(0.12, 0.3);
  s.sun_r = rng.uniform(0.04, 0.07);
  s.cloud_cover = rng.uniform(0.0, 0.5);
  return s;
}

// Renders a scene on a (u, v) parameterization; `periodic` wraps u.
inline RasterImage render_scene(const SceneParams& s, int w, int h, std::uint64_t seed, bool periodic,
                                double detail_amp, double horizon_override = -1.0) {
  const double horizon = horizon_override >= 0.0 ? horizon_override : s.horizon;
  const ValueNoise ridge(derive_seed(seed, {1}), 6, 1, periodic);
  const ValueNoise ridge2(derive_seed(seed, {2}), 11, 1, periodic);
  const ValueNoise clouds(derive_seed(seed, {3}), 8, 6, periodic);
  const ValueNoise coarse(derive_seed(seed, {4}), 12, 12, periodic);
  const ValueNoise fine(derive_seed(seed, {5}), 32, 32, periodic);
  const ValueNoise finer(derive_seed(seed, {6}), 64, 64, periodic);
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    const double v = (y + 0.5) / h;
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w;
      const double texture = 0.6 * fine(u, v) + 0.4 * finer(u, v);
      const double far_ridge = horizon - s.ridge_amp * (0.55 + 0.45 * ridge(u, 0.5));
      const double near_ridge = horizon - s.ridge2_amp * (0.5 + 0.5 * ridge2(u, 0.5)) + 0.04;
      Rgb px;
      if (v < far_ridge) {
        // Sky: hue gradient toward a warm glow near the horizon, clouds, sun.
        const double t = std::clamp(v / std::max(far_ridge, 1e-6), 0.0, 1.0);
        const Rgb top = hsv_to_rgb(s.sky_hue, s.sky_sat, s.sky_val * 0.85);
        const Rgb low = hsv_to_rgb(s.glow_hue, s.sky_sat * 0.8, s.sky_val);
        const double m = t * t;
        px = {top.r * (1 - m) + low.r * m, top.g * (1 - m) + low.g * m, top.b * (1 - m) + low.b * m};
        const double cl = std::clamp((clouds(u, v) + 0.5 * coarse(u, v) - (1.0 - 2.0 * s.cloud_cover)) * 1.5, 0.0, 0.8);
        px = {px.r + (0.97 - px.r) * cl, px.g + (0.95 - px.g) * cl, px.b + (0.93 - px.b) * cl};
        double du = std::abs(u - s.sun_u);
        if (periodic) du = std::min(du, 1.0 - du);
        const double d = std::hypot(du * w / h, v - s.sun_v);
        const double sun = std::exp(-std::pow(d / s.sun_r, 2.0));
        px = {px.r + (1.0 - px.r) * sun, px.g + (0.92 - px.g) * sun, px.b + (0.6 - px.b) * sun};
      } else if (v < near_ridge) {
        // Distant mountains: hazy, moderately textured.
        const double shade = 0.45 + 0.15 * coarse(u, v) + detail_amp * 0.8 * texture;
        px = hsv_to_rgb(s.mountain_hue, 0.45, std::clamp(shade, 0.05, 1.0));
      } else {
        // Land: darker toward the bottom, strongly textured.
        const double depth = (v - near_ridge) / std::max(1.0 - near_ridge, 1e-6);
        const double val = s.land_val * (1.0 - 0.35 * depth) + 0.08 * coarse(u, v) + detail_amp * texture;
        px = hsv_to_rgb(s.land_hue + 0.03 * coarse(v, u), 0.75, std::clamp(val, 0.03, 1.0));
      }
      img.set_pixel(x, y, {clamp01(px.r), clamp01(px.g), clamp01(px.b)});
    }
  }
  return img;
}

inline void apply_soft_vignette(RasterImage& img, double strength) {
  const double cx = img.width() / 2.0, cy = img.height() / 2.0;
  const double rmax = std::hypot(cx, cy);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double r = std::hypot(x + 0.5 - cx, y + 0.5 - cy) / rmax;
      const double m = 1.0 - strength * r * r;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) *= m;
    }
  }
}

}  // namespace detail

/// One "professional" landscape: rule-of-thirds horizon, vignetting, and a
/// mean saturation inside the style's band.
inline RasterImage professional_landscape(int w, int h, std::uint64_t seed, const LandscapeStyle& style = {}) {
  Rng rng(derive_seed(seed, {hash_name("scene")}));
  const auto scene = detail::draw_scene(rng);
  RasterImage img = detail::render_scene(scene, w, h, derive_seed(seed, {hash_name("noise")}), false, style.detail);
  detail::apply_soft_vignette(img, style.vignette);
  return detail::normalize_saturation(img, rng.uniform(style.min_saturation, style.max_saturation));
}

inline Corpus professional_corpus(int count, int size, std::uint64_t seed, const LandscapeStyle& style = {},
                                  int first_index = 0) {
  Corpus c{"synthetic", {}};
  for (int i = first_index; i < first_index + count; ++i) {
    const std::string id = "pro" + std::to_string(i);
    c.entries.push_back({id, professional_landscape(size, size, derive_seed(seed, {hash_name(id)}), style)});
  }
  return c;
}

/// Equirectangular (2:1) landscape panorama; the horizon sits on the equator
/// and all structures wrap around in longitude.
inline RasterImage synthetic_panorama(int width, std::uint64_t seed, const LandscapeStyle& style = {}) {
  Rng rng(derive_seed(seed, {hash_name("scene")}));
  auto scene = detail::draw_scene(rng);
  scene.ridge_amp *= 0.5;
  scene.ridge2_amp *= 0.5;
  scene.sun_v = rng.uniform(0.3, 0.42);
  scene.sun_r *= 0.5;
  RasterImage img = detail::render_scene(scene, width, width / 2, derive_seed(seed, {hash_name("noise")}), true,
                                         style.detail, 0.52);
  return detail::normalize_saturation(img, rng.uniform(style.min_saturation, style.max_saturation));
}

// ---------------------------------------------------------------------------
// Ranked amateur corpus for the overall scorer
// ---------------------------------------------------------------------------

struct Degradation {
  std::string name;
  double severity = 0.0;  // [0,1]
};

/// Applies 0-3 random amateur-style flaws and returns the summed severity.
inline RasterImage degrade(const RasterImage& img, Rng& rng, std::vector<Degradation>* log = nullptr) {
  RasterImage out = img;
  const int n = static_cast<int>(rng.index(4));
  for (int i = 0; i < n; ++i) {
    const auto kind = rng.index(6);
    const double sev = rng.uniform(0.2, 1.0);
    switch (kind) {
      case 0: {  // washed out or garish color
        const double p = rng.uniform() < 0.6 ? 0.5 - 0.4 * sev : 0.5 + 0.35 * sev;
        out = saturation(out, p);
        if (log) log->push_back({"saturation", sev});
        break;
      }
      case 1:  // flat, low local contrast
        out = negate_effect(FilterId::Hdr, sev, out);
        if (log) log->push_back({"flat", sev});
        break;
      case 2: {  // exposure error
        const double p = rng.uniform() < 0.5 ? 0.5 - 0.35 * sev : 0.5 + 0.35 * sev;
        out = tune_brightness(out, p);
        if (log) log->push_back({"exposure", sev});
        break;
      }
      case 3:  // low contrast
        out = tune_contrast(out, 0.5 - 0.4 * sev);
        if (log) log->push_back({"contrast", sev});
        break;
      case 4: {  // soft focus
        out = gaussian_blur(out, 0.4 + 1.6 * sev);
        if (log) log->push_back({"blur", sev});
        break;
      }
      default: {  // careless framing: a tight off-center crop
        const double frac = 1.0 - 0.45 * sev;
        const int w = std::max(8, static_cast<int>(std::lround(frac * out.width())));
        const int h = std::max(8, static_cast<int>(std::lround(frac * out.height())));
        const int x = static_cast<int>(rng.index(static_cast<std::uint64_t>(out.width() - w + 1)));
        const int y = static_cast<int>(rng.index(static_cast<std::uint64_t>(out.height() - h + 1)));
        out = resize_bilinear(crop(out, x, y, w, h), out.width(), out.height());
        if (log) log->push_back({"framing", sev});
        break;
      }
    }
  }
  return out;
}

/// Labeled overall-quality corpus: each image gets a latent quality of minus
/// its total degradation (plus small rater noise); targets are the ascending
/// percentile ranks of that quality.
inline LabeledDataset overall_dataset(const Corpus& pros, int variants_per_image, std::uint64_t seed) {
  LabeledDataset ds;
  std::vector<double> quality;
  for (const auto& e : pros.entries) {
    for (int v = 0; v < variants_per_image; ++v) {
      const std::uint64_t stream = derive_seed(seed, {hash_name(e.id), static_cast<std::uint64_t>(v)});
      Rng rng(stream);
      std::vector<Degradation> log;
      RasterImage img = degrade(e.image, rng, &log);
      double q = 0.05 * rng.normal();
      std::string op = "degrade=";
      for (const auto& d : log) {
        q -= d.severity;
        op += d.name + ":" + format_real(d.severity) + ";";
      }
      quality.push_back(q);
      ds.examples.push_back({std::move(img), SimilarityScore(0.0)});
      ds.provenance.push_back({e.id, op, stream});
    }
  }
  const auto pct = rank_to_percentile(quality);
  for (std::size_t i = 0; i < pct.size(); ++i) ds.examples[i].target = SimilarityScore(pct[i]);
  return ds;
}

}  // namespace vphoto
