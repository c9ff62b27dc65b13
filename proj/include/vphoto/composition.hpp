#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vphoto/errors.hpp"
#include "vphoto/image.hpp"
#include "vphoto/scoring.hpp"

namespace vphoto {

struct CropWindow {
  int x = 0, y = 0, w = 0, h = 0;
  int src_w = 0, src_h = 0;

  void validate() const {
    if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > src_w || y + h > src_h) {
      throw InvariantViolation("CropWindow not contained in its source");
    }
  }

  double area() const { return static_cast<double>(w) * h; }

  nlohmann::json to_json() const { return {{"x", x}, {"y", y}, {"w", w}, {"h", h}, {"src_w", src_w}, {"src_h", src_h}}; }
  static CropWindow from_json(const nlohmann::json& j) {
    return {j.at("x"), j.at("y"), j.at("w"), j.at("h"), j.at("src_w"), j.at("src_h")};
  }

  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

inline double iou(const CropWindow& a, const CropWindow& b) {
  const int ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const int iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = static_cast<double>(ix) * iy;
  return inter / (a.area() + b.area() - inter);
}

struct ScoredCrop {
  CropWindow window;
  double c = 0.0;
  double hybrid = 0.0;
  double crop_score = 0.0;
  double overall_score = 0.0;

  nlohmann::json to_json() const {
    return {{"window", window.to_json()}, {"c", c}, {"hybrid", hybrid}, {"phi_crop", crop_score},
            {"phi_overall", overall_score}};
  }
};

inline double hybrid_value(double c, double crop_score, double overall_score) {
  return c * crop_score + (1.0 - c) * overall_score;
}

inline void check_composition_weight(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("composition weight c must lie in [0,1]");
}

/// c * Phi_crop + (1 - c) * Phi' on an already-cropped image.
template <ImageScorer C, ImageScorer O>
double hybrid_crop_score(const RasterImage& crop_img, double c, const C& crop_scorer, const O& overall_scorer) {
  check_composition_weight(c);
  return hybrid_value(c, crop_scorer.score(crop_img), overall_scorer.score(crop_img));
}

struct CropGrid {
  std::vector<double> width_fractions = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
  std::vector<double> aspects = {0.75, 1.0, 1.33, 1.78};  // width / height
  int min_side = 16;
  int stride_divisor = 8;
  int training_size = 64;
  double iou_threshold = 0.8;

  void validate() const {
    if (width_fractions.empty() || aspects.empty()) throw std::invalid_argument("CropGrid: empty grid");
    for (double f : width_fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("CropGrid: width fraction outside (0,1]");
    }
    for (double a : aspects) {
      if (!(a > 0.0)) throw std::invalid_argument("CropGrid: aspect must be positive");
    }
    if (min_side < 1 || stride_divisor < 1 || training_size < 1) {
      throw std::invalid_argument("CropGrid: sizes must be positive");
    }
  }

  nlohmann::json to_json() const {
    return {{"width_fractions", width_fractions}, {"aspects", aspects},        {"min_side", min_side},
            {"stride_divisor", stride_divisor},   {"training_size", training_size}, {"iou_threshold", iou_threshold}};
  }
  static CropGrid from_json(const nlohmann::json& j) {
    CropGrid g;
    g.width_fractions = j.value("width_fractions", g.width_fractions);
    g.aspects = j.value("aspects", g.aspects);
    g.min_side = j.value("min_side", g.min_side);
    g.stride_divisor = j.value("stride_divisor", g.stride_divisor);
    g.training_size = j.value("training_size", g.training_size);
    g.iou_threshold = j.value("iou_threshold", g.iou_threshold);
    g.validate();
    return g;
  }
};

namespace detail {

// 0, s, 2s, ... plus the flush position `span` so windows reach the far edge.
inline std::vector<int> slide_positions(int span, int stride) {
  std::vector<int> out;
  for (int p = 0; p <= span; p += stride) out.push_back(p);
  if (out.back() != span) out.push_back(span);
  return out;
}

}  // namespace detail

/// Windows in scan order: sizes by area descending (ties keep grid order),
/// then top-to-bottom, left-to-right.
inline std::vector<CropWindow> enumerate_windows(int src_w, int src_h, const CropGrid& grid) {
  grid.validate();
  struct Size {
    int w, h;
  };
  std::vector<Size> sizes;
  for (double f : grid.width_fractions) {
    for (double a : grid.aspects) {
      const int w = static_cast<int>(std::lround(f * src_w));
      const int h = static_cast<int>(std::lround(w / a));
      if (w < grid.min_side || h < grid.min_side || w > src_w || h > src_h) continue;
      const bool dup = std::any_of(sizes.begin(), sizes.end(), [&](const Size& s) { return s.w == w && s.h == h; });
      if (!dup) sizes.push_back({w, h});
    }
  }
  std::stable_sort(sizes.begin(), sizes.end(),
                   [](const Size& a, const Size& b) { return static_cast<long>(a.w) * a.h > static_cast<long>(b.w) * b.h; });
  std::vector<CropWindow> out;
  for (const auto& s : sizes) {
    const int sx = std::max(1, static_cast<int>(std::lround(static_cast<double>(s.w) / grid.stride_divisor)));
    const int sy = std::max(1, static_cast<int>(std::lround(static_cast<double>(s.h) / grid.stride_divisor)));
    for (int y : detail::slide_positions(src_h - s.h, sy)) {
      for (int x : detail::slide_positions(src_w - s.w, sx)) out.push_back({x, y, s.w, s.h, src_w, src_h});
    }
  }
  return out;
}

/// Crop followed by a resize to the training square.
inline RasterImage crop_to_square(const RasterImage& img, const CropWindow& w, int size) {
  return resize_bilinear(crop(img, w.x, w.y, w.w, w.h), size, size);
}

struct WindowScore {
  CropWindow window;
  double crop_score = 0.0;
  double overall_score = 0.0;
};

/// Scores every grid window once with both scorers; reusable across c.
template <ImageScorer C, ImageScorer O>
std::vector<WindowScore> score_windows(const RasterImage& img, const CropGrid& grid, const C& crop_scorer,
                                       const O& overall_scorer) {
  const auto windows = enumerate_windows(img.width(), img.height(), grid);
  if (windows.empty()) {
    throw InvalidInput("no feasible crop window for a " + std::to_string(img.width()) + "x" +
                       std::to_string(img.height()) + " image");
  }
  std::vector<WindowScore> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    const RasterImage sq = crop_to_square(img, w, grid.training_size);
    out.push_back({w, crop_scorer.score(sq), overall_scorer.score(sq)});
  }
  return out;
}

struct CropSearchResult {
  std::vector<ScoredCrop> crops;
  bool short_count = false;  // fewer than k windows survived suppression
};

/// Stable sort by hybrid score (ties keep scan order), then greedy
/// suppression of windows overlapping a kept one by IoU > threshold.
inline CropSearchResult select_top_k(std::span<const WindowScore> scores, double c, int k, double iou_threshold) {
  check_composition_weight(c);
  if (k < 1) throw std::invalid_argument("select_top_k: k must be >= 1");
  std::vector<ScoredCrop> all;
  all.reserve(scores.size());
  for (const auto& s : scores) {
    all.push_back({s.window, c, hybrid_value(c, s.crop_score, s.overall_score), s.crop_score, s.overall_score});
  }
  std::stable_sort(all.begin(), all.end(), [](const ScoredCrop& a, const ScoredCrop& b) { return a.hybrid > b.hybrid; });
  CropSearchResult res;
  for (const auto& cand : all) {
    if (res.crops.size() == static_cast<std::size_t>(k)) break;
    const bool near_dup = std::any_of(res.crops.begin(), res.crops.end(),
                                      [&](const ScoredCrop& kept) { return iou(kept.window, cand.window) > iou_threshold; });
    if (!near_dup) res.crops.push_back(cand);
  }
  res.short_count = res.crops.size() < static_cast<std::size_t>(k);
  return res;
}

template <ImageScorer C, ImageScorer O>
CropSearchResult search_crops(const RasterImage& img, double c, int k, const CropGrid& grid, const C& crop_scorer,
                              const O& overall_scorer) {
  check_composition_weight(c);
  if (k < 1) throw std::invalid_argument("search_crops: k must be >= 1");
  const auto scores = score_windows(img, grid, crop_scorer, overall_scorer);
  return select_top_k(scores, c, k, grid.iou_threshold);
}

// ---------------------------------------------------------------------------
// Vertical sweep diagnostic
// ---------------------------------------------------------------------------

struct VerticalSweepSpec {
  double width_fraction = 0.5;
  double aspect = 1.8;  // width / height
  int step = 0;         // 0: window height / 8
  int training_size = 64;
};

struct VerticalSweep {
  std::vector<CropWindow> windows;
  std::vector<Aspect> aspects;
  std::vector<std::vector<double>> scores;  // [position][scorer]

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "y";
    for (Aspect a : aspects) out << ",score_" << aspect_name(a);
    out << '\n';
    for (std::size_t i = 0; i < windows.size(); ++i) {
      out << windows[i].y;
      for (double s : scores[i]) out << ',' << format_real(s);
      out << '\n';
    }
  }
};

/// Slides a horizontally centered window from top to bottom and scores each
/// crop with every scorer.
inline VerticalSweep vertical_sweep_diagnostic(const RasterImage& img, std::span<const FunctionScorer> scorers,
                                               const VerticalSweepSpec& spec = {}) {
  const int w = static_cast<int>(std::lround(spec.width_fraction * img.width()));
  const int h = static_cast<int>(std::lround(w / spec.aspect));
  if (w < 1 || h < 1 || w > img.width() || h > img.height()) {
    throw std::invalid_argument("vertical_sweep_diagnostic: window does not fit");
  }
  const int x = (img.width() - w) / 2;
  const int step = spec.step > 0 ? spec.step : std::max(1, h / 8);
  VerticalSweep out;
  for (const auto& s : scorers) out.aspects.push_back(s.aspect());
  for (int y : detail::slide_positions(img.height() - h, step)) {
    const CropWindow win{x, y, w, h, img.width(), img.height()};
    const RasterImage sq = crop_to_square(img, win, spec.training_size);
    std::vector<double> row;
    for (const auto& s : scorers) row.push_back(s.score(sq));
    out.windows.push_back(win);
    out.scores.push_back(std::move(row));
  }
  return out;
}

}  // namespace vphoto
