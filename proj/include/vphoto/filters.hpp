#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vphoto/image.hpp"

namespace vphoto {

enum class FilterId {
  Saturation,
  Hdr,
  Brighten,
  Vignette,
  TuneBrightness,
  TuneContrast,
  Curve,
  FlattenBrightness,
};

inline constexpr std::array<FilterId, 8> kAllFilters = {
    FilterId::Saturation, FilterId::Hdr,          FilterId::Brighten, FilterId::Vignette,
    FilterId::TuneBrightness, FilterId::TuneContrast, FilterId::Curve, FilterId::FlattenBrightness,
};

inline std::string_view filter_name(FilterId id) {
  switch (id) {
    case FilterId::Saturation: return "saturation";
    case FilterId::Hdr: return "hdr";
    case FilterId::Brighten: return "brighten";
    case FilterId::Vignette: return "vignette";
    case FilterId::TuneBrightness: return "tune_brightness";
    case FilterId::TuneContrast: return "tune_contrast";
    case FilterId::Curve: return "curve";
    case FilterId::FlattenBrightness: return "flatten_brightness";
  }
  return "unknown";
}

inline FilterId parse_filter_name(std::string_view name) {
  for (FilterId id : kAllFilters) {
    if (filter_name(id) == name) return id;
  }
  throw std::invalid_argument("unknown filter: " + std::string(name));
}

// Filter constants. The tune ranges set full travel of the brightness offset
// and contrast gain; HDR and flatten radii scale with width + height.
inline constexpr double kHdrGain = 1.5;
inline constexpr double kHdrSigmaFactor = 0.03;
inline constexpr double kFlattenSigmaFactor = 0.05;
inline constexpr double kTuneBrightnessRange = 0.5;
inline constexpr double kTuneContrastRange = 1.0;
inline constexpr double kVignetteSlope = 1.2;
inline constexpr std::array<double, 6> kCurveControlX = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
inline constexpr double kCurveMaxOffset = 0.15;

struct ParamRange {
  double min;
  double max;
  bool contains(double v) const { return v >= min && v <= max; }
};

struct ParameterDomain {
  std::vector<ParamRange> ranges;  // one per dimension
  std::vector<double> neutral;     // identity point
  bool negatable = false;          // accepts negative strengths via 2M - F(s)M

  std::size_t dimension() const { return ranges.size(); }
};

inline ParameterDomain parameter_domain(FilterId id) {
  switch (id) {
    case FilterId::Saturation:
    case FilterId::Vignette:
    case FilterId::TuneBrightness:
    case FilterId::TuneContrast:
      return {{{0.0, 1.0}}, {0.5}, false};
    case FilterId::Brighten:
      return {{{0.0, 1.0}}, {0.0}, false};
    case FilterId::Hdr:
    case FilterId::FlattenBrightness:
      return {{{0.0, 1.0}}, {0.0}, true};
    case FilterId::Curve:
      return {std::vector<ParamRange>(6, {-kCurveMaxOffset, kCurveMaxOffset}), std::vector<double>(6, 0.0),
              false};
  }
  throw std::invalid_argument("parameter_domain: unknown filter");
}

inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// A filter with concrete parameters. Negatable filters accept a negative
/// strength, meaning the negated effect 2M - F(|s|)M.
struct FilterParams {
  FilterId filter = FilterId::Saturation;
  std::vector<double> values;

  bool negated() const {
    return parameter_domain(filter).negatable && values.size() == 1 && values[0] < 0.0;
  }

  void validate() const {
    const auto dom = parameter_domain(filter);
    if (values.size() != dom.dimension()) {
      throw std::invalid_argument(std::string(filter_name(filter)) + ": expected " +
                                  std::to_string(dom.dimension()) + " parameter(s), got " +
                                  std::to_string(values.size()));
    }
    for (std::size_t d = 0; d < values.size(); ++d) {
      double v = values[d];
      if (dom.negatable) v = std::abs(v);
      if (!std::isfinite(v) || !dom.ranges[d].contains(v)) {
        throw std::invalid_argument(std::string(filter_name(filter)) + ": parameter " +
                                    format_real(values[d]) + " outside domain");
      }
    }
  }

  /// `filter=name;p=v1,v2,...`
  std::string to_string() const {
    std::string s = "filter=" + std::string(filter_name(filter)) + ";p=";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ',';
      s += format_real(values[i]);
    }
    return s;
  }

  static FilterParams parse(std::string_view text) {
    constexpr std::string_view kFilter = "filter=";
    constexpr std::string_view kP = ";p=";
    const auto sep = text.find(kP);
    if (text.substr(0, kFilter.size()) != kFilter || sep == std::string_view::npos) {
      throw std::invalid_argument("malformed filter params: " + std::string(text));
    }
    FilterParams fp;
    fp.filter = parse_filter_name(text.substr(kFilter.size(), sep - kFilter.size()));
    std::string_view rest = text.substr(sep + kP.size());
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view tok = rest.substr(0, comma);
      double v = 0;
      auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
        throw std::invalid_argument("malformed parameter value: " + std::string(tok));
      }
      fp.values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    fp.validate();
    return fp;
  }

  friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

namespace detail {

inline void check_unit(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + ": parameter must lie in [0,1], got " + format_real(p));
  }
}

inline RasterImage clamped(RasterImage img) {
  img.clamp();
  return img;
}

}  // namespace detail

/// Holds per-image intermediates (blur layers) so a filter can be evaluated
/// at many parameter values without recomputing them. Results of
/// `apply_unclamped` are raw reals; `apply` clamps once at the end.
class PreparedFilter {
 public:
  PreparedFilter(FilterId id, const RasterImage& img) : id_(id), img_(&img) {
    if (id == FilterId::Hdr) {
      const double sigma = kHdrSigmaFactor * (img.width() + img.height());
      const RasterImage base = gaussian_blur(img, sigma);
      detail_ = RasterImage(img.width(), img.height());
      auto d = detail_.data();
      auto s = img.data();
      auto b = base.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = s[i] - b[i];
    } else if (id == FilterId::FlattenBrightness) {
      const double sigma = kFlattenSigmaFactor * (img.width() + img.height());
      luma_ = luminance(img);
      luma_smooth_ = gaussian_blur(luma_, sigma);
    }
  }

  FilterId filter() const { return id_; }

  /// Unclamped F(params) applied to the prepared image. Negative strengths
  /// are not accepted here; see apply().
  RasterImage apply_unclamped(std::span<const double> p) const {
    const RasterImage& img = *img_;
    RasterImage out = img;
    // The neutral point is the identity by definition; skip the arithmetic so it is exact.
    const auto dom = parameter_domain(id_);
    if (std::equal(p.begin(), p.end(), dom.neutral.begin(), dom.neutral.end())) return out;
    auto o = out.data();
    switch (id_) {
      case FilterId::Saturation: {
        detail::check_unit(p[0], "saturation");
        const double m = 2.0 * p[0];
        for (std::size_t i = 0; i < o.size(); i += 3) {
          const double y = luma(o[i], o[i + 1], o[i + 2]);
          for (int c = 0; c < 3; ++c) o[i + c] = y + m * (o[i + c] - y);
        }
        break;
      }
      case FilterId::Hdr: {
        detail::check_unit(p[0], "hdr");
        const double k = p[0] * kHdrGain;
        auto d = detail_.data();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += k * d[i];
        break;
      }
      case FilterId::Brighten: {
        detail::check_unit(p[0], "brighten");
        for (double& v : o) v = 1.0 - (1.0 - v) * (1.0 - p[0]);
        break;
      }
      case FilterId::Vignette: {
        detail::check_unit(p[0], "vignette");
        const double g = vignette_corner_gain(p[0]);
        const double cx = img.width() / 2.0;
        const double cy = img.height() / 2.0;
        const double rmax = std::hypot(cx, cy);
        for (int y = 0; y < img.height(); ++y) {
          for (int x = 0; x < img.width(); ++x) {
            const double rho = std::min(1.0, std::hypot(x + 0.5 - cx, y + 0.5 - cy) / rmax);
            const double c = std::cos(std::numbers::pi / 2.0 * rho);
            const double mult = 1.0 - (1.0 - g) * (1.0 - c * c);
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) *= mult;
          }
        }
        break;
      }
      case FilterId::TuneBrightness: {
        detail::check_unit(p[0], "tune_brightness");
        const double add = (p[0] - 0.5) * kTuneBrightnessRange;
        for (double& v : o) v += add;
        break;
      }
      case FilterId::TuneContrast: {
        detail::check_unit(p[0], "tune_contrast");
        const double gain = 1.0 + (p[0] - 0.5) * kTuneContrastRange;
        for (double& v : o) v = 0.5 + (v - 0.5) * gain;
        break;
      }
      case FilterId::Curve: {
        if (p.size() != 6) throw std::invalid_argument("curve: expected 6 offsets");
        std::array<double, 6> ys{};
        for (std::size_t i = 0; i < 6; ++i) {
          if (!(std::abs(p[i]) <= kCurveMaxOffset)) {
            throw std::invalid_argument("curve: offset outside [-0.15, 0.15]");
          }
          ys[i] = kCurveControlX[i] + p[i];
        }
        for (double& v : o) v = curve_lookup(ys, v);
        break;
      }
      case FilterId::FlattenBrightness: {
        detail::check_unit(p[0], "flatten_brightness");
        // Luminance moves toward its smooth average; the same additive shift
        // on every channel keeps chroma differences intact.
        for (std::size_t px = 0; px < luma_.values.size(); ++px) {
          const double shift = p[0] * (luma_smooth_.values[px] - luma_.values[px]);
          for (int c = 0; c < 3; ++c) o[3 * px + c] += shift;
        }
        break;
      }
    }
    return out;
  }

  /// Clamped filter output; negative strengths on negatable filters apply
  /// the negated effect.
  RasterImage apply(std::span<const double> p) const {
    if (parameter_domain(id_).negatable && p.size() == 1 && p[0] < 0.0) {
      return negated(std::abs(p[0]));
    }
    return detail::clamped(apply_unclamped(p));
  }

  RasterImage apply(double p) const { return apply(std::span<const double>(&p, 1)); }

  /// clamp(2M - F(s)M), computed from the unclamped inner result.
  RasterImage negated(std::span<const double> p) const {
    RasterImage out = apply_unclamped(p);
    auto o = out.data();
    auto m = img_->data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = 2.0 * m[i] - o[i];
    out.clamp();
    return out;
  }
  RasterImage negated(double p) const { return negated(std::span<const double>(&p, 1)); }

  /// Corner multiplier: 1 at outer = 0.5, darker below, brighter above.
  static double vignette_corner_gain(double outer) {
    return std::max(0.0, 1.0 + (outer - 0.5) * kVignetteSlope);
  }

  static double curve_lookup(const std::array<double, 6>& ys, double v) {
    const double t = std::clamp(v, 0.0, 1.0) / 0.2;
    const int seg = std::min(4, static_cast<int>(t));
    const double a = t - seg;
    const double lookup = ys[static_cast<std::size_t>(seg)] * (1.0 - a) + ys[static_cast<std::size_t>(seg) + 1] * a;
    // Values outside [0,1] (only reachable on unclamped inputs) keep their
    // distance from the nearest endpoint.
    return lookup + (v - std::clamp(v, 0.0, 1.0));
  }

 private:
  FilterId id_;
  const RasterImage* img_;
  RasterImage detail_;
  Plane luma_;
  Plane luma_smooth_;
};

inline RasterImage apply_filter(const FilterParams& fp, const RasterImage& img) {
  fp.validate();
  return PreparedFilter(fp.filter, img).apply(fp.values);
}

inline RasterImage apply_filter_unclamped(const FilterParams& fp, const RasterImage& img) {
  fp.validate();
  return PreparedFilter(fp.filter, img).apply_unclamped(fp.values);
}

/// F(-s) o M := 2M - F(s) o M, clamped once at the end.
inline RasterImage negate_effect(FilterId filter, std::span<const double> params, const RasterImage& img) {
  FilterParams fp{filter, {params.begin(), params.end()}};
  fp.validate();
  return PreparedFilter(filter, img).negated(params);
}

inline RasterImage negate_effect(FilterId filter, double param, const RasterImage& img) {
  return negate_effect(filter, std::span<const double>(&param, 1), img);
}

inline RasterImage saturation(const RasterImage& img, double p) {
  return PreparedFilter(FilterId::Saturation, img).apply(p);
}
inline RasterImage hdr(const RasterImage& img, double s) {
  detail::check_unit(s, "hdr");
  return PreparedFilter(FilterId::Hdr, img).apply(s);
}
inline RasterImage brighten(const RasterImage& img, double amount) {
  return PreparedFilter(FilterId::Brighten, img).apply(amount);
}
inline RasterImage vignette(const RasterImage& img, double outer) {
  return PreparedFilter(FilterId::Vignette, img).apply(outer);
}
inline RasterImage tune_brightness(const RasterImage& img, double p) {
  return PreparedFilter(FilterId::TuneBrightness, img).apply(p);
}
inline RasterImage tune_contrast(const RasterImage& img, double p) {
  return PreparedFilter(FilterId::TuneContrast, img).apply(p);
}
inline RasterImage curve_filter(const RasterImage& img, std::span<const double> offsets) {
  if (offsets.size() != 6) throw std::invalid_argument("curve: expected 6 offsets");
  return PreparedFilter(FilterId::Curve, img).apply(offsets);
}
inline RasterImage flatten_brightness(const RasterImage& img, double s) {
  detail::check_unit(s, "flatten_brightness");
  return PreparedFilter(FilterId::FlattenBrightness, img).apply(s);
}

}  // namespace vphoto
