#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vphoto/errors.hpp"
#include "vphoto/filters.hpp"
#include "vphoto/image.hpp"
#include "vphoto/scoring.hpp"

namespace vphoto {

struct SearchGrid {
  FilterId filter = FilterId::Saturation;
  std::vector<double> values;

  void validate() const {
    if (values.empty()) throw std::invalid_argument("SearchGrid: empty");
    const auto dom = parameter_domain(filter);
    if (dom.dimension() != 1) throw std::invalid_argument("SearchGrid: filter must take one parameter");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]) || !dom.ranges[0].contains(values[i])) {
        throw std::invalid_argument("SearchGrid: value " + format_real(values[i]) + " outside the filter domain");
      }
      if (i > 0 && !(values[i] > values[i - 1])) throw std::invalid_argument("SearchGrid: values must ascend strictly");
    }
  }

  /// n evenly spaced values lo..hi inclusive.
  static SearchGrid linspace(FilterId f, double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("SearchGrid::linspace: need at least 2 points");
    SearchGrid g{f, {}};
    for (int i = 0; i < n; ++i) g.values.push_back(lo + (hi - lo) * i / (n - 1));
    g.validate();
    return g;
  }

  /// 0.4 .. 0.9 step 0.1 (0.5 is the identity).
  static SearchGrid saturation_default() { return linspace(FilterId::Saturation, 0.4, 0.9, 6); }
  /// 0 .. 0.7 of maximum strength, step 0.1.
  static SearchGrid hdr_default() { return linspace(FilterId::Hdr, 0.0, 0.7, 8); }

  nlohmann::json to_json() const { return {{"filter", filter_name(filter)}, {"values", values}}; }
  static SearchGrid from_json(const nlohmann::json& j) {
    SearchGrid g{parse_filter_name(j.at("filter").get<std::string>()), j.at("values").get<std::vector<double>>()};
    g.validate();
    return g;
  }
};

/// The aspect a filter is optimized against, if any.
inline std::optional<Aspect> paired_aspect(FilterId f) {
  switch (f) {
    case FilterId::Saturation: return Aspect::Saturation;
    case FilterId::Hdr: return Aspect::Hdr;
    default: return std::nullopt;
  }
}

struct Enhancement {
  double param = 0.0;
  RasterImage image;
  double score = 0.0;
  std::vector<double> trace;  // score per grid value
};

/// Grid search over one filter parameter; the first (lowest) value wins ties.
template <ImageScorer S>
Enhancement optimize_filter_1d(const RasterImage& img, const SearchGrid& grid, const S& scorer) {
  grid.validate();
  const auto want = paired_aspect(grid.filter);
  if (!want || *want != scorer.aspect()) {
    throw InvalidPairing("filter '" + std::string(filter_name(grid.filter)) + "' cannot be optimized with the '" +
                         std::string(aspect_name(scorer.aspect())) + "' scorer");
  }
  const PreparedFilter prepared(grid.filter, img);
  Enhancement best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (double p : grid.values) {
    RasterImage out = prepared.apply(p);
    const double s = scorer.score(out);
    best.trace.push_back(s);
    if (s > best_score) {
      best_score = s;
      best.param = p;
      best.image = std::move(out);
    }
  }
  best.score = best_score;
  return best;
}

struct SweepCurves {
  FilterId filter = FilterId::Saturation;
  std::vector<double> params;
  std::vector<Aspect> aspects;
  std::vector<std::vector<double>> scores;  // [scorer][param]

  /// `param,score_<aspect>,...`
  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "param";
    for (Aspect a : aspects) out << ",score_" << aspect_name(a);
    out << '\n';
    for (std::size_t i = 0; i < params.size(); ++i) {
      out << format_real(params[i]);
      for (const auto& col : scores) out << ',' << format_real(col[i]);
      out << '\n';
    }
  }

  double peak_to_peak(std::size_t scorer) const {
    const auto [lo, hi] = std::minmax_element(scores[scorer].begin(), scores[scorer].end());
    return *hi - *lo;
  }
};

inline SweepCurves sweep_diagnostic(const RasterImage& img, const SearchGrid& grid,
                                    std::span<const FunctionScorer> scorers) {
  grid.validate();
  SweepCurves out{grid.filter, grid.values, {}, {}};
  for (const auto& s : scorers) {
    out.aspects.push_back(s.aspect());
    out.scores.emplace_back();
  }
  const PreparedFilter prepared(grid.filter, img);
  for (double p : grid.values) {
    const RasterImage filtered = prepared.apply(p);
    for (std::size_t k = 0; k < scorers.size(); ++k) out.scores[k].push_back(scorers[k].score(filtered));
  }
  return out;
}

/// Dense sweep over the filter's whole non-negative range.
inline SweepCurves sweep_diagnostic(const RasterImage& img, FilterId filter, int n_points,
                                    std::span<const FunctionScorer> scorers) {
  const auto dom = parameter_domain(filter);
  if (dom.dimension() != 1) throw std::invalid_argument("sweep_diagnostic: filter must take one parameter");
  return sweep_diagnostic(img, SearchGrid::linspace(filter, dom.ranges[0].min, dom.ranges[0].max, n_points), scorers);
}

}  // namespace vphoto
