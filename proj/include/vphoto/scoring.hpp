#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vphoto/errors.hpp"
#include "vphoto/filters.hpp"
#include "vphoto/image.hpp"
#include "vphoto/learner.hpp"

namespace vphoto {

enum class Aspect { Composition, Saturation, Hdr, Overall };

inline std::string_view aspect_name(Aspect a) {
  switch (a) {
    case Aspect::Composition: return "composition";
    case Aspect::Saturation: return "saturation";
    case Aspect::Hdr: return "hdr";
    case Aspect::Overall: return "overall";
  }
  return "unknown";
}

inline Aspect parse_aspect(std::string_view s) {
  for (Aspect a : {Aspect::Composition, Aspect::Saturation, Aspect::Hdr, Aspect::Overall}) {
    if (aspect_name(a) == s) return a;
  }
  throw std::invalid_argument("unknown aspect: " + std::string(s));
}

/// Anything that maps an image to a scalar score for one aspect.
template <typename S>
concept ImageScorer = requires(const S& s, const RasterImage& img) {
  { s.score(img) } -> std::convertible_to<double>;
  { s.aspect() } -> std::convertible_to<Aspect>;
};

/// Learned scorer Phi_k (or the overall Phi'). Inputs are resized to the
/// square training size before feature extraction, as during training.
class AspectScorer {
 public:
  AspectScorer(Aspect aspect, MlpModel model, int input_size = 64)
      : aspect_(aspect), model_(std::move(model)), input_size_(input_size) {
    if (model_.extractor_version() != kExtractorVersion) {
      throw IncompatibleModel("scorer '" + std::string(aspect_name(aspect)) + "' was trained with extractor v" +
                              std::to_string(model_.extractor_version()));
    }
  }

  /// Zero-weight model: scores 0.5 everywhere.
  static AspectScorer untrained(Aspect aspect, int input_size = 64) {
    return AspectScorer(aspect, MlpModel({static_cast<int>(kFeatureLength), 1}), input_size);
  }

  Aspect aspect() const { return aspect_; }
  const MlpModel& model() const { return model_; }
  int input_size() const { return input_size_; }

  double score(const RasterImage& img) const {
    if (img.width() == input_size_ && img.height() == input_size_) return predict(model_, img);
    return predict(model_, resize_bilinear(img, input_size_, input_size_));
  }

  void save(const std::filesystem::path& path, nlohmann::json meta = nlohmann::json::object()) const {
    meta["aspect"] = aspect_name(aspect_);
    meta["input_size"] = input_size_;
    save_model(path, model_, std::move(meta));
  }

  static AspectScorer load(const std::filesystem::path& path) {
    const auto meta = read_model_sidecar(path);
    MlpModel model = load_model(path);
    if (!meta.contains("aspect")) throw IncompatibleModel("model sidecar for " + path.string() + " lacks 'aspect'");
    return AspectScorer(parse_aspect(meta.at("aspect").get<std::string>()), std::move(model),
                        meta.value("input_size", 64));
  }

 private:
  Aspect aspect_;
  MlpModel model_;
  int input_size_;
};

/// Scorer backed by an arbitrary function; used for fixed and synthetic scorers.
struct FunctionScorer {
  Aspect which;
  std::function<double(const RasterImage&)> fn;

  Aspect aspect() const { return which; }
  double score(const RasterImage& img) const { return fn(img); }
};

template <ImageScorer S>
double score(const S& scorer, const RasterImage& img) {
  return scorer.score(img);
}

/// Type-erased view of a scorer; the referenced scorer must outlive it.
template <ImageScorer S>
FunctionScorer erase_scorer(const S& s) {
  return {s.aspect(), [&s](const RasterImage& img) { return static_cast<double>(s.score(img)); }};
}

/// Scorer returning the same value for every image.
inline FunctionScorer constant_scorer(Aspect a, double v) {
  return {a, [v](const RasterImage&) { return v; }};
}

// ---------------------------------------------------------------------------
// Percentile ranking and the 4-level scale
// ---------------------------------------------------------------------------

/// Ascending-rank percentile rank_i / N; tied scores share the mean of the
/// percentiles of the positions they occupy.
inline std::vector<double> rank_to_percentile(std::span<const double> raw) {
  if (raw.empty()) throw std::invalid_argument("rank_to_percentile: empty input");
  const std::size_t n = raw.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && raw[order[j + 1]] == raw[order[i]]) ++j;
    // positions i..j (0-based) hold ranks i+1..j+1
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = mean_rank / static_cast<double>(n);
    i = j + 1;
  }
  return out;
}

inline constexpr double kLevelThresholds[3] = {0.15, 0.7, 0.85};

/// 1 (point-and-shoot) .. 4 (pro); a percentile equal to a threshold belongs
/// to the higher level.
inline int percentile_to_level(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("percentile_to_level: r must lie in [0,1]");
  if (r < kLevelThresholds[0]) return 1;
  if (r < kLevelThresholds[1]) return 2;
  if (r < kLevelThresholds[2]) return 3;
  return 4;
}

// ---------------------------------------------------------------------------
// Scale mapping
// ---------------------------------------------------------------------------

struct ScaleMapping {
  double a = 1.0;
  double b = 0.0;
  bool degenerate = false;

  double operator()(double overall) const { return a * overall + b; }
};

/// Ordinary least squares fit of mean human score against Phi'.
inline ScaleMapping fit_scale_mapping(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("fit_scale_mapping: no pairs");
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pairs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) return {0.0, my, true};
  const double a = sxy / sxx;
  return {a, my - a * mx, false};
}

inline double predicted_level(const ScaleMapping& m, double overall) { return m(overall); }

// ---------------------------------------------------------------------------
// Rater consensus
// ---------------------------------------------------------------------------

struct RatingRecord {
  std::string image_id;
  std::string rater_id;
  double score = 0.0;  // on the [1,4] scale
};

struct ImageConsensus {
  std::string image_id;
  double mean = 0.0;
  double stddev = 0.0;  // population sd of raters around the mean
  std::size_t raters = 0;
};

struct ConsensusReport {
  std::vector<ImageConsensus> images;  // sorted by image id
  double dispersion = 0.0;             // per-image sd averaged over images
};

inline ConsensusReport consensus(std::span<const RatingRecord> records) {
  if (records.empty()) throw std::invalid_argument("consensus: no rating records");
  std::map<std::string, std::vector<double>> by_image;
  for (const auto& r : records) {
    if (!(r.score >= 1.0 && r.score <= 4.0)) {
      throw std::invalid_argument("consensus: score outside [1,4] for image " + r.image_id);
    }
    by_image[r.image_id].push_back(r.score);
  }
  ConsensusReport rep;
  for (const auto& [id, scores] : by_image) {
    const double n = static_cast<double>(scores.size());
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    rep.images.push_back({id, mean, std::sqrt(ss / n), scores.size()});
    rep.dispersion += std::sqrt(ss / n);
  }
  rep.dispersion /= static_cast<double>(rep.images.size());
  return rep;
}

/// Reads `image_id,rater_id,score` rows; a non-numeric first row is a header.
inline std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ratings file " + path.string());
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    RatingRecord r;
    std::string score;
    if (!std::getline(ss, r.image_id, ',') || !std::getline(ss, r.rater_id, ',') || !std::getline(ss, score)) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected image_id,rater_id,score");
    }
    try {
      std::size_t used = 0;
      r.score = std::stod(score, &used);
    } catch (const std::exception&) {
      if (lineno == 1) continue;
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": bad score '" + score + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vphoto
