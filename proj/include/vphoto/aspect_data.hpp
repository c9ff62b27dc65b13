#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vphoto/errors.hpp"
#include "vphoto/filters.hpp"
#include "vphoto/image.hpp"
#include "vphoto/image_io.hpp"
#include "vphoto/learner.hpp"
#include "vphoto/panorama.hpp"
#include "vphoto/rng.hpp"

namespace vphoto {

inline constexpr int kDefaultTrainingSize = 64;
inline constexpr double kDefaultMinAverageSaturation = 0.55;

struct CorpusEntry {
  std::string id;  // stable key (source path or generated name)
  RasterImage image;
};

struct Corpus {
  std::string manifest_id;
  std::vector<CorpusEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

/// Keeps images whose mean HSV saturation reaches the threshold.
inline Corpus filter_corpus_by_saturation(const Corpus& corpus, double min_avg_sat) {
  Corpus out{corpus.manifest_id, {}};
  for (const auto& e : corpus.entries) {
    if (mean_hsv_saturation(e.image) >= min_avg_sat) out.entries.push_back(e);
  }
  if (out.empty() && !corpus.empty()) {
    std::cerr << "warning: saturation gate " << min_avg_sat << " removed every image of corpus '"
              << corpus.manifest_id << "'\n";
  }
  return out;
}

/// Loads every image listed in a path manifest, center-cropped to a square of
/// `size`. Undecodable files are skipped with a warning.
inline Corpus load_corpus(const std::filesystem::path& manifest, int size = kDefaultTrainingSize) {
  Corpus c{manifest.string(), {}};
  for (const auto& p : read_path_manifest(manifest)) {
    try {
      c.entries.push_back({p.filename().string(), center_square(read_image(p), size)});
    } catch (const IoError& e) {
      std::cerr << "warning: skipping " << p << ": " << e.what() << '\n';
    }
  }
  return c;
}

/// Writes `<dir>/NNNNNN.png` and `<dir>/manifest.txt`.
inline void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write corpus manifest in " + dir.string());
  manifest << "# corpus " << corpus.manifest_id << '\n';
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    write_png(dir / name, corpus.entries[i].image);
    manifest << name << "  # " << corpus.entries[i].id << '\n';
  }
}

// ---------------------------------------------------------------------------
// Perturbation datasets
// ---------------------------------------------------------------------------

struct PerturbationBatch {
  std::vector<ParamRange> ranges;  // per parameter dimension
  int count = 1;                   // perturbed copies per image
  bool negate = false;             // sampled strength s is applied as F(-s)
};

struct PerturbationSpec {
  FilterId filter = FilterId::Saturation;
  std::vector<PerturbationBatch> batches;
  double cap = 0.06;

  void validate() const {
    if (!(cap > 0.0)) throw std::invalid_argument("PerturbationSpec: cap must be positive");
    if (batches.empty()) throw std::invalid_argument("PerturbationSpec: no batches");
    const auto dom = parameter_domain(filter);
    for (const auto& b : batches) {
      if (b.count < 1) throw std::invalid_argument("PerturbationSpec: batch count must be >= 1");
      if (b.ranges.size() != dom.dimension()) {
        throw std::invalid_argument("PerturbationSpec: range dimension does not match filter");
      }
      if (b.negate && !dom.negatable) {
        throw std::invalid_argument("PerturbationSpec: filter does not support negation");
      }
      for (std::size_t d = 0; d < b.ranges.size(); ++d) {
        const auto& r = b.ranges[d];
        if (r.min > r.max || !dom.ranges[d].contains(r.min) || !dom.ranges[d].contains(r.max)) {
          throw std::invalid_argument("PerturbationSpec: range outside filter domain");
        }
      }
    }
  }

  int samples_per_image() const {
    int n = 0;
    for (const auto& b : batches) n += b.count;
    return n;
  }

  /// Saturation parameter in (0, 0.8), six copies, similarity capped at 6%.
  static PerturbationSpec saturation_default() {
    return {FilterId::Saturation, {{{{0.0, 0.8}}, 6, false}}, 0.06};
  }

  /// Six under-processed copies with strength in (-max, -0.5max) and three
  /// over-processed copies in (0.5max, max); similarity capped at 20%.
  static PerturbationSpec hdr_default() {
    return {FilterId::Hdr, {{{{0.5, 1.0}}, 6, true}, {{{0.5, 1.0}}, 3, false}}, 0.20};
  }
};

struct Provenance {
  std::string source;  // corpus entry id
  std::string op;      // "original", FilterParams text, or crop window
  std::uint64_t seed = 0;
};

struct LabeledDataset {
  std::vector<TrainingExample> examples;
  std::vector<Provenance> provenance;

  std::size_t size() const { return examples.size(); }
};

/// Algorithm-1 data: each original with score 1 plus perturbed copies scored
/// by similarity to the original. Deterministic given the seed; each sample
/// draws from its own stream keyed by (seed, entry id, batch, sample).
inline LabeledDataset generate_aspect_dataset(const Corpus& corpus, const PerturbationSpec& spec,
                                              std::uint64_t seed) {
  spec.validate();
  const auto dom = parameter_domain(spec.filter);
  LabeledDataset ds;
  for (const auto& entry : corpus.entries) {
    ds.examples.push_back({entry.image, SimilarityScore(1.0)});
    ds.provenance.push_back({entry.id, "original", seed});
    const PreparedFilter prepared(spec.filter, entry.image);
    for (std::size_t b = 0; b < spec.batches.size(); ++b) {
      const auto& batch = spec.batches[b];
      for (int s = 0; s < batch.count; ++s) {
        const std::uint64_t stream = derive_seed(seed, {hash_name(entry.id), b, static_cast<std::uint64_t>(s)});
        Rng rng(stream);
        FilterParams fp{spec.filter, {}};
        for (std::size_t d = 0; d < batch.ranges.size(); ++d) {
          const double v = rng.uniform(batch.ranges[d].min, batch.ranges[d].max);
          if (!dom.ranges[d].contains(v)) {
            throw InvariantViolation("sampled parameter outside filter domain for " + entry.id);
          }
          fp.values.push_back(v);
        }
        RasterImage perturbed = batch.negate ? prepared.negated(fp.values) : prepared.apply(fp.values);
        if (batch.negate) fp.values[0] = -fp.values[0];
        const double delta = mean_abs_diff(entry.image, perturbed);
        ds.examples.push_back({std::move(perturbed), perturbation_score(delta, spec.cap)});
        ds.provenance.push_back({entry.id, fp.to_string(), stream});
      }
    }
  }
  return ds;
}

struct CropSamplingConfig {
  int near_count = 3;  // width fraction in (0.9, 1.0)
  int far_count = 3;   // width fraction in (0.5, 0.9)
  double near_min = 0.9, near_max = 1.0;
  double far_min = 0.5, far_max = 0.9;
  double aspect_min = 0.5, aspect_max = 2.0;  // width / height
  int max_retries = 20;
  int training_size = kDefaultTrainingSize;
};

struct CropGeometry {
  int x, y, w, h;
};

/// Samples a contained crop: width fraction, then aspect ratio, then a
/// uniformly random offset. Empty after `max_retries` infeasible draws.
inline std::optional<CropGeometry> sample_crop(int width, int height, double wmin, double wmax,
                                               const CropSamplingConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const double frac = rng.uniform(wmin, wmax);
    const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
    const int w = std::clamp(static_cast<int>(std::lround(frac * width)), 1, width);
    const int h = static_cast<int>(std::lround(w / aspect));
    if (h < 1 || h > height) continue;
    const int x = static_cast<int>(rng.index(static_cast<std::uint64_t>(width - w + 1)));
    const int y = static_cast<int>(rng.index(static_cast<std::uint64_t>(height - h + 1)));
    return CropGeometry{x, y, w, h};
  }
  return std::nullopt;
}

/// Composition data: each original (score 1) plus two equal batches of random
/// crops scored by area ratio, all resized to the training square.
inline LabeledDataset generate_crop_dataset(const Corpus& corpus, std::uint64_t seed,
                                            const CropSamplingConfig& cfg = {}) {
  LabeledDataset ds;
  const int n = cfg.training_size;
  for (const auto& entry : corpus.entries) {
    const RasterImage& img = entry.image;
    ds.examples.push_back({resize_bilinear(img, n, n), SimilarityScore(1.0)});
    ds.provenance.push_back({entry.id, "original", seed});
    const struct {
      int count;
      double lo, hi;
    } batches[2] = {{cfg.near_count, cfg.near_min, cfg.near_max}, {cfg.far_count, cfg.far_min, cfg.far_max}};
    for (std::size_t b = 0; b < 2; ++b) {
      for (int s = 0; s < batches[b].count; ++s) {
        const std::uint64_t stream = derive_seed(seed, {hash_name(entry.id), b, static_cast<std::uint64_t>(s)});
        Rng rng(stream);
        const auto g = sample_crop(img.width(), img.height(), batches[b].lo, batches[b].hi, cfg, rng);
        if (!g) {
          std::cerr << "warning: no feasible crop for " << entry.id << " after " << cfg.max_retries
                    << " attempts; skipped\n";
          continue;
        }
        const double target = static_cast<double>(g->w) * g->h / (static_cast<double>(img.width()) * img.height());
        ds.examples.push_back({resize_bilinear(crop(img, g->x, g->y, g->w, g->h), n, n), SimilarityScore(target)});
        std::ostringstream op;
        op << "crop=" << g->x << ',' << g->y << ',' << g->w << ',' << g->h;
        ds.provenance.push_back({entry.id, op.str(), stream});
      }
    }
  }
  return ds;
}

/// Directory of PNGs plus `index.csv` (path,target,source,op,seed).
inline void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.csv");
  if (!index) throw IoError("cannot write dataset index in " + dir.string());
  index << "path,target,source,op,seed\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%07zu.png", i);
    write_png(dir / name, ds.examples[i].image);
    const auto& p = ds.provenance[i];
    // `op` may contain commas; quote it.
    index << name << ',' << format_real(ds.examples[i].target.value()) << ',' << p.source << ",\"" << p.op << "\","
          << p.seed << '\n';
  }
}

inline LabeledDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream index(dir / "index.csv");
  if (!index) throw IoError("cannot open dataset index in " + dir.string());
  LabeledDataset ds;
  std::string line;
  std::getline(index, line);  // header
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(",\"", c2 + 1);
    const auto c4 = line.find("\",", c3 + 2);
    if (c1 == std::string::npos || c2 == std::string::npos || c3 == std::string::npos ||
        c4 == std::string::npos) {
      throw InvalidInput("malformed dataset index line: " + line);
    }
    const std::string name = line.substr(0, c1);
    const double target = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    ds.examples.push_back({read_png(dir / name), SimilarityScore(target)});
    ds.provenance.push_back({line.substr(c2 + 1, c3 - c2 - 1), line.substr(c3 + 2, c4 - c3 - 2),
                             std::stoull(line.substr(c4 + 2))});
  }
  return ds;
}

}  // namespace vphoto
