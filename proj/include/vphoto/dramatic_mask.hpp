#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vphoto/convnet.hpp"
#include "vphoto/errors.hpp"
#include "vphoto/filters.hpp"
#include "vphoto/image.hpp"
#include "vphoto/learner.hpp"
#include "vphoto/model_io.hpp"
#include "vphoto/rng.hpp"
#include "vphoto/scoring.hpp"

namespace vphoto {

inline constexpr int kMaskSide = 8;
inline constexpr double kDefaultBrightenAmount = 0.4;
inline constexpr double kDegenerateMaskVariance = 1e-4;
inline constexpr std::uint32_t kGeneratorKind = 1;
inline constexpr std::uint32_t kDiscriminatorKind = 2;

/// 8x8 brightness-modulation mask, cells in [0,1].
struct DramaticMask {
  Plane cells{kMaskSide, kMaskSide};

  DramaticMask() = default;
  explicit DramaticMask(Plane p) : cells(std::move(p)) {
    if (cells.width != kMaskSide || cells.height != kMaskSide) {
      throw std::invalid_argument("DramaticMask: expected an 8x8 plane");
    }
    for (double v : cells.values) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("DramaticMask: cell outside [0,1]");
    }
  }
  static DramaticMask constant(double v) { return DramaticMask(Plane(kMaskSide, kMaskSide, v)); }

  double variance() const {
    double mean = 0.0;
    for (double v : cells.values) mean += v;
    mean /= static_cast<double>(cells.values.size());
    double var = 0.0;
    for (double v : cells.values) var += (v - mean) * (v - mean);
    return var / static_cast<double>(cells.values.size());
  }
};

// ---------------------------------------------------------------------------
// Joint bilateral upsampling
// ---------------------------------------------------------------------------

struct JbuParams {
  double sigma_s = 1.0;  // in low-res cells
  double sigma_r = 0.1;  // in luminance units
  int radius = 1;        // neighborhood half-width in low-res cells

  void validate() const {
    if (!(sigma_s > 0.0) || !(sigma_r > 0.0) || !std::isfinite(sigma_s) || !std::isfinite(sigma_r)) {
      throw std::invalid_argument("jbu_upsample: sigmas must be positive and finite");
    }
    if (radius < 0) throw std::invalid_argument("jbu_upsample: radius must be >= 0");
  }
};

namespace detail {

// Shared body of the joint bilateral and plain spatial upsamplers.
inline Plane gaussian_cell_upsample(const Plane& low, int out_w, int out_h, const JbuParams& p, const Plane* guide_hi,
                                    const Plane* guide_low) {
  Plane out(out_w, out_h);
  const double inv_s = 1.0 / (2.0 * p.sigma_s * p.sigma_s);
  const double inv_r = 1.0 / (2.0 * p.sigma_r * p.sigma_r);
  for (int y = 0; y < out_h; ++y) {
    const double ly = (y + 0.5) * low.height / out_h - 0.5;
    const int cy = std::clamp(static_cast<int>(std::lround(ly)), 0, low.height - 1);
    for (int x = 0; x < out_w; ++x) {
      const double lx = (x + 0.5) * low.width / out_w - 0.5;
      const int cx = std::clamp(static_cast<int>(std::lround(lx)), 0, low.width - 1);
      double acc = 0.0, total = 0.0, acc_s = 0.0, total_s = 0.0;
      for (int qy = std::max(0, cy - p.radius); qy <= std::min(low.height - 1, cy + p.radius); ++qy) {
        for (int qx = std::max(0, cx - p.radius); qx <= std::min(low.width - 1, cx + p.radius); ++qx) {
          const double d2 = (qx - lx) * (qx - lx) + (qy - ly) * (qy - ly);
          const double ws = std::exp(-d2 * inv_s);
          double w = ws;
          if (guide_hi) {
            const double dl = guide_hi->at(x, y) - guide_low->at(qx, qy);
            w *= std::exp(-dl * dl * inv_r);
          }
          acc += w * low.at(qx, qy);
          total += w;
          acc_s += ws * low.at(qx, qy);
          total_s += ws;
        }
      }
      // Range weights can all underflow for tiny sigma_r; fall back to spatial.
      out.at(x, y) = total > 0.0 ? acc / total : acc_s / total_s;
    }
  }
  return out;
}

}  // namespace detail

/// Upsamples a low-res mask to the guide's size. Each output pixel averages
/// the (2r+1)^2 low-res cells around its nearest cell, weighted by spatial
/// distance in cell units and by the luminance difference between the guide
/// pixel and the guide's downsampled luminance at that cell.
inline Plane jbu_upsample(const Plane& mask, const RasterImage& guide, const JbuParams& params = {}) {
  params.validate();
  const Plane hi = luminance(guide);
  const Plane low = resize_bilinear(hi, mask.width, mask.height);
  return detail::gaussian_cell_upsample(mask, guide.width(), guide.height(), params, &hi, &low);
}

inline Plane jbu_upsample(const DramaticMask& mask, const RasterImage& guide, double sigma_s, double sigma_r) {
  return jbu_upsample(mask.cells, guide, JbuParams{sigma_s, sigma_r, 1});
}

/// The range-free counterpart of jbu_upsample.
inline Plane spatial_upsample(const Plane& mask, int out_w, int out_h, const JbuParams& params = {}) {
  params.validate();
  return detail::gaussian_cell_upsample(mask, out_w, out_h, params, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Mask application
// ---------------------------------------------------------------------------

enum class MaskUpsampling { Bilinear, JointBilateral };

/// out = M + up(mask) * (Brighten(M) - M), clamped.
inline RasterImage apply_upsampled_mask(const RasterImage& img, const Plane& up, double brighten_amount) {
  if (up.width != img.width() || up.height != img.height()) {
    throw std::invalid_argument("apply_mask: upsampled mask size mismatch");
  }
  RasterImage out = img;
  auto o = out.data();
  const double keep = 1.0 - brighten_amount;
  for (std::size_t p = 0; p < up.values.size(); ++p) {
    const double m = up.values[p];
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = o[3 * p + c];
      const double bright = 1.0 - (1.0 - v) * keep;
      o[3 * p + c] = clamp01(v + m * (bright - v));
    }
  }
  return out;
}

inline RasterImage apply_mask(const RasterImage& img, const DramaticMask& mask,
                              double brighten_amount = kDefaultBrightenAmount,
                              MaskUpsampling mode = MaskUpsampling::Bilinear, const JbuParams& jbu = {}) {
  if (!(brighten_amount >= 0.0 && brighten_amount <= 1.0)) {
    throw std::invalid_argument("apply_mask: brighten amount must lie in [0,1]");
  }
  const Plane up = mode == MaskUpsampling::Bilinear ? resize_bilinear(mask.cells, img.width(), img.height())
                                                    : jbu_upsample(mask.cells, img, jbu);
  return apply_upsampled_mask(img, up, brighten_amount);
}

// ---------------------------------------------------------------------------
// Negative sampling with the brightness filter bank
// ---------------------------------------------------------------------------

struct BankEntry {
  FilterId filter;
  std::vector<ParamRange> subranges;  // signed strengths; a negative range means the negated effect
};

/// The six brightness-altering filters, each chosen with equal chance; within
/// a filter, each listed sub-range is chosen with equal chance.
inline const std::vector<BankEntry>& negative_bank() {
  static const std::vector<BankEntry> bank = {
      {FilterId::TuneBrightness, {{0.10, 0.45}, {0.55, 0.90}}},
      {FilterId::TuneContrast, {{0.10, 0.45}, {0.55, 0.90}}},
      {FilterId::Hdr, {{0.10, 1.00}, {-1.00, -0.10}}},
      {FilterId::Vignette, {{0.00, 0.35}, {0.60, 0.70}}},
      {FilterId::Curve, {{-kCurveMaxOffset, kCurveMaxOffset}}},
      {FilterId::FlattenBrightness, {{0.10, 1.00}, {-1.00, -0.10}}},
  };
  return bank;
}

inline FilterParams sample_negative_params(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_name("negative")}));
  const auto& bank = negative_bank();
  const auto& entry = bank[rng.index(bank.size())];
  FilterParams fp{entry.filter, {}};
  if (entry.filter == FilterId::Curve) {
    for (int i = 0; i < 6; ++i) fp.values.push_back(rng.uniform(-kCurveMaxOffset, kCurveMaxOffset));
  } else {
    const auto& r = entry.subranges[rng.index(entry.subranges.size())];
    fp.values.push_back(rng.uniform(r.min, r.max));
  }
  return fp;
}

struct NegativeSample {
  RasterImage image;
  FilterParams params;  // signed; negative strength = negated effect
};

inline NegativeSample sample_negative(const RasterImage& img, std::uint64_t seed) {
  FilterParams fp = sample_negative_params(seed);
  RasterImage out = apply_filter(fp, img);
  return {std::move(out), std::move(fp)};
}

// ---------------------------------------------------------------------------
// Generator / discriminator
// ---------------------------------------------------------------------------

struct GanConfig {
  int image_size = 32;
  std::vector<int> channels = {8, 16, 16};
  int batch_size = 8;
  double lr_generator = 0.02;
  double lr_discriminator = 0.04;
  double brighten_amount = kDefaultBrightenAmount;

  ConvNetSpec generator_spec() const { return {image_size, 3, channels, kMaskSide * kMaskSide}; }
  ConvNetSpec discriminator_spec() const { return {image_size, 3, channels, 1}; }

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("GanConfig: batch size must be >= 1");
    if (!(lr_generator > 0.0) || !(lr_discriminator > 0.0)) {
      throw std::invalid_argument("GanConfig: learning rates must be positive");
    }
  }

  nlohmann::json to_json() const {
    return {{"image_size", image_size},
            {"channels", channels},
            {"batch_size", batch_size},
            {"lr_generator", lr_generator},
            {"lr_discriminator", lr_discriminator},
            {"brighten_amount", brighten_amount}};
  }
};

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// Generator forward pass on an image (resized to the network input).
inline DramaticMask generate_mask(const ConvNet& generator, const RasterImage& img) {
  const int n = generator.spec().input_size;
  const RasterImage in = img.width() == n && img.height() == n ? img : resize_bilinear(img, n, n);
  const auto logits = generator.forward(to_planar(in));
  Plane p(kMaskSide, kMaskSide);
  for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = sigmoid(logits[i]);
  return DramaticMask(std::move(p));
}

inline double discriminator_probability(const ConvNet& discriminator, const RasterImage& img) {
  return sigmoid(discriminator.forward(to_planar(img))[0]);
}

/// Mean binary cross-entropy over reals (label 1) and fakes (label 0).
/// Accumulates the parameter gradient when `grad` is non-empty.
inline double discriminator_loss(const ConvNet& d, const std::vector<RasterImage>& reals,
                                 const std::vector<RasterImage>& fakes, std::span<double> grad = {}) {
  const double inv = 1.0 / static_cast<double>(reals.size() + fakes.size());
  double loss = 0.0;
  ConvNet::Cache cache;
  auto visit = [&](const RasterImage& img, bool real) {
    const double z = d.forward(to_planar(img), grad.empty() ? nullptr : &cache)[0];
    loss += (real ? softplus(-z) : softplus(z)) * inv;
    if (!grad.empty()) {
      const double dz = (real ? sigmoid(z) - 1.0 : sigmoid(z)) * inv;
      d.backward(cache, std::span<const double>(&dz, 1), grad);
    }
  };
  for (const auto& r : reals) visit(r, true);
  for (const auto& f : fakes) visit(f, false);
  return loss;
}

struct GeneratorPass {
  double loss = 0.0;
  std::vector<RasterImage> fakes;
  std::vector<DramaticMask> masks;
};

/// Non-saturating generator loss mean(-log D(O(M'))) over the negatives,
/// masks upsampled bilinearly. Accumulates G's gradient when `grad` is
/// non-empty; D is held fixed.
inline GeneratorPass generator_loss(const ConvNet& g, const ConvNet& d, const std::vector<RasterImage>& negatives,
                                    double brighten_amount, std::span<double> grad = {}) {
  GeneratorPass pass;
  const double inv = 1.0 / static_cast<double>(negatives.size());
  std::vector<double> dscratch(grad.empty() ? 0 : d.params().size());
  for (const auto& neg : negatives) {
    const int n = neg.width();
    ConvNet::Cache gcache, dcache;
    const auto logits = g.forward(to_planar(neg), &gcache);
    Plane mask(kMaskSide, kMaskSide);
    for (std::size_t i = 0; i < mask.values.size(); ++i) mask.values[i] = sigmoid(logits[i]);
    const Plane up = resize_bilinear(mask, n, n);
    RasterImage fake = apply_upsampled_mask(neg, up, brighten_amount);
    const double z = d.forward(to_planar(fake), grad.empty() ? nullptr : &dcache)[0];
    pass.loss += softplus(-z) * inv;
    if (!grad.empty()) {
      const double dz = (sigmoid(z) - 1.0) * inv;
      const auto dfake = d.backward(dcache, std::span<const double>(&dz, 1), dscratch);
      // d fake / d up = Brighten(M') - M' per channel (the clamp never binds).
      const std::size_t np = static_cast<std::size_t>(n) * n;
      Plane dup(n, n);
      auto src = neg.data();
      for (std::size_t p = 0; p < np; ++p) {
        double acc = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = src[3 * p + c];
          acc += dfake[c * np + p] * ((1.0 - (1.0 - v) * (1.0 - brighten_amount)) - v);
        }
        dup.values[p] = acc;
      }
      // Transpose of the separable bilinear upsample.
      const auto xt = linear_resample_taps(kMaskSide, n);
      const auto yt = linear_resample_taps(kMaskSide, n);
      std::vector<double> dlogits(mask.values.size(), 0.0);
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double gv = dup.at(x, y);
          for (const auto& ty : yt[static_cast<std::size_t>(y)]) {
            for (const auto& tx : xt[static_cast<std::size_t>(x)]) {
              dlogits[static_cast<std::size_t>(ty.index * kMaskSide + tx.index)] += gv * ty.weight * tx.weight;
            }
          }
        }
      }
      for (std::size_t i = 0; i < dlogits.size(); ++i) {
        dlogits[i] *= mask.values[i] * (1.0 - mask.values[i]);
      }
      g.backward(gcache, dlogits, grad);
    }
    pass.fakes.push_back(std::move(fake));
    pass.masks.push_back(DramaticMask(std::move(mask)));
  }
  return pass;
}

struct GanPair {
  ConvNet generator;
  ConvNet discriminator;
  std::int64_t step = 0;

  static GanPair seeded(const GanConfig& cfg, std::uint64_t seed) {
    return {ConvNet::seeded(cfg.generator_spec(), derive_seed(seed, {hash_name("G")})),
            ConvNet::seeded(cfg.discriminator_spec(), derive_seed(seed, {hash_name("D")})), 0};
  }
};

struct GanStepResult {
  double d_loss = 0.0;
  double g_loss = 0.0;
  std::vector<DramaticMask> masks;
};

/// One adversarial update: D separates reals from masked negatives, then G
/// minimizes the non-saturating loss against the updated D. There is no
/// pixel-reconstruction term.
inline GanStepResult gan_train_step(GanPair& gan, const std::vector<RasterImage>& reals,
                                    const std::vector<RasterImage>& negatives, const GanConfig& cfg) {
  cfg.validate();
  if (reals.empty() || negatives.empty()) throw std::invalid_argument("gan_train_step: empty batch");
  for (const auto* batch : {&reals, &negatives}) {
    for (const auto& img : *batch) {
      if (img.width() != cfg.image_size || img.height() != cfg.image_size) {
        throw std::invalid_argument("gan_train_step: batch images must be at the training size");
      }
    }
  }
  GanStepResult res;

  const GeneratorPass before = generator_loss(gan.generator, gan.discriminator, negatives, cfg.brighten_amount);
  std::vector<double> dgrad(gan.discriminator.params().size(), 0.0);
  res.d_loss = discriminator_loss(gan.discriminator, reals, before.fakes, dgrad);

  std::vector<double> ggrad(gan.generator.params().size(), 0.0);
  auto dparams = gan.discriminator.params();
  std::vector<double> d_next(dparams.begin(), dparams.end());
  for (std::size_t i = 0; i < d_next.size(); ++i) d_next[i] -= cfg.lr_discriminator * dgrad[i];
  std::copy(d_next.begin(), d_next.end(), dparams.begin());

  GeneratorPass after = generator_loss(gan.generator, gan.discriminator, negatives, cfg.brighten_amount, ggrad);
  res.g_loss = after.loss;
  if (!std::isfinite(res.d_loss) || !std::isfinite(res.g_loss)) {
    std::ostringstream msg;
    msg << "GAN training diverged at step " << gan.step << ": d_loss=" << res.d_loss << " g_loss=" << res.g_loss;
    throw TrainingDiverged(msg.str());
  }
  auto gparams = gan.generator.params();
  for (std::size_t i = 0; i < gparams.size(); ++i) gparams[i] -= cfg.lr_generator * ggrad[i];
  res.masks = std::move(before.masks);
  ++gan.step;
  return res;
}

/// Max relative error of the discriminator loss gradient against central
/// differences on a seeded subset of parameters.
inline double discriminator_gradient_check(const ConvNet& d, const std::vector<RasterImage>& reals,
                                           const std::vector<RasterImage>& fakes, double epsilon,
                                           std::size_t max_params = 100, std::uint64_t seed = 11) {
  std::vector<double> grad(d.params().size(), 0.0);
  discriminator_loss(d, reals, fakes, grad);
  ConvNet probe = d;
  double worst = 0.0;
  for (std::size_t j : gradient_check_indices(grad.size(), max_params, seed)) {
    const double orig = probe.params()[j];
    probe.params()[j] = orig + epsilon;
    const double lp = discriminator_loss(probe, reals, fakes);
    probe.params()[j] = orig - epsilon;
    const double lm = discriminator_loss(probe, reals, fakes);
    probe.params()[j] = orig;
    worst = std::max(worst, gradient_relative_error(grad[j], (lp - lm) / (2.0 * epsilon)));
  }
  return worst;
}

inline double generator_gradient_check(const ConvNet& g, const ConvNet& d, const std::vector<RasterImage>& negatives,
                                       double brighten_amount, double epsilon, std::size_t max_params = 100,
                                       std::uint64_t seed = 13) {
  std::vector<double> grad(g.params().size(), 0.0);
  generator_loss(g, d, negatives, brighten_amount, grad);
  ConvNet probe = g;
  double worst = 0.0;
  for (std::size_t j : gradient_check_indices(grad.size(), max_params, seed)) {
    const double orig = probe.params()[j];
    probe.params()[j] = orig + epsilon;
    const double lp = generator_loss(probe, d, negatives, brighten_amount).loss;
    probe.params()[j] = orig - epsilon;
    const double lm = generator_loss(probe, d, negatives, brighten_amount).loss;
    probe.params()[j] = orig;
    worst = std::max(worst, gradient_relative_error(grad[j], (lp - lm) / (2.0 * epsilon)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Snapshot ensembles
// ---------------------------------------------------------------------------

struct MaskSnapshot {
  ConvNet generator;
  std::string model_id;
  std::int64_t step = 0;
  int contribution = 0;
};

struct MaskEnsemble {
  std::vector<MaskSnapshot> snapshots;

  bool empty() const { return snapshots.empty(); }
  std::size_t size() const { return snapshots.size(); }
};

struct EnsembleConfig {
  int n_models = 3;
  int steps = 400;
  int snapshot_interval = 100;
  int keep_top = 5;
  std::uint64_t seed = 1;
  GanConfig gan;
  MaskUpsampling vote_upsampling = MaskUpsampling::JointBilateral;
  JbuParams jbu;
  double degenerate_variance = kDegenerateMaskVariance;

  void validate() const {
    if (n_models < 1 || steps < 1 || snapshot_interval < 1 || keep_top < 1) {
      throw std::invalid_argument("EnsembleConfig: counts must be positive");
    }
    gan.validate();
  }
};

struct GanRunLog {
  std::vector<double> d_loss;
  std::vector<double> g_loss;
  double min_mask = 1.0;
  double max_mask = 0.0;
};

/// Trains one generator/discriminator pair and snapshots the generator every
/// `snapshot_interval` steps. Images are resized to the GAN input size.
inline std::vector<MaskSnapshot> train_gan_run(const std::vector<RasterImage>& corpus, const EnsembleConfig& cfg,
                                               int model_index, GanRunLog* log = nullptr) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("train_gan_run: empty corpus");
  const int n = cfg.gan.image_size;
  std::vector<RasterImage> small;
  small.reserve(corpus.size());
  for (const auto& img : corpus) small.push_back(img.width() == n && img.height() == n ? img : resize_bilinear(img, n, n));

  const std::uint64_t model_seed = derive_seed(cfg.seed, {hash_name("gan-model"), static_cast<std::uint64_t>(model_index)});
  GanPair gan = GanPair::seeded(cfg.gan, model_seed);
  const std::string model_id = "g" + std::to_string(model_index);
  std::vector<MaskSnapshot> snaps;
  for (int step = 1; step <= cfg.steps; ++step) {
    Rng rng(derive_seed(model_seed, {hash_name("batch"), static_cast<std::uint64_t>(step)}));
    std::vector<RasterImage> reals, negs;
    for (int b = 0; b < cfg.gan.batch_size; ++b) {
      reals.push_back(small[rng.index(small.size())]);
      const auto& src = small[rng.index(small.size())];
      negs.push_back(sample_negative(src, rng.next()).image);
    }
    const auto res = gan_train_step(gan, reals, negs, cfg.gan);
    if (log) {
      log->d_loss.push_back(res.d_loss);
      log->g_loss.push_back(res.g_loss);
      for (const auto& m : res.masks) {
        for (double v : m.cells.values) {
          log->min_mask = std::min(log->min_mask, v);
          log->max_mask = std::max(log->max_mask, v);
        }
      }
    }
    if (step % cfg.snapshot_interval == 0) snaps.push_back({gan.generator, model_id, step, 0});
  }
  return snaps;
}

struct DramaticResult {
  RasterImage image;
  std::size_t chosen = 0;
  std::vector<double> scores;  // Phi' per snapshot, ensemble order
};

/// Applies every snapshot's mask (JBU-upsampled against the image) and keeps
/// the output the overall scorer likes best; ties go to the earlier snapshot.
template <ImageScorer S>
DramaticResult best_dramatic(const RasterImage& img, const MaskEnsemble& ensemble, const S& overall,
                             double brighten_amount = kDefaultBrightenAmount, const JbuParams& jbu = {},
                             MaskUpsampling mode = MaskUpsampling::JointBilateral) {
  if (ensemble.empty()) throw InvalidState("best_dramatic: mask ensemble is empty");
  DramaticResult best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const DramaticMask mask = generate_mask(ensemble.snapshots[i].generator, img);
    RasterImage out = apply_mask(img, mask, brighten_amount, mode, jbu);
    const double s = overall.score(out);
    best.scores.push_back(s);
    if (s > best_score) {
      best_score = s;
      best.chosen = i;
      best.image = std::move(out);
    }
  }
  return best;
}

/// Degeneracy check plus Phi'-vote pruning. Each validation image votes for
/// the snapshot whose output maximizes Phi'; the `keep_top` snapshots with
/// the most votes survive, ordered by non-increasing contribution.
template <ImageScorer S>
MaskEnsemble prune_snapshots(std::vector<MaskSnapshot> candidates, const std::vector<RasterImage>& validation,
                             const S& overall, const EnsembleConfig& cfg) {
  if (candidates.empty()) throw InvalidState("prune_snapshots: no snapshots");
  std::vector<MaskSnapshot> live;
  for (auto& s : candidates) {
    double var = 0.0;
    for (const auto& v : validation) var += generate_mask(s.generator, v).variance();
    var /= std::max<std::size_t>(1, validation.size());
    if (var >= cfg.degenerate_variance) live.push_back(s);
  }
  if (live.empty()) {
    std::cerr << "warning: every mask snapshot is degenerate (variance < " << cfg.degenerate_variance
              << "); keeping the best available\n";
    live = std::move(candidates);
  }
  MaskEnsemble pool{live};
  for (auto& s : pool.snapshots) s.contribution = 0;
  for (const auto& v : validation) {
    const auto r = best_dramatic(v, pool, overall, cfg.gan.brighten_amount, cfg.jbu, cfg.vote_upsampling);
    ++pool.snapshots[r.chosen].contribution;
  }
  std::stable_sort(pool.snapshots.begin(), pool.snapshots.end(),
                   [](const MaskSnapshot& a, const MaskSnapshot& b) { return a.contribution > b.contribution; });
  if (pool.snapshots.size() > static_cast<std::size_t>(cfg.keep_top)) {
    pool.snapshots.resize(static_cast<std::size_t>(cfg.keep_top));
  }
  return pool;
}

/// Trains `n_models` independent runs (concurrently), collects their
/// snapshots in (model, step) order and prunes them by Phi' contribution.
template <ImageScorer S>
MaskEnsemble train_ensemble(const std::vector<RasterImage>& corpus, const std::vector<RasterImage>& validation,
                            const S& overall, const EnsembleConfig& cfg, std::vector<GanRunLog>* logs = nullptr) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("train_ensemble: empty corpus");
  std::vector<std::future<std::pair<std::vector<MaskSnapshot>, GanRunLog>>> jobs;
  for (int m = 0; m < cfg.n_models; ++m) {
    jobs.push_back(std::async(std::launch::async, [&corpus, &cfg, m] {
      GanRunLog log;
      auto snaps = train_gan_run(corpus, cfg, m, &log);
      return std::make_pair(std::move(snaps), std::move(log));
    }));
  }
  std::vector<MaskSnapshot> all;
  for (auto& j : jobs) {
    auto [snaps, log] = j.get();
    all.insert(all.end(), snaps.begin(), snaps.end());
    if (logs) logs->push_back(std::move(log));
  }
  return prune_snapshots(std::move(all), validation.empty() ? corpus : validation, overall, cfg);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void save_network(const std::filesystem::path& path, const ConvNet& net, std::uint32_t kind,
                         nlohmann::json meta = nlohmann::json::object()) {
  meta["kind"] = kind == kGeneratorKind ? "generator" : "discriminator";
  write_model_file(path, net.to_file(kind), meta);
}

inline ConvNet load_network(const std::filesystem::path& path, std::uint32_t kind) {
  return ConvNet::from_file(read_model_file(path), kind);
}

/// Writes one snapshot file per member and `ensemble.json`, a list of
/// {path, model_id, step, contribution}.
inline void save_ensemble(const MaskEnsemble& ens, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& s : ens.snapshots) {
    const std::string name = s.model_id + "_step" + std::to_string(s.step) + ".crtm";
    save_network(dir / name, s.generator, kGeneratorKind, {{"model_id", s.model_id}, {"step", s.step}});
    manifest.push_back({{"path", name}, {"model_id", s.model_id}, {"step", s.step}, {"contribution", s.contribution}});
  }
  std::ofstream out(dir / "ensemble.json");
  if (!out) throw IoError("cannot write ensemble manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

/// Accepts the manifest file or the directory holding `ensemble.json`.
inline MaskEnsemble load_ensemble(std::filesystem::path manifest) {
  if (std::filesystem::is_directory(manifest)) manifest /= "ensemble.json";
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open mask ensemble manifest " + manifest.string());
  const auto js = nlohmann::json::parse(in);
  MaskEnsemble ens;
  for (const auto& e : js) {
    std::filesystem::path p = e.at("path").get<std::string>();
    if (p.is_relative()) p = manifest.parent_path() / p;
    ens.snapshots.push_back({load_network(p, kGeneratorKind), e.at("model_id").get<std::string>(),
                             e.at("step").get<std::int64_t>(), e.value("contribution", 0)});
  }
  if (ens.empty()) throw InvalidState("mask ensemble manifest " + manifest.string() + " lists no snapshots");
  return ens;
}

}  // namespace vphoto
