#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vphoto/composition.hpp"
#include "vphoto/dramatic_mask.hpp"
#include "vphoto/enhance.hpp"
#include "vphoto/errors.hpp"
#include "vphoto/image_io.hpp"
#include "vphoto/panorama.hpp"
#include "vphoto/parallel.hpp"
#include "vphoto/scoring.hpp"

namespace vphoto {

struct PipelineConfig {
  int training_size = 64;
  int view_size = 128;
  CropGrid crop_grid;
  std::vector<double> c_values = {0.0, 0.5, 1.0};
  int crops_per_c = 3;
  SearchGrid hdr_grid = SearchGrid::hdr_default();
  SearchGrid saturation_grid = SearchGrid::saturation_default();
  double brighten_amount = kDefaultBrightenAmount;
  JbuParams jbu;
  bool dramatic_from_hdr_stage = false;  // literal reading: mask applied to the HDR stage output
  std::string composition_model = "models/composition.crtm";
  std::string saturation_model = "models/saturation.crtm";
  std::string hdr_model = "models/hdr.crtm";
  std::string overall_model = "models/overall.crtm";
  std::string ensemble = "models/masks/ensemble.json";
  ScaleMapping scale;
  std::uint64_t seed = 1;
  int workers = 1;
  int sweep_points = 0;  // > 0: write a saturation sweep CSV per result

  void validate() const {
    if (training_size < 8 || view_size < 16) throw std::invalid_argument("PipelineConfig: sizes too small");
    if (c_values.empty()) throw std::invalid_argument("PipelineConfig: no composition weights");
    for (double c : c_values) check_composition_weight(c);
    if (crops_per_c < 1) throw std::invalid_argument("PipelineConfig: crops_per_c must be >= 1");
    crop_grid.validate();
    hdr_grid.validate();
    saturation_grid.validate();
    if (hdr_grid.filter != FilterId::Hdr || saturation_grid.filter != FilterId::Saturation) {
      throw std::invalid_argument("PipelineConfig: search grids must target hdr and saturation");
    }
    if (!(brighten_amount >= 0.0 && brighten_amount <= 1.0)) {
      throw std::invalid_argument("PipelineConfig: brighten amount must lie in [0,1]");
    }
    jbu.validate();
  }

  nlohmann::json to_json() const {
    return {{"training_size", training_size},
            {"view_size", view_size},
            {"crop_grid", crop_grid.to_json()},
            {"c_values", c_values},
            {"crops_per_c", crops_per_c},
            {"hdr_grid", hdr_grid.to_json()},
            {"saturation_grid", saturation_grid.to_json()},
            {"brighten_amount", brighten_amount},
            {"jbu", {{"sigma_s", jbu.sigma_s}, {"sigma_r", jbu.sigma_r}, {"radius", jbu.radius}}},
            {"dramatic_from_hdr_stage", dramatic_from_hdr_stage},
            {"models",
             {{"composition", composition_model},
              {"saturation", saturation_model},
              {"hdr", hdr_model},
              {"overall", overall_model},
              {"ensemble", ensemble}}},
            {"scale", {{"a", scale.a}, {"b", scale.b}}},
            {"seed", seed},
            {"workers", workers},
            {"sweep_points", sweep_points}};
  }

  /// Unknown keys are rejected; missing keys keep their defaults. Relative
  /// model paths resolve against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    static const char* kKeys[] = {"training_size", "view_size",       "crop_grid", "c_values",
                                  "crops_per_c",   "hdr_grid",        "saturation_grid", "brighten_amount",
                                  "jbu",           "dramatic_from_hdr_stage", "models", "scale",
                                  "seed",          "workers",         "sweep_points"};
    for (const auto& [key, _] : j.items()) {
      if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) ==
          std::end(kKeys)) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    }
    PipelineConfig c;
    c.training_size = j.value("training_size", c.training_size);
    c.view_size = j.value("view_size", c.view_size);
    if (j.contains("crop_grid")) c.crop_grid = CropGrid::from_json(j["crop_grid"]);
    c.c_values = j.value("c_values", c.c_values);
    c.crops_per_c = j.value("crops_per_c", c.crops_per_c);
    if (j.contains("hdr_grid")) c.hdr_grid = SearchGrid::from_json(j["hdr_grid"]);
    if (j.contains("saturation_grid")) c.saturation_grid = SearchGrid::from_json(j["saturation_grid"]);
    c.brighten_amount = j.value("brighten_amount", c.brighten_amount);
    if (j.contains("jbu")) {
      const auto& b = j["jbu"];
      c.jbu = {b.value("sigma_s", c.jbu.sigma_s), b.value("sigma_r", c.jbu.sigma_r), b.value("radius", c.jbu.radius)};
    }
    c.dramatic_from_hdr_stage = j.value("dramatic_from_hdr_stage", c.dramatic_from_hdr_stage);
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).string();
    };
    if (j.contains("models")) {
      const auto& m = j["models"];
      c.composition_model = m.value("composition", c.composition_model);
      c.saturation_model = m.value("saturation", c.saturation_model);
      c.hdr_model = m.value("hdr", c.hdr_model);
      c.overall_model = m.value("overall", c.overall_model);
      c.ensemble = m.value("ensemble", c.ensemble);
    }
    for (auto* p : {&c.composition_model, &c.saturation_model, &c.hdr_model, &c.overall_model, &c.ensemble}) {
      *p = resolve(*p);
    }
    if (j.contains("scale")) c.scale = {j["scale"].value("a", 1.0), j["scale"].value("b", 0.0), false};
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.sweep_points = j.value("sweep_points", c.sweep_points);
    c.validate();
    return c;
  }

  static PipelineConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("config file not found: " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
  }
};

/// The four aspect scorers used by the pipeline, type-erased.
struct ScorerSet {
  FunctionScorer composition;
  FunctionScorer saturation;
  FunctionScorer hdr;
  FunctionScorer overall;
};

/// Owns loaded models; `scorers()` borrows them.
struct PipelineModels {
  AspectScorer composition;
  AspectScorer saturation;
  AspectScorer hdr;
  AspectScorer overall;
  MaskEnsemble ensemble;

  ScorerSet scorers() const {
    return {erase_scorer(composition), erase_scorer(saturation), erase_scorer(hdr), erase_scorer(overall)};
  }
};

namespace detail {

inline AspectScorer load_scorer(const std::string& path, Aspect want) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifact("missing " + std::string(aspect_name(want)) + " model: " + path);
  }
  AspectScorer s = AspectScorer::load(path);
  if (s.aspect() != want) {
    throw IncompatibleModel(path + " holds a '" + std::string(aspect_name(s.aspect())) + "' scorer, expected '" +
                            std::string(aspect_name(want)) + "'");
  }
  return s;
}

}  // namespace detail

/// Loads and version-checks every artifact before any work starts.
inline PipelineModels load_pipeline_models(const PipelineConfig& cfg) {
  auto comp = detail::load_scorer(cfg.composition_model, Aspect::Composition);
  auto sat = detail::load_scorer(cfg.saturation_model, Aspect::Saturation);
  auto hdr = detail::load_scorer(cfg.hdr_model, Aspect::Hdr);
  auto overall = detail::load_scorer(cfg.overall_model, Aspect::Overall);
  std::filesystem::path ens = cfg.ensemble;
  if (std::filesystem::is_directory(ens)) ens /= "ensemble.json";
  if (!std::filesystem::exists(ens)) throw MissingArtifact("missing mask ensemble: " + ens.string());
  return {std::move(comp), std::move(sat), std::move(hdr), std::move(overall), load_ensemble(ens)};
}

struct Candidate {
  std::string panorama;
  int view = 0;
  ScoredCrop crop;
  double hdr_param = 0.0;
  double saturation_param = 0.5;
  std::size_t snapshot = 0;
  std::string snapshot_id;
  double phi_crop = 0.0;  // of the cropped image
  double phi_hdr = 0.0;   // best HDR-search score
  double phi_sat = 0.0;   // best saturation-search score
  double phi_overall = 0.0;
  double phi_bar = 0.0;
  RasterImage image;

  static constexpr const char* kStages[4] = {"crop", "hdr", "saturation", "dramatic"};

  nlohmann::json to_json() const {
    return {{"panorama", panorama},
            {"view", view},
            {"stages", {kStages[0], kStages[1], kStages[2], kStages[3]}},
            {"crop", crop.to_json()},
            {"hdr", FilterParams{FilterId::Hdr, {hdr_param}}.to_string()},
            {"saturation", FilterParams{FilterId::Saturation, {saturation_param}}.to_string()},
            {"snapshot", snapshot_id},
            {"scores",
             {{"phi_crop", phi_crop},
              {"phi_hdr", phi_hdr},
              {"phi_saturation", phi_sat},
              {"phi_overall", phi_overall},
              {"phi_bar", phi_bar}}}};
  }
};

struct PipelineResult {
  std::vector<Candidate> ranked;
  std::size_t candidates_before_dedupe = 0;
  std::size_t panoramas_processed = 0;
  std::size_t views_processed = 0;
  std::vector<std::string> skipped;
  std::vector<std::pair<std::string, SweepCurves>> sweeps;  // keyed like the result images
};

struct PanoramaInput {
  std::string id;
  std::optional<RasterImage> image;  // in-memory panorama, or
  std::filesystem::path path;        // file to decode
};

namespace detail {

struct ViewOutput {
  std::vector<Candidate> candidates;  // generation order: c, then crop rank
};

inline ViewOutput process_view(const std::string& pano_id, int view_index, const RasterImage& view,
                               const ScorerSet& s, const MaskEnsemble& ensemble, const PipelineConfig& cfg) {
  ViewOutput out;
  CropGrid grid = cfg.crop_grid;
  grid.training_size = cfg.training_size;
  const auto scores = score_windows(view, grid, s.composition, s.overall);
  for (double c : cfg.c_values) {
    const auto top = select_top_k(scores, c, cfg.crops_per_c, grid.iou_threshold);
    for (const auto& sc : top.crops) {
      Candidate cand;
      cand.panorama = pano_id;
      cand.view = view_index;
      cand.crop = sc;
      const RasterImage p1 = crop(view, sc.window.x, sc.window.y, sc.window.w, sc.window.h);
      cand.phi_crop = sc.crop_score;
      const Enhancement e_hdr = optimize_filter_1d(p1, cfg.hdr_grid, s.hdr);
      cand.hdr_param = e_hdr.param;
      cand.phi_hdr = e_hdr.score;
      const Enhancement e_sat = optimize_filter_1d(e_hdr.image, cfg.saturation_grid, s.saturation);
      cand.saturation_param = e_sat.param;
      cand.phi_sat = e_sat.score;
      const RasterImage& mask_input = cfg.dramatic_from_hdr_stage ? e_hdr.image : e_sat.image;
      auto d = best_dramatic(mask_input, ensemble, s.overall, cfg.brighten_amount, cfg.jbu);
      cand.snapshot = d.chosen;
      const auto& snap = ensemble.snapshots[d.chosen];
      cand.snapshot_id = snap.model_id + "@" + std::to_string(snap.step);
      cand.phi_overall = d.scores[d.chosen];
      cand.phi_bar = cfg.scale(cand.phi_overall);
      cand.image = std::move(d.image);
      out.candidates.push_back(std::move(cand));
    }
  }
  return out;
}

}  // namespace detail

/// Project, crop at every composition weight, HDR then saturation search,
/// dramatic mask, keep the Phi'-best candidate per view, rank by Phi'.
inline PipelineResult run_pipeline(const std::vector<PanoramaInput>& panoramas, const ScorerSet& scorers,
                                   const MaskEnsemble& ensemble, const PipelineConfig& cfg) {
  cfg.validate();
  if (ensemble.empty()) throw InvalidState("run_pipeline: mask ensemble is empty");
  PipelineResult res;

  struct ViewTask {
    std::size_t pano;
    int view;
    RasterImage image;
  };
  std::vector<ViewTask> tasks;
  for (std::size_t p = 0; p < panoramas.size(); ++p) {
    const auto& in = panoramas[p];
    try {
      const Panorama pano(in.image ? *in.image : read_image(in.path));
      int v = 0;
      for (auto& img : standard_views(pano, cfg.view_size)) tasks.push_back({p, v++, std::move(img)});
      ++res.panoramas_processed;
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping panorama " << in.id << ": " << e.what() << '\n';
      res.skipped.push_back(in.id);
    }
  }
  res.views_processed = tasks.size();

  const auto outputs = parallel_map(tasks.size(), cfg.workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    return detail::process_view(panoramas[t.pano].id, t.view, t.image, scorers, ensemble, cfg);
  });

  for (const auto& vo : outputs) {
    res.candidates_before_dedupe += vo.candidates.size();
    if (vo.candidates.empty()) continue;
    const auto best = std::max_element(vo.candidates.begin(), vo.candidates.end(),
                                       [](const Candidate& a, const Candidate& b) { return a.phi_overall < b.phi_overall; });
    res.ranked.push_back(*best);
  }
  std::stable_sort(res.ranked.begin(), res.ranked.end(),
                   [](const Candidate& a, const Candidate& b) { return a.phi_overall > b.phi_overall; });

  if (cfg.sweep_points > 1) {
    const std::vector<FunctionScorer> sweep_scorers = {scorers.saturation, scorers.hdr, scorers.composition,
                                                       scorers.overall};
    for (const auto& c : res.ranked) {
      const std::string key = c.panorama + "_v" + std::to_string(c.view);
      res.sweeps.emplace_back(key, sweep_diagnostic(c.image, FilterId::Saturation, cfg.sweep_points, sweep_scorers));
    }
  }
  return res;
}

inline PipelineResult run_pipeline(const std::vector<PanoramaInput>& panoramas, const PipelineModels& models,
                                   const PipelineConfig& cfg) {
  return run_pipeline(panoramas, models.scorers(), models.ensemble, cfg);
}

/// Panorama inputs from a path manifest; ids are file stems.
inline std::vector<PanoramaInput> panorama_inputs(const std::filesystem::path& manifest) {
  std::vector<PanoramaInput> out;
  for (const auto& p : read_path_manifest(manifest)) out.push_back({p.stem().string(), std::nullopt, p});
  return out;
}

// ---------------------------------------------------------------------------
// Manifest and gallery
// ---------------------------------------------------------------------------

inline std::string result_image_name(std::size_t rank, const Candidate& c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu_", rank + 1);
  return std::string(buf) + c.panorama + "_v" + std::to_string(c.view) + ".png";
}

/// One JSON object per line, in rank order.
inline std::string manifest_jsonl(const PipelineResult& res) {
  std::string out;
  for (std::size_t i = 0; i < res.ranked.size(); ++i) {
    auto j = res.ranked[i].to_json();
    j["rank"] = i + 1;
    j["image"] = "images/" + result_image_name(i, res.ranked[i]);
    out += j.dump() + '\n';
  }
  return out;
}

inline std::vector<nlohmann::json> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("missing manifest: " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

namespace detail {

inline std::string html_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Static index page built only from manifest records, sorted by predicted
/// level (stable, so equal levels keep manifest order).
inline std::string render_gallery_html(std::vector<nlohmann::json> records) {
  std::stable_sort(records.begin(), records.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
    return a["scores"]["phi_bar"].get<double>() > b["scores"]["phi_bar"].get<double>();
  });
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>vphoto results</title>\n"
    << "<style>body{font-family:sans-serif}td{padding:4px;vertical-align:top}img{max-width:320px}</style>\n"
    << "</head><body>\n<h1>Ranked results</h1>\n<table>\n"
    << "<tr><th>rank</th><th>image</th><th>source</th><th>crop</th><th>filters</th><th>snapshot</th>"
    << "<th>&Phi;crop</th><th>&Phi;hdr</th><th>&Phi;sat</th><th>&Phi;&prime;</th><th>level</th></tr>\n";
  for (const auto& r : records) {
    const auto& w = r["crop"]["window"];
    const auto& s = r["scores"];
    h << "<tr><td>" << r["rank"].get<int>() << "</td>"
      << "<td><img src=\"" << detail::html_escape(r["image"].get<std::string>()) << "\"></td>"
      << "<td>" << detail::html_escape(r["panorama"].get<std::string>()) << " view " << r["view"].get<int>() << "</td>"
      << "<td>c=" << detail::fixed(r["crop"]["c"].get<double>(), 2) << " (" << w["x"].get<int>() << ","
      << w["y"].get<int>() << ") " << w["w"].get<int>() << "x" << w["h"].get<int>() << "</td>"
      << "<td>" << detail::html_escape(r["hdr"].get<std::string>()) << "<br>"
      << detail::html_escape(r["saturation"].get<std::string>()) << "</td>"
      << "<td>" << detail::html_escape(r["snapshot"].get<std::string>()) << "</td>";
    for (const char* k : {"phi_crop", "phi_hdr", "phi_saturation", "phi_overall", "phi_bar"}) {
      h << "<td>" << detail::fixed(s[k].get<double>(), 4) << "</td>";
    }
    h << "</tr>\n";
  }
  h << "</table>\n</body></html>\n";
  return h.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

/// Regenerates `index.html` from `manifest.jsonl` in `dir`.
inline void regenerate_report(const std::filesystem::path& dir) {
  write_text(dir / "index.html", render_gallery_html(parse_manifest(dir / "manifest.jsonl")));
}

inline nlohmann::json run_summary(const PipelineResult& res, const PipelineConfig& cfg) {
  return {{"panoramas", res.panoramas_processed},
          {"views", res.views_processed},
          {"candidates_before_dedupe", res.candidates_before_dedupe},
          {"survivors", res.ranked.size()},
          {"skipped", res.skipped},
          {"config", cfg.to_json()}};
}

/// Writes images/, manifest.jsonl, summary.json, index.html and, when
/// present, sweeps/*.csv.
inline void emit_gallery(const PipelineResult& res, const PipelineConfig& cfg, const std::filesystem::path& dir) {
  if (res.ranked.empty()) throw InvalidState("emit_gallery: no results");
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
  for (std::size_t i = 0; i < res.ranked.size(); ++i) {
    write_png(dir / "images" / result_image_name(i, res.ranked[i]), res.ranked[i].image);
  }
  write_text(dir / "manifest.jsonl", manifest_jsonl(res));
  write_text(dir / "summary.json", run_summary(res, cfg).dump(2) + '\n');
  if (!res.sweeps.empty()) {
    std::filesystem::create_directories(dir / "sweeps");
    for (const auto& [key, curves] : res.sweeps) curves.write_csv(dir / "sweeps" / (key + "_saturation.csv"));
  }
  regenerate_report(dir);
}

}  // namespace vphoto
