// vphoto command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vphoto/aspect_data.hpp"
#include "vphoto/composition.hpp"
#include "vphoto/dramatic_mask.hpp"
#include "vphoto/enhance.hpp"
#include "vphoto/image_io.hpp"
#include "vphoto/learner.hpp"
#include "vphoto/pipeline.hpp"
#include "vphoto/scoring.hpp"
#include "vphoto/synthetic.hpp"

namespace fs = std::filesystem;
using namespace vphoto;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

AspectScorer require_scorer(const std::string& path, std::optional<Aspect> want = std::nullopt) {
  if (!fs::exists(path)) throw MissingArtifact("missing model: " + path);
  AspectScorer s = AspectScorer::load(path);
  if (want && s.aspect() != *want) {
    throw IncompatibleModel(path + " is a '" + std::string(aspect_name(s.aspect())) + "' scorer, expected '" +
                            std::string(aspect_name(*want)) + "'");
  }
  return s;
}

RasterImage require_image(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifact("missing image: " + path);
  return read_image(path);
}

MaskEnsemble require_ensemble(const std::string& path) {
  fs::path p = path;
  if (fs::is_directory(p)) p /= "ensemble.json";
  if (!fs::exists(p)) throw MissingArtifact("missing mask ensemble: " + p.string());
  return load_ensemble(p);
}

Corpus require_corpus(const std::string& manifest, int size) {
  if (!fs::exists(manifest)) throw MissingArtifact("missing corpus manifest: " + manifest);
  return load_corpus(manifest, size);
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int count = 200;
  int size = 64;
  int panoramas = 0;
  int pano_width = 256;
  std::uint64_t seed = 1;
  int first_index = 0;
};

void run_synth(const SynthArgs& a) {
  fs::create_directories(a.out);
  if (a.count > 0) {
    save_corpus(professional_corpus(a.count, a.size, a.seed, {}, a.first_index), a.out);
    std::cout << "wrote " << a.count << " images and manifest.txt to " << a.out << '\n';
  }
  if (a.panoramas > 0) {
    std::ofstream manifest(fs::path(a.out) / "panoramas.txt");
    for (int i = 0; i < a.panoramas; ++i) {
      const std::string name = "pano" + std::to_string(i) + ".png";
      write_png(fs::path(a.out) / name, synthetic_panorama(a.pano_width, derive_seed(a.seed, {hash_name(name)})));
      manifest << name << '\n';
    }
    std::cout << "wrote " << a.panoramas << " panoramas and panoramas.txt to " << a.out << '\n';
  }
}

// --- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string manifest;
  std::string out;
  int size = kDefaultTrainingSize;
  double min_saturation = kDefaultMinAverageSaturation;
};

void run_ingest(const IngestArgs& a) {
  const Corpus all = require_corpus(a.manifest, a.size);
  const Corpus kept = filter_corpus_by_saturation(all, a.min_saturation);
  save_corpus(kept, a.out);
  std::cout << "kept " << kept.size() << " of " << all.size() << " images (mean saturation >= " << a.min_saturation
            << ")\n";
}

// --- gen-data --------------------------------------------------------------

struct GenDataArgs {
  std::string aspect;
  std::string corpus;
  std::string out;
  int size = kDefaultTrainingSize;
  std::uint64_t seed = 1;
  int variants = 4;
};

void run_gen_data(const GenDataArgs& a) {
  const Aspect aspect = parse_aspect(a.aspect);
  const Corpus corpus = require_corpus(a.corpus, a.size);
  LabeledDataset ds;
  switch (aspect) {
    case Aspect::Saturation: ds = generate_aspect_dataset(corpus, PerturbationSpec::saturation_default(), a.seed); break;
    case Aspect::Hdr: ds = generate_aspect_dataset(corpus, PerturbationSpec::hdr_default(), a.seed); break;
    case Aspect::Composition: {
      CropSamplingConfig cfg;
      cfg.training_size = a.size;
      ds = generate_crop_dataset(corpus, a.seed, cfg);
      break;
    }
    case Aspect::Overall: ds = overall_dataset(corpus, a.variants, a.seed); break;
  }
  save_dataset(ds, a.out);
  std::ofstream(fs::path(a.out) / "aspect.txt") << aspect_name(aspect) << '\n';
  std::cout << "wrote " << ds.size() << " examples to " << a.out << '\n';
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string aspect;
  std::string data;
  std::string out;
  TrainConfig cfg;
  std::string hidden = "64";
  int input_size = kDefaultTrainingSize;
};

void run_train(TrainArgs a) {
  const Aspect aspect = parse_aspect(a.aspect);
  if (!fs::exists(fs::path(a.data) / "index.csv")) throw MissingArtifact("missing dataset index: " + a.data);
  a.cfg.hidden.clear();
  for (double h : parse_list(a.hidden)) a.cfg.hidden.push_back(static_cast<int>(h));
  const LabeledDataset ds = load_dataset(a.data);
  const auto report = train_features(featurize(ds.examples), a.cfg);
  const AspectScorer scorer(aspect, report.model, a.input_size);
  if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  scorer.save(a.out, {{"train", a.cfg.to_json()},
                      {"dataset", a.data},
                      {"dataset_hash", dataset_hash(ds.examples)},
                      {"final_loss", report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()}});
  std::cout << "trained " << aspect_name(aspect) << " scorer on " << ds.size() << " examples, final loss "
            << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()) << " -> " << a.out << '\n';
}

// --- train-mask ------------------------------------------------------------

struct TrainMaskArgs {
  std::string corpus;
  std::string validation;
  std::string overall;
  std::string out;
  EnsembleConfig cfg;
};

void run_train_mask(const TrainMaskArgs& a) {
  const AspectScorer overall = require_scorer(a.overall, Aspect::Overall);
  const Corpus corpus = require_corpus(a.corpus, a.cfg.gan.image_size);
  std::vector<RasterImage> images, validation;
  for (const auto& e : corpus.entries) images.push_back(e.image);
  if (!a.validation.empty()) {
    for (const auto& e : require_corpus(a.validation, kDefaultTrainingSize).entries) validation.push_back(e.image);
  } else {
    const Corpus full = require_corpus(a.corpus, kDefaultTrainingSize);
    for (const auto& e : full.entries) validation.push_back(e.image);
  }
  std::vector<GanRunLog> logs;
  const MaskEnsemble ens = train_ensemble(images, validation, overall, a.cfg, &logs);
  save_ensemble(ens, a.out);
  for (std::size_t m = 0; m < logs.size(); ++m) {
    std::cout << "model g" << m << ": final d_loss " << logs[m].d_loss.back() << ", g_loss " << logs[m].g_loss.back()
              << '\n';
  }
  std::cout << "kept " << ens.size() << " snapshots -> " << (fs::path(a.out) / "ensemble.json").string() << '\n';
}

// --- crop ------------------------------------------------------------------

struct CropArgs {
  std::string image;
  std::string composition;
  std::string overall;
  std::string out;
  double c = 0.5;
  int k = 3;
};

void run_crop(const CropArgs& a) {
  const RasterImage img = require_image(a.image);
  const AspectScorer comp = require_scorer(a.composition, Aspect::Composition);
  const AspectScorer overall = require_scorer(a.overall, Aspect::Overall);
  CropGrid grid;
  grid.training_size = comp.input_size();
  const auto res = search_crops(img, a.c, a.k, grid, comp, overall);
  if (!a.out.empty()) fs::create_directories(a.out);
  for (std::size_t i = 0; i < res.crops.size(); ++i) {
    const auto& sc = res.crops[i];
    std::cout << sc.to_json().dump() << '\n';
    if (!a.out.empty()) {
      write_png(fs::path(a.out) / ("crop" + std::to_string(i + 1) + ".png"),
                crop(img, sc.window.x, sc.window.y, sc.window.w, sc.window.h));
    }
  }
  if (res.short_count) std::cerr << "note: only " << res.crops.size() << " windows survived suppression\n";
}

// --- enhance / sweep -------------------------------------------------------

SearchGrid grid_for(const std::string& filter, const std::string& values) {
  const FilterId f = parse_filter_name(filter);
  if (!values.empty()) {
    SearchGrid g{f, parse_list(values)};
    g.validate();
    return g;
  }
  if (f == FilterId::Saturation) return SearchGrid::saturation_default();
  if (f == FilterId::Hdr) return SearchGrid::hdr_default();
  throw std::invalid_argument("no default search grid for filter '" + filter + "'");
}

struct EnhanceArgs {
  std::string image;
  std::string filter;
  std::string model;
  std::string grid;
  std::string out;
};

void run_enhance(const EnhanceArgs& a) {
  const RasterImage img = require_image(a.image);
  const AspectScorer scorer = require_scorer(a.model);
  const auto res = optimize_filter_1d(img, grid_for(a.filter, a.grid), scorer);
  if (!a.out.empty()) write_png(a.out, res.image);
  nlohmann::json j = {{"filter", a.filter}, {"param", res.param}, {"score", res.score}, {"trace", res.trace}};
  std::cout << j.dump() << '\n';
}

struct SweepArgs {
  std::string image;
  std::string filter;
  int points = 21;
  std::string grid;
  std::vector<std::string> models;
  std::string out;
};

void run_sweep(const SweepArgs& a) {
  const RasterImage img = require_image(a.image);
  std::vector<AspectScorer> owned;
  for (const auto& m : a.models) owned.push_back(require_scorer(m));
  std::vector<FunctionScorer> scorers;
  for (const auto& s : owned) scorers.push_back(erase_scorer(s));
  const SearchGrid grid = a.grid.empty() && a.points > 0
                              ? SearchGrid::linspace(parse_filter_name(a.filter),
                                                     parameter_domain(parse_filter_name(a.filter)).ranges[0].min,
                                                     parameter_domain(parse_filter_name(a.filter)).ranges[0].max,
                                                     a.points)
                              : grid_for(a.filter, a.grid);
  const auto curves = sweep_diagnostic(img, grid, scorers);
  curves.write_csv(a.out);
  std::cout << "wrote " << grid.values.size() << " rows to " << a.out << '\n';
}

// --- dramatic --------------------------------------------------------------

struct DramaticArgs {
  std::string image;
  std::string ensemble;
  std::string overall;
  std::string out;
  double brighten = kDefaultBrightenAmount;
};

void run_dramatic(const DramaticArgs& a) {
  const RasterImage img = require_image(a.image);
  const MaskEnsemble ens = require_ensemble(a.ensemble);
  const AspectScorer overall = require_scorer(a.overall, Aspect::Overall);
  const auto res = best_dramatic(img, ens, overall, a.brighten);
  write_png(a.out, res.image);
  const auto& s = ens.snapshots[res.chosen];
  std::cout << nlohmann::json{{"snapshot", s.model_id + "@" + std::to_string(s.step)},
                              {"score", res.scores[res.chosen]},
                              {"scores", res.scores}}
                   .dump()
            << '\n';
}

// --- run / report ----------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string panoramas;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> ensemble;
};

void run_run(const RunArgs& a) {
  PipelineConfig cfg = PipelineConfig::load(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (a.ensemble) cfg.ensemble = *a.ensemble;
  if (!fs::exists(a.panoramas)) throw MissingArtifact("missing panorama manifest: " + a.panoramas);
  const PipelineModels models = load_pipeline_models(cfg);
  const auto res = run_pipeline(panorama_inputs(a.panoramas), models, cfg);
  if (res.ranked.empty()) throw InvalidInput("no panorama produced a candidate");
  emit_gallery(res, cfg, a.out);
  std::cout << "panoramas " << res.panoramas_processed << ", views " << res.views_processed << ", candidates "
            << res.candidates_before_dedupe << ", survivors " << res.ranked.size() << " -> " << a.out << '\n';
}

void run_report(const std::string& dir) {
  regenerate_report(dir);
  std::cout << "wrote " << (fs::path(dir) / "index.html").string() << '\n';
}

// --- rank / fit-scale ------------------------------------------------------

struct RankArgs {
  std::string images;
  std::string overall;
  std::string scale;
};

void run_rank(const RankArgs& a) {
  const AspectScorer overall = require_scorer(a.overall, Aspect::Overall);
  if (!fs::exists(a.images)) throw MissingArtifact("missing image manifest: " + a.images);
  const auto paths = read_path_manifest(a.images);
  if (paths.empty()) throw InvalidInput("image manifest is empty");
  ScaleMapping scale;
  if (!a.scale.empty()) {
    std::ifstream in(a.scale);
    if (!in) throw MissingArtifact("missing scale mapping: " + a.scale);
    const auto j = nlohmann::json::parse(in);
    scale = {j.at("a").get<double>(), j.at("b").get<double>(), j.value("degenerate", false)};
  }
  std::vector<double> raw;
  for (const auto& p : paths) raw.push_back(overall.score(read_image(p)));
  const auto pct = rank_to_percentile(raw);
  std::vector<std::size_t> order(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return raw[x] > raw[y]; });
  std::cout << "path,phi_overall,percentile,level,phi_bar\n";
  for (std::size_t i : order) {
    std::cout << paths[i].string() << ',' << format_real(raw[i]) << ',' << format_real(pct[i]) << ','
              << percentile_to_level(pct[i]) << ',' << format_real(scale(raw[i])) << '\n';
  }
}

struct FitScaleArgs {
  std::string ratings;
  std::string scores;
  std::string out;
};

void run_fit_scale(const FitScaleArgs& a) {
  if (!fs::exists(a.ratings)) throw MissingArtifact("missing ratings: " + a.ratings);
  if (!fs::exists(a.scores)) throw MissingArtifact("missing scores: " + a.scores);
  const auto ratings = read_ratings_csv(a.ratings);
  const auto cons = consensus(ratings);
  std::map<std::string, double> phi;
  std::ifstream in(a.scores);
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    try {
      phi[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      // header row
    }
  }
  std::vector<std::pair<double, double>> pairs;
  for (const auto& img : cons.images) {
    if (auto it = phi.find(img.image_id); it != phi.end()) pairs.emplace_back(it->second, img.mean);
  }
  if (pairs.empty()) throw InvalidInput("no image ids shared between ratings and scores");
  const ScaleMapping m = fit_scale_mapping(pairs);
  if (m.degenerate) std::cerr << "warning: all scores identical; mapping is constant\n";
  const nlohmann::json j = {{"a", m.a}, {"b", m.b}, {"degenerate", m.degenerate}, {"pairs", pairs.size()},
                            {"rater_dispersion", cons.dispersion}};
  if (!a.out.empty()) std::ofstream(a.out) << j.dump(2) << '\n';
  std::cout << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual landscape photographer: scorers, crop/filter search, dramatic masks, full pipeline"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic professional-style images and panoramas");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--count", synth.count, "Number of square images");
  c_synth->add_option("--size", synth.size, "Square image size");
  c_synth->add_option("--first-index", synth.first_index, "Index of the first generated image");
  c_synth->add_option("--panoramas", synth.panoramas, "Number of panoramas");
  c_synth->add_option("--pano-width", synth.pano_width, "Panorama width (height is half)");
  c_synth->add_option("--seed", synth.seed, "Seed");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Build a corpus from images, keeping saturated ones");
  c_ingest->add_option("--manifest", ingest.manifest, "Text file listing image paths")->required();
  c_ingest->add_option("--out", ingest.out, "Corpus output directory")->required();
  c_ingest->add_option("--size", ingest.size, "Square training size");
  c_ingest->add_option("--min-saturation", ingest.min_saturation, "Minimum mean HSV saturation");

  GenDataArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a labeled dataset for one aspect");
  c_gen->add_option("--aspect", gen.aspect, "composition|saturation|hdr|overall")->required();
  c_gen->add_option("--corpus", gen.corpus, "Corpus manifest")->required();
  c_gen->add_option("--out", gen.out, "Dataset directory")->required();
  c_gen->add_option("--size", gen.size, "Square training size");
  c_gen->add_option("--seed", gen.seed, "Seed");
  c_gen->add_option("--variants", gen.variants, "Degraded variants per image (overall only)");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train an aspect or overall scorer");
  c_train->add_option("--aspect", train.aspect, "composition|saturation|hdr|overall")->required();
  c_train->add_option("--data", train.data, "Dataset directory")->required();
  c_train->add_option("--out", train.out, "Model file")->required();
  c_train->add_option("--epochs", train.cfg.epochs, "Epochs");
  c_train->add_option("--lr", train.cfg.learning_rate, "Learning rate");
  c_train->add_option("--batch", train.cfg.batch_size, "Batch size");
  c_train->add_option("--hidden", train.hidden, "Hidden layer widths, comma separated");
  c_train->add_option("--weight-decay", train.cfg.weight_decay, "L2 coefficient");
  c_train->add_option("--seed", train.cfg.seed, "Seed");
  c_train->add_option("--input-size", train.input_size, "Square size images are resized to");

  TrainMaskArgs tmask;
  auto* c_tmask = app.add_subcommand("train-mask", "Train the dramatic-mask GAN ensemble");
  c_tmask->add_option("--corpus", tmask.corpus, "Corpus manifest")->required();
  c_tmask->add_option("--validation", tmask.validation, "Validation corpus manifest (default: the corpus)");
  c_tmask->add_option("--overall", tmask.overall, "Overall scorer model")->required();
  c_tmask->add_option("--out", tmask.out, "Ensemble directory")->required();
  c_tmask->add_option("--models", tmask.cfg.n_models, "Independent runs");
  c_tmask->add_option("--steps", tmask.cfg.steps, "Steps per run");
  c_tmask->add_option("--interval", tmask.cfg.snapshot_interval, "Snapshot interval");
  c_tmask->add_option("--keep", tmask.cfg.keep_top, "Snapshots kept after the vote");
  c_tmask->add_option("--seed", tmask.cfg.seed, "Seed");
  c_tmask->add_option("--brighten", tmask.cfg.gan.brighten_amount, "Brighten amount");

  CropArgs cropa;
  auto* c_crop = app.add_subcommand("crop", "Search crops with the hybrid composition score");
  c_crop->add_option("--image", cropa.image, "Input image")->required();
  c_crop->add_option("--composition", cropa.composition, "Composition model")->required();
  c_crop->add_option("--overall", cropa.overall, "Overall model")->required();
  c_crop->add_option("--c", cropa.c, "Composition weight in [0,1]");
  c_crop->add_option("--k", cropa.k, "Number of crops");
  c_crop->add_option("--out", cropa.out, "Directory for crop PNGs");

  EnhanceArgs enh;
  auto* c_enh = app.add_subcommand("enhance", "1-d parameter search for one filter");
  c_enh->add_option("--image", enh.image, "Input image")->required();
  c_enh->add_option("--filter", enh.filter, "saturation|hdr")->required();
  c_enh->add_option("--model", enh.model, "Matching aspect model")->required();
  c_enh->add_option("--grid", enh.grid, "Comma-separated grid (default: the filter's grid)");
  c_enh->add_option("--out", enh.out, "Output PNG");

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Score a filter sweep with several models");
  c_sweep->add_option("--image", sweep.image, "Input image")->required();
  c_sweep->add_option("--filter", sweep.filter, "Filter name")->required();
  c_sweep->add_option("--points", sweep.points, "Evenly spaced points over the domain");
  c_sweep->add_option("--grid", sweep.grid, "Explicit comma-separated grid");
  c_sweep->add_option("--model", sweep.models, "Model file (repeatable)")->required();
  c_sweep->add_option("--out", sweep.out, "CSV path")->required();

  DramaticArgs dram;
  auto* c_dram = app.add_subcommand("dramatic", "Apply the best dramatic mask from an ensemble");
  c_dram->add_option("--image", dram.image, "Input image")->required();
  c_dram->add_option("--ensemble", dram.ensemble, "Ensemble manifest or directory")->required();
  c_dram->add_option("--overall", dram.overall, "Overall model")->required();
  c_dram->add_option("--out", dram.out, "Output PNG")->required();
  c_dram->add_option("--brighten", dram.brighten, "Brighten amount");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Full pipeline over a panorama collection");
  c_run->add_option("--config", run.config, "JSON config")->required();
  c_run->add_option("--panoramas", run.panoramas, "Panorama manifest")->required();
  c_run->add_option("--out", run.out, "Output directory")->required();
  c_run->add_option("--seed", run.seed, "Override the config seed");
  c_run->add_option("--workers", run.workers, "Worker threads");
  c_run->add_option("--ensemble", run.ensemble, "Override the ensemble path");

  RankArgs rank;
  auto* c_rank = app.add_subcommand("rank", "Rank images by the overall score");
  c_rank->add_option("--images", rank.images, "Image manifest")->required();
  c_rank->add_option("--overall", rank.overall, "Overall model")->required();
  c_rank->add_option("--scale", rank.scale, "Scale mapping JSON from fit-scale");

  FitScaleArgs fit;
  auto* c_fit = app.add_subcommand("fit-scale", "Fit the level mapping from human ratings");
  c_fit->add_option("--ratings", fit.ratings, "CSV image_id,rater_id,score")->required();
  c_fit->add_option("--scores", fit.scores, "CSV image_id,phi_overall")->required();
  c_fit->add_option("--out", fit.out, "Output JSON");

  std::string report_dir;
  auto* c_report = app.add_subcommand("report", "Regenerate index.html from a run's manifest");
  c_report->add_option("--dir", report_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*c_synth) run_synth(synth);
    if (*c_ingest) run_ingest(ingest);
    if (*c_gen) run_gen_data(gen);
    if (*c_train) run_train(train);
    if (*c_tmask) run_train_mask(tmask);
    if (*c_crop) run_crop(cropa);
    if (*c_enh) run_enhance(enh);
    if (*c_sweep) run_sweep(sweep);
    if (*c_dram) run_dramatic(dram);
    if (*c_run) run_run(run);
    if (*c_rank) run_rank(rank);
    if (*c_fit) run_fit_scale(fit);
    if (*c_report) run_report(report_dir);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IncompatibleModel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
