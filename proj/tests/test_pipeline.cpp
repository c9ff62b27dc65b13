#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"
#include "vphoto/aspect_data.hpp"
#include "vphoto/pipeline.hpp"
#include "vphoto/synthetic.hpp"

using namespace vphoto;

namespace {

const std::string kCli = VPHOTO_CLI;

double mean_luma(const RasterImage& img) {
  double s = 0;
  for (double v : luminance(img).values) s += v;
  return s / static_cast<double>(img.pixel_count());
}

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.view_size = 64;
  cfg.training_size = 32;
  return cfg;
}

MaskEnsemble one_snapshot_ensemble() {
  GanConfig g;
  g.image_size = 16;
  g.channels = {4, 8};
  return MaskEnsemble{{{GanPair::seeded(g, 3).generator, "g0", 1, 0}}};
}

ScorerSet constant_scorers() {
  return {constant_scorer(Aspect::Composition, 0.5), constant_scorer(Aspect::Saturation, 0.5),
          constant_scorer(Aspect::Hdr, 0.5), constant_scorer(Aspect::Overall, 0.5)};
}

ScorerSet luma_scorers() {
  return {{Aspect::Composition, mean_luma},
          {Aspect::Saturation, mean_hsv_saturation},
          {Aspect::Hdr, [](const RasterImage& im) { return -std::abs(mean_luma(im) - 0.5); }},
          {Aspect::Overall, mean_luma}};
}

std::vector<PanoramaInput> panoramas(int n) {
  std::vector<PanoramaInput> v;
  for (int i = 0; i < n; ++i) v.push_back({"p" + std::to_string(i), synthetic_panorama(256, 10 + i), {}});
  return v;
}

std::string read_all(const std::filesystem::path& p) { return testutil::slurp(p); }

}  // namespace

TEST(Pipeline, ConstantScorersOnePanorama) {
  const auto res = run_pipeline(panoramas(1), constant_scorers(), one_snapshot_ensemble(), fast_config());
  EXPECT_EQ(res.panoramas_processed, 1u);
  EXPECT_EQ(res.views_processed, 6u);
  EXPECT_EQ(res.candidates_before_dedupe, 6u * 3u * 3u);
  ASSERT_EQ(res.ranked.size(), 6u);
  for (const auto& c : res.ranked) {
    // Ties keep the lowest grid values and the first candidate of each view.
    EXPECT_EQ(c.hdr_param, 0.0);
    EXPECT_EQ(c.saturation_param, 0.4);
    EXPECT_EQ(c.crop.c, 0.0);
    EXPECT_EQ(c.snapshot_id, "g0@1");
  }
  // Stable sort keeps view order on ties.
  for (int v = 0; v < 6; ++v) EXPECT_EQ(res.ranked[v].view, v);
}

TEST(Pipeline, CandidateImageIsTheRecordedChain) {
  auto cfg = fast_config();
  const auto ens = one_snapshot_ensemble();
  const auto s = luma_scorers();
  const auto res = run_pipeline(panoramas(1), s, ens, cfg);
  const Panorama pano(synthetic_panorama(256, 10));
  const auto views = standard_views(pano, cfg.view_size);
  for (const auto& c : res.ranked) {
    const auto& w = c.crop.window;
    const auto p1 = crop(views[static_cast<std::size_t>(c.view)], w.x, w.y, w.w, w.h);
    const auto p2 = saturation(hdr(p1, c.hdr_param), c.saturation_param);
    const auto p3 = apply_mask(p2, generate_mask(ens.snapshots[0].generator, p2), cfg.brighten_amount,
                               MaskUpsampling::JointBilateral, cfg.jbu);
    EXPECT_EQ(p3, c.image);
    EXPECT_EQ(c.phi_overall, mean_luma(c.image));
  }
  for (std::size_t i = 1; i < res.ranked.size(); ++i) EXPECT_GE(res.ranked[i - 1].phi_overall, res.ranked[i].phi_overall);
}

TEST(Pipeline, DeterministicAcrossWorkerCounts) {
  auto cfg = fast_config();
  const auto a = run_pipeline(panoramas(2), luma_scorers(), one_snapshot_ensemble(), cfg);
  cfg.workers = 3;
  const auto b = run_pipeline(panoramas(2), luma_scorers(), one_snapshot_ensemble(), cfg);
  EXPECT_EQ(manifest_jsonl(a), manifest_jsonl(b));
  EXPECT_EQ(a.ranked.size(), 12u);
}

TEST(Pipeline, UnreadablePanoramaIsSkipped) {
  auto in = panoramas(1);
  in.push_back({"bad", RasterImage(30, 30), {}});  // not 2:1
  const auto res = run_pipeline(in, constant_scorers(), one_snapshot_ensemble(), fast_config());
  EXPECT_EQ(res.panoramas_processed, 1u);
  ASSERT_EQ(res.skipped.size(), 1u);
  EXPECT_EQ(res.skipped[0], "bad");
  EXPECT_THROW(run_pipeline(in, constant_scorers(), MaskEnsemble{}, fast_config()), InvalidState);
}

TEST(Gallery, DisplayedLevelFollowsScaleAndOrder) {
  testutil::TempDir dir("gallery");
  auto cfg = fast_config();
  cfg.scale = {2.0, 1.0, false};
  const auto res = run_pipeline(panoramas(1), luma_scorers(), one_snapshot_ensemble(), cfg);
  emit_gallery(res, cfg, dir.path());
  const auto recs = parse_manifest(dir.path() / "manifest.jsonl");
  ASSERT_EQ(recs.size(), res.ranked.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& s = recs[i]["scores"];
    EXPECT_DOUBLE_EQ(s["phi_bar"].get<double>(), 2.0 * s["phi_overall"].get<double>() + 1.0);
    EXPECT_EQ(recs[i]["rank"].get<int>(), static_cast<int>(i) + 1);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / recs[i]["image"].get<std::string>()));
  }

  const std::string html = read_all(dir.path() / "index.html");
  regenerate_report(dir.path());
  EXPECT_EQ(read_all(dir.path() / "index.html"), html);

  // Rows follow phi_bar; a negative slope reverses the rank order.
  auto flipped = recs;
  for (auto& r : flipped) {
    r["scores"]["phi_bar"] = -r["scores"]["phi_overall"].get<double>();
  }
  const auto rev = render_gallery_html(flipped);
  std::size_t prev = std::string::npos;
  for (const auto& r : recs) {
    const auto pos = rev.find(r["image"].get<std::string>());
    ASSERT_NE(pos, std::string::npos);
    if (prev != std::string::npos && r["scores"]["phi_overall"] != recs.front()["scores"]["phi_overall"]) {
      EXPECT_LT(pos, prev);
    }
    prev = pos;
  }
  // The displayed level column is the fixed-point phi_bar.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "<td>%.4f</td></tr>", recs[0]["scores"]["phi_bar"].get<double>());
  EXPECT_NE(html.find(buf), std::string::npos);
}

TEST(Config, UnknownKeyAndMissingFile) {
  EXPECT_THROW(PipelineConfig::from_json(nlohmann::json{{"view_sise", 64}}), std::invalid_argument);
  EXPECT_THROW(PipelineConfig::load("/nonexistent/cfg.json"), MissingArtifact);
  const auto c = PipelineConfig::from_json(nlohmann::json{{"models", {{"hdr", "m/h.crtm"}}}, {"seed", 9}}, "/base");
  EXPECT_EQ(c.hdr_model, "/base/m/h.crtm");
  EXPECT_EQ(c.seed, 9u);
  const auto back = PipelineConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Config, MissingEnsembleIsNamed) {
  testutil::TempDir dir("cfg");
  for (auto [name, aspect] : {std::pair{"composition", Aspect::Composition}, {"saturation", Aspect::Saturation},
                              {"hdr", Aspect::Hdr}, {"overall", Aspect::Overall}}) {
    AspectScorer(aspect, MlpModel({static_cast<int>(kFeatureLength), 1}), 32)
        .save(dir.path() / (std::string(name) + ".crtm"));
  }
  nlohmann::json j = {{"models",
                       {{"composition", "composition.crtm"},
                        {"saturation", "saturation.crtm"},
                        {"hdr", "hdr.crtm"},
                        {"overall", "overall.crtm"},
                        {"ensemble", "no_masks"}}}};
  std::ofstream(dir.path() / "cfg.json") << j.dump();
  const auto cfg = PipelineConfig::load(dir.path() / "cfg.json");
  EXPECT_THROW(load_pipeline_models(cfg), MissingArtifact);

  std::ofstream(dir.path() / "panos.txt") << "x.png\n";
  const auto log = dir.path() / "log.txt";
  const int code = testutil::run_command(kCli + " run --config " + (dir.path() / "cfg.json").string() +
                                             " --panoramas " + (dir.path() / "panos.txt").string() + " --out " +
                                             (dir.path() / "out").string(),
                                         log);
  EXPECT_EQ(code, 2);
  const auto text = read_all(log);
  EXPECT_NE(text.find("mask ensemble"), std::string::npos) << text;
  EXPECT_NE(text.find("no_masks"), std::string::npos) << text;

  // A model of the wrong aspect is rejected too.
  for (const char* ext : {".crtm", ".crtm.json"}) {
    std::filesystem::copy_file(dir.path() / (std::string("hdr") + ext), dir.path() / (std::string("saturation") + ext),
                               std::filesystem::copy_options::overwrite_existing);
  }
  EXPECT_THROW(load_pipeline_models(cfg), IncompatibleModel);
}

TEST(Cli, GenDataCountsAndSweepMatchesEnhance) {
  testutil::TempDir dir("cli");
  const auto d = dir.path();
  ASSERT_EQ(testutil::run_command(kCli + " synth --out " + (d / "corpus").string() + " --count 10 --size 32 --seed 4",
                                  d / "synth.log"),
            0)
      << read_all(d / "synth.log");
  ASSERT_EQ(testutil::run_command(kCli + " gen-data --aspect saturation --corpus " +
                                      (d / "corpus" / "manifest.txt").string() + " --out " + (d / "ds").string() +
                                      " --size 32 --seed 1",
                                  d / "gen.log"),
            0)
      << read_all(d / "gen.log");
  EXPECT_EQ(load_dataset(d / "ds").size(), 70u);

  AspectScorer(Aspect::Saturation, MlpModel::seeded({static_cast<int>(kFeatureLength), 6, 1}, 12), 32)
      .save(d / "sat.crtm");
  const auto img = (d / "corpus" / "000003.png").string();
  ASSERT_TRUE(std::filesystem::exists(img)) << img;
  ASSERT_EQ(testutil::run_command(kCli + " enhance --image " + img + " --filter saturation --model " +
                                      (d / "sat.crtm").string(),
                                  d / "enh.log"),
            0)
      << read_all(d / "enh.log");
  const auto enh = nlohmann::json::parse(read_all(d / "enh.log"));
  ASSERT_EQ(testutil::run_command(kCli + " sweep --image " + img +
                                      " --filter saturation --grid 0.4,0.5,0.6,0.7,0.8,0.9 --model " +
                                      (d / "sat.crtm").string() + " --out " + (d / "s.csv").string(),
                                  d / "sweep.log"),
            0)
      << read_all(d / "sweep.log");
  std::istringstream csv(read_all(d / "s.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "param,score_saturation");
  double best_param = 0, best = -1e300;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    const double p = std::stod(line.substr(0, comma)), s = std::stod(line.substr(comma + 1));
    if (s > best) {
      best = s;
      best_param = p;
    }
  }
  EXPECT_NEAR(best_param, enh["param"].get<double>(), 1e-12);
}

TEST(Cli, ParseErrorsExitTwo) {
  testutil::TempDir dir("cli_err");
  EXPECT_EQ(testutil::run_command(kCli + " run --config", dir.path() / "a.log"), 2);
  EXPECT_EQ(testutil::run_command(kCli + " enhance --image /nonexistent.png --filter saturation --model x.crtm",
                                  dir.path() / "b.log"),
            2);
}
