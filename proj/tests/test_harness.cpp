#include <gtest/gtest.h>

#include <png.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_support.hpp"
#include "vidfeat/divergence.hpp"
#include "vidfeat/pipeline.hpp"
#include "vidfeat/report.hpp"
#include "vidfeat/sequence_io.hpp"
#include "vidfeat/synth.hpp"

using namespace vidfeat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("vidfeat_harness_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_ppm(const fs::path& p, int w, int h, const std::vector<std::uint8_t>& rgb) {
  std::ofstream out(p, std::ios::binary);
  out << "P6\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

void write_png_rgb(const fs::path& p, int w, int h, const std::vector<std::uint8_t>& rgb) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  ASSERT_TRUE(png_image_write_to_file(&img, p.c_str(), 0, rgb.data(), 0, nullptr));
}

std::vector<GrayFrame> static_frames(int n, int w = 160, int h = 120) {
  const GrayFrame base = random_texture(w, h, 3, 16);
  std::vector<GrayFrame> frames(static_cast<std::size_t>(n), base);
  for (int i = 0; i < n; ++i) frames[static_cast<std::size_t>(i)].index = i;
  return frames;
}

PipelineConfig config_for(MaskMode mode) {
  PipelineConfig cfg;
  cfg.n_octaves = 3;
  cfg.mask.mode = mode;
  cfg.detector.threshold = 30;
  return cfg;
}

bool same_features(const std::vector<Feature>& a, const std::vector<Feature>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].kp == b[i].kp) || !(a[i].desc == b[i].desc)) return false;
  }
  return true;
}

}  // namespace

// --- sequence IO -------------------------------------------------------------

TEST(SequenceIo, NumericOrderingAndIndices) {
  const auto d = temp_dir("order");
  for (int v : {10, 2, 1}) write_pgm(d / ("frame" + std::to_string(v) + ".pgm"), GrayFrame(8, 8, static_cast<std::uint8_t>(v)));
  write_pgm(d / "zzz.pgm", GrayFrame(8, 8, 200));
  std::ofstream(d / "notes.txt") << "ignored";
  const auto seq = load_sequence(d);
  ASSERT_EQ(seq.size(), 4u);
  const int expected[] = {1, 2, 10, 200};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(seq[static_cast<std::size_t>(i)].at(0, 0), expected[i]);
    EXPECT_EQ(seq[static_cast<std::size_t>(i)].index, i);
  }
}

TEST(SequenceIo, MixedDimensionsNameTheFile) {
  const auto d = temp_dir("mixed");
  write_pgm(d / "000.pgm", GrayFrame(8, 8));
  write_pgm(d / "001.pgm", GrayFrame(9, 8));
  try {
    load_sequence(d);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("001.pgm"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_sequence(temp_dir("empty")), std::runtime_error);
  std::ofstream(d / "002.pgm") << "P5\n8 8\n255\n";  // truncated
  EXPECT_THROW(read_image(d / "002.pgm"), std::runtime_error);
}

TEST(SequenceIo, ColourInputBecomesLuma) {
  const auto d = temp_dir("colour");
  const std::vector<std::uint8_t> rgb{255, 0, 0, 0, 255, 0, 0, 0, 255, 100, 100, 100};
  write_ppm(d / "a.ppm", 2, 2, rgb);
  write_png_rgb(d / "b.png", 2, 2, rgb);
  for (const char* name : {"a.ppm", "b.png"}) {
    const GrayFrame f = read_image(d / name);
    ASSERT_EQ(f.width, 2);
    EXPECT_NEAR(f.at(0, 0), 0.299 * 255, 1.0) << name;
    EXPECT_NEAR(f.at(1, 0), 0.587 * 255, 1.0) << name;
    EXPECT_NEAR(f.at(0, 1), 0.114 * 255, 1.0) << name;
    EXPECT_NEAR(f.at(1, 1), 100, 1.0) << name;
  }
  std::ofstream(d / "c.pgm") << "P2\n2 1\n15\n0 15\n";
  const GrayFrame ascii = read_image(d / "c.pgm");
  EXPECT_EQ(ascii.at(0, 0), 0);
  EXPECT_EQ(ascii.at(1, 0), 255);
}

TEST(SequenceIo, WriteSequenceRoundTrips) {
  const auto d = temp_dir("roundtrip");
  std::vector<GrayFrame> frames{fixtures::noise_frame(20, 10, 1), fixtures::noise_frame(20, 10, 2)};
  write_sequence(d, frames);
  EXPECT_TRUE(fs::exists(d / "000.pgm"));
  const auto back = load_sequence(d);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(same_pixels(back[1], frames[1]));
}

// --- pipeline ------------------------------------------------------------------

TEST(Pipeline, ModeNoneIsFullDetection) {
  const auto frames = static_frames(3);
  const auto res = run_pipeline(frames, config_for(MaskMode::None));
  ASSERT_EQ(res.reports.size(), 3u);
  for (const auto& r : res.reports) {
    EXPECT_EQ(r.coverage, 1.0);
    EXPECT_EQ(r.n_propagated, 0u);
    EXPECT_EQ(r.t_mask_ms, 0.0);
    EXPECT_GT(r.n_detected, 0u);
  }
  EXPECT_TRUE(same_features(res.features[0], extract_features(frames[0], config_for(MaskMode::None))));
}

TEST(Pipeline, StaticSceneIntensityMaskIsEmpty) {
  const auto frames = static_frames(5);
  const auto res = run_pipeline(frames, config_for(MaskMode::Intensity));
  EXPECT_EQ(res.reports[0].coverage, 1.0);
  for (std::size_t n = 1; n < frames.size(); ++n) {
    EXPECT_EQ(res.reports[n].coverage, 0.0);
    EXPECT_EQ(res.reports[n].n_detected, 0u);
    EXPECT_EQ(res.reports[n].n_propagated, res.features[0].size());
    EXPECT_TRUE(same_features(res.features[n], res.features[0]));
    for (const auto& f : res.features[n]) {
      EXPECT_EQ(f.origin, Origin::Propagated);
      EXPECT_EQ(f.age, static_cast<int>(n));
    }
  }
}

TEST(Pipeline, ForcedFullMaskMatchesModeNone) {
  const auto seq = synth_sequence(preset_scene("moving", 160, 120, 4, 2));
  auto forced = config_for(MaskMode::Intensity);
  forced.mask.force_full = true;
  const auto a = run_pipeline(seq.frames, config_for(MaskMode::None));
  const auto b = run_pipeline(seq.frames, forced);
  for (std::size_t n = 0; n < seq.frames.size(); ++n) EXPECT_TRUE(same_features(a.features[n], b.features[n]));
}

TEST(Pipeline, AccountingAndTimingsAreConsistent) {
  const auto seq = synth_sequence(preset_scene("moving", 160, 120, 6, 4));
  for (auto mode : {MaskMode::None, MaskMode::Intensity, MaskMode::Binning, MaskMode::Temporal}) {
    auto cfg = config_for(mode);
    cfg.gop.delta = 3;
    const auto res = run_pipeline(seq.frames, cfg);
    for (std::size_t n = 0; n < res.reports.size(); ++n) {
      const auto& r = res.reports[n];
      EXPECT_EQ(r.frame, static_cast<int>(n));
      EXPECT_EQ(r.n_detected + r.n_propagated, r.n_total) << to_string(mode);
      EXPECT_EQ(r.n_total, res.features[n].size());
      EXPECT_GE(r.coverage, 0.0);
      EXPECT_LE(r.coverage, 1.0);
      for (double t : {r.t_pyramid_ms, r.t_mask_ms, r.t_detect_ms, r.t_describe_ms, r.t_total_ms, r.wall_ms})
        EXPECT_GE(t, 0.0);
      EXPECT_LE(r.t_pyramid_ms + r.t_mask_ms + r.t_detect_ms + r.t_describe_ms, r.t_total_ms + 1e-6);
    }
  }
}

TEST(Pipeline, TemporalModeRedetectsOnGopBoundaries) {
  const auto seq = synth_sequence(preset_scene("moving", 160, 120, 7, 4));
  auto cfg = config_for(MaskMode::Temporal);
  cfg.gop.delta = 3;
  const auto res = run_pipeline(seq.frames, cfg);
  for (std::size_t n = 0; n < res.reports.size(); ++n) {
    const bool gop_start = n % 3 == 0;
    EXPECT_EQ(res.reports[n].n_propagated == 0, gop_start) << n;
    EXPECT_EQ(res.reports[n].coverage, gop_start ? 1.0 : 0.0);
  }
}

TEST(Pipeline, DeterministicFeatures) {
  const auto seq = synth_sequence(preset_scene("moving", 160, 120, 4, 9));
  for (auto mode : {MaskMode::Intensity, MaskMode::Binning}) {
    const auto a = run_pipeline(seq.frames, config_for(mode));
    auto threaded = config_for(mode);
    threaded.threads = 3;
    const auto b = run_pipeline(seq.frames, threaded);
    for (std::size_t n = 0; n < seq.frames.size(); ++n) EXPECT_TRUE(same_features(a.features[n], b.features[n]));
  }
}

TEST(Pipeline, RejectsBadInput) {
  EXPECT_THROW(run_pipeline({}, config_for(MaskMode::None)), std::invalid_argument);
  auto bad = config_for(MaskMode::Intensity);
  bad.mask.intensity_threshold = -1;
  EXPECT_THROW(FrameExtractor{bad}, std::invalid_argument);
  FrameExtractor ex(config_for(MaskMode::None));
  ex.process(GrayFrame(100, 100));
  EXPECT_THROW(ex.process(GrayFrame(120, 100)), std::invalid_argument);
}

TEST(Pipeline, ObserverCanAttachAccuracy) {
  const auto frames = static_frames(3);
  const auto res = run_pipeline(
      frames, config_for(MaskMode::None),
      [](int n, const std::vector<Feature>&, FrameReport& r) { r.accuracy = n * 0.5; }, false);
  EXPECT_TRUE(res.features.empty());
  EXPECT_DOUBLE_EQ(*res.reports[2].accuracy, 1.0);
  EXPECT_DOUBLE_EQ(*summarize(res.reports).mean_accuracy, 0.5);
}

// --- reports -------------------------------------------------------------------

TEST(Report, CsvLayout) {
  std::ostringstream empty;
  write_csv(empty, {});
  EXPECT_EQ(empty.str(), std::string(kCsvHeader) + "\n");

  FrameReport a;
  a.frame = 0;
  a.n_detected = 12;
  a.t_total_ms = 1.5;
  FrameReport b = a;
  b.frame = 1;
  b.n_detected = 2;
  b.n_propagated = 10;
  b.coverage = 0.25;
  b.accuracy = 0.75;
  const std::vector<FrameReport> reps{a, b};
  std::ostringstream out;
  write_csv(out, reps);
  std::istringstream in(out.str());
  std::string header, row0, row1, extra;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(header, kCsvHeader);
  EXPECT_EQ(row0, "0,12,0,1.000000,0.000,0.000,0.000,0.000,1.500,");
  EXPECT_EQ(row1, "1,2,10,0.250000,0.000,0.000,0.000,0.000,1.500,0.750000");
}

TEST(Report, SummaryJsonWithSweep) {
  std::vector<FrameReport> reps(4);
  for (int i = 0; i < 4; ++i) {
    reps[static_cast<std::size_t>(i)].t_total_ms = i;
    reps[static_cast<std::size_t>(i)].coverage = 0.5;
  }
  const auto s = summarize(reps);
  EXPECT_EQ(s.frames, 4u);
  EXPECT_DOUBLE_EQ(s.mean_total_ms, 1.5);
  EXPECT_FALSE(s.mean_accuracy.has_value());

  std::vector<SweepPoint> sweep;
  for (double v : {10.0, 20.0, 30.0}) sweep.push_back({"intensity", "ti", v, s});
  const auto j = nlohmann::json::parse(summary_json(s, sweep));
  EXPECT_EQ(j["summary"]["frames"], 4);
  EXPECT_TRUE(j["summary"]["mean_accuracy"].is_null());
  ASSERT_EQ(j["sweep"].size(), 3u);
  EXPECT_EQ(j["sweep"][1]["value"], 20.0);
  EXPECT_FALSE(nlohmann::json::parse(summary_json(s)).contains("sweep"));
}

TEST(Report, FeatureDumpRoundTrips) {
  std::mt19937_64 rng(3);
  std::vector<Feature> fs_;
  for (int i = 0; i < 5; ++i) {
    fs_.push_back(fixtures::feature_at(10.125 * i, 3.5, 1.5));
    fs_.back().desc = fixtures::random_descriptor(rng);
    fs_.back().kp.theta = 0.25 * i;
    fs_.back().origin = i % 2 ? Origin::Propagated : Origin::Detected;
  }
  std::stringstream io;
  write_features(io, 0, fs_);
  write_features(io, 1, {});
  const auto back = read_features(io);
  ASSERT_EQ(back.size(), 2u);
  ASSERT_EQ(back[0].features.size(), 5u);
  EXPECT_TRUE(back[1].features.empty());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back[0].features[i].desc, fs_[i].desc);
    EXPECT_NEAR(back[0].features[i].kp.x, fs_[i].kp.x, 1e-6);
    EXPECT_EQ(back[0].features[i].origin, fs_[i].origin);
  }
  std::istringstream bad("frame 0 2\n1 2 3 4 detected 00\n");
  EXPECT_THROW(read_features(bad), std::runtime_error);
}

// --- synthetic scenes ----------------------------------------------------------

TEST(Synth, StaticSceneFramesAreIdentical) {
  const auto seq = synth_sequence(preset_scene("static", 128, 96, 4, 5));
  ASSERT_EQ(seq.frames.size(), 4u);
  EXPECT_TRUE(seq.truth.empty());
  for (const auto& f : seq.frames) EXPECT_TRUE(same_pixels(f, seq.frames[0]));
}

TEST(Synth, ObjectMotionAndTruth) {
  SceneSpec spec;
  spec.width = 200;
  spec.height = 100;
  spec.n_frames = 3;
  SynthObject obj;
  obj.id = 7;
  obj.width = 40;
  obj.height = 30;
  obj.x = 10;
  obj.y = 20;
  obj.vx = 2;
  spec.objects.push_back(obj);
  const auto seq = synth_sequence(spec);
  ASSERT_EQ(seq.truth.size(), 3u);
  for (int n = 0; n < 3; ++n) {
    EXPECT_EQ(seq.truth[static_cast<std::size_t>(n)].object_id, 7);
    EXPECT_DOUBLE_EQ(seq.truth[static_cast<std::size_t>(n)].cx, 10 + 2 * n + 19.5);
    EXPECT_DOUBLE_EQ(seq.truth[static_cast<std::size_t>(n)].cy, 34.5);
  }
  // Integer motion copies pixels exactly.
  for (int y = 20; y < 50; ++y)
    for (int x = 10; x < 50; ++x) ASSERT_EQ(seq.frames[1].at(x + 2, y), seq.frames[0].at(x, y));
  const auto ref = object_reference(obj, 8);
  EXPECT_EQ(ref.image.width, 56);
  EXPECT_EQ(ref.image.at(8, 8), seq.frames[0].at(10, 20));
  EXPECT_DOUBLE_EQ(ref.corners[2].x, 47.0);
}

TEST(Synth, DeterministicAndValidated) {
  const auto a = synth_sequence(preset_scene("multi", 160, 120, 6, 3));
  const auto b = synth_sequence(preset_scene("multi", 160, 120, 6, 3));
  for (std::size_t n = 0; n < a.frames.size(); ++n) EXPECT_TRUE(same_pixels(a.frames[n], b.frames[n]));
  EXPECT_EQ(a.truth.size(), 6u);  // one object visible per frame
  EXPECT_THROW(preset_scene("spiral", 160, 120, 6, 3), std::invalid_argument);
  SceneSpec tiny;
  tiny.width = 32;
  EXPECT_THROW(synth_sequence(tiny), std::invalid_argument);
  SceneSpec big;
  big.objects.push_back(SynthObject{});
  big.objects.back().width = 1000;
  EXPECT_THROW(synth_sequence(big), std::invalid_argument);
}

// --- divergence ----------------------------------------------------------------

TEST(Divergence, CompareKeypoints) {
  const std::vector<Feature> full{fixtures::feature_at(10, 10, 1.0), fixtures::feature_at(50, 50, 2.0),
                                  fixtures::feature_at(80, 80, 1.0)};
  const std::vector<Feature> masked{fixtures::feature_at(10.5, 10, 1.1), fixtures::feature_at(50, 50, 4.0),
                                    fixtures::feature_at(5, 5, 1.0)};
  const auto d = compare_keypoints(masked, full);
  EXPECT_EQ(d.common, 1u);
  EXPECT_EQ(d.only_full, 2u);
  EXPECT_EQ(d.only_masked, 2u);
  EXPECT_DOUBLE_EQ(d.preserved(), 1.0 / 3.0);
  EXPECT_FALSE(d.identical());
  EXPECT_TRUE(compare_keypoints(full, full).identical());
  EXPECT_DOUBLE_EQ(compare_keypoints({}, {}).preserved(), 1.0);
}

TEST(Divergence, NoneAndStaticScenesDoNotDiverge) {
  const auto frames = static_frames(4);
  for (auto mode : {MaskMode::None, MaskMode::Intensity}) {
    const auto rep = divergence_report(frames, config_for(mode));
    ASSERT_EQ(rep.size(), 4u);
    for (const auto& d : rep) {
      EXPECT_TRUE(d.identical()) << to_string(mode) << " frame " << d.frame;
      EXPECT_DOUBLE_EQ(d.preserved(), 1.0);
    }
  }
}
