// vidfeat: mask-gated video feature extraction benchmark.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidfeat/divergence.hpp"
#include "vidfeat/evaluation.hpp"
#include "vidfeat/pipeline.hpp"
#include "vidfeat/report.hpp"
#include "vidfeat/sequence_io.hpp"
#include "vidfeat/synth.hpp"

namespace fs = std::filesystem;
using namespace vidfeat;

namespace {

struct Options {
  std::string mode = "none";
  int ti = 20;
  int th = 1;
  std::string grid = "16x16";
  int threshold = kDefaultThreshold;
  int octaves = 4;
  std::uint64_t seed = 42;
  std::string out = "out";
  int threads = 1;
  int mask_octave = -1;
  bool per_layer = false;
  bool upright = false;
  int match_threshold = kDefaultMatchThreshold;
  int ransac_iters = 1000;
  double ransac_tol = 3.0;
  int gop = 10;
  int patch = 16;
  int t_bm = 1800;
  int t_et = 1000;
};

std::pair<int, int> parse_pair(const std::string& text, const char* what) {
  static const std::regex re(R"((\d+)\s*[xX]\s*(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw CLI::ValidationError(what, "expected AxB, got '" + text + "'");
  }
  return {std::stoi(m[1]), std::stoi(m[2])};
}

PipelineConfig make_config(const Options& o) {
  PipelineConfig cfg;
  cfg.mask.mode = parse_mask_mode(o.mode);
  cfg.mask.intensity_threshold = o.ti;
  cfg.mask.histogram_threshold = o.th;
  std::tie(cfg.mask.grid_rows, cfg.mask.grid_cols) = parse_pair(o.grid, "--grid");
  cfg.mask.mask_octave = o.mask_octave;
  cfg.mask.per_layer = o.per_layer;
  cfg.detector.threshold = o.threshold;
  cfg.n_octaves = o.octaves;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.rotation_invariant = !o.upright;
  cfg.match_threshold = o.match_threshold;
  cfg.ransac.iterations = o.ransac_iters;
  cfg.ransac.reproj_tol = o.ransac_tol;
  cfg.ransac.seed = o.seed;
  cfg.gop.delta = o.gop;
  cfg.gop.patch = o.patch;
  cfg.gop.t_bm = o.t_bm;
  cfg.gop.t_et = o.t_et;
  cfg.validate();
  return cfg;
}

void print_summary(const std::string& label, const ReportSummary& s) {
  std::printf("%-24s frames=%zu  features=%.1f (detected %.1f, propagated %.1f)  coverage=%.3f  cpu=%.3f ms/frame",
              label.c_str(), s.frames, s.mean_total, s.mean_detected, s.mean_propagated, s.mean_coverage,
              s.mean_total_ms);
  if (s.mean_accuracy) std::printf("  accuracy=%.4f", *s.mean_accuracy);
  std::printf("\n");
}

void write_mask(const fs::path& path, const DetectionMask& m) {
  GrayFrame img(m.width, m.height);
  for (std::size_t i = 0; i < m.bits.size(); ++i) img.data[i] = m.bits[i] ? 255 : 0;
  write_pgm(path, img);
}

std::string frame_name(int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d", n);
  return buf;
}

// --- subcommands -------------------------------------------------------------

int cmd_extract(const Options& o, const std::string& seq, bool dump_features, bool dump_masks) {
  const PipelineConfig cfg = make_config(o);
  const auto frames = load_sequence(seq);
  const fs::path out = o.out;
  fs::create_directories(out);
  std::ofstream feat;
  if (dump_features) {
    feat.open(out / "features.txt");
    if (!feat) throw std::runtime_error("cannot write " + (out / "features.txt").string());
  }
  if (dump_masks) fs::create_directories(out / "masks");

  FrameExtractor extractor(cfg);
  std::vector<FrameReport> reports;
  for (const GrayFrame& frame : frames) {
    reports.push_back(extractor.process(frame));
    const int n = reports.back().frame;
    if (dump_features) write_features(feat, n, extractor.features());
    if (dump_masks) {
      for (std::size_t k = 0; k < extractor.masks().size(); ++k) {
        const std::string suffix = extractor.masks().size() > 1 ? "_o" + std::to_string(k) : "";
        write_mask(out / "masks" / (frame_name(n) + suffix + ".pgm"), extractor.masks()[k]);
      }
    }
  }
  write_csv(out / "frames.csv", reports);
  const ReportSummary s = summarize(reports);
  write_summary_json(out / "summary.json", s);
  print_summary(o.mode, s);
  return 0;
}

std::vector<Feature> reference_features(const std::string& path, const PipelineConfig& cfg) {
  return extract_features(read_image(path), cfg);
}

int cmd_match_eval(const Options& o, const std::string& seq, const std::string& reference) {
  const PipelineConfig cfg = make_config(o);
  const auto frames = load_sequence(seq);
  const auto ref = reference_features(reference, cfg);
  const auto result = run_pipeline(frames, cfg, [&](int, const std::vector<Feature>& f, FrameReport& r) {
    r.accuracy = count_mpr(f, ref, cfg.match_threshold, cfg.ransac);
  }, false);
  const fs::path out = o.out;
  write_csv(out / "frames.csv", result.reports);
  const ReportSummary s = summarize(result.reports);
  write_summary_json(out / "summary.json", s);
  print_summary(o.mode + " (MPR)", s);
  return 0;
}

int cmd_sweep(Options o, const std::string& seq, const std::string& param, const std::vector<double>& values,
              const std::string& reference) {
  const auto frames = load_sequence(seq);
  std::vector<Feature> ref;
  if (!reference.empty()) ref = reference_features(reference, make_config(o));

  std::vector<SweepPoint> points;
  const fs::path out = o.out;
  for (double v : values) {
    if (param == "ti") {
      o.ti = static_cast<int>(v);
    } else if (param == "th") {
      o.th = static_cast<int>(v);
    } else if (param == "threshold") {
      o.threshold = static_cast<int>(v);
    } else {
      throw CLI::ValidationError("--param", "expected ti, th or threshold");
    }
    const PipelineConfig cfg = make_config(o);
    std::vector<FrameReport> reports;
    if (ref.empty()) {
      // Accuracy: share of full-detection keypoints the configuration keeps.
      PipelineConfig full_cfg = cfg;
      full_cfg.mask.mode = MaskMode::None;
      FrameExtractor masked(cfg);
      FrameExtractor full(full_cfg);
      for (const GrayFrame& frame : frames) {
        FrameReport r = masked.process(frame);
        full.process(frame);
        r.accuracy = compare_keypoints(masked.features(), full.features()).preserved();
        reports.push_back(r);
      }
    } else {
      reports = run_pipeline(frames, cfg, [&](int, const std::vector<Feature>& f, FrameReport& r) {
        r.accuracy = count_mpr(f, ref, cfg.match_threshold, cfg.ransac);
      }, false).reports;
    }
    std::ostringstream label;
    label << param << '_' << v;
    write_csv(out / (label.str() + ".csv"), reports);
    points.push_back({o.mode, param, v, summarize(reports)});
    print_summary(label.str(), points.back().summary);
  }
  ReportSummary overall;
  overall.frames = frames.size();
  write_summary_json(out / "sweep.json", overall, points);
  return 0;
}

int cmd_retrieval(const Options& o, const std::string& queries, const std::string& database,
                  const std::string& relevance_file) {
  const PipelineConfig cfg = make_config(o);
  const RelevanceTable relevance = read_relevance(relevance_file);

  std::vector<std::string> db_ids;
  std::vector<std::vector<Feature>> db_features;
  std::vector<fs::path> db_files;
  for (const auto& e : fs::directory_iterator(database)) {
    if (e.is_regular_file()) db_files.push_back(e.path());
  }
  std::sort(db_files.begin(), db_files.end());
  for (const auto& p : db_files) {
    db_ids.push_back(p.stem().string());
    db_features.push_back(extract_features(read_image(p), cfg));
  }
  if (db_ids.empty()) throw std::runtime_error("empty database directory " + database);

  std::vector<fs::path> query_dirs;
  for (const auto& e : fs::directory_iterator(queries)) {
    if (e.is_directory()) query_dirs.push_back(e.path());
  }
  std::sort(query_dirs.begin(), query_dirs.end());

  nlohmann::json report = nlohmann::json::object();
  std::vector<double> query_aps;
  const fs::path out = o.out;
  fs::create_directories(out);
  for (const auto& qdir : query_dirs) {
    const std::string qid = qdir.filename().string();
    const auto rel_it = relevance.find(qid);
    const std::vector<std::string> relevant = rel_it == relevance.end() ? std::vector<std::string>{} : rel_it->second;
    std::vector<double> frame_aps;
    std::size_t excluded = 0;
    const auto frames = load_sequence(qdir);
    const auto result = run_pipeline(frames, cfg, [&](int, const std::vector<Feature>& f, FrameReport& r) {
      std::vector<int> scores;
      for (const auto& db : db_features) scores.push_back(count_mpr(f, db, cfg.match_threshold, cfg.ransac));
      const auto ap = average_precision(rank_database(db_ids, scores, relevant));
      if (ap) {
        frame_aps.push_back(*ap);
        r.accuracy = *ap;
      } else {
        ++excluded;
      }
    }, false);
    write_csv(out / (qid + ".csv"), result.reports);
    nlohmann::json q = {{"frames", frames.size()}, {"excluded_frames", excluded}};
    if (!frame_aps.empty()) {
      const double apq = sequence_ap(frame_aps);
      query_aps.push_back(apq);
      q["ap"] = apq;
      std::printf("query %-16s AP=%.4f (%zu frames, %zu excluded)\n", qid.c_str(), apq, frames.size(), excluded);
    } else {
      q["ap"] = nullptr;
      std::printf("query %-16s no frame with relevant items, excluded\n", qid.c_str());
    }
    q["summary"] = nlohmann::json::parse(summary_json(summarize(result.reports)))["summary"];
    report["queries"][qid] = q;
  }
  if (query_aps.empty()) throw std::runtime_error("no query produced an AP value");
  const double map = mean_average_precision(query_aps);
  report["map"] = map;
  std::ofstream(out / "retrieval.json") << report.dump(2) << '\n';
  std::printf("MAP=%.4f over %zu queries\n", map, query_aps.size());
  return 0;
}

std::vector<ObjectModel> load_objects(const std::string& dir, const PipelineConfig& cfg) {
  std::vector<ObjectModel> db;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".png" || ext == ".ppm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    ObjectModel m;
    try {
      m.id = std::stoi(p.stem().string());
    } catch (const std::exception&) {
      throw std::runtime_error(p.string() + ": object image names must be numeric ids");
    }
    const GrayFrame img = read_image(p);
    m.features = extract_features(img, cfg);
    m.corners = image_corners(img.width, img.height);
    fs::path corners_file = p;
    corners_file.replace_extension(".txt");
    if (fs::exists(corners_file)) {
      std::ifstream in(corners_file);
      for (auto& c : m.corners) {
        if (!(in >> c.x >> c.y)) throw std::runtime_error(corners_file.string() + ": expected 4 corner points");
      }
    }
    db.push_back(std::move(m));
  }
  if (db.empty()) throw std::runtime_error("no object images in " + dir);
  return db;
}

int cmd_track(const Options& o, const std::string& seq, const std::string& objects, const std::string& truth_file,
              double tol) {
  const PipelineConfig cfg = make_config(o);
  const auto frames = load_sequence(seq);
  const auto db = load_objects(objects, cfg);
  const GroundTruth truth = read_ground_truth(truth_file);
  std::multimap<int, GroundTruthRecord> by_frame;
  for (const auto& t : truth) by_frame.emplace(t.frame, t);

  std::vector<std::optional<ObjectEstimate>> estimates;
  const auto result = run_pipeline(frames, cfg, [&](int n, const std::vector<Feature>& f, FrameReport& r) {
    estimates.push_back(locate_object(f, db, cfg.match_threshold, cfg.ransac));
    const auto [lo, hi] = by_frame.equal_range(n);
    if (lo != hi) {
      int ok = 0, total = 0;
      for (auto it = lo; it != hi; ++it, ++total) ok += estimate_correct(estimates.back(), it->second, tol) ? 1 : 0;
      r.accuracy = static_cast<double>(ok) / total;
    }
  }, false);
  const double acc = tracking_accuracy(estimates, truth, tol);
  const fs::path out = o.out;
  write_csv(out / "frames.csv", result.reports);
  write_summary_json(out / "summary.json", summarize(result.reports));
  print_summary(o.mode, summarize(result.reports));
  std::printf("tracking accuracy=%.4f (%zu ground-truth records, tol %.1f px)\n", acc, truth.size(), tol);
  return 0;
}

int cmd_synth(const Options& o, const std::string& scene, int n_frames, const std::string& size) {
  const auto [w, h] = parse_pair(size, "--size");
  const SceneSpec spec = preset_scene(scene, w, h, n_frames, o.seed);
  const SynthSequence seq = synth_sequence(spec);
  const fs::path out = o.out;
  write_sequence(out / "frames", seq.frames);
  write_ground_truth(out / "truth.txt", seq.truth);
  if (!spec.objects.empty()) {
    fs::create_directories(out / "objects");
    for (const SynthObject& obj : spec.objects) {
      const ObjectReference ref = object_reference(obj);
      const std::string stem = std::to_string(obj.id);
      write_pgm(out / "objects" / (stem + ".pgm"), ref.image);
      std::ofstream c(out / "objects" / (stem + ".txt"));
      for (const auto& p : ref.corners) c << p.x << ' ' << p.y << '\n';
    }
  }
  std::printf("wrote %zu frames (%dx%d, scene %s) to %s\n", seq.frames.size(), w, h, scene.c_str(),
              out.string().c_str());
  return 0;
}

int cmd_diverge(const Options& o, const std::string& seq) {
  const PipelineConfig cfg = make_config(o);
  const auto frames = load_sequence(seq);
  const auto rows = divergence_report(frames, cfg);
  const fs::path out = o.out;
  fs::create_directories(out);
  std::ofstream csv(out / "divergence.csv");
  csv << "frame,only_masked,only_full,common,preserved\n";
  double worst = 1.0;
  for (const auto& d : rows) {
    csv << d.frame << ',' << d.only_masked << ',' << d.only_full << ',' << d.common << ',' << d.preserved() << '\n';
    worst = std::min(worst, d.preserved());
  }
  std::printf("%zu frames, lowest preserved fraction %.4f\n", rows.size(), worst);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask-gated video feature extraction and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with default option values");

  Options o;
  app.add_option("--mode", o.mode, "Mask mode")
      ->check(CLI::IsMember({"none", "intensity", "binning", "temporal"}))
      ->capture_default_str();
  app.add_option("--ti", o.ti, "Intensity difference threshold")->capture_default_str();
  app.add_option("--th", o.th, "Keypoint histogram threshold")->capture_default_str();
  app.add_option("--grid", o.grid, "Binning grid as ROWSxCOLS")->capture_default_str();
  app.add_option("--threshold", o.threshold, "AST detection threshold")->capture_default_str();
  app.add_option("--octaves", o.octaves, "Number of octaves")->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed (RANSAC, synthetic scenes)")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads inside a frame")->capture_default_str();
  app.add_option("--mask-octave", o.mask_octave, "Octave differenced for the intensity mask (-1: top)")
      ->capture_default_str();
  app.add_flag("--per-layer", o.per_layer, "One intensity mask per octave");
  app.add_flag("--upright", o.upright, "Skip orientation estimation");
  app.add_option("--match-threshold", o.match_threshold, "Hamming radius for matching")->capture_default_str();
  app.add_option("--ransac-iters", o.ransac_iters, "RANSAC iterations")->capture_default_str();
  app.add_option("--ransac-tol", o.ransac_tol, "RANSAC reprojection tolerance (px)")->capture_default_str();
  app.add_option("--gop", o.gop, "Temporal mode: GOP length")->capture_default_str();
  app.add_option("--patch", o.patch, "Temporal mode: block size")->capture_default_str();
  app.add_option("--tbm", o.t_bm, "Temporal mode: SAD acceptance threshold")->capture_default_str();
  app.add_option("--tet", o.t_et, "Temporal mode: SAD early-termination threshold")->capture_default_str();

  std::string sequence, reference, queries, database, relevance, objects, truth, param, scene = "moving",
                                                                                   size = "640x480";
  bool dump_features = false, dump_masks = false;
  std::vector<double> values;
  double tol = kDefaultTrackingTolerance;
  int n_frames = 50;

  auto* extract = app.add_subcommand("extract", "Extract features from a frame sequence");
  extract->add_option("sequence", sequence, "Directory of frames")->required()->check(CLI::ExistingDirectory);
  extract->add_flag("--features", dump_features, "Write features.txt");
  extract->add_flag("--masks", dump_masks, "Write detection masks as PGM");

  auto* sweep = app.add_subcommand("sweep", "Energy/accuracy sweep over one parameter");
  sweep->add_option("sequence", sequence)->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--param", param, "ti, th or threshold")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--reference", reference, "Reference image: accuracy becomes MPR")->check(CLI::ExistingFile);

  auto* match = app.add_subcommand("match-eval", "MPR of every frame against a reference image");
  match->add_option("sequence", sequence)->required()->check(CLI::ExistingDirectory);
  match->add_option("--reference", reference)->required()->check(CLI::ExistingFile);

  auto* retrieval = app.add_subcommand("retrieval-eval", "Retrieval MAP of query sequences against a database");
  retrieval->add_option("--queries", queries, "Directory with one frame directory per query")
      ->required()
      ->check(CLI::ExistingDirectory);
  retrieval->add_option("--database", database, "Directory of database images")
      ->required()
      ->check(CLI::ExistingDirectory);
  retrieval->add_option("--relevance", relevance, "Relevance file")->required()->check(CLI::ExistingFile);

  auto* track = app.add_subcommand("track-eval", "Object detection and tracking accuracy");
  track->add_option("sequence", sequence)->required()->check(CLI::ExistingDirectory);
  track->add_option("--objects", objects, "Directory of <id>.pgm object images")
      ->required()
      ->check(CLI::ExistingDirectory);
  track->add_option("--truth", truth, "Ground-truth file")->required()->check(CLI::ExistingFile);
  track->add_option("--tol", tol, "Centroid tolerance in pixels")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  synth->add_option("--scene", scene, "static, moving or multi")->capture_default_str();
  synth->add_option("--frames", n_frames, "Number of frames")->capture_default_str();
  synth->add_option("--size", size, "WIDTHxHEIGHT")->capture_default_str();

  auto* diverge = app.add_subcommand("diverge", "Compare masked and full detection per frame");
  diverge->add_option("sequence", sequence)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) return cmd_extract(o, sequence, dump_features, dump_masks);
    if (*sweep) return cmd_sweep(o, sequence, param, values, reference);
    if (*match) return cmd_match_eval(o, sequence, reference);
    if (*retrieval) return cmd_retrieval(o, queries, database, relevance);
    if (*track) return cmd_track(o, sequence, objects, truth, tol);
    if (*synth) return cmd_synth(o, scene, n_frames, size);
    if (*diverge) return cmd_diverge(o, sequence);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
