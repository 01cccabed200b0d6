#include "vidfeat/pipeline.hpp"

#include <time.h>

#include <chrono>
#include <stdexcept>
#include <utility>

namespace vidfeat {

double cpu_time_ms() {
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e3 + static_cast<double>(ts.tv_nsec) * 1e-6;
}

double wall_time_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

void PipelineConfig::validate() const {
  if (n_octaves < 1) throw std::invalid_argument("number of octaves must be >= 1");
  if (detector.threshold < 0 || detector.threshold > 255) {
    throw std::invalid_argument("detection threshold must be in [0, 255]");
  }
  if (detector.arc_len < 1 || detector.arc_len > 16) throw std::invalid_argument("arc length must be in [1, 16]");
  if (mask.intensity_threshold < 0) throw std::invalid_argument("intensity threshold must be >= 0");
  if (mask.histogram_threshold < 0) throw std::invalid_argument("histogram threshold must be >= 0");
  if (mask.grid_rows < 1 || mask.grid_cols < 1) throw std::invalid_argument("binning grid must be at least 1x1");
  if (mask.mask_octave >= n_octaves) throw std::invalid_argument("mask octave exceeds the number of octaves");
  if (match_threshold < 0 || match_threshold > kDescriptorBits) {
    throw std::invalid_argument("match threshold must be in [0, 512]");
  }
  if (ransac.iterations < 1 || !(ransac.reproj_tol > 0.0)) throw std::invalid_argument("invalid RANSAC settings");
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
  gop.validate();
}

namespace {

class StageClock {
 public:
  StageClock() : start_(cpu_time_ms()) {}
  double lap() {
    const double now = cpu_time_ms();
    const double dt = now - start_;
    start_ = now;
    return dt;
  }

 private:
  double start_;
};

DetectorConfig detector_config(const PipelineConfig& cfg) {
  DetectorConfig d = cfg.detector;
  d.threads = cfg.threads;
  return d;
}

DescriptorConfig descriptor_config(const PipelineConfig& cfg) {
  return DescriptorConfig{cfg.rotation_invariant, cfg.threads};
}

}  // namespace

std::vector<Feature> extract_features(const GrayFrame& frame, const PipelineConfig& cfg) {
  const ScaleSpacePyramid pyr = build_pyramid(frame, cfg.n_octaves);
  const auto kps = detect_keypoints(pyr, detector_config(cfg));
  return describe_keypoints(frame, kps, descriptor_config(cfg)).features;
}

FrameExtractor::FrameExtractor(PipelineConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void FrameExtractor::run_full(const GrayFrame& frame, ScaleSpacePyramid pyr, FrameReport& r) {
  StageClock clock;
  auto kps = detect_keypoints(pyr, detector_config(cfg_));
  r.t_detect_ms = clock.lap();
  auto described = describe_keypoints(frame, kps, descriptor_config(cfg_));
  r.t_describe_ms = clock.lap();
  features_ = std::move(described.features);
  r.n_dropped = described.dropped;
  r.n_detected = features_.size();
  r.coverage = 1.0;
  masks_.clear();
  prev_pyr_ = std::move(pyr);
}

void FrameExtractor::run_gated(const GrayFrame& frame, FrameReport& r) {
  StageClock clock;
  ScaleSpacePyramid pyr = build_pyramid(frame, cfg_.n_octaves);
  r.t_pyramid_ms = clock.lap();
  if (n_ == 0) {
    run_full(frame, std::move(pyr), r);
    return;
  }

  const MaskConfig& mc = cfg_.mask;
  masks_.clear();
  if (mc.force_full) {
    masks_.push_back(DetectionMask::filled(frame.width, frame.height, true));
  } else if (mc.mode == MaskMode::Intensity && mc.per_layer) {
    for (int o = 0; o < cfg_.n_octaves; ++o) {
      const auto sub = intensity_diff_mask(prev_pyr_.layer_at(LayerKind::Octave, o),
                                           pyr.layer_at(LayerKind::Octave, o), mc.intensity_threshold,
                                           frame.width, frame.height);
      masks_.push_back(upsample_mask(sub, frame.width, frame.height));
    }
  } else if (mc.mode == MaskMode::Intensity) {
    const int o = mc.mask_octave < 0 ? cfg_.n_octaves - 1 : mc.mask_octave;
    const auto sub = intensity_diff_mask(prev_pyr_.layer_at(LayerKind::Octave, o), pyr.layer_at(LayerKind::Octave, o),
                                         mc.intensity_threshold, frame.width, frame.height);
    masks_.push_back(upsample_mask(sub, frame.width, frame.height));
  } else {
    const auto bm = keypoint_binning_mask(features_, frame.width, frame.height, mc.grid_rows, mc.grid_cols,
                                          mc.histogram_threshold);
    masks_.push_back(upsample_mask(bm.mask, frame.width, frame.height));
  }
  double coverage = 0.0;
  for (const auto& m : masks_) coverage += m.coverage();
  r.coverage = coverage / static_cast<double>(masks_.size());
  r.t_mask_ms = clock.lap();

  std::vector<Feature> detected;
  if (r.coverage > 0.0) {
    std::vector<Keypoint> kps;
    if (masks_.size() == 1) {
      kps = detect_keypoints(pyr, detector_config(cfg_), &masks_.front());
    } else {
      std::vector<const DetectionMask*> gates;
      for (const auto& layer : pyr.layers()) gates.push_back(&masks_[static_cast<std::size_t>(layer.level)]);
      kps = detect_keypoints(pyr, detector_config(cfg_), gates);
    }
    r.t_detect_ms = clock.lap();
    auto described = describe_keypoints(frame, kps, descriptor_config(cfg_));
    detected = std::move(described.features);
    r.n_dropped = described.dropped;
    r.t_describe_ms = clock.lap();
  }

  std::vector<Feature> merged = masks_.size() == 1 ? merge_features(detected, features_, masks_.front())
                                                   : merge_features(detected, features_, masks_);
  r.n_detected = 0;
  for (const Feature& f : merged) {
    if (f.origin == Origin::Detected) ++r.n_detected;
  }
  r.n_propagated = merged.size() - r.n_detected;
  features_ = std::move(merged);
  prev_pyr_ = std::move(pyr);
}

void FrameExtractor::run_temporal(const GrayFrame& frame, FrameReport& r) {
  if (n_ % cfg_.gop.delta == 0) {
    StageClock clock;
    ScaleSpacePyramid pyr = build_pyramid(frame, cfg_.n_octaves);
    r.t_pyramid_ms = clock.lap();
    run_full(frame, std::move(pyr), r);
    return;
  }
  StageClock clock;
  const BaselineStep step = baseline_step(features_, prev_frame_, frame, n_, cfg_.gop,
                                          [this](const GrayFrame& f) { return extract_features(f, cfg_); });
  r.t_detect_ms = clock.lap();
  features_ = step.features;
  r.n_dropped = step.dropped;
  r.n_detected = 0;
  r.n_propagated = features_.size();
  r.coverage = 0.0;
  masks_.clear();
}

FrameReport FrameExtractor::process(const GrayFrame& frame) {
  if (n_ > 0 && (frame.width != prev_frame_.width || frame.height != prev_frame_.height)) {
    throw std::invalid_argument("frame " + std::to_string(n_) + " has different dimensions");
  }
  FrameReport r;
  r.frame = n_;
  const double wall0 = wall_time_ms();
  const double cpu0 = cpu_time_ms();

  switch (cfg_.mask.mode) {
    case MaskMode::None: {
      StageClock clock;
      ScaleSpacePyramid pyr = build_pyramid(frame, cfg_.n_octaves);
      r.t_pyramid_ms = clock.lap();
      run_full(frame, std::move(pyr), r);
      break;
    }
    case MaskMode::Intensity:
    case MaskMode::Binning:
      run_gated(frame, r);
      break;
    case MaskMode::Temporal:
      run_temporal(frame, r);
      break;
  }

  r.n_total = features_.size();
  r.t_total_ms = cpu_time_ms() - cpu0;
  r.wall_ms = wall_time_ms() - wall0;
  prev_frame_ = frame;
  ++n_;
  return r;
}

PipelineResult run_pipeline(std::span<const GrayFrame> frames, const PipelineConfig& cfg,
                            const FrameObserver& observer, bool keep_features) {
  if (frames.empty()) throw std::invalid_argument("run_pipeline: empty sequence");
  FrameExtractor extractor(cfg);
  PipelineResult result;
  result.reports.reserve(frames.size());
  for (const GrayFrame& frame : frames) {
    FrameReport r = extractor.process(frame);
    if (observer) observer(r.frame, extractor.features(), r);
    if (keep_features) result.features.push_back(extractor.features());
    result.reports.push_back(r);
  }
  return result;
}

}  // namespace vidfeat
