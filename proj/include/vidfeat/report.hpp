#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vidfeat/features.hpp"
#include "vidfeat/pipeline.hpp"

namespace vidfeat {

// Frozen column order of the per-frame CSV.
inline constexpr const char* kCsvHeader =
    "frame,n_detected,n_propagated,coverage,t_pyramid_ms,t_mask_ms,t_detect_ms,t_describe_ms,t_total_ms,accuracy";

// Header plus one row per report; an absent accuracy is an empty field.
void write_csv(std::ostream& out, std::span<const FrameReport> reports);
void write_csv(const std::filesystem::path& path, std::span<const FrameReport> reports);

struct ReportSummary {
  std::size_t frames = 0;
  double mean_detected = 0.0;
  double mean_propagated = 0.0;
  double mean_total = 0.0;
  double mean_coverage = 0.0;
  double mean_pyramid_ms = 0.0;
  double mean_mask_ms = 0.0;
  double mean_detect_ms = 0.0;
  double mean_describe_ms = 0.0;
  double mean_total_ms = 0.0;  // mean per-frame extraction CPU time
  double mean_wall_ms = 0.0;
  std::optional<double> mean_accuracy;  // over frames that carry one
};

ReportSummary summarize(std::span<const FrameReport> reports);

// One configuration of a sweep: the energy (CPU time) and accuracy it reached.
struct SweepPoint {
  std::string mode;
  std::string parameter;  // swept parameter name, e.g. "ti"
  double value = 0.0;
  ReportSummary summary;
};

// {"summary": {...}, "sweep": [...]}; the sweep array is omitted when empty.
std::string summary_json(const ReportSummary& summary, std::span<const SweepPoint> sweep = {});
void write_summary_json(const std::filesystem::path& path, const ReportSummary& summary,
                        std::span<const SweepPoint> sweep = {});

// "frame <index> <count>" then "x y sigma theta origin hex" per feature.
void write_features(std::ostream& out, int frame, std::span<const Feature> features);

struct FeatureDumpFrame {
  int frame = 0;
  std::vector<Feature> features;
};

// Parses the format written by write_features. Throws std::runtime_error on
// malformed input.
std::vector<FeatureDumpFrame> read_features(std::istream& in);

}  // namespace vidfeat
