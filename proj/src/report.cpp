#include "vidfeat/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vidfeat {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

nlohmann::json to_json(const ReportSummary& s) {
  nlohmann::json j = {
      {"frames", s.frames},
      {"mean_n_detected", s.mean_detected},
      {"mean_n_propagated", s.mean_propagated},
      {"mean_n_total", s.mean_total},
      {"mean_coverage", s.mean_coverage},
      {"mean_t_pyramid_ms", s.mean_pyramid_ms},
      {"mean_t_mask_ms", s.mean_mask_ms},
      {"mean_t_detect_ms", s.mean_detect_ms},
      {"mean_t_describe_ms", s.mean_describe_ms},
      {"mean_t_total_ms", s.mean_total_ms},
      {"mean_wall_ms", s.mean_wall_ms},
  };
  j["mean_accuracy"] = s.mean_accuracy ? nlohmann::json(*s.mean_accuracy) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

void write_csv(std::ostream& out, std::span<const FrameReport> reports) {
  out << kCsvHeader << '\n';
  out << std::fixed;
  for (const FrameReport& r : reports) {
    out << r.frame << ',' << r.n_detected << ',' << r.n_propagated << ',' << std::setprecision(6) << r.coverage
        << ',' << std::setprecision(3) << r.t_pyramid_ms << ',' << r.t_mask_ms << ',' << r.t_detect_ms << ','
        << r.t_describe_ms << ',' << r.t_total_ms << ',';
    if (r.accuracy) out << std::setprecision(6) << *r.accuracy;
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const FrameReport> reports) {
  auto out = open_out(path);
  write_csv(out, reports);
}

ReportSummary summarize(std::span<const FrameReport> reports) {
  ReportSummary s;
  s.frames = reports.size();
  if (reports.empty()) return s;
  double acc = 0.0;
  std::size_t n_acc = 0;
  for (const FrameReport& r : reports) {
    s.mean_detected += static_cast<double>(r.n_detected);
    s.mean_propagated += static_cast<double>(r.n_propagated);
    s.mean_total += static_cast<double>(r.n_total);
    s.mean_coverage += r.coverage;
    s.mean_pyramid_ms += r.t_pyramid_ms;
    s.mean_mask_ms += r.t_mask_ms;
    s.mean_detect_ms += r.t_detect_ms;
    s.mean_describe_ms += r.t_describe_ms;
    s.mean_total_ms += r.t_total_ms;
    s.mean_wall_ms += r.wall_ms;
    if (r.accuracy) {
      acc += *r.accuracy;
      ++n_acc;
    }
  }
  const double n = static_cast<double>(reports.size());
  for (double* v : {&s.mean_detected, &s.mean_propagated, &s.mean_total, &s.mean_coverage, &s.mean_pyramid_ms,
                    &s.mean_mask_ms, &s.mean_detect_ms, &s.mean_describe_ms, &s.mean_total_ms, &s.mean_wall_ms}) {
    *v /= n;
  }
  if (n_acc > 0) s.mean_accuracy = acc / static_cast<double>(n_acc);
  return s;
}

std::string summary_json(const ReportSummary& summary, std::span<const SweepPoint> sweep) {
  nlohmann::json j;
  j["summary"] = to_json(summary);
  if (!sweep.empty()) {
    auto& arr = j["sweep"] = nlohmann::json::array();
    for (const SweepPoint& p : sweep) {
      nlohmann::json e = to_json(p.summary);
      e["mode"] = p.mode;
      e["parameter"] = p.parameter;
      e["value"] = p.value;
      arr.push_back(std::move(e));
    }
  }
  return j.dump(2);
}

void write_summary_json(const std::filesystem::path& path, const ReportSummary& summary,
                        std::span<const SweepPoint> sweep) {
  auto out = open_out(path);
  out << summary_json(summary, sweep) << '\n';
}

void write_features(std::ostream& out, int frame, std::span<const Feature> features) {
  out << "frame " << frame << ' ' << features.size() << '\n';
  out << std::setprecision(9);
  for (const Feature& f : features) {
    out << f.kp.x << ' ' << f.kp.y << ' ' << f.kp.sigma << ' ' << f.kp.theta << ' ' << to_string(f.origin) << ' '
        << f.desc.to_hex() << '\n';
  }
}

std::vector<FeatureDumpFrame> read_features(std::istream& in) {
  std::vector<FeatureDumpFrame> frames;
  std::string tag;
  while (in >> tag) {
    if (tag != "frame") throw std::runtime_error("feature dump: expected 'frame', got '" + tag + "'");
    FeatureDumpFrame fr;
    std::size_t count = 0;
    if (!(in >> fr.frame >> count)) throw std::runtime_error("feature dump: malformed frame header");
    fr.features.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Feature f;
      std::string origin, hex;
      if (!(in >> f.kp.x >> f.kp.y >> f.kp.sigma >> f.kp.theta >> origin >> hex)) {
        throw std::runtime_error("feature dump: truncated record in frame " + std::to_string(fr.frame));
      }
      if (origin == "detected") {
        f.origin = Origin::Detected;
      } else if (origin == "propagated") {
        f.origin = Origin::Propagated;
      } else {
        throw std::runtime_error("feature dump: unknown origin '" + origin + "'");
      }
      try {
        f.desc = BinaryDescriptor::from_hex(hex);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("feature dump: frame " + std::to_string(fr.frame) + ": " + e.what());
      }
      fr.features.push_back(f);
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

}  // namespace vidfeat
