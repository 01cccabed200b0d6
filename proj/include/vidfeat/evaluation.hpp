#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vidfeat/features.hpp"
#include "vidfeat/matching.hpp"

namespace vidfeat {

// --- retrieval -------------------------------------------------------------

struct RankedList {
  std::vector<std::string> entries;  // database ids, best first
  std::vector<int> relevance;        // r(k) in {0, 1}, aligned with entries
  int total_relevant = 0;            // R; relevant items may be missing from the list
};

// sum_k P(k) r(k) / R with P(k) the precision of the top k entries.
// nullopt when R = 0 (the frame is excluded from the sequence mean).
std::optional<double> average_precision(const RankedList& list);

// Arithmetic mean; throws std::invalid_argument when empty.
double sequence_ap(std::span<const double> per_frame_aps);
double mean_average_precision(std::span<const double> per_query_aps);

// Sorts database ids by descending score (ties: ascending id) and marks relevance.
RankedList rank_database(std::span<const std::string> ids, std::span<const int> scores,
                         std::span<const std::string> relevant);

// query id -> relevant database ids. One line per query: the query id
// followed by whitespace-separated database ids; '#' starts a comment.
using RelevanceTable = std::map<std::string, std::vector<std::string>>;
RelevanceTable read_relevance(const std::filesystem::path& path);

// --- object detection + tracking -------------------------------------------

struct ObjectModel {
  int id = 0;
  std::vector<Feature> features;
  std::array<Point2, 4> corners{};  // reference-image corners
};

struct ObjectEstimate {
  int object_id = 0;
  std::array<Point2, 4> corners{};
  Point2 centroid;
  int mpr = 0;
};

// Corners of a width x height reference image, clockwise from the origin.
std::array<Point2, 4> image_corners(int width, int height);

// Object with the most matches post RANSAC (ties: lowest id), its corners
// projected by that homography. nullopt when no object has MPR > 0.
// Throws std::invalid_argument for an empty database.
std::optional<ObjectEstimate> locate_object(std::span<const Feature> frame_features,
                                            std::span<const ObjectModel> database,
                                            int match_threshold = kDefaultMatchThreshold,
                                            const RansacConfig& ransac = {});

struct GroundTruthRecord {
  int frame = 0;
  int object_id = 0;
  double cx = 0.0;
  double cy = 0.0;
};

using GroundTruth = std::vector<GroundTruthRecord>;

// Whitespace-delimited "frame object_id cx cy" per line; '#' starts a comment.
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);

inline constexpr double kDefaultTrackingTolerance = 10.0;

// Correct when the object id matches and the centroid lies within tol
// (inclusive) of the truth.
bool estimate_correct(const std::optional<ObjectEstimate>& estimate, const GroundTruthRecord& truth,
                      double tol = kDefaultTrackingTolerance);

// Fraction of ground-truth frames estimated correctly. estimates[n] belongs
// to frame n; a missing entry counts as incorrect.
double tracking_accuracy(std::span<const std::optional<ObjectEstimate>> estimates, const GroundTruth& truth,
                         double tol = kDefaultTrackingTolerance);

}  // namespace vidfeat
