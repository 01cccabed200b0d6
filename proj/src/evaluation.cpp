#include "vidfeat/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vidfeat {

std::optional<double> average_precision(const RankedList& list) {
  if (list.total_relevant <= 0) return std::nullopt;
  // Extended precision so that short lists round once, e.g. [1,0,1] gives
  // the double nearest to 5/6.
  long double sum = 0.0L;
  int hits = 0;
  for (std::size_t k = 0; k < list.relevance.size(); ++k) {
    if (list.relevance[k] != 0) {
      ++hits;
      sum += static_cast<long double>(hits) / static_cast<long double>(k + 1);
    }
  }
  return static_cast<double>(sum / list.total_relevant);
}

namespace {
double mean_of(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string strip_comment(std::string line) {
  if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  return line;
}
}  // namespace

double sequence_ap(std::span<const double> per_frame_aps) { return mean_of(per_frame_aps, "sequence_ap"); }

double mean_average_precision(std::span<const double> per_query_aps) {
  return mean_of(per_query_aps, "mean_average_precision");
}

RankedList rank_database(std::span<const std::string> ids, std::span<const int> scores,
                         std::span<const std::string> relevant) {
  if (ids.size() != scores.size()) throw std::invalid_argument("rank_database: ids and scores differ in length");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  const std::set<std::string> rel(relevant.begin(), relevant.end());
  RankedList list;
  for (std::size_t i : order) {
    list.entries.push_back(ids[i]);
    list.relevance.push_back(rel.contains(ids[i]) ? 1 : 0);
  }
  list.total_relevant = static_cast<int>(
      std::count_if(rel.begin(), rel.end(), [&](const std::string& r) {
        return std::find(ids.begin(), ids.end(), r) != ids.end();
      }));
  return list;
}

RelevanceTable read_relevance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open relevance file " + path.string());
  RelevanceTable table;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(strip_comment(line));
    std::string query;
    if (!(ss >> query)) continue;
    if (!query.empty() && query.back() == ':') query.pop_back();
    auto& ids = table[query];
    for (std::string id; ss >> id;) ids.push_back(id);
  }
  return table;
}

std::array<Point2, 4> image_corners(int width, int height) {
  const double w = width - 1;
  const double h = height - 1;
  return {Point2{0.0, 0.0}, Point2{w, 0.0}, Point2{w, h}, Point2{0.0, h}};
}

std::optional<ObjectEstimate> locate_object(std::span<const Feature> frame_features,
                                            std::span<const ObjectModel> database, int match_threshold,
                                            const RansacConfig& ransac) {
  if (database.empty()) throw std::invalid_argument("locate_object: empty object database");
  if (frame_features.empty()) return std::nullopt;

  std::optional<ObjectEstimate> best;
  std::optional<Homography> best_h;
  for (const ObjectModel& obj : database) {
    const PairVerification v = verify_pair(frame_features, obj.features, match_threshold, ransac);
    const int mpr = v.mpr();
    if (mpr == 0) continue;
    const bool better = !best || mpr > best->mpr || (mpr == best->mpr && obj.id < best->object_id);
    if (!better) continue;

    ObjectEstimate est;
    est.object_id = obj.id;
    est.mpr = mpr;
    bool finite = true;
    for (std::size_t c = 0; c < 4; ++c) {
      const auto p = v.ransac.model->apply(obj.corners[c]);
      if (!p) {
        finite = false;
        break;
      }
      est.corners[c] = *p;
    }
    if (!finite) continue;
    est.centroid = {(est.corners[0].x + est.corners[1].x + est.corners[2].x + est.corners[3].x) / 4.0,
                    (est.corners[0].y + est.corners[1].y + est.corners[2].y + est.corners[3].y) / 4.0};
    best = est;
  }
  return best;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground-truth file " + path.string());
  GroundTruth truth;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(strip_comment(line));
    GroundTruthRecord r;
    if (!(ss >> r.frame)) continue;
    if (!(ss >> r.object_id >> r.cx >> r.cy)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'frame object_id cx cy'");
    }
    truth.push_back(r);
  }
  return truth;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ground-truth file " + path.string());
  out << "# frame object_id cx cy\n" << std::setprecision(10);
  for (const auto& r : truth) out << r.frame << ' ' << r.object_id << ' ' << r.cx << ' ' << r.cy << '\n';
}

bool estimate_correct(const std::optional<ObjectEstimate>& estimate, const GroundTruthRecord& truth, double tol) {
  if (!estimate || estimate->object_id != truth.object_id) return false;
  return std::hypot(estimate->centroid.x - truth.cx, estimate->centroid.y - truth.cy) <= tol;
}

double tracking_accuracy(std::span<const std::optional<ObjectEstimate>> estimates, const GroundTruth& truth,
                         double tol) {
  if (truth.empty()) return 0.0;
  int correct = 0;
  for (const auto& t : truth) {
    if (t.frame < 0 || static_cast<std::size_t>(t.frame) >= estimates.size()) continue;
    if (estimate_correct(estimates[static_cast<std::size_t>(t.frame)], t, tol)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace vidfeat
