#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "test_support.hpp"
#include "vidfeat/evaluation.hpp"

using namespace vidfeat;
namespace fs = std::filesystem;

namespace {

RankedList list_of(std::vector<int> rel, int total) {
  RankedList l;
  l.relevance = std::move(rel);
  l.total_relevant = total;
  l.entries.resize(l.relevance.size());
  return l;
}

// Precision recomputed from scratch at every relevant rank.
double ap_oracle(const std::vector<int>& rel, int total) {
  double sum = 0.0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (!rel[k]) continue;
    int hits = 0;
    for (std::size_t i = 0; i <= k; ++i) hits += rel[i];
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / total;
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("vidfeat_eval_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<Feature> random_cloud(std::mt19937_64& rng, int n, double w, double h) {
  std::uniform_real_distribution<double> ux(0, w), uy(0, h);
  std::vector<Feature> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(fixtures::feature_at(ux(rng), uy(rng)));
    out.back().desc = fixtures::random_descriptor(rng);
  }
  return out;
}

std::vector<Feature> shifted(const std::vector<Feature>& fs_, double dx, double dy) {
  auto out = fs_;
  for (auto& f : out) {
    f.kp.x += dx;
    f.kp.y += dy;
  }
  return out;
}

}  // namespace

TEST(Evaluation, AveragePrecisionHandCases) {
  EXPECT_EQ(*average_precision(list_of({1, 0, 1}, 2)), 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(*average_precision(list_of({1, 1, 1}, 3)), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision(list_of({0, 0, 0}, 2)), 0.0);
  // A relevant item missing from the list still counts in R.
  EXPECT_DOUBLE_EQ(*average_precision(list_of({1, 0}, 2)), 0.5);
  EXPECT_FALSE(average_precision(list_of({0, 0}, 0)).has_value());
}

TEST(Evaluation, AveragePrecisionMatchesOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> rel(n);
    int hits = 0;
    for (auto& r : rel) hits += r = static_cast<int>(rng() % 3 == 0);
    const int total = hits + static_cast<int>(rng() % 3);
    if (total == 0) continue;
    ASSERT_NEAR(*average_precision(list_of(rel, total)), ap_oracle(rel, total), 1e-12);
  }
}

TEST(Evaluation, MeansOfAps) {
  const std::vector<double> two{0.5, 1.0};
  EXPECT_DOUBLE_EQ(mean_average_precision(two), 0.75);
  const std::vector<double> three{0.2, 0.4, 0.9};
  EXPECT_DOUBLE_EQ(sequence_ap(three), 0.5);
  EXPECT_THROW(mean_average_precision({}), std::invalid_argument);
  EXPECT_THROW(sequence_ap({}), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> aps(25);
  for (auto& a : aps) a = u(rng);
  const double base = mean_average_precision(aps);
  auto perm = aps;
  std::shuffle(perm.begin(), perm.end(), rng);
  EXPECT_NEAR(mean_average_precision(perm), base, 1e-12);
  aps[7] += 0.1;
  EXPECT_GT(mean_average_precision(aps), base);
}

TEST(Evaluation, RankDatabase) {
  const std::vector<std::string> ids{"c", "a", "b", "d"};
  const std::vector<int> scores{5, 9, 5, 0};
  const std::vector<std::string> relevant{"b", "d", "zz"};
  const auto l = rank_database(ids, scores, relevant);
  EXPECT_EQ(l.entries, (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(l.relevance, (std::vector<int>{0, 1, 0, 1}));
  EXPECT_EQ(l.total_relevant, 2);
  EXPECT_DOUBLE_EQ(*average_precision(l), (0.5 + 0.5) / 2);
  const std::vector<int> short_scores{1};
  EXPECT_THROW(rank_database(ids, short_scores, relevant), std::invalid_argument);
}

TEST(Evaluation, RelevanceFile) {
  const auto d = temp_dir("rel");
  std::ofstream(d / "rel.txt") << "# query relevant...\nq1: a b\nq2 c # trailing\n\nq3\n";
  const auto t = read_relevance(d / "rel.txt");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.at("q1"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.at("q2"), (std::vector<std::string>{"c"}));
  EXPECT_TRUE(t.at("q3").empty());
  EXPECT_THROW(read_relevance(d / "missing.txt"), std::runtime_error);
}

TEST(Evaluation, LocateObjectRecoversTranslation) {
  std::mt19937_64 rng(6);
  const auto obj1 = random_cloud(rng, 60, 200, 150);
  const auto obj2 = random_cloud(rng, 60, 200, 150);
  std::vector<ObjectModel> db{{1, obj1, image_corners(200, 150)}, {2, obj2, image_corners(200, 150)}};

  auto frame = shifted(obj2, 100.0, 50.0);
  const auto clutter = random_cloud(rng, 80, 640, 480);
  frame.insert(frame.end(), clutter.begin(), clutter.end());
  const auto est = locate_object(frame, db);
  ASSERT_TRUE(est.has_value());
  EXPECT_EQ(est->object_id, 2);
  EXPECT_EQ(est->mpr, 60);
  EXPECT_NEAR(est->centroid.x, 100.0 + 199.0 / 2, 1e-6);
  EXPECT_NEAR(est->centroid.y, 50.0 + 149.0 / 2, 1e-6);
  EXPECT_NEAR(est->corners[2].x, 299.0, 1e-6);
}

TEST(Evaluation, LocateObjectEdgeCases) {
  std::mt19937_64 rng(7);
  const auto cloud = random_cloud(rng, 40, 100, 100);
  const std::vector<ObjectModel> twins{{5, cloud, image_corners(100, 100)}, {3, cloud, image_corners(100, 100)}};
  const auto est = locate_object(shifted(cloud, 10, 10), twins);
  ASSERT_TRUE(est.has_value());
  EXPECT_EQ(est->object_id, 3);
  EXPECT_FALSE(locate_object({}, twins).has_value());
  EXPECT_THROW(locate_object(cloud, {}), std::invalid_argument);
  const auto unrelated = random_cloud(rng, 40, 100, 100);
  EXPECT_FALSE(locate_object(unrelated, twins).has_value());
}

TEST(Evaluation, TrackingCorrectness) {
  ObjectEstimate e;
  e.object_id = 2;
  e.centroid = {100.0, 100.0};
  const GroundTruthRecord at10{0, 2, 110.0, 100.0};
  const GroundTruthRecord at10_5{0, 2, 100.0, 110.5};
  const GroundTruthRecord wrong_id{0, 1, 100.0, 100.0};
  EXPECT_TRUE(estimate_correct(e, at10));
  EXPECT_FALSE(estimate_correct(e, at10_5));
  EXPECT_FALSE(estimate_correct(e, wrong_id));
  EXPECT_FALSE(estimate_correct(std::nullopt, at10));
  EXPECT_TRUE(estimate_correct(e, at10_5, 11.0));

  std::vector<std::optional<ObjectEstimate>> per_frame{e, std::nullopt, e};
  const GroundTruth truth{{0, 2, 101, 101}, {1, 2, 100, 100}, {2, 1, 100, 100}, {3, 2, 100, 100}};
  EXPECT_DOUBLE_EQ(tracking_accuracy(per_frame, truth), 0.25);
  EXPECT_DOUBLE_EQ(tracking_accuracy(per_frame, {}), 0.0);
}

TEST(Evaluation, GroundTruthRoundTrip) {
  const auto d = temp_dir("gt");
  const GroundTruth truth{{0, 1, 10.5, 20.25}, {1, 3, 1.0 / 3.0, 400.0}};
  write_ground_truth(d / "truth.txt", truth);
  const auto back = read_ground_truth(d / "truth.txt");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].object_id, 3);
  EXPECT_NEAR(back[1].cx, 1.0 / 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(back[0].cy, 20.25);
  std::ofstream(d / "bad.txt") << "0 1 2\n";
  EXPECT_THROW(read_ground_truth(d / "bad.txt"), std::runtime_error);
  EXPECT_THROW(read_ground_truth(d / "nope.txt"), std::runtime_error);
}
