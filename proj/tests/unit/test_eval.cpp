#include <gtest/gtest.h>

#include <algorithm>

#include "epimem/answerers.hpp"
#include "epimem/error.hpp"
#include "epimem/eval.hpp"
#include "epimem/memory.hpp"
#include "support.hpp"

using namespace epimem;

TEST(Binarize, ThresholdAndMonotonicity) {
  Heatmap h(grid_for_bounds(0.1, 0.02));  // 1 x 5
  h.score = {0.0, 0.3, 0.5, 0.7, 1.0};
  EXPECT_EQ(binarize(h), (Mask{0, 0, 1, 1, 1}));
  EXPECT_EQ(binarize(h, 0.6), (Mask{0, 0, 0, 1, 1}));
  EXPECT_EQ(binarize(Heatmap(h.spec)), Mask(5, 0));
  test::Lcg rng(1);
  Heatmap r(grid_for_bounds(0.4, 0.4));
  for (auto& s : r.score) s = rng.uniform();
  std::size_t prev = r.score.size() + 1;
  for (double t = 0.05; t < 1.0; t += 0.05) {
    const Mask m = binarize(r, t);
    const auto n = static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Metrics, Examples) {
  const Mask gt{1, 1, 1, 1, 0, 0};
  auto m = compute_metrics(gt, gt);
  EXPECT_EQ(m.iou, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);

  m = compute_metrics(Mask{0, 0, 0, 0, 1, 1}, gt);
  EXPECT_EQ(m.iou, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);

  m = compute_metrics(Mask{1, 1, 0, 0, 0, 0}, gt);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.fn, 2u);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.iou, 0.5);
}

TEST(Metrics, EmptyConventions) {
  const Mask empty(6, 0), some{0, 1, 0, 0, 0, 0};
  auto m = compute_metrics(empty, empty);
  EXPECT_EQ(m.iou, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  m = compute_metrics(empty, some);
  EXPECT_EQ(m.iou, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  m = compute_metrics(empty, some, {1.0});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 0.0);
  m = compute_metrics(some, empty, {1.0});
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.precision, 0.0);
}

TEST(Metrics, SymmetryAndGridCheck) {
  test::Lcg rng(2);
  for (int t = 0; t < 200; ++t) {
    Mask a(50), b(50);
    for (auto& v : a) v = rng.below(3) == 0;
    for (auto& v : b) v = rng.below(3) == 0;
    const auto ab = compute_metrics(a, b), ba = compute_metrics(b, a);
    EXPECT_DOUBLE_EQ(ab.iou, ba.iou);
    EXPECT_DOUBLE_EQ(ab.precision, ba.recall);
    EXPECT_DOUBLE_EQ(ab.recall, ba.precision);
    EXPECT_GE(ab.iou, 0.0);
    EXPECT_LE(ab.iou, std::min(ab.precision, ab.recall) + 1e-15);
  }
  EXPECT_THROW(compute_metrics(Mask(3), Mask(4)), Error);
  const GridSpec g = grid_for_bounds(0.1, 0.1);
  GridSpec shifted = g;
  shifted.origin_x = 0.02;
  EXPECT_THROW(compute_metrics(Mask(25), g, Mask(25), shifted), Error);
}

TEST(Metrics, MeanStderrAndAggregate) {
  const auto s = mean_stderr({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(s.n, 4u);
  EXPECT_EQ(mean_stderr({}).n, 0u);
  const auto a = aggregate({metrics_from_counts(1, 0, 1), metrics_from_counts(1, 1, 0)});
  EXPECT_DOUBLE_EQ(a.iou.mean, 0.5);
  EXPECT_DOUBLE_EQ(a.precision.mean, 0.75);
}

namespace {

struct Fixture {
  Scene scene;
  Tour tour;
  GridSpec grid;
  std::vector<Projection> proj;
};

Fixture small_tour() {
  Fixture f;
  f.scene = generate_scene(2, SceneConfig::defaults());
  TourConfig tc;
  tc.target_steps = 60;
  f.tour = make_tour(f.scene, "t", 3, tc.intrinsics, generate_tour(f.scene, 3, tc));
  f.grid = grid_for_bounds(f.scene.width, f.scene.depth);
  f.proj = project_frames(f.tour.frames, f.tour.poses, f.tour.intrinsics, f.grid,
                          {-0.05, f.scene.wall_height});
  return f;
}

}  // namespace

TEST(Backprojection, FullAndEmptyMasks) {
  const Fixture f = small_tour();
  const ProjectionOptions opt{-0.05, f.scene.wall_height};
  const EpisodicMemory m = accumulate(f.proj);
  const auto full = backproject_to_ego(m.union_observed, f.tour.frames, f.tour.poses,
                                       f.tour.intrinsics, f.grid, opt);
  ASSERT_EQ(full.size(), f.tour.frames.size());
  for (std::size_t t = 0; t < full.size(); ++t) {
    const auto cells = pixel_cells(f.tour.frames[t], f.tour.poses[t], f.tour.intrinsics, f.grid, opt);
    for (std::size_t p = 0; p < cells.size(); ++p) EXPECT_EQ(full[t][p], cells[p] >= 0 ? 1 : 0);
  }
  const auto none = backproject_to_ego(Mask(f.grid.size(), 0), f.tour.frames, f.tour.poses,
                                       f.tour.intrinsics, f.grid, opt);
  for (const auto& fm : none) EXPECT_EQ(std::count(fm.begin(), fm.end(), 1), 0);
}

TEST(Backprojection, OracleIsPerfectInBothSpaces) {
  const Fixture f = small_tour();
  const ProjectionOptions opt{-0.05, f.scene.wall_height};
  std::vector<ObservedMask> masks;
  for (const auto& p : f.proj) masks.push_back(p.observed);
  const auto qs = generate_questions(scene_to_gt_map(f.scene, f.grid), masks);
  ASSERT_FALSE(qs.empty());
  const EgoProjector ego(f.tour.frames, f.tour.poses, f.tour.intrinsics, f.grid, opt);
  EXPECT_EQ(ego.frames(), f.tour.frames.size());
  for (const auto& q : qs) {
    const Mask pred = binarize(oracle_answer(q));
    EXPECT_EQ(pred, q.answer_mask);
    const auto td = compute_metrics(pred, q.answer_mask);
    EXPECT_EQ(td.iou, 1.0);
    const auto e = EgoProjector::pooled_metrics(ego, pred, ego, q.answer_mask);
    EXPECT_EQ(e.iou, 1.0);
    EXPECT_EQ(e.precision, 1.0);
    EXPECT_EQ(e.recall, 1.0);
    EXPECT_GT(e.tp, 0u);
  }
}

TEST(Report, JsonAndCsv) {
  QuestionResult a;
  a.tour_id = "x@0";
  a.kind = QuestionKind::kSpatial;
  a.category = Category::kBed;
  a.topdown = metrics_from_counts(1, 0, 1);
  QuestionResult b = a;
  b.kind = QuestionKind::kFirstSeen;
  b.topdown = metrics_from_counts(1, 0, 0);
  const auto j = report_json("oracle", {a, b});
  EXPECT_EQ(j.at("answerer"), "oracle");
  EXPECT_EQ(j.at("questions").size(), 2u);
  EXPECT_DOUBLE_EQ(j.at("aggregates").at("topdown").at("all").at("iou").at("mean").get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(
      j.at("aggregates").at("topdown").at("temporal").at("iou").at("mean").get<double>(), 1.0);
  const std::string csv = report_csv({a, b});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
