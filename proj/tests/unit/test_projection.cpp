#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epimem/error.hpp"
#include "epimem/projection.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace epimem;

TEST(Unproject, PinholeFormula) {
  const CameraIntrinsics k;
  const CameraPoint a = unproject(k.cx, k.cy, 3.0, k);
  EXPECT_EQ(a.x, 0.0);
  EXPECT_EQ(a.y, 0.0);
  EXPECT_EQ(a.z, 3.0);
  const CameraPoint b = unproject(k.cx + k.fx, k.cy, 2.0, k);
  EXPECT_DOUBLE_EQ(b.x, 2.0);
  EXPECT_DOUBLE_EQ(b.y, 0.0);
  EXPECT_DOUBLE_EQ(b.z, 2.0);
  const CameraPoint l = unproject(k.cx - 7, 40, 1.3, k);
  const CameraPoint r = unproject(k.cx + 7, 40, 1.3, k);
  EXPECT_DOUBLE_EQ(l.x, -r.x);
  EXPECT_THROW(unproject(1, 1, 0.0, k), Error);
  EXPECT_THROW(unproject(1, 1, -1.0, k), Error);
}

TEST(CamToWorld, HandEvaluated) {
  const WorldPoint w = cam_to_world({0, 0, 2}, {1, 1, 0, 0}, 1.5);
  EXPECT_DOUBLE_EQ(w.x, 3.0);
  EXPECT_DOUBLE_EQ(w.z, 1.0);
  EXPECT_DOUBLE_EQ(w.y, 1.5);
  // Facing +z, camera right points to -x.
  const WorldPoint q = cam_to_world({1, 0.5, 2}, {1, 1, kPi / 2, 0}, 1.5);
  EXPECT_NEAR(q.x, 0.0, 1e-12);
  EXPECT_NEAR(q.z, 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(q.y, 1.0);
}

TEST(CamToWorld, InverseRoundTrip) {
  test::Lcg rng(3);
  for (int i = 0; i < 1000; ++i) {
    const CameraPoint p{rng.uniform() * 4 - 2, rng.uniform() * 2 - 1, rng.uniform() * 9 + 0.1};
    const Pose pose{rng.uniform() * 10, rng.uniform() * 10, rng.uniform() * 6.2 - 3.1, 0};
    const CameraPoint back = world_to_cam(cam_to_world(p, pose, 1.5), pose, 1.5);
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
    EXPECT_NEAR(back.z, p.z, 1e-9);
  }
}

TEST(ProjectFrame, EmptyFrameGivesNothing) {
  const CameraIntrinsics k;
  const Projection p = project_frame(Frame(64, 64), {5, 5, 0, 3}, k, grid_for_bounds(10, 10));
  EXPECT_TRUE(p.votes.entries.empty());
  EXPECT_EQ(p.observed.count(), 0u);
  EXPECT_EQ(p.observed.step_index, 3);
}

TEST(ProjectFrame, FrameSizeMustMatch) {
  EXPECT_THROW(project_frame(Frame(32, 32), {5, 5, 0, 0}, {}, grid_for_bounds(10, 10)), Error);
}

TEST(ProjectFrame, AgreesWithBruteForceOracle) {
  const CameraIntrinsics k;
  const GridSpec g = grid_for_bounds(10, 10);
  const oracle::Camera cam{k.fx, k.fy, k.cx, k.cy, k.camera_height};
  const oracle::Grid og{g.cell_size, g.origin_x, g.origin_z, g.rows, g.cols};
  test::Lcg rng(17);
  int compared = 0;
  for (int i = 0; i < 3000; ++i) {
    Frame f(64, 64);
    const int u = rng.below(64), v = rng.below(64);
    const double d = 0.2 + rng.uniform() * 6;
    f.depth[static_cast<std::size_t>(v) * 64 + u] = static_cast<float>(d);
    const Pose pose{2 + rng.uniform() * 6, 2 + rng.uniform() * 6, rng.uniform() * 6.28 - 3.14, 0};
    const auto cells = pixel_cells(f, pose, k, g, {-1e9, 1e9});
    const auto expect = oracle::brute_project_point(u, v, static_cast<float>(d), pose.x, pose.z,
                                                    pose.yaw, cam, og);
    const auto got = cells[static_cast<std::size_t>(v) * 64 + u];
    ASSERT_EQ(got >= 0, expect.has_value());
    if (!expect) continue;
    const Cell c = g.cell_at(static_cast<std::size_t>(got));
    EXPECT_LE(std::abs(c.row - expect->first), 1);
    EXPECT_LE(std::abs(c.col - expect->second), 1);
    ++compared;
  }
  EXPECT_GT(compared, 2000);
}

TEST(ProjectFrame, HeightFilterDropsStrays) {
  const CameraIntrinsics k;
  Frame f(64, 64);
  // Pixel far above the horizon at 5 m: y = 1.5 + 30/32 * 5 > 2.5.
  f.depth[2 * 64 + 32] = 5.0f;
  const Projection p = project_frame(f, {5, 5, 0, 0}, k, grid_for_bounds(20, 20), {-0.05, 2.5});
  EXPECT_EQ(p.observed.count(), 0u);
}

TEST(ProjectFrame, BoxFootprintWithinOneCell) {
  Scene s = test::open_scene();
  const auto b = test::box(1, Category::kBed, 4.0, 3.5, 5.6, 5.5, 0.6);
  s.objects.push_back(b);
  const GridSpec g = grid_for_bounds(10, 10);
  const SemanticGrid gt = scene_to_gt_map(s, g);
  const CameraIntrinsics k;
  for (const Pose& pose : {Pose{1.5, 4.5, 0.0, 0}, Pose{2.0, 2.0, 0.6, 0}, Pose{7.5, 7.0, -2.3, 0}}) {
    const Frame f = render_frame(s, pose, k);
    const Projection p = project_frame(f, pose, k, g, {-0.05, 2.5});
    int labelled = 0, agree = 0;
    for (const auto& e : p.votes.entries) {
      if (e.category != to_id(Category::kBed)) continue;
      ++labelled;
      const Cell c = g.cell_at(e.cell);
      const auto w = g.world_of(c);
      // Chebyshev distance in cells from the analytic footprint.
      const double dx = std::max({b.footprint.min[0] - w[0], 0.0, w[0] - b.footprint.max[0]});
      const double dz = std::max({b.footprint.min[1] - w[1], 0.0, w[1] - b.footprint.max[1]});
      EXPECT_LE(std::max(dx, dz), g.cell_size * 1.0 + 1e-9) << c.row << "," << c.col;
      agree += gt.category[e.cell] == to_id(Category::kBed);
    }
    ASSERT_GT(labelled, 10);
    // Side faces bin onto the footprint edge, so a few labels spill one cell out.
    EXPECT_GE(agree, 0.8 * labelled);
  }
}

TEST(ProjectFrame, VotesCountEveryBinnedPixelAndCommute) {
  const Scene s = generate_scene(6, SceneConfig::defaults());
  const CameraIntrinsics k;
  const GridSpec g = grid_for_bounds(s.width, s.depth);
  const Pose pose{s.rooms[0].center()[0], s.rooms[0].center()[1], 0.5, 2};
  const Frame f = render_frame(s, pose, k);
  const Projection p = project_frame(f, pose, k, g, {-0.05, s.wall_height});
  const auto cells = pixel_cells(f, pose, k, g, {-0.05, s.wall_height});
  const auto binned = static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(),
                                                             [](std::int32_t c) { return c >= 0; }));
  EXPECT_EQ(p.votes.total(), binned);
  EXPECT_LE(binned, f.depth.size());
  for (auto c : p.observed.cells) EXPECT_LT(c, g.size());
  EXPECT_TRUE(std::is_sorted(p.observed.cells.begin(), p.observed.cells.end()));

  // Splitting the frame in two and merging the votes gives the same histogram.
  Frame top = f, bottom = f;
  for (int v = 0; v < 64; ++v)
    for (int u = 0; u < 64; ++u) (v < 32 ? bottom : top).depth[static_cast<std::size_t>(v) * 64 + u] = 0;
  const CellVotes merged =
      CellVotes::merge(project_frame(bottom, pose, k, g, {-0.05, 2.5}).votes,
                       project_frame(top, pose, k, g, {-0.05, 2.5}).votes);
  ASSERT_EQ(merged.entries.size(), p.votes.entries.size());
  for (std::size_t i = 0; i < merged.entries.size(); ++i) {
    EXPECT_EQ(merged.entries[i].cell, p.votes.entries[i].cell);
    EXPECT_EQ(merged.entries[i].category, p.votes.entries[i].category);
    EXPECT_EQ(merged.entries[i].count, p.votes.entries[i].count);
  }
}

TEST(ProjectFrames, ObservedIsSubsetOfUnion) {
  const Scene s = generate_scene(6, SceneConfig::defaults());
  const CameraIntrinsics k;
  const GridSpec g = grid_for_bounds(s.width, s.depth);
  std::vector<Pose> poses;
  for (int i = 0; i < 8; ++i) poses.push_back({s.rooms[0].center()[0], s.rooms[0].center()[1], i * 0.8, i});
  const auto frames = render_frames(s, poses, k);
  const auto projections = project_frames(frames, poses, k, g);
  std::vector<std::uint8_t> all(g.size(), 0);
  for (const auto& p : projections)
    for (auto c : p.observed.cells) all[c] = 1;
  for (const auto& p : projections) {
    const auto dense = p.observed.dense();
    for (std::size_t c = 0; c < dense.size(); ++c)
      if (dense[c]) EXPECT_TRUE(all[c]);
  }
  EXPECT_EQ(projections[3].votes.step_index, 3);
}

TEST(ProjectFrame, PbmExport) {
  ObservedMask m;
  m.spec = grid_for_bounds(0.2, 0.04);  // 2 x 10
  m.cells = {0, 9, 10};
  std::ostringstream os;
  write_pbm(os, m);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("P4\n10 2\n", 0), 0u);
  EXPECT_EQ(s.size(), std::string("P4\n10 2\n").size() + 4);
}
