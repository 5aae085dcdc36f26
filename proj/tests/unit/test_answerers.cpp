#include <gtest/gtest.h>

#include <algorithm>

#include "epimem/answerers.hpp"
#include "epimem/error.hpp"
#include "epimem/eval.hpp"
#include "support.hpp"

using namespace epimem;

namespace {

struct Fixture {
  Scene scene;
  Tour tour;
  GridSpec grid;
  ProjectionOptions opt;
  std::vector<Projection> proj;
  EpisodicMemory memory;
  std::vector<QuestionRecord> questions;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    f.scene = generate_scene(12, SceneConfig::defaults());
    TourConfig tc;
    tc.target_steps = 200;
    f.tour = make_tour(f.scene, "t", 4, tc.intrinsics, generate_tour(f.scene, 4, tc));
    f.grid = grid_for_bounds(f.scene.width, f.scene.depth);
    f.opt = {-0.05, f.scene.wall_height};
    f.proj = project_frames(f.tour.frames, f.tour.poses, f.tour.intrinsics, f.grid, f.opt);
    f.memory = accumulate(f.proj);
    std::vector<ObservedMask> masks;
    for (const auto& p : f.proj) masks.push_back(p.observed);
    f.questions = generate_questions(scene_to_gt_map(f.scene, f.grid), masks);
    return f;
  }();
  return f;
}

std::size_t ones(const Mask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)); }

}  // namespace

TEST(Oracle, EmitsTheAnswerMask) {
  const auto& f = fixture();
  ASSERT_FALSE(f.questions.empty());
  for (const auto& q : f.questions) {
    const Heatmap h = oracle_answer(q);
    EXPECT_EQ(h.spec, q.spec);
    EXPECT_EQ(binarize(h), q.answer_mask);
    const auto m = compute_metrics(binarize(h), q.answer_mask);
    EXPECT_EQ(m.iou, 1.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
  }
}

TEST(MapDecode, EmptyMemoryGivesEmptyHeatmap) {
  const EpisodicMemory m(grid_for_bounds(1, 1));
  for (auto c : object_categories()) EXPECT_EQ(ones(binarize(mapdecode_answer(m, c))), 0u);
}

TEST(MapDecode, NoiselessSpatialQuestionsAreAccurate) {
  std::vector<Metrics> ms;
  for (std::uint64_t seed : {12, 13, 14, 15}) {
    const Scene scene = generate_scene(seed, SceneConfig::defaults());
    TourConfig tc;
    tc.target_steps = 300;
    const Tour tour = make_tour(scene, "t", seed, tc.intrinsics, generate_tour(scene, seed, tc));
    const GridSpec grid = grid_for_bounds(scene.width, scene.depth);
    const auto proj = project_frames(tour.frames, tour.poses, tour.intrinsics, grid,
                                     {-0.05, scene.wall_height});
    const EpisodicMemory memory = accumulate(proj);
    std::vector<ObservedMask> masks;
    for (const auto& p : proj) masks.push_back(p.observed);
    const SemanticGrid gt = scene_to_gt_map(scene, grid);
    for (const auto& q : generate_questions(gt, masks)) {
      if (q.kind != QuestionKind::kSpatial) continue;
      const Mask pred = binarize(mapdecode_answer(memory, q));
      // Every observed cell of the category, witnessed instance or not.
      Mask category(grid.size(), 0);
      for (std::size_t c = 0; c < grid.size(); ++c)
        category[c] = memory.union_observed[c] && gt.category[c] == to_id(q.category);
      ms.push_back(compute_metrics(pred, category));
      EXPECT_EQ(compute_metrics(pred, q.answer_mask).recall, 1.0);
      // No temporal reasoning: the temporal kinds get the same answer.
      QuestionRecord first = q;
      first.kind = QuestionKind::kFirstSeen;
      EXPECT_EQ(mapdecode_answer(memory, first).score, mapdecode_answer(memory, q).score);
    }
  }
  ASSERT_GE(ms.size(), 5u);
  const auto a = aggregate(ms);
  EXPECT_GE(a.iou.mean, 0.9) << "precision " << a.precision.mean << " recall " << a.recall.mean;
}

TEST(EgoSemSeg, TemporalKindsMatchSpatialAndIndexAgrees) {
  const auto& f = fixture();
  const EgoSemSegIndex index(f.proj);
  for (const auto& q : f.questions) {
    const Heatmap direct = egosemseg_answer(f.tour.frames, f.tour.poses, f.tour.intrinsics,
                                            f.grid, q, 0.0, 0, f.opt);
    EXPECT_EQ(direct.score, index.answer(q.category).score);
    QuestionRecord spatial = q;
    spatial.kind = QuestionKind::kSpatial;
    EXPECT_EQ(direct.score, egosemseg_answer(f.tour.frames, f.tour.poses, f.tour.intrinsics,
                                             f.grid, spatial, 0.0, 0, f.opt)
                                .score);
  }
}

TEST(EgoSemSeg, NoiselessMatchesMapDecodeUpToBoundaries) {
  const auto& f = fixture();
  const EgoSemSegIndex index(f.proj);
  for (auto c : object_categories()) {
    const Mask ego = binarize(index.answer(c));
    const Mask dec = binarize(mapdecode_answer(f.memory, c));
    if (ones(dec) == 0 && ones(ego) == 0) continue;
    // Every decoded cell got at least one vote for the category.
    for (std::size_t i = 0; i < dec.size(); ++i)
      if (dec[i]) EXPECT_TRUE(ego[i]);
    // Extra cells are minority votes, which should sit on label boundaries.
    std::size_t extra = 0, on_boundary = 0;
    for (std::size_t i = 0; i < ego.size(); ++i) {
      if (!ego[i] || dec[i]) continue;
      ++extra;
      const Cell cell = f.grid.cell_at(i);
      bool boundary = false;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{cell.row + dr, cell.col + dc};
          if (f.grid.contains(n) && f.memory.decoded[f.grid.index(n)] != f.memory.decoded[i])
            boundary = true;
        }
      on_boundary += boundary;
    }
    EXPECT_GE(on_boundary, 0.9 * extra) << category_name(c);
    EXPECT_GE(compute_metrics(ego, dec).iou, 0.8) << category_name(c);
  }
}

TEST(EgoSemSeg, AbsentCategoryIsEmpty) {
  Scene s = test::open_scene(6, 6);
  s.objects.push_back(test::box(1, Category::kBed, 3, 2, 4, 4, 0.6));
  const Pose pose{1, 3, 0, 0};
  const CameraIntrinsics k;
  const Frame fr = render_frame(s, pose, k);
  QuestionRecord q;
  q.category = Category::kSofa;
  const GridSpec g = grid_for_bounds(6, 6);
  EXPECT_EQ(ones(binarize(egosemseg_answer({fr}, {pose}, k, g, q))), 0u);
  q.category = Category::kBed;
  EXPECT_GT(ones(binarize(egosemseg_answer({fr}, {pose}, k, g, q))), 100u);
}

TEST(MemoryInput, PaddingAndChannelModes) {
  EpisodicMemory m(grid_for_bounds(0.22, 0.26));  // 13 x 11
  m.tour_length = 20;
  m.decoded[0] = to_id(Category::kChair);
  m.union_observed[0] = 1;
  m.temporal[0] = 0b101;
  const auto full = memory_input(m, ChannelMode::kFull, 2);
  EXPECT_EQ(full.channels, 33);
  EXPECT_EQ(full.height, 16);
  EXPECT_EQ(full.width, 12);
  EXPECT_EQ(full.rows, 13);
  EXPECT_EQ(full.cols, 11);
  const auto at = [](const NetInput<float>& in, int ch, int r, int c) {
    return in.data[(static_cast<std::size_t>(ch) * in.height + r) * in.width + c];
  };
  EXPECT_EQ(at(full, to_id(Category::kChair), 0, 0), 1.0f);
  EXPECT_EQ(at(full, kBackgroundId, 0, 0), 0.0f);
  EXPECT_EQ(at(full, 13 + 0, 0, 0), 1.0f);
  EXPECT_EQ(at(full, 13 + 1, 0, 0), 0.0f);
  EXPECT_EQ(at(full, 13 + 2, 0, 0), 1.0f);
  // Padding and unobserved cells are background.
  EXPECT_EQ(at(full, kBackgroundId, 15, 11), 1.0f);
  EXPECT_EQ(at(full, kBackgroundId, 1, 1), 1.0f);

  const auto lang = memory_input(m, ChannelMode::kLangOnly, 2);
  const auto notemp = memory_input(m, ChannelMode::kNoTemporal, 2);
  for (int ch = 0; ch < 33; ++ch)
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 12; ++c) {
        if (ch < kNumLabels) {
          EXPECT_EQ(at(lang, ch, r, c), 0.0f);
          EXPECT_EQ(at(notemp, ch, r, c), at(full, ch, r, c));
        } else {
          EXPECT_EQ(at(lang, ch, r, c), at(full, ch, r, c));
          EXPECT_EQ(at(notemp, ch, r, c), 0.0f);
        }
      }
  for (auto mode : {ChannelMode::kFull, ChannelMode::kLangOnly, ChannelMode::kNoTemporal})
    EXPECT_EQ(channel_mode_from_name(channel_mode_name(mode)), mode);
}

TEST(LingUNetAnswer, HeatmapCoversTheMemory) {
  const auto& f = fixture();
  LingUNetConfig c;
  c.widths = {8, 16};
  const auto p = init_params(1, c, 0.05);
  const GridSpec w = f.grid.window({0, 0}, 40, 36);
  EpisodicMemory m(w);
  m.tour_length = 20;
  const Heatmap h = lingunet_answer(m, "where did you see the bed?", p, ChannelMode::kFull);
  EXPECT_EQ(h.spec, w);
  ASSERT_EQ(h.score.size(), w.size());
  for (double s : h.score) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}
