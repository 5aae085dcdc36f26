#include <benchmark/benchmark.h>

#include <cstdlib>
#include <random>

#include "epimem/pipeline.hpp"

using namespace epimem;

namespace {

struct Fixture {
  Scene scene;
  Tour tour;
  GridSpec grid;
  std::vector<Projection> projections;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.scene = generate_scene(2000, SceneConfig::defaults());
    TourConfig tc;
    tc.target_steps = 500;
    x.tour = make_tour(x.scene, "bench", 1, tc.intrinsics, generate_tour(x.scene, 1, tc));
    x.grid = grid_for_bounds(x.scene.width, x.scene.depth);
    x.projections = project_frames(x.tour.frames, x.tour.poses, x.tour.intrinsics, x.grid,
                                   projection_options(x.scene));
    return x;
  }();
  return f;
}

void BM_RenderFrame(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    auto fr = render_frame(f.scene, f.tour.poses[i++ % f.tour.poses.size()], f.tour.intrinsics);
    benchmark::DoNotOptimize(fr.depth.data());
  }
}
BENCHMARK(BM_RenderFrame);

void BM_ProjectFrame(benchmark::State& state) {
  const auto& f = fixture();
  const auto opt = projection_options(f.scene);
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t k = i++ % f.tour.frames.size();
    auto p = project_frame(f.tour.frames[k], f.tour.poses[k], f.tour.intrinsics, f.grid, opt);
    benchmark::DoNotOptimize(p.votes.entries.data());
  }
}
BENCHMARK(BM_ProjectFrame);

// Accumulating N pre-projected steps. The full-grid vote allocation is a
// fixed cost that dominates at these sizes.
void BM_AccumulateMemory(benchmark::State& state) {
  const auto& f = fixture();
  const std::vector<Projection> steps(f.projections.begin(),
                                      f.projections.begin() + state.range(0));
  for (auto _ : state) {
    auto m = accumulate(steps);
    benchmark::DoNotOptimize(m.decoded.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AccumulateMemory)->Arg(125)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_LingUNetForward(benchmark::State& state) {
  LingUNetConfig c;
  c.widths = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 2};
  const auto p = init_params(1, c, 0.05);
  EpisodicMemory m(grid_for_bounds(5, 5));
  m.tour_length = 20;
  std::mt19937 rng(1);
  for (auto& d : m.decoded) d = static_cast<std::uint16_t>(rng() % kNumLabels);
  for (auto& t : m.temporal) t = rng() & 0xfffff;
  for (auto& u : m.union_observed) u = 1;
  for (auto _ : state) {
    auto h = lingunet_answer(m, "where did you first see the chair?", p, ChannelMode::kFull);
    benchmark::DoNotOptimize(h.score.data());
  }
}
BENCHMARK(BM_LingUNetForward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  LingUNetConfig c;
  c.widths = {8, 16};
  auto mem = std::make_shared<EpisodicMemory>(grid_for_bounds(5, 5));
  mem->tour_length = 20;
  std::mt19937 rng(2);
  for (auto& d : mem->decoded) d = static_cast<std::uint16_t>(rng() % kNumLabels);
  TrainSample s{mem, tokenize_question("where did you see the sofa?"), {}};
  s.target.assign(mem->spec.size(), 0);
  for (std::size_t i = 0; i < s.target.size(); ++i) s.target[i] = mem->decoded[i] == to_id(Category::kSofa);
  const auto init = init_params(1, c, 0.05);
  TrainConfig tc;
  tc.max_updates = 1;
  for (auto _ : state) {
    auto r = train_answerer(init, {s, s, s, s}, tc);
    benchmark::DoNotOptimize(r.params.values.data());
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
