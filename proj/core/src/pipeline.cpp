#include "epimem/pipeline.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "epimem/error.hpp"
#include "epimem/log.hpp"
#include "epimem/parallel.hpp"

namespace epimem {
namespace {

SceneConfig scene_config_from_json(const nlohmann::json& j, SceneConfig c) {
  c.width = j.value("width_m", c.width);
  c.depth = j.value("depth_m", c.depth);
  c.wall_height = j.value("wall_height_m", c.wall_height);
  c.wall_thickness = j.value("wall_thickness_m", c.wall_thickness);
  c.door_width = j.value("door_width_m", c.door_width);
  if (j.contains("rooms")) {
    const auto r = j.at("rooms").get<std::vector<int>>();
    EPIMEM_CHECK(r.size() == 2, "config: scene.rooms must be [min, max]");
    c.rooms = {r[0], r[1]};
  }
  if (j.contains("counts")) {
    for (const auto& [name, range] : j.at("counts").items()) {
      const auto cat = category_from_name(name);
      EPIMEM_CHECK(cat && *cat != Category::kBackground, "config: unknown category '" << name << "'");
      const auto r = range.get<std::vector<int>>();
      EPIMEM_CHECK(r.size() == 2, "config: count for '" << name << "' must be [min, max]");
      c.counts[*cat] = {r[0], r[1]};
    }
  }
  c.object_gap = j.value("object_gap_m", c.object_gap);
  c.agent_radius = j.value("agent_radius_m", c.agent_radius);
  c.min_distinct_categories = j.value("min_distinct_categories", c.min_distinct_categories);
  c.scene_attempts = j.value("scene_attempts", c.scene_attempts);
  return c;
}

nlohmann::json scene_config_to_json(const SceneConfig& c) {
  nlohmann::json counts;
  for (const auto& [cat, r] : c.counts) counts[std::string(category_name(cat))] = {r.min, r.max};
  return {{"width_m", c.width},
          {"depth_m", c.depth},
          {"wall_height_m", c.wall_height},
          {"wall_thickness_m", c.wall_thickness},
          {"door_width_m", c.door_width},
          {"rooms", {c.rooms.min, c.rooms.max}},
          {"counts", counts},
          {"object_gap_m", c.object_gap},
          {"agent_radius_m", c.agent_radius},
          {"min_distinct_categories", c.min_distinct_categories},
          {"scene_attempts", c.scene_attempts}};
}

TourConfig tour_config_from_json(const nlohmann::json& j, TourConfig c) {
  c.target_steps = j.value("steps", c.target_steps);
  c.agent_radius = j.value("agent_radius_m", c.agent_radius);
  c.nav_resolution = j.value("nav_resolution_m", c.nav_resolution);
  c.coverage_target = j.value("coverage_target", c.coverage_target);
  c.coverage_retries = j.value("coverage_retries", c.coverage_retries);
  c.sight_range = j.value("sight_range_m", c.sight_range);
  c.spin_at_rooms = j.value("spin_at_rooms", c.spin_at_rooms);
  c.cell_size = j.value("cell_size_m", c.cell_size);
  if (j.contains("intrinsics")) c.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  return c;
}

nlohmann::json tour_config_to_json(const TourConfig& c) {
  return {{"steps", c.target_steps},
          {"agent_radius_m", c.agent_radius},
          {"nav_resolution_m", c.nav_resolution},
          {"coverage_target", c.coverage_target},
          {"coverage_retries", c.coverage_retries},
          {"sight_range_m", c.sight_range},
          {"spin_at_rooms", c.spin_at_rooms},
          {"cell_size_m", c.cell_size},
          {"intrinsics", intrinsics_to_json(c.intrinsics)}};
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("scene")) c.scene = scene_config_from_json(j.at("scene"), c.scene);
    if (j.contains("tour")) c.tour = tour_config_from_json(j.at("tour"), c.tour);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      auto& o = c.dataset;
      o.train_scenes = d.value("train_scenes", o.train_scenes);
      o.test_scenes = d.value("test_scenes", o.test_scenes);
      o.train_seed_base = d.value("train_seed_base", o.train_seed_base);
      o.test_seed_base = d.value("test_seed_base", o.test_seed_base);
      o.short_tours_per_tour = d.value("short_tours_per_tour", o.short_tours_per_tour);
      o.keep_empty_short_tours = d.value("keep_empty_short_tours", o.keep_empty_short_tours);
      o.short_tour.length = d.value("short_tour_length", o.short_tour.length);
      o.short_tour.window_cells = d.value("window_cells", o.short_tour.window_cells);
      o.questions.full_footprint_masks =
          d.value("full_footprint_masks", o.questions.full_footprint_masks);
      o.questions.max_spatial_instances =
          d.value("max_spatial_instances", o.questions.max_spatial_instances);
    }
    if (j.contains("model")) c.model = LingUNetConfig::from_json(j.at("model"));
    if (j.contains("training")) c.training = TrainConfig::from_json(j.at("training"));
    if (j.contains("noise")) c.noise = NoiseSpec::from_json(j.at("noise"));
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval.threshold = e.value("threshold", c.eval.threshold);
      c.eval.metrics.undefined_value = e.value("undefined_value", c.eval.metrics.undefined_value);
      c.eval.label_noise = e.value("label_noise", c.eval.label_noise);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  EPIMEM_CHECK(c.eval.threshold > 0 && c.eval.threshold < 1, "config: threshold must be in (0, 1)");
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {{"seed", seed},
          {"scene", scene_config_to_json(scene)},
          {"tour", tour_config_to_json(tour)},
          {"dataset",
           {{"train_scenes", dataset.train_scenes},
            {"test_scenes", dataset.test_scenes},
            {"train_seed_base", dataset.train_seed_base},
            {"test_seed_base", dataset.test_seed_base},
            {"short_tours_per_tour", dataset.short_tours_per_tour},
            {"keep_empty_short_tours", dataset.keep_empty_short_tours},
            {"short_tour_length", dataset.short_tour.length},
            {"window_cells", dataset.short_tour.window_cells},
            {"full_footprint_masks", dataset.questions.full_footprint_masks},
            {"max_spatial_instances", dataset.questions.max_spatial_instances}}},
          {"model", model.to_json()},
          {"training", training.to_json()},
          {"noise", noise.to_json()},
          {"eval",
           {{"threshold", eval.threshold},
            {"undefined_value", eval.metrics.undefined_value},
            {"label_noise", eval.label_noise}}}};
}

ProjectionOptions projection_options(const Scene& scene) {
  ProjectionOptions o;
  o.max_height = scene.wall_height;
  return o;
}

TourData build_tour_data(std::uint64_t scene_seed, const RunConfig& config,
                         const std::string& tour_id) {
  TourData d;
  d.scene = generate_scene(scene_seed, config.scene);
  const std::uint64_t tour_seed = scene_seed ^ (config.seed * 0x9e3779b97f4a7c15ULL);
  TourPlan plan = generate_tour(d.scene, tour_seed, config.tour);
  d.coverage = plan.coverage;
  d.tour = make_tour(d.scene, tour_id, tour_seed, config.tour.intrinsics, std::move(plan));
  d.grid = grid_for_bounds(d.scene.width, d.scene.depth, config.tour.cell_size);
  const auto options = projection_options(d.scene);
  const auto projections =
      project_frames(d.tour.frames, d.tour.poses, d.tour.intrinsics, d.grid, options);
  const SemanticGrid gt = scene_to_gt_map(d.scene, d.grid);

  auto shorts = extract_short_tours(d.tour, projections, tour_seed,
                                    config.dataset.short_tours_per_tour,
                                    config.dataset.short_tour);
  std::vector<ShortTourData> all(shorts.size());
  parallel_for(shorts.size(), [&](std::size_t k) {
    ShortTourData& s = all[k];
    s.short_tour = std::move(shorts[k]);
    s.id = tour_id + "@" + std::to_string(s.short_tour.start_step);
    std::vector<ObservedMask> masks;
    for (const auto& p : s.short_tour.projections) masks.push_back(p.observed);
    s.questions = generate_questions(gt.crop(s.short_tour.window), masks, config.dataset.questions);
    for (auto& q : s.questions) q.tour_id = s.id;
    if (s.questions.empty() && !config.dataset.keep_empty_short_tours) return;
    EpisodicMemory m = accumulate(s.short_tour.projections);
    std::vector<std::uint32_t>().swap(m.votes);
    s.memory = std::make_shared<const EpisodicMemory>(std::move(m));
    std::vector<Projection>().swap(s.short_tour.projections);
    const auto b = static_cast<long>(s.short_tour.start_step);
    s.poses.assign(d.tour.poses.begin() + b, d.tour.poses.begin() + b + s.short_tour.length);
  });
  for (auto& s : all)
    if (s.memory) d.shorts.push_back(std::move(s));
  d.tour.frames.clear();
  d.tour.frames.shrink_to_fit();
  return d;
}

std::vector<TourData> build_split(const RunConfig& config, bool test) {
  const int n = test ? config.dataset.test_scenes : config.dataset.train_scenes;
  const std::uint64_t base = test ? config.dataset.test_seed_base : config.dataset.train_seed_base;
  std::vector<TourData> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(i);
    out.push_back(build_tour_data(seed, config, (test ? "test" : "train") + std::to_string(seed)));
  }
  return out;
}

void write_dataset(std::ostream& out, const std::vector<TourData>& tours, const RunConfig& config) {
  nlohmann::json h;
  h["format"] = "epimem-dataset";
  h["version"] = 1;
  h["config"] = config.to_json();
  h["tours"] = tours.size();
  out << h.dump() << '\n';
  for (const auto& t : tours) {
    nlohmann::json j;
    j["scene"] = scene_to_json(t.scene);
    j["tour"] = tour_to_json(t.tour);
    j["grid"] = grid_to_json(t.grid);
    j["coverage"] = t.coverage;
    auto shorts = nlohmann::json::array();
    for (const auto& s : t.shorts) {
      auto qs = nlohmann::json::array();
      for (const auto& q : s.questions) qs.push_back(question_to_json(q));
      shorts.push_back({{"id", s.id},
                        {"start_step", s.short_tour.start_step},
                        {"length", s.short_tour.length},
                        {"window", grid_to_json(s.short_tour.window)},
                        {"clipped_cells", s.short_tour.clipped_cells},
                        {"poses", poses_to_json(s.poses)},
                        {"questions", std::move(qs)}});
    }
    j["shorts"] = std::move(shorts);
    out << j.dump() << '\n';
    for (const auto& s : t.shorts) write_memory(out, *s.memory);
  }
  EPIMEM_CHECK(out.good(), "write_dataset: stream error");
}

std::vector<TourData> read_dataset(std::istream& in, RunConfig* config) {
  auto line_json = [&](const char* what) {
    std::string line;
    EPIMEM_CHECK(std::getline(in, line), std::string("read_dataset: missing ") + what);
    try {
      return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("read_dataset: bad ") + what + ": " + e.what());
    }
  };
  const auto h = line_json("header");
  EPIMEM_CHECK(h.value("format", "") == "epimem-dataset", "read_dataset: not a dataset file");
  std::vector<TourData> tours;
  try {
    if (config) *config = RunConfig::from_json(h.at("config"));
    const auto n = h.at("tours").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = line_json("tour record");
      TourData t;
      t.scene = scene_from_json(j.at("scene"));
      t.tour = tour_from_json(j.at("tour"));
      t.grid = grid_from_json(j.at("grid"));
      t.coverage = j.at("coverage").get<double>();
      for (const auto& js : j.at("shorts")) {
        ShortTourData s;
        s.id = js.at("id").get<std::string>();
        s.short_tour.parent_id = t.tour.id;
        s.short_tour.start_step = js.at("start_step").get<int>();
        s.short_tour.length = js.at("length").get<int>();
        s.short_tour.window = grid_from_json(js.at("window"));
        s.short_tour.clipped_cells = js.at("clipped_cells").get<std::size_t>();
        s.poses = poses_from_json(js.at("poses"));
        for (const auto& q : js.at("questions")) s.questions.push_back(question_from_json(q));
        t.shorts.push_back(std::move(s));
      }
      for (auto& s : t.shorts) {
        auto m = std::make_shared<EpisodicMemory>(read_memory(in));
        EPIMEM_CHECK(m->spec == s.short_tour.window, "read_dataset: memory/window mismatch");
        s.memory = std::move(m);
      }
      tours.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("read_dataset: ") + e.what());
  }
  return tours;
}

std::vector<Frame> short_tour_frames(const TourData& tour, const ShortTourData& data) {
  return render_frames(tour.scene, data.poses, tour.tour.intrinsics);
}

RebuiltMemory rebuild_memory(const TourData& tour, const ShortTourData& data,
                             const std::vector<Frame>& frames, const std::vector<Pose>& poses,
                             double epsilon, std::uint64_t corruption_seed) {
  EPIMEM_CHECK(poses.size() == frames.size() && poses.size() == data.poses.size(),
               "rebuild_memory: one pose per frame needed");
  const auto options = projection_options(tour.scene);
  RebuiltMemory r;
  r.projections.resize(poses.size());
  MemoryBuilder builder(data.short_tour.window, static_cast<int>(poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Projection full =
        epsilon > 0.0
            ? project_frame(corrupt_labels(frames[i], epsilon, corruption_seed,
                                           data.poses[i].step_index),
                            poses[i], tour.tour.intrinsics, tour.grid, options)
            : project_frame(frames[i], poses[i], tour.tour.intrinsics, tour.grid, options);
    restrict_projection(full, data.short_tour.window, r.projections[i]);
    builder.add(r.projections[i], static_cast<int>(i));
  }
  r.memory = std::make_shared<const EpisodicMemory>(builder.finish());
  return r;
}

std::vector<std::vector<Pose>> noisy_short_poses(const TourData& tour, const NoiseSpec& noise) {
  std::vector<std::vector<Pose>> out;
  out.reserve(tour.shorts.size());
  // Draws are keyed by step index, so a slice sees the same per-step noise as
  // the full tour; drift is integrated from the slice's first pose.
  for (const auto& s : tour.shorts) out.push_back(noise.apply(s.poses));
  return out;
}

std::vector<TrainSample> make_train_samples(const std::vector<TourData>& tours,
                                            const RunConfig& /*config*/, const NoiseSpec& noise) {
  std::vector<TrainSample> out;
  for (const auto& t : tours) {
    std::vector<std::vector<Pose>> noisy;
    if (noise.model != NoiseModel::kNone) noisy = noisy_short_poses(t, noise);
    for (std::size_t k = 0; k < t.shorts.size(); ++k) {
      const auto& s = t.shorts[k];
      auto memory = s.memory;
      if (noise.model != NoiseModel::kNone) {
        EpisodicMemory m = *rebuild_memory(t, s, short_tour_frames(t, s), noisy[k]).memory;
        std::vector<std::uint32_t>().swap(m.votes);
        memory = std::make_shared<const EpisodicMemory>(std::move(m));
      }
      for (const auto& q : s.questions)
        out.push_back({memory, tokenize_question(q.text), q.answer_mask, is_temporal(q.kind)});
    }
  }
  return out;
}

std::string_view answerer_name(AnswererKind k) {
  switch (k) {
    case AnswererKind::kOracle: return "oracle";
    case AnswererKind::kMapDecode: return "mapdecode";
    case AnswererKind::kEgoSemSeg: return "egosemseg";
    case AnswererKind::kLingUNet: return "lingunet";
  }
  return "?";
}

AnswererKind answerer_from_name(std::string_view name) {
  if (name == "oracle") return AnswererKind::kOracle;
  if (name == "mapdecode") return AnswererKind::kMapDecode;
  if (name == "egosemseg") return AnswererKind::kEgoSemSeg;
  if (name == "lingunet") return AnswererKind::kLingUNet;
  throw Error("unknown answerer '" + std::string(name) + "'");
}

std::vector<QuestionResult> evaluate_split(const std::vector<TourData>& tours,
                                           const RunConfig& config, const EvalRequest& req) {
  EPIMEM_CHECK(req.answerer != AnswererKind::kLingUNet || req.params,
               "evaluate: the learned answerer needs parameters");
  struct Job {
    const TourData* tour;
    std::size_t index;
    const std::vector<Pose>* poses;
  };
  std::vector<std::vector<std::vector<Pose>>> noisy(tours.size());
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < tours.size(); ++t) {
    if (req.noise.model != NoiseModel::kNone) noisy[t] = noisy_short_poses(tours[t], req.noise);
    for (std::size_t k = 0; k < tours[t].shorts.size(); ++k)
      jobs.push_back({&tours[t], k,
                      req.noise.model != NoiseModel::kNone ? &noisy[t][k]
                                                           : &tours[t].shorts[k].poses});
  }

  std::vector<std::vector<QuestionResult>> per_job(jobs.size());
  const CameraIntrinsics& intr = config.tour.intrinsics;
  parallel_for(jobs.size(), [&](std::size_t j) {
    const TourData& t = *jobs[j].tour;
    const ShortTourData& s = t.shorts[jobs[j].index];
    if (s.questions.empty()) return;
    const auto options = projection_options(t.scene);
    const bool rebuilt = req.noise.model != NoiseModel::kNone || req.label_noise > 0.0 ||
                         req.answerer == AnswererKind::kEgoSemSeg;
    std::vector<Frame> frames;
    if (rebuilt || req.ego_metrics) frames = short_tour_frames(t, s);
    RebuiltMemory rm;
    if (rebuilt) rm = rebuild_memory(t, s, frames, *jobs[j].poses, req.label_noise, req.label_seed);
    const EpisodicMemory& memory = rebuilt ? *rm.memory : *s.memory;

    std::unique_ptr<EgoSemSegIndex> ego_index;
    if (req.answerer == AnswererKind::kEgoSemSeg)
      ego_index = std::make_unique<EgoSemSegIndex>(rm.projections);
    NetInput<float> input;
    if (req.answerer == AnswererKind::kLingUNet)
      input = memory_input(memory, req.mode, req.params->config.levels());
    std::unique_ptr<EgoProjector> gt_proj, pred_proj;
    if (req.ego_metrics) {
      gt_proj = std::make_unique<EgoProjector>(frames, s.poses, intr, s.short_tour.window, options);
      pred_proj = req.noise.model != NoiseModel::kNone
                      ? std::make_unique<EgoProjector>(frames, *jobs[j].poses, intr,
                                                       s.short_tour.window, options)
                      : nullptr;
    }

    for (const auto& q : s.questions) {
      Heatmap h;
      switch (req.answerer) {
        case AnswererKind::kOracle: h = oracle_answer(q); break;
        case AnswererKind::kMapDecode: h = mapdecode_answer(memory, q.category); break;
        case AnswererKind::kEgoSemSeg: h = ego_index->answer(q.category); break;
        case AnswererKind::kLingUNet:
          h = lingunet_forward(input, tokenize_question(q.text), *req.params, memory.spec);
          break;
      }
      const Mask pred = binarize(h, config.eval.threshold);
      QuestionResult r;
      r.tour_id = q.tour_id;
      r.kind = q.kind;
      r.category = q.category;
      r.topdown = compute_metrics(pred, h.spec, q.answer_mask, q.spec, config.eval.metrics);
      if (req.ego_metrics) {
        r.has_ego = true;
        r.ego = EgoProjector::pooled_metrics(pred_proj ? *pred_proj : *gt_proj, pred, *gt_proj,
                                             q.answer_mask, config.eval.metrics);
      }
      per_job[j].push_back(r);
    }
  });
  std::vector<QuestionResult> out;
  for (auto& v : per_job) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<double> ious(const std::vector<QuestionResult>& rows, KindFilter filter) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (filter == KindFilter::kSpatial && is_temporal(r.kind)) continue;
    if (filter == KindFilter::kTemporal && !is_temporal(r.kind)) continue;
    v.push_back(r.topdown.iou);
  }
  return v;
}

double mean_iou(const std::vector<QuestionResult>& rows, KindFilter filter) {
  return mean_stderr(ious(rows, filter)).mean;
}

}  // namespace epimem
