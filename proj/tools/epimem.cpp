// epimem: batch command surface over the core library.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epimem/error.hpp"
#include "epimem/log.hpp"
#include "epimem/pipeline.hpp"

namespace fs = std::filesystem;
using namespace epimem;

namespace {

// Output files are written under a temporary name and renamed on success, so
// a failed command leaves nothing behind.
class Outputs {
 public:
  ~Outputs() {
    if (committed_) return;
    for (auto& f : files_) {
      f.stream->close();
      std::error_code ec;
      fs::remove(f.tmp, ec);
    }
  }

  std::ofstream& open(const std::string& path) {
    EPIMEM_CHECK(!path.empty(), "no output path given (--out)");
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    File f{path + ".partial", path, std::make_unique<std::ofstream>(path + ".partial", std::ios::binary)};
    EPIMEM_CHECK(f.stream->good(), "cannot write " + path);
    files_.push_back(std::move(f));
    return *files_.back().stream;
  }

  void write_text(const std::string& path, const std::string& text) { open(path) << text; }

  void commit() {
    for (auto& f : files_) {
      f.stream->close();
      EPIMEM_CHECK(!f.stream->fail(), "write failed: " + f.final_path);
    }
    for (auto& f : files_) fs::rename(f.tmp, f.final_path);
    committed_ = true;
  }

 private:
  struct File {
    std::string tmp, final_path;
    std::unique_ptr<std::ofstream> stream;
  };
  std::vector<File> files_;
  bool committed_ = false;
};

std::ifstream open_input(const std::string& path, const char* what) {
  EPIMEM_CHECK(!path.empty(), std::string("missing input: ") + what);
  std::ifstream f(path, std::ios::binary);
  EPIMEM_CHECK(f.good(), std::string("cannot read ") + what + " '" + path + "'");
  return f;
}

nlohmann::json read_json(const std::string& path, const char* what) {
  auto f = open_input(path, what);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(what) + " '" + path + "': " + e.what());
  }
}

struct Common {
  std::string config, out, scene, tour, dataset, checkpoint, noise;
  std::optional<std::uint64_t> seed;
  std::optional<double> multiplier, threshold;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : RunConfig::from_json(read_json(c.config, "config"));
  if (c.seed) cfg.seed = *c.seed;
  if (!c.noise.empty()) cfg.noise.model = noise_model_from_name(c.noise);
  if (c.multiplier) cfg.noise.multiplier = *c.multiplier;
  if (c.threshold) cfg.eval.threshold = *c.threshold;
  return RunConfig::from_json(cfg.to_json());  // re-validates overrides
}

// ---------------------------------------------------------------- images

using Rgb = std::array<std::uint8_t, 3>;

Rgb label_color(std::uint16_t label) {
  static const std::array<Rgb, kNumLabels> palette{{
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189},
      {140, 86, 75},  {227, 119, 194}, {127, 127, 127}, {188, 189, 34}, {23, 190, 207},
      {174, 199, 232}, {255, 187, 120}, {245, 245, 245},
  }};
  return palette[std::min<std::size_t>(label, kNumLabels - 1)];
}

struct Image {
  int width = 0, height = 0;
  std::vector<Rgb> px;
  Image(int w, int h, Rgb fill = {0, 0, 0}) : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}
  Rgb& at(int r, int c) { return px[static_cast<std::size_t>(r) * width + c]; }
};

void write_ppm(std::ostream& out, const Image& img) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const auto& p : img.px) out.write(reinterpret_cast<const char*>(p.data()), 3);
}

void write_pgm(std::ostream& out, int width, int height, const std::vector<std::uint8_t>& v) {
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
}

Image label_image(const GridSpec& spec, const std::vector<std::uint16_t>& labels,
                  const std::vector<std::uint8_t>* observed = nullptr) {
  Image img(spec.cols, spec.rows);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * spec.cols + c;
      img.at(r, c) = observed && !(*observed)[i] ? Rgb{0, 0, 0} : label_color(labels[i]);
    }
  return img;
}

std::vector<std::uint8_t> heatmap_bytes(const Heatmap& h) {
  std::vector<std::uint8_t> v(h.score.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<std::uint8_t>(std::lround(std::clamp(h.score[i], 0.0, 1.0) * 255));
  return v;
}

void draw_path(Image& img, const GridSpec& spec, const std::vector<Pose>& poses, Rgb color) {
  for (const auto& p : poses) {
    const Cell c = spec.cell_of(p.x, p.z);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = c.row + dr, cc = c.col + dc;
        if (r >= 0 && r < img.height && cc >= 0 && cc < img.width) img.at(r, cc) = color;
      }
  }
}

// ---------------------------------------------------------------- commands

void cmd_generate_scene(const Common& c) {
  const RunConfig cfg = load_config(c);
  const Scene s = generate_scene(cfg.seed, cfg.scene);
  Outputs out;
  out.write_text(c.out, scene_to_json(s).dump(2) + "\n");
  out.commit();
}

Scene load_scene(const Common& c) { return scene_from_json(read_json(c.scene, "scene")); }

void cmd_generate_tour(const Common& c, const std::string& frames_path) {
  const RunConfig cfg = load_config(c);
  const Scene scene = load_scene(c);
  TourPlan plan = generate_tour(scene, cfg.seed, cfg.tour);
  const double coverage = plan.coverage;
  const Tour tour = make_tour(scene, fs::path(c.out).stem().string(), cfg.seed,
                              cfg.tour.intrinsics, std::move(plan), !frames_path.empty());
  Outputs out;
  auto j = tour_to_json(tour);
  j["coverage"] = coverage;
  out.write_text(c.out, j.dump() + "\n");
  if (!frames_path.empty()) {
    auto& f = out.open(frames_path);
    write_frame_pack(f, tour.frames);
  }
  out.commit();
  std::cout << "tour " << tour.id << ": " << tour.actions.size() << " steps, coverage " << coverage
            << "\n";
}

struct LoadedTour {
  Scene scene;
  Tour tour;
  GridSpec grid;
};

LoadedTour load_tour(const Common& c, const RunConfig& cfg) {
  LoadedTour t;
  t.scene = load_scene(c);
  t.tour = tour_from_json(read_json(c.tour, "tour"));
  t.grid = grid_for_bounds(t.scene.width, t.scene.depth, cfg.tour.cell_size);
  return t;
}

void cmd_build_memory(const Common& c) {
  const RunConfig cfg = load_config(c);
  const LoadedTour t = load_tour(c, cfg);
  const auto frames = render_frames(t.scene, t.tour.poses, t.tour.intrinsics);
  const auto poses = cfg.noise.apply(t.tour.poses);
  const EpisodicMemory m = accumulate(
      project_frames(frames, poses, t.tour.intrinsics, t.grid, projection_options(t.scene)));
  Outputs out;
  auto& f = out.open(c.out);
  write_memory(f, m);
  out.commit();
  std::size_t seen = 0;
  for (auto v : m.union_observed) seen += v;
  std::cout << "memory " << m.spec.rows << "x" << m.spec.cols << ", " << seen << " observed cells\n";
}

void cmd_make_dataset(const Common& c, const std::string& split) {
  const RunConfig cfg = load_config(c);
  EPIMEM_CHECK(split == "train" || split == "test", "--split must be train or test");
  const auto tours = build_split(cfg, split == "test");
  Outputs out;
  auto& f = out.open(c.out);
  write_dataset(f, tours, cfg);
  out.commit();
  std::size_t shorts = 0, questions = 0;
  for (const auto& t : tours) {
    shorts += t.shorts.size();
    for (const auto& s : t.shorts) questions += s.questions.size();
  }
  std::cout << split << ": " << tours.size() << " tours, " << shorts << " short tours, "
            << questions << " questions\n";
}

std::vector<TourData> load_dataset(const Common& c, RunConfig& cfg) {
  auto f = open_input(c.dataset, "dataset");
  RunConfig stored;
  auto tours = read_dataset(f, &stored);
  // The dataset's own config applies unless a config file overrides it.
  cfg = c.config.empty() ? stored : load_config(c);
  if (c.config.empty()) {
    if (c.seed) cfg.seed = *c.seed;
    if (!c.noise.empty()) cfg.noise.model = noise_model_from_name(c.noise);
    if (c.multiplier) cfg.noise.multiplier = *c.multiplier;
    if (c.threshold) cfg.eval.threshold = *c.threshold;
  }
  return tours;
}

MiniLingUNetParams load_checkpoint(const std::string& path, ChannelMode* mode) {
  auto f = open_input(path, "checkpoint");
  nlohmann::json h;
  auto p = read_checkpoint(f, &h);
  if (mode) *mode = channel_mode_from_name(h.at("extra").value("mode", std::string("full")));
  return p;
}

void cmd_train(const Common& c, const std::string& mode_name, const std::string& loss_csv) {
  RunConfig cfg;
  const auto tours = load_dataset(c, cfg);
  TrainConfig tc = cfg.training;
  tc.mode = channel_mode_from_name(mode_name);
  const auto samples = make_train_samples(tours, cfg, cfg.noise);
  EPIMEM_CHECK(!samples.empty(), "train: dataset has no questions");
  const auto init = init_params(cfg.seed, cfg.model, positive_ratio(samples));
  std::cerr << "training " << mode_name << " on " << samples.size() << " samples\n";
  const auto r = train_answerer(init, samples, tc, [](int u, double loss) {
    if (u % 100 == 0) std::cerr << "  update " << u << " loss " << loss << "\n";
  });
  Outputs out;
  auto& f = out.open(c.out);
  write_checkpoint(f, r.params,
                   {{"mode", mode_name}, {"training", tc.to_json()}, {"samples", samples.size()},
                    {"noise", cfg.noise.to_json()}});
  if (!loss_csv.empty()) out.write_text(loss_csv, loss_history_csv(r.loss_history));
  out.commit();
  std::cout << "trained " << r.loss_history.size() << " updates, final loss "
            << r.loss_history.back() << "\n";
}

void cmd_ask(const Common& c, const std::string& memory_path, const std::string& question) {
  const RunConfig cfg = load_config(c);
  auto mf = open_input(memory_path, "memory (--memory)");
  const EpisodicMemory memory = read_memory(mf);
  EPIMEM_CHECK(!question.empty(), "missing --question");
  ChannelMode mode = ChannelMode::kFull;
  const auto params = load_checkpoint(c.checkpoint, &mode);
  const Heatmap h = lingunet_answer(memory, question, params, mode);
  const Mask m = binarize(h, cfg.eval.threshold);
  Outputs out;
  if (!c.out.empty()) {
    auto& f = out.open(c.out);
    write_pgm(f, h.spec.cols, h.spec.rows, heatmap_bytes(h));
  }
  out.commit();
  std::cout << nlohmann::json{{"question", question},
                              {"threshold", cfg.eval.threshold},
                              {"cells", std::count(m.begin(), m.end(), 1)},
                              {"max_score", *std::max_element(h.score.begin(), h.score.end())}}
                   .dump()
            << "\n";
}

EvalRequest make_request(const Common& c, const std::string& answerer, const RunConfig& cfg,
                         MiniLingUNetParams& params) {
  EvalRequest req;
  req.answerer = answerer_from_name(answerer);
  if (req.answerer == AnswererKind::kLingUNet) {
    params = load_checkpoint(c.checkpoint, &req.mode);
    req.params = &params;
  }
  req.noise = cfg.noise;
  return req;
}

void cmd_evaluate(const Common& c, const std::string& answerer, const std::string& csv,
                  double label_noise, bool ego) {
  RunConfig cfg;
  const auto tours = load_dataset(c, cfg);
  MiniLingUNetParams params;
  EvalRequest req = make_request(c, answerer, cfg, params);
  req.label_noise = label_noise;
  req.label_seed = cfg.seed;
  req.ego_metrics = ego;
  const auto rows = evaluate_split(tours, cfg, req);
  Outputs out;
  out.write_text(c.out, report_json(answerer, rows).dump(2) + "\n");
  if (!csv.empty()) out.write_text(csv, report_csv(rows));
  out.commit();
  std::cout << answerer << ": " << rows.size() << " questions, mean IoU " << mean_iou(rows)
            << " (spatial " << mean_iou(rows, KindFilter::kSpatial) << ", first/last "
            << mean_iou(rows, KindFilter::kTemporal) << ")\n";
}

void cmd_noise_study(const Common& c, const std::string& answerer, int seeds) {
  RunConfig cfg;
  const auto tours = load_dataset(c, cfg);
  EPIMEM_CHECK(seeds >= 1, "--seeds must be positive");
  MiniLingUNetParams params;
  EvalRequest req = make_request(c, answerer, cfg, params);
  std::ostringstream csv;
  csv << "noise,multiplier,seeds,questions,iou,iou_stderr,precision,recall,spatial_iou,temporal_iou\n";
  for (auto model : {NoiseModel::kIndependent, NoiseModel::kDrift}) {
    for (double mult : {0.0, 0.5, 1.0}) {
      std::vector<double> iou, prec, rec, sp, tmp;
      std::size_t n = 0;
      const int runs = mult == 0.0 ? 1 : seeds;  // no draws at multiplier 0
      for (int s = 0; s < runs; ++s) {
        req.noise = cfg.noise;
        req.noise.model = model;
        req.noise.multiplier = mult;
        req.noise.seed = cfg.noise.seed + static_cast<std::uint64_t>(s);
        const auto rows = evaluate_split(tours, cfg, req);
        std::vector<Metrics> ms;
        for (const auto& r : rows) ms.push_back(r.topdown);
        const auto agg = aggregate(ms);
        iou.push_back(agg.iou.mean);
        prec.push_back(agg.precision.mean);
        rec.push_back(agg.recall.mean);
        sp.push_back(mean_iou(rows, KindFilter::kSpatial));
        tmp.push_back(mean_iou(rows, KindFilter::kTemporal));
        n = rows.size();
      }
      const auto m = mean_stderr(iou);
      csv << noise_model_name(model) << ',' << mult << ',' << runs << ',' << n << ',' << m.mean
          << ',' << m.stderr_ << ',' << mean_stderr(prec).mean << ',' << mean_stderr(rec).mean
          << ',' << mean_stderr(sp).mean << ',' << mean_stderr(tmp).mean << '\n';
      std::cerr << noise_model_name(model) << " x" << mult << ": IoU " << m.mean << "\n";
    }
  }
  Outputs out;
  out.write_text(c.out, csv.str());
  out.commit();
}

void cmd_render(const Common& c, const std::string& kind, const std::string& memory_path,
                const std::string& question, int step) {
  const RunConfig cfg = load_config(c);
  Outputs out;
  if (kind == "gt") {
    const Scene s = load_scene(c);
    const SemanticGrid gt = scene_to_gt_map(s, grid_for_bounds(s.width, s.depth, cfg.tour.cell_size));
    auto& f = out.open(c.out);
    write_ppm(f, label_image(gt.spec, gt.category));
  } else if (kind == "memory") {
    auto mf = open_input(memory_path, "memory (--memory)");
    const EpisodicMemory m = read_memory(mf);
    auto& f = out.open(c.out);
    write_ppm(f, label_image(m.spec, m.decoded, &m.union_observed));
  } else if (kind == "heatmap") {
    auto mf = open_input(memory_path, "memory (--memory)");
    const EpisodicMemory m = read_memory(mf);
    ChannelMode mode = ChannelMode::kFull;
    const auto params = load_checkpoint(c.checkpoint, &mode);
    EPIMEM_CHECK(!question.empty(), "missing --question");
    const Heatmap h = lingunet_answer(m, question, params, mode);
    auto& f = out.open(c.out);
    write_pgm(f, h.spec.cols, h.spec.rows, heatmap_bytes(h));
  } else if (kind == "trajectory") {
    const LoadedTour t = load_tour(c, cfg);
    const SemanticGrid gt = scene_to_gt_map(t.scene, t.grid);
    Image img = label_image(gt.spec, gt.category);
    draw_path(img, t.grid, t.tour.poses, {0, 160, 0});
    if (cfg.noise.model != NoiseModel::kNone) draw_path(img, t.grid, cfg.noise.apply(t.tour.poses), {220, 0, 0});
    auto& f = out.open(c.out);
    write_ppm(f, img);
  } else if (kind == "frame") {
    const LoadedTour t = load_tour(c, cfg);
    EPIMEM_CHECK(step >= 0 && static_cast<std::size_t>(step) < t.tour.poses.size(),
                 "--step out of range");
    const Frame fr = render_frame(t.scene, t.tour.poses[static_cast<std::size_t>(step)], t.tour.intrinsics);
    Image img(fr.width, fr.height);
    std::vector<std::uint8_t> depth(fr.depth.size());
    for (std::size_t i = 0; i < depth.size(); ++i) {
      img.px[i] = label_color(fr.category[i]);
      depth[i] = static_cast<std::uint8_t>(
          std::lround(255.0 * std::clamp(fr.depth[i] / t.tour.intrinsics.max_depth, 0.0, 1.0)));
    }
    auto& f = out.open(c.out);
    write_ppm(f, img);
    auto& d = out.open(fs::path(c.out).replace_extension(".depth.pgm").string());
    write_pgm(d, fr.width, fr.height, depth);
  } else {
    throw Error("unknown --kind '" + kind + "' (gt, memory, heatmap, trajectory, frame)");
  }
  out.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Episodic memory question answering pipeline"};
  app.require_subcommand(1);
  Common c;

  auto common = [&](CLI::App* sub, bool noise_flags = false) {
    sub->add_option("--config", c.config, "Run config JSON");
    sub->add_option("--seed", c.seed, "Seed override");
    sub->add_option("--out", c.out, "Output path");
    if (noise_flags) {
      sub->add_option("--noise", c.noise, "Pose noise model")
          ->check(CLI::IsMember({"none", "independent", "drift"}));
      sub->add_option("--multiplier", c.multiplier, "Noise multiplier")->check(CLI::NonNegativeNumber);
    }
  };

  auto* gen_scene = app.add_subcommand("generate-scene", "Generate a scene JSON");
  common(gen_scene);

  std::string frames_path;
  auto* gen_tour = app.add_subcommand("generate-tour", "Plan an exploration tour through a scene");
  common(gen_tour);
  gen_tour->add_option("--scene", c.scene)->required();
  gen_tour->add_option("--frames", frames_path, "Also write the rendered frame pack");

  auto* build_mem = app.add_subcommand("build-memory", "Accumulate a tour into a top-down memory");
  common(build_mem, true);
  build_mem->add_option("--scene", c.scene)->required();
  build_mem->add_option("--tour", c.tour)->required();

  std::string split = "train";
  auto* make_ds = app.add_subcommand("make-dataset", "Build the short-tour question dataset");
  common(make_ds);
  make_ds->add_option("--split", split)->check(CLI::IsMember({"train", "test"}));

  std::string mode = "full", loss_csv;
  auto* train = app.add_subcommand("train", "Train the LingUNet answerer");
  common(train, true);
  train->add_option("--dataset", c.dataset)->required();
  train->add_option("--mode", mode)->check(CLI::IsMember({"full", "lang_only", "no_temporal"}));
  train->add_option("--loss-csv", loss_csv);

  std::string memory_path, question;
  auto* ask = app.add_subcommand("ask", "Answer one question over a stored memory");
  common(ask);
  ask->add_option("--memory", memory_path)->required();
  ask->add_option("--checkpoint", c.checkpoint)->required();
  ask->add_option("--question", question)->required();
  ask->add_option("--threshold", c.threshold)->check(CLI::Range(0.0, 1.0));

  std::string answerer = "lingunet", csv;
  double label_noise = 0.0;
  bool ego = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score an answerer on a dataset");
  common(evaluate, true);
  evaluate->add_option("--dataset", c.dataset)->required();
  evaluate->add_option("--answerer", answerer)
      ->check(CLI::IsMember({"oracle", "mapdecode", "egosemseg", "lingunet"}));
  evaluate->add_option("--checkpoint", c.checkpoint);
  evaluate->add_option("--threshold", c.threshold)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--label-noise", label_noise)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--csv", csv);
  evaluate->add_flag("--ego", ego, "Also score in egocentric pixel space");

  int seeds = 20;
  auto* study = app.add_subcommand("noise-study", "Sweep pose noise models and multipliers");
  common(study);
  study->add_option("--dataset", c.dataset)->required();
  study->add_option("--answerer", answerer)
      ->check(CLI::IsMember({"oracle", "mapdecode", "egosemseg", "lingunet"}));
  study->add_option("--checkpoint", c.checkpoint);
  study->add_option("--threshold", c.threshold)->check(CLI::Range(0.0, 1.0));
  study->add_option("--seeds", seeds);

  std::string kind = "gt";
  int step = 0;
  auto* render = app.add_subcommand("render", "Write PPM/PGM artifacts");
  common(render, true);
  render->add_option("--kind", kind, "gt | memory | heatmap | trajectory | frame");
  render->add_option("--scene", c.scene);
  render->add_option("--tour", c.tour);
  render->add_option("--memory", memory_path);
  render->add_option("--checkpoint", c.checkpoint);
  render->add_option("--question", question);
  render->add_option("--step", step);

  CLI11_PARSE(app, argc, argv);

  set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
  try {
    if (*gen_scene) cmd_generate_scene(c);
    else if (*gen_tour) cmd_generate_tour(c, frames_path);
    else if (*build_mem) cmd_build_memory(c);
    else if (*make_ds) cmd_make_dataset(c, split);
    else if (*train) cmd_train(c, mode, loss_csv);
    else if (*ask) cmd_ask(c, memory_path, question);
    else if (*evaluate) cmd_evaluate(c, answerer, csv, label_noise, ego);
    else if (*study) cmd_noise_study(c, answerer, seeds);
    else if (*render) cmd_render(c, kind, memory_path, question, step);
  } catch (const std::exception& e) {
    std::cerr << "epimem: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
