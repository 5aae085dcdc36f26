#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "epimem/answerers.hpp"
#include "epimem/eval.hpp"
#include "epimem/lingunet.hpp"
#include "epimem/memory.hpp"
#include "epimem/noise.hpp"
#include "epimem/questions.hpp"
#include "epimem/scene.hpp"
#include "epimem/tour.hpp"
#include "epimem/training.hpp"

namespace epimem {

struct DatasetConfig {
  int train_scenes = 20;
  int test_scenes = 10;
  std::uint64_t train_seed_base = 1000;
  std::uint64_t test_seed_base = 2000;
  int short_tours_per_tour = 100;  // sampled; see keep_empty_short_tours
  bool keep_empty_short_tours = false;
  ShortTourOptions short_tour;
  QuestionOptions questions;
};

struct EvalConfig {
  double threshold = 0.5;
  MetricOptions metrics;
  double label_noise = 0.3;  // corruption rate for the baseline comparison
};

/// Everything a run needs; loaded from one JSON document.
struct RunConfig {
  std::uint64_t seed = 0;
  SceneConfig scene = SceneConfig::defaults();
  TourConfig tour;
  DatasetConfig dataset;
  LingUNetConfig model;
  TrainConfig training;
  NoiseSpec noise;
  EvalConfig eval;

  /// Missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// One 20-step short tour with what is needed to answer and score its
/// questions. Only the compact parts are kept: the per-step projections and
/// the memory's vote counts are dropped, and frames are re-rendered on demand.
struct ShortTourData {
  std::string id;  // "<tour id>@<start step>"
  ShortTour short_tour;  // projections empty
  std::shared_ptr<const EpisodicMemory> memory;
  std::vector<Pose> poses;  // ground truth, global step indices
  std::vector<QuestionRecord> questions;
};

struct TourData {
  Scene scene;
  Tour tour;  // frames dropped after projection to save memory
  GridSpec grid;
  double coverage = 0.0;
  std::vector<ShortTourData> shorts;
};

ProjectionOptions projection_options(const Scene& scene);

/// Scene -> tour -> projections -> short tours -> memories and questions.
TourData build_tour_data(std::uint64_t scene_seed, const RunConfig& config,
                         const std::string& tour_id);

std::vector<TourData> build_split(const RunConfig& config, bool test);

/// Dataset file: a JSON header line, then per tour one JSON line followed by
/// the binary memories of its short tours (write_memory format).
void write_dataset(std::ostream& out, const std::vector<TourData>& tours, const RunConfig& config);
std::vector<TourData> read_dataset(std::istream& in, RunConfig* config = nullptr);

/// Frames of a short tour, rendered from its ground-truth poses.
std::vector<Frame> short_tour_frames(const TourData& tour, const ShortTourData& data);

/// Memory of a short tour rebuilt from `frames` projected through `poses`
/// (noisy or not), with labels corrupted at rate `epsilon`; projections go
/// through the scene grid and are restricted to the short tour's window.
struct RebuiltMemory {
  std::shared_ptr<const EpisodicMemory> memory;
  std::vector<Projection> projections;  // window grid
};
RebuiltMemory rebuild_memory(const TourData& tour, const ShortTourData& data,
                             const std::vector<Frame>& frames, const std::vector<Pose>& poses,
                             double epsilon = 0.0, std::uint64_t corruption_seed = 0);

/// One sample per question. With a noise model other than none, memories
/// are rebuilt from the noisy trajectory (targets stay ground truth).
std::vector<TrainSample> make_train_samples(const std::vector<TourData>& tours,
                                            const RunConfig& config,
                                            const NoiseSpec& noise = {});

/// Noisy poses of every short tour. Each short tour is its own episode, so
/// drift integration starts at its first ground-truth pose.
std::vector<std::vector<Pose>> noisy_short_poses(const TourData& tour, const NoiseSpec& noise);

enum class AnswererKind { kOracle, kMapDecode, kEgoSemSeg, kLingUNet };
std::string_view answerer_name(AnswererKind k);
AnswererKind answerer_from_name(std::string_view name);

struct EvalRequest {
  AnswererKind answerer = AnswererKind::kOracle;
  const MiniLingUNetParams* params = nullptr;  // for kLingUNet
  ChannelMode mode = ChannelMode::kFull;
  NoiseSpec noise;               // applied to the poses the memory is built from
  double label_noise = 0.0;      // ego label corruption rate
  std::uint64_t label_seed = 0;
  bool ego_metrics = false;
};

/// Answers every question of every short tour and scores it in the top-down
/// space (and the egocentric pixel space when requested).
std::vector<QuestionResult> evaluate_split(const std::vector<TourData>& tours,
                                           const RunConfig& config, const EvalRequest& request);

enum class KindFilter { kAll, kSpatial, kTemporal };
std::vector<double> ious(const std::vector<QuestionResult>& rows, KindFilter filter = KindFilter::kAll);
double mean_iou(const std::vector<QuestionResult>& rows, KindFilter filter = KindFilter::kAll);

}  // namespace epimem
