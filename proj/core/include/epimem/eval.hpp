#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "epimem/heatmap.hpp"
#include "epimem/projection.hpp"
#include "epimem/questions.hpp"

namespace epimem {

using Mask = std::vector<std::uint8_t>;

/// score >= threshold.
Mask binarize(const Heatmap& heatmap, double threshold = 0.5);

struct Metrics {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct MetricOptions {
  // Precision with an empty prediction, or recall with an empty ground
  // truth, is undefined; this value stands in for it (both empty is a
  // perfect (1, 1, 1) regardless).
  double undefined_value = 0.0;
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                            const MetricOptions& options = {});
Metrics compute_metrics(const Mask& pred, const Mask& gt, const MetricOptions& options = {});
/// Same, with the grid check.
Metrics compute_metrics(const Mask& pred, const GridSpec& pred_spec, const Mask& gt,
                        const GridSpec& gt_spec, const MetricOptions& options = {});

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
};
MeanStderr mean_stderr(const std::vector<double>& values);

struct AggregateMetrics {
  MeanStderr iou, precision, recall;
};
AggregateMetrics aggregate(const std::vector<Metrics>& metrics);

/// Pixel-to-cell lookup for a sequence of frames (one table per frame),
/// built once per tour so many masks can be back-projected cheaply.
class EgoProjector {
 public:
  EgoProjector(const std::vector<Frame>& frames, const std::vector<Pose>& poses,
               const CameraIntrinsics& intr, const GridSpec& spec,
               const ProjectionOptions& options = {});

  const GridSpec& spec() const { return spec_; }
  std::size_t frames() const { return cells_.size(); }
  /// Per-frame pixel masks: pixel marked iff its cell is in `mask`.
  std::vector<Mask> backproject(const Mask& mask) const;
  /// Pooled pixel counts of `pred` against `gt` over all frames, where each
  /// side is back-projected through its own projector (they differ only when
  /// the prediction was built from noisy poses).
  static Metrics pooled_metrics(const EgoProjector& pred_projector, const Mask& pred,
                                const EgoProjector& gt_projector, const Mask& gt,
                                const MetricOptions& options = {});

 private:
  GridSpec spec_;
  std::vector<std::vector<std::int32_t>> cells_;
};

/// Convenience wrapper: per-frame pixel masks of `mask` for a tour.
std::vector<Mask> backproject_to_ego(const Mask& mask, const std::vector<Frame>& frames,
                                     const std::vector<Pose>& poses,
                                     const CameraIntrinsics& intr, const GridSpec& spec,
                                     const ProjectionOptions& options = {});

struct QuestionResult {
  std::string tour_id;
  QuestionKind kind = QuestionKind::kSpatial;
  Category category = Category::kBackground;
  Metrics topdown;
  Metrics ego;
  bool has_ego = false;
};

/// Per-question rows plus aggregates by kind group ("all", "spatial",
/// "temporal") in each output space.
nlohmann::json report_json(const std::string& answerer, const std::vector<QuestionResult>& rows);
std::string report_csv(const std::vector<QuestionResult>& rows);

}  // namespace epimem
