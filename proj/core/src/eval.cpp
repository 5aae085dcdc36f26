#include "epimem/eval.hpp"

#include <cmath>
#include <sstream>

#include "epimem/error.hpp"
#include "epimem/parallel.hpp"

namespace epimem {

Mask binarize(const Heatmap& heatmap, double threshold) {
  EPIMEM_CHECK(threshold > 0.0 && threshold < 1.0,
               "binarize: threshold must be in (0, 1), got " << threshold);
  Mask m(heatmap.score.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = heatmap.score[i] >= threshold;
  return m;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                            const MetricOptions& options) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  if (tp + fp + fn == 0) {
    m.iou = m.precision = m.recall = 1.0;
    return m;
  }
  const auto d = [](std::size_t n) { return static_cast<double>(n); };
  m.iou = d(tp) / d(tp + fp + fn);
  m.precision = tp + fp > 0 ? d(tp) / d(tp + fp) : options.undefined_value;
  m.recall = tp + fn > 0 ? d(tp) / d(tp + fn) : options.undefined_value;
  return m;
}

Metrics compute_metrics(const Mask& pred, const Mask& gt, const MetricOptions& options) {
  EPIMEM_CHECK(pred.size() == gt.size(),
               "compute_metrics: mask sizes differ (" << pred.size() << " vs " << gt.size() << ")");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return metrics_from_counts(tp, fp, fn, options);
}

Metrics compute_metrics(const Mask& pred, const GridSpec& pred_spec, const Mask& gt,
                        const GridSpec& gt_spec, const MetricOptions& options) {
  EPIMEM_CHECK(pred_spec == gt_spec, "compute_metrics: prediction and ground truth grids differ");
  EPIMEM_CHECK(pred.size() == pred_spec.size(), "compute_metrics: mask does not match its grid");
  return compute_metrics(pred, gt, options);
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr r;
  r.n = values.size();
  if (values.empty()) return r;
  double sum = 0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stderr_ = std::sqrt(ss / static_cast<double>(r.n - 1)) / std::sqrt(static_cast<double>(r.n));
  }
  return r;
}

AggregateMetrics aggregate(const std::vector<Metrics>& metrics) {
  std::vector<double> iou, p, r;
  for (const auto& m : metrics) {
    iou.push_back(m.iou);
    p.push_back(m.precision);
    r.push_back(m.recall);
  }
  return {mean_stderr(iou), mean_stderr(p), mean_stderr(r)};
}

EgoProjector::EgoProjector(const std::vector<Frame>& frames, const std::vector<Pose>& poses,
                           const CameraIntrinsics& intr, const GridSpec& spec,
                           const ProjectionOptions& options)
    : spec_(spec), cells_(frames.size()) {
  EPIMEM_CHECK(frames.size() == poses.size(), "EgoProjector: frames and poses differ in length");
  parallel_for(frames.size(), [&](std::size_t i) {
    cells_[i] = pixel_cells(frames[i], poses[i], intr, spec, options);
  });
}

std::vector<Mask> EgoProjector::backproject(const Mask& mask) const {
  EPIMEM_CHECK(mask.size() == spec_.size(), "backproject: mask does not match the grid");
  std::vector<Mask> out(cells_.size());
  for (std::size_t f = 0; f < cells_.size(); ++f) {
    out[f].assign(cells_[f].size(), 0);
    for (std::size_t p = 0; p < cells_[f].size(); ++p) {
      const auto c = cells_[f][p];
      if (c >= 0 && mask[static_cast<std::size_t>(c)]) out[f][p] = 1;
    }
  }
  return out;
}

Metrics EgoProjector::pooled_metrics(const EgoProjector& pp, const Mask& pred,
                                     const EgoProjector& gp, const Mask& gt,
                                     const MetricOptions& options) {
  EPIMEM_CHECK(pp.cells_.size() == gp.cells_.size(), "pooled_metrics: frame counts differ");
  EPIMEM_CHECK(pred.size() == pp.spec_.size() && gt.size() == gp.spec_.size(),
               "pooled_metrics: mask does not match its grid");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t f = 0; f < pp.cells_.size(); ++f) {
    const auto& a = pp.cells_[f];
    const auto& b = gp.cells_[f];
    EPIMEM_CHECK(a.size() == b.size(), "pooled_metrics: frame sizes differ");
    for (std::size_t p = 0; p < a.size(); ++p) {
      const bool x = a[p] >= 0 && pred[static_cast<std::size_t>(a[p])];
      const bool y = b[p] >= 0 && gt[static_cast<std::size_t>(b[p])];
      tp += x && y;
      fp += x && !y;
      fn += !x && y;
    }
  }
  return metrics_from_counts(tp, fp, fn, options);
}

std::vector<Mask> backproject_to_ego(const Mask& mask, const std::vector<Frame>& frames,
                                     const std::vector<Pose>& poses,
                                     const CameraIntrinsics& intr, const GridSpec& spec,
                                     const ProjectionOptions& options) {
  return EgoProjector(frames, poses, intr, spec, options).backproject(mask);
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
  return {{"iou", m.iou}, {"precision", m.precision}, {"recall", m.recall},
          {"tp", m.tp},   {"fp", m.fp},               {"fn", m.fn}};
}

nlohmann::json aggregate_json(const std::vector<Metrics>& ms) {
  const auto a = aggregate(ms);
  auto one = [](const MeanStderr& s) { return nlohmann::json{{"mean", s.mean}, {"stderr", s.stderr_}}; };
  return {{"n", ms.size()},
          {"iou", one(a.iou)},
          {"precision", one(a.precision)},
          {"recall", one(a.recall)}};
}

}  // namespace

nlohmann::json report_json(const std::string& answerer, const std::vector<QuestionResult>& rows) {
  nlohmann::json j;
  j["answerer"] = answerer;
  auto qs = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json q{{"tour_id", r.tour_id},
                     {"kind", std::string(kind_name(r.kind))},
                     {"category", std::string(category_name(r.category))},
                     {"topdown", metrics_json(r.topdown)}};
    if (r.has_ego) q["ego"] = metrics_json(r.ego);
    qs.push_back(std::move(q));
  }
  j["questions"] = std::move(qs);
  nlohmann::json agg;
  for (const char* space : {"topdown", "ego"}) {
    const bool ego = std::string(space) == "ego";
    for (const char* group : {"all", "spatial", "temporal"}) {
      std::vector<Metrics> ms;
      for (const auto& r : rows) {
        if (ego && !r.has_ego) continue;
        const std::string g(group);
        if (g == "spatial" && is_temporal(r.kind)) continue;
        if (g == "temporal" && !is_temporal(r.kind)) continue;
        ms.push_back(ego ? r.ego : r.topdown);
      }
      if (ego && ms.empty()) continue;
      agg[space][group] = aggregate_json(ms);
    }
  }
  j["aggregates"] = std::move(agg);
  return j;
}

std::string report_csv(const std::vector<QuestionResult>& rows) {
  std::ostringstream os;
  os << "tour_id,kind,category,iou,precision,recall,ego_iou,ego_precision,ego_recall\n";
  for (const auto& r : rows) {
    os << r.tour_id << ',' << kind_name(r.kind) << ',' << category_name(r.category) << ','
       << r.topdown.iou << ',' << r.topdown.precision << ',' << r.topdown.recall << ',';
    if (r.has_ego)
      os << r.ego.iou << ',' << r.ego.precision << ',' << r.ego.recall;
    else
      os << ",,";
    os << '\n';
  }
  return os.str();
}

}  // namespace epimem
