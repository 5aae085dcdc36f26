#include "epimem/answerers.hpp"

#include "epimem/error.hpp"
#include "epimem/tour.hpp"

namespace epimem {

Heatmap oracle_answer(const QuestionRecord& q) {
  EPIMEM_CHECK(q.answer_mask.size() == q.spec.size(), "oracle_answer: mask does not match grid");
  Heatmap h(q.spec);
  for (std::size_t i = 0; i < h.score.size(); ++i) h.score[i] = q.answer_mask[i] ? 1.0 : 0.0;
  return h;
}

Heatmap mapdecode_answer(const EpisodicMemory& memory, Category category) {
  Heatmap h(memory.spec);
  const auto id = to_id(category);
  for (std::size_t i = 0; i < h.score.size(); ++i)
    if (memory.union_observed[i] && memory.decoded[i] == id) h.score[i] = 1.0;
  return h;
}

EgoSemSegIndex::EgoSemSegIndex(const std::vector<Projection>& projections) {
  EPIMEM_CHECK(!projections.empty(), "EgoSemSegIndex: no projections");
  spec_ = projections.front().votes.spec;
  bits_.assign(spec_.size(), 0);
  for (const auto& p : projections) {
    EPIMEM_CHECK(p.votes.spec == spec_, "EgoSemSegIndex: projections must share one grid");
    for (const auto& e : p.votes.entries)
      if (e.category < kNumObjectCategories)
        bits_[e.cell] |= static_cast<std::uint16_t>(1u << e.category);
  }
}

Heatmap EgoSemSegIndex::answer(Category category) const {
  Heatmap h(spec_);
  const auto bit = static_cast<std::uint16_t>(1u << to_id(category));
  for (std::size_t i = 0; i < h.score.size(); ++i)
    if (bits_[i] & bit) h.score[i] = 1.0;
  return h;
}

Heatmap egosemseg_answer(const std::vector<Frame>& frames, const std::vector<Pose>& poses,
                         const CameraIntrinsics& intr, const GridSpec& spec,
                         const QuestionRecord& question, double epsilon,
                         std::uint64_t corruption_seed, const ProjectionOptions& options) {
  EPIMEM_CHECK(frames.size() == poses.size(), "egosemseg_answer: frames and poses differ");
  Heatmap h(spec);
  const auto id = to_id(question.category);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame f = epsilon > 0.0
                        ? corrupt_labels(frames[i], epsilon, corruption_seed, poses[i].step_index)
                        : frames[i];
    const auto cells = pixel_cells(f, poses[i], intr, spec, options);
    for (std::size_t p = 0; p < cells.size(); ++p)
      if (cells[p] >= 0 && f.category[p] == id) h.score[static_cast<std::size_t>(cells[p])] = 1.0;
  }
  return h;
}

std::string_view channel_mode_name(ChannelMode m) {
  switch (m) {
    case ChannelMode::kFull: return "full";
    case ChannelMode::kLangOnly: return "lang_only";
    case ChannelMode::kNoTemporal: return "no_temporal";
  }
  return "?";
}

ChannelMode channel_mode_from_name(std::string_view name) {
  if (name == "full") return ChannelMode::kFull;
  if (name == "lang_only") return ChannelMode::kLangOnly;
  if (name == "no_temporal") return ChannelMode::kNoTemporal;
  throw Error("unknown channel mode '" + std::string(name) + "'");
}

NetInput<float> memory_input(const EpisodicMemory& memory, ChannelMode mode, int levels) {
  EPIMEM_CHECK(levels >= 1, "memory_input: levels must be positive");
  const int m = 1 << levels;
  NetInput<float> in;
  in.channels = kNumLabels + kNumSegments;
  in.rows = memory.spec.rows;
  in.cols = memory.spec.cols;
  in.height = (in.rows + m - 1) / m * m;
  in.width = (in.cols + m - 1) / m * m;
  const std::size_t plane = static_cast<std::size_t>(in.height) * in.width;
  in.data.assign(plane * static_cast<std::size_t>(in.channels), 0.0f);
  const bool labels = mode != ChannelMode::kLangOnly;
  const bool temporal = mode != ChannelMode::kNoTemporal;
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      const std::size_t px = static_cast<std::size_t>(r) * in.width + c;
      const bool inside = r < in.rows && c < in.cols;
      const std::size_t cell = inside ? static_cast<std::size_t>(r) * in.cols + c : 0;
      if (labels) {
        const std::uint16_t label =
            inside && memory.union_observed[cell] ? memory.decoded[cell] : kBackgroundId;
        in.data[label * plane + px] = 1.0f;
      }
      if (temporal && inside) {
        const std::uint32_t bits = memory.temporal[cell];
        for (int s = 0; s < kNumSegments; ++s)
          if (bits >> s & 1u) in.data[(kNumLabels + s) * plane + px] = 1.0f;
      }
    }
  }
  return in;
}

Heatmap lingunet_answer(const EpisodicMemory& memory, const std::string& question_text,
                        const MiniLingUNetParams& params, ChannelMode mode) {
  const auto input = memory_input(memory, mode, params.config.levels());
  return lingunet_forward(input, tokenize_question(question_text), params, memory.spec);
}

}  // namespace epimem
