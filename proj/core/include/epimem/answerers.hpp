#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "epimem/heatmap.hpp"
#include "epimem/lingunet.hpp"
#include "epimem/memory.hpp"
#include "epimem/projection.hpp"
#include "epimem/questions.hpp"

namespace epimem {

/// Score 1 on the ground-truth answer cells, 0 elsewhere.
Heatmap oracle_answer(const QuestionRecord& question);

/// Cells whose decoded memory label is the question's category.
Heatmap mapdecode_answer(const EpisodicMemory& memory, Category category);
inline Heatmap mapdecode_answer(const EpisodicMemory& memory, const QuestionRecord& q) {
  return mapdecode_answer(memory, q.category);
}

/// Per-cell bitset of categories any frame voted for. Built once per tour
/// from (possibly label-corrupted) projections; answering is a lookup.
class EgoSemSegIndex {
 public:
  explicit EgoSemSegIndex(const std::vector<Projection>& projections);
  Heatmap answer(Category category) const;
  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  std::vector<std::uint16_t> bits_;
};

/// Frame-wise segmentation baseline: projects every frame's pixels labeled
/// with the question's category (after optional corruption with rate
/// `epsilon`) and marks every cell that received one. Temporal question
/// kinds are answered exactly like spatial ones.
Heatmap egosemseg_answer(const std::vector<Frame>& frames, const std::vector<Pose>& poses,
                         const CameraIntrinsics& intr, const GridSpec& spec,
                         const QuestionRecord& question, double epsilon = 0.0,
                         std::uint64_t corruption_seed = 0,
                         const ProjectionOptions& options = {});

enum class ChannelMode { kFull, kLangOnly, kNoTemporal };
std::string_view channel_mode_name(ChannelMode m);
ChannelMode channel_mode_from_name(std::string_view name);

/// One-hot decoded labels (13 channels) followed by the 20 temporal bits,
/// padded with background to a multiple of 2^levels. LangOnly zeroes the
/// label channels, NoTemporal the temporal ones.
NetInput<float> memory_input(const EpisodicMemory& memory, ChannelMode mode, int levels);

Heatmap lingunet_answer(const EpisodicMemory& memory, const std::string& question_text,
                        const MiniLingUNetParams& params, ChannelMode mode);

}  // namespace epimem
