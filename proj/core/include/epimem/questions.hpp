#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "epimem/grid.hpp"
#include "epimem/projection.hpp"

namespace epimem {

/// Steps are positions in the mask list, so they run over [0, masks.size()).
struct InstanceVisibility {
  std::uint16_t instance_id = kNoInstance;
  Category category = Category::kBackground;
  std::size_t gt_pixel_count = 0;
  std::vector<int> seen_steps;
};

/// An instance counts as seen at step t when the step's mask covers strictly
/// more than 10% of its ground-truth cells.
inline constexpr double kSeenFraction = 0.10;

InstanceVisibility instance_visibility(const SemanticGrid& gt,
                                       const std::vector<ObservedMask>& masks,
                                       std::uint16_t instance_id);

/// Visibility of every instance present in `gt`, sorted by instance id.
std::vector<InstanceVisibility> all_instance_visibility(const SemanticGrid& gt,
                                                        const std::vector<ObservedMask>& masks);

enum class QuestionKind { kSpatial, kFirstSeen, kLastSeen };
std::string_view kind_name(QuestionKind k);
QuestionKind kind_from_name(std::string_view name);
bool is_temporal(QuestionKind k);

std::string question_text(QuestionKind kind, Category category);

struct QuestionRecord {
  std::string tour_id;
  QuestionKind kind = QuestionKind::kSpatial;
  Category category = Category::kBackground;
  std::string text;
  std::vector<std::uint16_t> answer_instances;
  GridSpec spec;
  std::vector<std::uint8_t> answer_mask;  // one byte per cell of `spec`
  std::map<std::uint16_t, std::vector<int>> seen_steps;
};

enum class WhichSeen { kFirst, kLast };

/// First: earliest first sighting; Last: latest last sighting; ties go to
/// the lower instance id. Instances with no sightings are ignored.
std::uint16_t select_first_last(const std::vector<InstanceVisibility>& visibilities,
                                WhichSeen which);

struct QuestionOptions {
  int max_spatial_instances = 5;
  bool full_footprint_masks = false;  // default: only the observed cells
  std::vector<Category> categories;   // empty = every object category
};

/// Spatial questions for categories with 1..5 witnessed instances and
/// First/Last questions for categories with at least two.
std::vector<QuestionRecord> generate_questions(const SemanticGrid& gt,
                                               const std::vector<ObservedMask>& masks,
                                               const QuestionOptions& options = {});

/// Run-length encoding of a row-major bit mask as (start, length) pairs.
std::vector<std::pair<std::uint32_t, std::uint32_t>> rle_encode(
    const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> rle_decode(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& runs, std::size_t size);

nlohmann::json question_to_json(const QuestionRecord& q);
QuestionRecord question_from_json(const nlohmann::json& j);

}  // namespace epimem
