#include "epimem/questions.hpp"

#include <algorithm>
#include <unordered_map>

#include "epimem/error.hpp"

namespace epimem {
namespace {

void check_masks(const SemanticGrid& gt, const std::vector<ObservedMask>& masks) {
  for (const auto& m : masks)
    EPIMEM_CHECK(m.spec == gt.spec, "visibility: mask grid does not match the ground truth");
}

bool seen(std::size_t covered, std::size_t total) {
  // covered > 0.10 * total, kept in integers so the boundary is exact.
  return covered * 10 > total;
}

}  // namespace

InstanceVisibility instance_visibility(const SemanticGrid& gt,
                                       const std::vector<ObservedMask>& masks,
                                       std::uint16_t instance_id) {
  check_masks(gt, masks);
  InstanceVisibility v;
  v.instance_id = instance_id;
  for (std::size_t c = 0; c < gt.instance.size(); ++c) {
    if (gt.instance[c] != instance_id) continue;
    if (v.gt_pixel_count == 0) v.category = static_cast<Category>(gt.category[c]);
    ++v.gt_pixel_count;
  }
  EPIMEM_CHECK(instance_id != kNoInstance && v.gt_pixel_count > 0,
               "instance_visibility: instance " << instance_id << " not in the map");
  for (std::size_t t = 0; t < masks.size(); ++t) {
    std::size_t covered = 0;
    for (auto c : masks[t].cells) covered += gt.instance[c] == instance_id;
    if (seen(covered, v.gt_pixel_count)) v.seen_steps.push_back(static_cast<int>(t));
  }
  return v;
}

std::vector<InstanceVisibility> all_instance_visibility(const SemanticGrid& gt,
                                                        const std::vector<ObservedMask>& masks) {
  check_masks(gt, masks);
  std::map<std::uint16_t, InstanceVisibility> by_id;
  for (std::size_t c = 0; c < gt.instance.size(); ++c) {
    const auto id = gt.instance[c];
    if (id == kNoInstance) continue;
    auto& v = by_id[id];
    if (v.gt_pixel_count == 0) {
      v.instance_id = id;
      v.category = static_cast<Category>(gt.category[c]);
    }
    ++v.gt_pixel_count;
  }
  std::unordered_map<std::uint16_t, std::size_t> covered;
  for (std::size_t t = 0; t < masks.size(); ++t) {
    covered.clear();
    for (auto c : masks[t].cells)
      if (gt.instance[c] != kNoInstance) ++covered[gt.instance[c]];
    for (const auto& [id, n] : covered) {
      auto& v = by_id.at(id);
      if (seen(n, v.gt_pixel_count)) v.seen_steps.push_back(static_cast<int>(t));
    }
  }
  std::vector<InstanceVisibility> out;
  out.reserve(by_id.size());
  for (auto& [id, v] : by_id) out.push_back(std::move(v));
  return out;
}

std::string_view kind_name(QuestionKind k) {
  switch (k) {
    case QuestionKind::kSpatial: return "spatial";
    case QuestionKind::kFirstSeen: return "first_seen";
    case QuestionKind::kLastSeen: return "last_seen";
  }
  return "?";
}

QuestionKind kind_from_name(std::string_view name) {
  if (name == "spatial") return QuestionKind::kSpatial;
  if (name == "first_seen") return QuestionKind::kFirstSeen;
  if (name == "last_seen") return QuestionKind::kLastSeen;
  throw Error("unknown question kind '" + std::string(name) + "'");
}

bool is_temporal(QuestionKind k) { return k != QuestionKind::kSpatial; }

std::string question_text(QuestionKind kind, Category category) {
  const std::string name(category_name(category));
  switch (kind) {
    case QuestionKind::kSpatial: return "where did you see the " + name + "?";
    case QuestionKind::kFirstSeen: return "where did you first see the " + name + "?";
    case QuestionKind::kLastSeen: return "where did you last see the " + name + "?";
  }
  return {};
}

std::uint16_t select_first_last(const std::vector<InstanceVisibility>& visibilities,
                                WhichSeen which) {
  const InstanceVisibility* best = nullptr;
  int witnessed = 0;
  for (const auto& v : visibilities) {
    if (v.seen_steps.empty()) continue;
    ++witnessed;
    if (!best) {
      best = &v;
      continue;
    }
    if (which == WhichSeen::kFirst) {
      const int a = v.seen_steps.front(), b = best->seen_steps.front();
      if (a < b || (a == b && v.instance_id < best->instance_id)) best = &v;
    } else {
      const int a = v.seen_steps.back(), b = best->seen_steps.back();
      if (a > b || (a == b && v.instance_id < best->instance_id)) best = &v;
    }
  }
  EPIMEM_CHECK(witnessed >= 2,
               "select_first_last: need at least two witnessed instances, got " << witnessed);
  return best->instance_id;
}

std::vector<QuestionRecord> generate_questions(const SemanticGrid& gt,
                                               const std::vector<ObservedMask>& masks,
                                               const QuestionOptions& options) {
  const auto vis = all_instance_visibility(gt, masks);
  std::vector<std::uint8_t> observed(gt.spec.size(), 0);
  for (const auto& m : masks)
    for (auto c : m.cells) observed[c] = 1;

  auto mask_of = [&](const std::vector<std::uint16_t>& ids) {
    std::vector<std::uint8_t> mask(gt.spec.size(), 0);
    for (std::size_t c = 0; c < mask.size(); ++c) {
      const auto id = gt.instance[c];
      if (id == kNoInstance || (!options.full_footprint_masks && !observed[c])) continue;
      if (std::find(ids.begin(), ids.end(), id) != ids.end()) mask[c] = 1;
    }
    return mask;
  };

  std::vector<Category> categories = options.categories;
  if (categories.empty())
    categories.assign(object_categories().begin(), object_categories().end());

  std::vector<QuestionRecord> out;
  for (Category cat : categories) {
    std::vector<InstanceVisibility> witnessed;
    for (const auto& v : vis)
      if (v.category == cat && !v.seen_steps.empty()) witnessed.push_back(v);
    if (witnessed.empty()) continue;

    auto make = [&](QuestionKind kind, std::vector<std::uint16_t> ids) {
      QuestionRecord q;
      q.kind = kind;
      q.category = cat;
      q.text = question_text(kind, cat);
      q.spec = gt.spec;
      q.answer_mask = mask_of(ids);
      q.answer_instances = std::move(ids);
      for (const auto& v : witnessed) q.seen_steps[v.instance_id] = v.seen_steps;
      // A witnessed instance always has observed cells, but keep the
      // non-empty answer contract explicit.
      if (std::find(q.answer_mask.begin(), q.answer_mask.end(), 1) != q.answer_mask.end())
        out.push_back(std::move(q));
    };

    if (static_cast<int>(witnessed.size()) <= options.max_spatial_instances) {
      std::vector<std::uint16_t> ids;
      for (const auto& v : witnessed) ids.push_back(v.instance_id);
      make(QuestionKind::kSpatial, ids);
    }
    if (witnessed.size() >= 2) {
      make(QuestionKind::kFirstSeen, {select_first_last(witnessed, WhichSeen::kFirst)});
      make(QuestionKind::kLastSeen, {select_first_last(witnessed, WhichSeen::kLast)});
    }
  }
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> rle_encode(
    const std::vector<std::uint8_t>& mask) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    runs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return runs;
}

std::vector<std::uint8_t> rle_decode(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& runs, std::size_t size) {
  std::vector<std::uint8_t> mask(size, 0);
  for (const auto& [start, len] : runs) {
    EPIMEM_CHECK(static_cast<std::size_t>(start) + len <= size, "RLE run outside the mask");
    std::fill_n(mask.begin() + start, len, std::uint8_t{1});
  }
  return mask;
}

nlohmann::json question_to_json(const QuestionRecord& q) {
  nlohmann::json j;
  j["tour_id"] = q.tour_id;
  j["kind"] = std::string(kind_name(q.kind));
  j["category"] = std::string(category_name(q.category));
  j["text"] = q.text;
  j["answer_instances"] = q.answer_instances;
  j["grid"] = grid_to_json(q.spec);
  auto runs = nlohmann::json::array();
  for (const auto& [s, l] : rle_encode(q.answer_mask)) runs.push_back({s, l});
  j["answer_mask_rle"] = std::move(runs);
  nlohmann::json seen = nlohmann::json::object();
  for (const auto& [id, steps] : q.seen_steps) seen[std::to_string(id)] = steps;
  j["seen_steps"] = std::move(seen);
  return j;
}

QuestionRecord question_from_json(const nlohmann::json& j) {
  QuestionRecord q;
  try {
    q.tour_id = j.at("tour_id").get<std::string>();
    q.kind = kind_from_name(j.at("kind").get<std::string>());
    const auto cat = category_from_name(j.at("category").get<std::string>());
    EPIMEM_CHECK(cat && *cat != Category::kBackground,
                 "unknown category '" << j.at("category").get<std::string>() << "'");
    q.category = *cat;
    q.text = j.at("text").get<std::string>();
    q.answer_instances = j.at("answer_instances").get<std::vector<std::uint16_t>>();
    q.spec = grid_from_json(j.at("grid"));
    std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
    for (const auto& r : j.at("answer_mask_rle"))
      runs.emplace_back(r.at(0).get<std::uint32_t>(), r.at(1).get<std::uint32_t>());
    q.answer_mask = rle_decode(runs, q.spec.size());
    const auto seen = j.value("seen_steps", nlohmann::json::object());
    for (const auto& [id, steps] : seen.items())
      q.seen_steps[static_cast<std::uint16_t>(std::stoul(id))] = steps.get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("question JSON: ") + e.what());
  }
  return q;
}

}  // namespace epimem
