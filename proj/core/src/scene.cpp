#include "epimem/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <nlohmann/json.hpp>
#include <random>

#include "epimem/error.hpp"

namespace epimem {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  if (hi <= lo) return lo;
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double rect_point_distance(const Rect& r, double x, double z) {
  const double dx = std::max({r.min[0] - x, 0.0, x - r.max[0]});
  const double dz = std::max({r.min[1] - z, 0.0, z - r.max[1]});
  return std::hypot(dx, dz);
}

struct Layout {
  std::vector<Rect> walls;
  std::vector<Rect> rooms;
};

// Wall along a line split by door openings. `along` is the axis the wall
// runs on (0 = x, 1 = z); `at` is the coordinate on the other axis.
void add_wall_line(std::vector<Rect>& walls, int along, double at, double from,
                   double to, std::vector<double> door_centers, double door_width,
                   double thickness) {
  std::sort(door_centers.begin(), door_centers.end());
  double cursor = from;
  auto emit = [&](double a, double b) {
    if (b - a <= 1e-9) return;
    Rect r;
    r.min[along] = a;
    r.max[along] = b;
    r.min[1 - along] = at - thickness / 2;
    r.max[1 - along] = at + thickness / 2;
    walls.push_back(r);
  };
  for (double c : door_centers) {
    emit(cursor, c - door_width / 2);
    cursor = c + door_width / 2;
  }
  emit(cursor, to);
}

double door_center(Rng& rng, double from, double to, double door_width) {
  const double slack = 0.15;
  const double lo = from + door_width / 2 + slack;
  const double hi = to - door_width / 2 - slack;
  EPIMEM_CHECK(hi >= lo, "scene: wall segment too short for a door");
  return uniform(rng, lo, hi);
}

Layout make_layout(const SceneConfig& cfg, int rooms, Rng& rng) {
  const double t = cfg.wall_thickness;
  const double w = cfg.width;
  const double d = cfg.depth;
  const double dw = cfg.door_width;
  Layout out;
  out.walls.push_back({{0, 0}, {w, t}});
  out.walls.push_back({{0, d - t}, {w, d}});
  out.walls.push_back({{0, t}, {t, d - t}});
  out.walls.push_back({{w - t, t}, {w, d - t}});
  const Rect inner{{t, t}, {w - t, d - t}};

  if (rooms <= 1) {
    out.rooms.push_back(inner);
    return out;
  }
  const double sx = uniform(rng, 0.4, 0.6) * w;
  const double half = t / 2;
  if (rooms == 2) {
    add_wall_line(out.walls, 1, sx, t, d - t, {door_center(rng, t, d - t, dw)}, dw, t);
    out.rooms.push_back({{t, t}, {sx - half, d - t}});
    out.rooms.push_back({{sx + half, t}, {w - t, d - t}});
    return out;
  }
  const double sz = uniform(rng, 0.4, 0.6) * d;
  if (rooms == 3) {
    add_wall_line(out.walls, 1, sx, t, d - t, {door_center(rng, t, d - t, dw)}, dw, t);
    add_wall_line(out.walls, 0, sz, t, sx - half, {door_center(rng, t, sx - half, dw)},
                  dw, t);
    out.rooms.push_back({{t, t}, {sx - half, sz - half}});
    out.rooms.push_back({{t, sz + half}, {sx - half, d - t}});
    out.rooms.push_back({{sx + half, t}, {w - t, d - t}});
    return out;
  }
  add_wall_line(out.walls, 1, sx, t, d - t,
                {door_center(rng, t, sz - half, dw), door_center(rng, sz + half, d - t, dw)},
                dw, t);
  add_wall_line(out.walls, 0, sz, t, sx - half, {door_center(rng, t, sx - half, dw)}, dw,
                t);
  add_wall_line(out.walls, 0, sz, sx + half, w - t,
                {door_center(rng, sx + half, w - t, dw)}, dw, t);
  out.rooms.push_back({{t, t}, {sx - half, sz - half}});
  out.rooms.push_back({{sx + half, t}, {w - t, sz - half}});
  out.rooms.push_back({{t, sz + half}, {sx - half, d - t}});
  out.rooms.push_back({{sx + half, sz + half}, {w - t, d - t}});
  return out;
}

std::map<Category, int> sample_counts(const SceneConfig& cfg, Rng& rng) {
  int possible = 0;
  for (const auto& [cat, range] : cfg.counts) possible += range.max > 0 ? 1 : 0;
  const int required = std::min(cfg.min_distinct_categories, possible);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::map<Category, int> counts;
    int distinct = 0;
    for (const auto& [cat, range] : cfg.counts) {
      const int n = uniform_int(rng, range.min, range.max);
      counts[cat] = n;
      distinct += n > 0 ? 1 : 0;
    }
    if (distinct >= required) return counts;
  }
  throw Error("scene: cannot satisfy the distinct-category requirement");
}

void validate_config(const SceneConfig& cfg) {
  EPIMEM_CHECK(cfg.width > 0 && cfg.depth > 0, "scene config: bounds must be positive");
  EPIMEM_CHECK(cfg.wall_height > 0, "scene config: wall height must be positive");
  EPIMEM_CHECK(cfg.rooms.min >= 1 && cfg.rooms.max >= cfg.rooms.min && cfg.rooms.max <= 4,
               "scene config: room count range must lie in [1, 4]");
  double min_area = 0.0;
  for (const auto& [cat, range] : cfg.counts) {
    EPIMEM_CHECK(cat != Category::kBackground, "scene config: background is not placeable");
    EPIMEM_CHECK(range.min >= 0 && range.max >= range.min,
                 "scene config: bad count range for " << category_name(cat));
    if (range.max == 0) continue;
    auto it = cfg.shapes.find(cat);
    EPIMEM_CHECK(it != cfg.shapes.end(), "scene config: no shape for " << category_name(cat));
    const auto& s = it->second;
    EPIMEM_CHECK(s.width[0] >= 0.1 && s.depth[0] >= 0.1 && s.height[0] > 0 &&
                     s.width[1] >= s.width[0] && s.depth[1] >= s.depth[0] &&
                     s.height[1] >= s.height[0],
                 "scene config: degenerate shape for " << category_name(cat));
    EPIMEM_CHECK(s.height[1] <= cfg.wall_height,
                 "scene config: " << category_name(cat) << " taller than the walls");
    min_area += range.min * s.width[0] * (s.square ? s.width[0] : s.depth[0]);
  }
  EPIMEM_CHECK(min_area < cfg.width * cfg.depth,
               "scene config infeasible: minimum object area " << min_area
                                                               << " m^2 exceeds floor area");
}

bool connected(const Scene& scene, const SceneConfig& cfg) {
  const NavGrid nav = build_nav_grid(scene, cfg.nav_resolution, cfg.agent_radius);
  return count_free_components(nav) == 1;
}

bool try_place(Scene& scene, const SceneConfig& cfg, Category cat, std::uint16_t id,
               Rng& rng) {
  const CategoryShape& shape = cfg.shapes.at(cat);
  for (int attempt = 0; attempt < cfg.placement_attempts; ++attempt) {
    double w = uniform(rng, shape.width[0], shape.width[1]);
    double d = shape.square ? w : uniform(rng, shape.depth[0], shape.depth[1]);
    if (!shape.square && uniform_int(rng, 0, 1) == 1) std::swap(w, d);
    const double h = uniform(rng, shape.height[0], shape.height[1]);
    const Rect& room = scene.rooms[uniform_int(rng, 0, static_cast<int>(scene.rooms.size()) - 1)];
    const double margin = 0.02;
    if (room.width() < w + 2 * margin || room.depth() < d + 2 * margin) continue;
    const double x0 = uniform(rng, room.min[0] + margin, room.max[0] - margin - w);
    const double z0 = uniform(rng, room.min[1] + margin, room.max[1] - margin - d);
    ObjectInstance obj{id, cat, Rect{{x0, z0}, {x0 + w, z0 + d}}, h};

    bool clear = true;
    for (const auto& wall : scene.walls) clear = clear && !obj.footprint.overlaps(wall);
    for (const auto& o : scene.objects)
      clear = clear && !obj.footprint.overlaps(o.footprint, cfg.object_gap);
    if (!clear) continue;
    scene.objects.push_back(obj);
    if (connected(scene, cfg)) return true;
    scene.objects.pop_back();
  }
  return false;
}

}  // namespace

bool Rect::overlaps(const Rect& o, double gap) const {
  return min[0] < o.max[0] + gap && o.min[0] < max[0] + gap && min[1] < o.max[1] + gap &&
         o.min[1] < max[1] + gap;
}

const ObjectInstance* Scene::find(std::uint16_t instance_id) const {
  for (const auto& o : objects)
    if (o.instance_id == instance_id) return &o;
  return nullptr;
}

SceneConfig SceneConfig::defaults() {
  SceneConfig c;
  using C = Category;
  auto shape = [](std::array<double, 2> w, std::array<double, 2> d, std::array<double, 2> h,
                  bool square = false) { return CategoryShape{w, d, h, square}; };
  c.shapes = {
      {C::kShelving, shape({0.8, 1.2}, {0.3, 0.45}, {1.2, 1.8})},
      {C::kFireplace, shape({1.0, 1.5}, {0.3, 0.5}, {1.0, 1.3})},
      {C::kBed, shape({1.4, 1.8}, {1.9, 2.1}, {0.5, 0.7})},
      {C::kTable, shape({0.8, 1.4}, {0.6, 1.0}, {0.7, 0.8})},
      {C::kPlant, shape({0.3, 0.5}, {0.3, 0.5}, {0.5, 1.2}, true)},
      {C::kDrawers, shape({0.6, 1.0}, {0.4, 0.5}, {0.8, 1.1})},
      {C::kCounter, shape({1.2, 2.0}, {0.55, 0.65}, {0.85, 0.95})},
      {C::kCabinet, shape({0.6, 1.2}, {0.4, 0.6}, {0.8, 1.4})},
      {C::kCushion, shape({0.35, 0.5}, {0.35, 0.5}, {0.15, 0.45}, true)},
      {C::kSink, shape({0.5, 0.8}, {0.4, 0.6}, {0.8, 0.9})},
      {C::kSofa, shape({1.6, 2.2}, {0.8, 1.0}, {0.7, 0.9})},
      {C::kChair, shape({0.45, 0.6}, {0.45, 0.6}, {0.5, 0.9}, true)},
  };
  c.counts = {
      {C::kShelving, {0, 2}}, {C::kFireplace, {0, 1}}, {C::kBed, {0, 2}},
      {C::kTable, {1, 3}},    {C::kPlant, {1, 3}},     {C::kDrawers, {0, 2}},
      {C::kCounter, {0, 1}},  {C::kCabinet, {0, 2}},   {C::kCushion, {1, 4}},
      {C::kSink, {0, 1}},     {C::kSofa, {0, 2}},      {C::kChair, {2, 5}},
  };
  return c;
}

Scene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  validate_config(config);
  Rng rng(seed);
  for (int attempt = 0; attempt < config.scene_attempts; ++attempt) {
    Scene scene;
    scene.seed = seed;
    scene.width = config.width;
    scene.depth = config.depth;
    scene.wall_height = config.wall_height;
    const int rooms = uniform_int(rng, config.rooms.min, config.rooms.max);
    Layout layout = make_layout(config, rooms, rng);
    scene.walls = std::move(layout.walls);
    scene.rooms = std::move(layout.rooms);

    const auto counts = sample_counts(config, rng);
    // Large footprints first: they are the hardest to fit.
    std::vector<Category> order;
    for (const auto& [cat, n] : counts)
      for (int i = 0; i < n; ++i) order.push_back(cat);
    std::stable_sort(order.begin(), order.end(), [&](Category a, Category b) {
      const auto& sa = config.shapes.at(a);
      const auto& sb = config.shapes.at(b);
      return sa.width[1] * sa.depth[1] > sb.width[1] * sb.depth[1];
    });

    bool ok = true;
    std::uint16_t next_id = 1;
    for (Category cat : order) {
      if (!try_place(scene, config, cat, next_id, rng)) {
        ok = false;
        break;
      }
      ++next_id;
    }
    if (ok) return scene;
  }
  throw Error("generate_scene: could not place all objects after " +
              std::to_string(config.scene_attempts) + " attempts (seed " +
              std::to_string(seed) + ")");
}

SemanticGrid scene_to_gt_map(const Scene& scene, const GridSpec& spec) {
  spec.validate();
  const double tol = 1e-9;
  EPIMEM_CHECK(spec.origin_x <= tol && spec.origin_z <= tol &&
                   spec.origin_x + spec.cols * spec.cell_size >= scene.width - tol &&
                   spec.origin_z + spec.rows * spec.cell_size >= scene.depth - tol,
               "scene_to_gt_map: grid does not cover the scene bounds");
  SemanticGrid grid(spec);
  for (const auto& obj : scene.objects) {
    const Rect& f = obj.footprint;
    // Cells whose centers fall in [min, max).
    const int c0 = std::max(0, static_cast<int>(std::ceil((f.min[0] - spec.origin_x) / spec.cell_size - 0.5)));
    const int c1 = std::min(spec.cols - 1, static_cast<int>(std::ceil((f.max[0] - spec.origin_x) / spec.cell_size - 0.5)) - 1);
    const int r0 = std::max(0, static_cast<int>(std::ceil((f.min[1] - spec.origin_z) / spec.cell_size - 0.5)));
    const int r1 = std::min(spec.rows - 1, static_cast<int>(std::ceil((f.max[1] - spec.origin_z) / spec.cell_size - 0.5)) - 1);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const auto center = spec.world_of({r, c});
        if (!f.contains(center[0], center[1])) continue;
        grid.category[spec.index(r, c)] = to_id(obj.category);
        grid.instance[spec.index(r, c)] = obj.instance_id;
      }
    }
  }
  return grid;
}

std::vector<std::uint8_t> free_space_mask(const Scene& scene, const GridSpec& spec) {
  std::vector<std::uint8_t> free(spec.size(), 1);
  auto block = [&](const Rect& f) {
    const Cell lo = spec.cell_of(f.min[0], f.min[1]);
    const Cell hi = spec.cell_of(f.max[0], f.max[1]);
    for (int r = std::max(0, lo.row); r <= std::min(spec.rows - 1, hi.row); ++r) {
      for (int c = std::max(0, lo.col); c <= std::min(spec.cols - 1, hi.col); ++c) {
        const auto center = spec.world_of({r, c});
        if (f.contains(center[0], center[1])) free[spec.index(r, c)] = 0;
      }
    }
  };
  for (const auto& w : scene.walls) block(w);
  for (const auto& o : scene.objects) block(o.footprint);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const auto center = spec.world_of({r, c});
      if (center[0] < 0 || center[1] < 0 || center[0] > scene.width || center[1] > scene.depth)
        free[spec.index(r, c)] = 0;
    }
  }
  return free;
}

bool disc_is_free(const Scene& scene, double x, double z, double radius) {
  if (x - radius < 0 || z - radius < 0 || x + radius > scene.width ||
      z + radius > scene.depth)
    return false;
  for (const auto& w : scene.walls)
    if (rect_point_distance(w, x, z) < radius) return false;
  for (const auto& o : scene.objects)
    if (rect_point_distance(o.footprint, x, z) < radius) return false;
  return true;
}

NavGrid build_nav_grid(const Scene& scene, double resolution, double radius) {
  NavGrid nav;
  nav.spec = grid_for_bounds(scene.width, scene.depth, resolution);
  nav.free.assign(nav.spec.size(), 0);
  for (int r = 0; r < nav.spec.rows; ++r) {
    for (int c = 0; c < nav.spec.cols; ++c) {
      const auto p = nav.spec.world_of({r, c});
      nav.free[nav.spec.index(r, c)] = disc_is_free(scene, p[0], p[1], radius) ? 1 : 0;
    }
  }
  return nav;
}

int count_free_components(const NavGrid& nav) {
  std::vector<std::uint8_t> seen(nav.free.size(), 0);
  int components = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < nav.free.size(); ++start) {
    if (!nav.free[start] || seen[start]) continue;
    ++components;
    seen[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const Cell cell = nav.spec.cell_at(queue.front());
      queue.pop_front();
      const Cell nbrs[4] = {{cell.row - 1, cell.col},
                            {cell.row + 1, cell.col},
                            {cell.row, cell.col - 1},
                            {cell.row, cell.col + 1}};
      for (const Cell& n : nbrs) {
        if (!nav.spec.contains(n)) continue;
        const std::size_t i = nav.spec.index(n);
        if (nav.free[i] && !seen[i]) {
          seen[i] = 1;
          queue.push_back(i);
        }
      }
    }
  }
  return components;
}

nlohmann::json scene_to_json(const Scene& scene) {
  using nlohmann::json;
  auto rect = [](const Rect& r) {
    return json{{"min", {r.min[0], r.min[1]}}, {"max", {r.max[0], r.max[1]}}};
  };
  json j;
  j["seed"] = scene.seed;
  j["bounds_m"] = {scene.width, scene.depth};
  j["wall_height_m"] = scene.wall_height;
  j["walls"] = json::array();
  for (const auto& w : scene.walls) j["walls"].push_back(rect(w));
  j["rooms"] = json::array();
  for (const auto& r : scene.rooms) j["rooms"].push_back(rect(r));
  j["objects"] = json::array();
  for (const auto& o : scene.objects) {
    json oj = rect(o.footprint);
    oj["instance_id"] = o.instance_id;
    oj["category"] = std::string(category_name(o.category));
    oj["height_m"] = o.height;
    j["objects"].push_back(std::move(oj));
  }
  return j;
}

Scene scene_from_json(const nlohmann::json& j) {
  auto rect = [](const nlohmann::json& r) {
    return Rect{{r.at("min").at(0).get<double>(), r.at("min").at(1).get<double>()},
                {r.at("max").at(0).get<double>(), r.at("max").at(1).get<double>()}};
  };
  Scene s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.width = j.at("bounds_m").at(0).get<double>();
    s.depth = j.at("bounds_m").at(1).get<double>();
    s.wall_height = j.at("wall_height_m").get<double>();
    for (const auto& w : j.at("walls")) s.walls.push_back(rect(w));
    if (j.contains("rooms"))
      for (const auto& r : j.at("rooms")) s.rooms.push_back(rect(r));
    for (const auto& o : j.at("objects")) {
      ObjectInstance obj;
      obj.instance_id = o.at("instance_id").get<std::uint16_t>();
      const auto name = o.at("category").get<std::string>();
      const auto cat = category_from_name(name);
      EPIMEM_CHECK(cat && *cat != Category::kBackground, "unknown category '" << name << "'");
      obj.category = *cat;
      obj.footprint = rect(o);
      obj.height = o.at("height_m").get<double>();
      s.objects.push_back(obj);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("scene JSON: ") + e.what());
  }
  if (s.rooms.empty()) s.rooms.push_back({{0, 0}, {s.width, s.depth}});
  return s;
}

}  // namespace epimem
