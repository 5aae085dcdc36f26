#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "epimem/grid.hpp"

namespace epimem {

/// Axis-aligned rectangle on the ground plane (world x, z), meters.
struct Rect {
  std::array<double, 2> min{};  // {x, z}
  std::array<double, 2> max{};

  double width() const { return max[0] - min[0]; }
  double depth() const { return max[1] - min[1]; }
  double area() const { return width() * depth(); }
  std::array<double, 2> center() const {
    return {(min[0] + max[0]) / 2, (min[1] + max[1]) / 2};
  }
  bool overlaps(const Rect& o, double gap = 0.0) const;
  bool contains(double x, double z) const {
    return x >= min[0] && x < max[0] && z >= min[1] && z < max[1];
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct ObjectInstance {
  std::uint16_t instance_id = kNoInstance;  // scene-unique, starts at 1
  Category category = Category::kBackground;
  Rect footprint;
  double height = 0.0;
  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

/// A 2.5D box world: walls and objects are boxes extruded from the floor.
struct Scene {
  std::uint64_t seed = 0;
  double width = 10.0;  // extent along x
  double depth = 10.0;  // extent along z
  double wall_height = 2.5;
  std::vector<Rect> walls;
  std::vector<Rect> rooms;  // room interiors, used for tour planning
  std::vector<ObjectInstance> objects;

  const ObjectInstance* find(std::uint16_t instance_id) const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct CountRange {
  int min = 0;
  int max = 0;
};

struct CategoryShape {
  std::array<double, 2> width{0.5, 0.5};   // footprint along the long side
  std::array<double, 2> depth{0.5, 0.5};
  std::array<double, 2> height{0.5, 0.5};
  bool square = false;  // depth tied to width
};

struct SceneConfig {
  double width = 10.0;
  double depth = 10.0;
  double wall_height = 2.5;
  double wall_thickness = 0.1;
  double door_width = 1.0;
  CountRange rooms{2, 4};
  std::map<Category, CountRange> counts;
  std::map<Category, CategoryShape> shapes;
  double object_gap = 0.05;     // minimum clearance between objects
  double agent_radius = 0.2;    // free-space connectivity is checked for this disc
  double nav_resolution = 0.1;
  int min_distinct_categories = 4;
  int placement_attempts = 200;
  int scene_attempts = 20;

  static SceneConfig defaults();
};

/// Procedural multi-room scene. Deterministic in (seed, config); throws
/// Error when the configuration cannot be satisfied within the retry budget.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config);

/// Top-down rasterization: a cell belongs to an object when its center lies
/// in the object's footprint. The grid must cover the scene bounds.
SemanticGrid scene_to_gt_map(const Scene& scene, const GridSpec& spec);

/// Free-space mask of the top-down grid (cells not covered by walls/objects).
std::vector<std::uint8_t> free_space_mask(const Scene& scene, const GridSpec& spec);

/// Coarse navigation grid: 1 where a disc of `radius` fits at the cell center.
struct NavGrid {
  GridSpec spec;
  std::vector<std::uint8_t> free;
};
NavGrid build_nav_grid(const Scene& scene, double resolution, double radius);
/// Number of 4-connected components of free navigation cells.
int count_free_components(const NavGrid& nav);

/// True when a disc at (x, z) is inside the bounds and clear of all boxes.
bool disc_is_free(const Scene& scene, double x, double z, double radius);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace epimem
