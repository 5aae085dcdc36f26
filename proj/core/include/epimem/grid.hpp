#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string_view>
#include <vector>

namespace epimem {

/// Object vocabulary. Ids are stable; `kBackground` is reserved for floor,
/// walls, free space and "nothing observed" and is never a question target.
enum class Category : std::uint16_t {
  kShelving = 0,
  kFireplace,
  kBed,
  kTable,
  kPlant,
  kDrawers,
  kCounter,
  kCabinet,
  kCushion,
  kSink,
  kSofa,
  kChair,
  kBackground,
};

inline constexpr int kNumObjectCategories = 12;
inline constexpr int kNumLabels = 13;  // object categories + background
inline constexpr std::uint16_t kBackgroundId = 12;
inline constexpr std::uint16_t kNoInstance = 0;

std::string_view category_name(Category c);
std::string_view category_name(std::uint16_t id);
std::optional<Category> category_from_name(std::string_view name);
const std::array<Category, kNumObjectCategories>& object_categories();

constexpr std::uint16_t to_id(Category c) { return static_cast<std::uint16_t>(c); }

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Top-down metric grid. Rows run along world +z, columns along world +x.
/// `origin_x`/`origin_z` is the world position of the min corner of cell
/// (0, 0); a cell owns the half-open square [corner, corner + cell_size).
struct GridSpec {
  double cell_size = 0.02;
  double origin_x = 0.0;
  double origin_z = 0.0;
  int rows = 1;
  int cols = 1;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }

  bool contains(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < rows && c.col < cols;
  }
  /// floor((coord - origin) / cell_size); values on a cell boundary land in
  /// the higher-index cell.
  Cell cell_of(double x, double z) const;
  /// Cell center in world coordinates.
  std::array<double, 2> world_of(Cell c) const;

  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * cols + c.col;
  }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * cols + col;
  }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index / cols), static_cast<int>(index % cols)};
  }

  /// Flat cell index for a world point, or nullopt when outside the grid.
  std::optional<std::uint32_t> flat_index(double x, double z) const;

  /// Sub-grid of `rows` x `cols` cells whose cell (0, 0) is `offset` here.
  GridSpec window(Cell offset, int rows, int cols) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

nlohmann::json grid_to_json(const GridSpec& spec);
GridSpec grid_from_json(const nlohmann::json& j);

/// Grid covering [0, width] x [0, depth] at the given resolution.
GridSpec grid_for_bounds(double width_m, double depth_m, double cell_size = 0.02);

/// Per-cell category and instance labels.
struct SemanticGrid {
  GridSpec spec;
  std::vector<std::uint16_t> category;  // kBackgroundId where empty
  std::vector<std::uint16_t> instance;  // kNoInstance where empty

  SemanticGrid() = default;
  explicit SemanticGrid(const GridSpec& s)
      : spec(s),
        category(s.size(), kBackgroundId),
        instance(s.size(), kNoInstance) {}

  /// Copies the overlapping part of `window` out of this grid; cells of the
  /// window that fall outside are background. The window must be aligned to
  /// this grid's cells and share its cell size.
  SemanticGrid crop(const GridSpec& window) const;
};

}  // namespace epimem
