#include "epimem/grid.hpp"

#include <cmath>

#include "epimem/error.hpp"

namespace epimem {
namespace {

constexpr std::array<std::string_view, kNumLabels> kNames = {
    "shelving", "fireplace", "bed",     "table",   "plant",
    "drawers",  "counter",   "cabinet", "cushion", "sink",
    "sofa",     "chair",     "background"};

}  // namespace

std::string_view category_name(Category c) { return category_name(to_id(c)); }

std::string_view category_name(std::uint16_t id) {
  EPIMEM_CHECK(id < kNumLabels, "category id out of range: " << id);
  return kNames[id];
}

std::optional<Category> category_from_name(std::string_view name) {
  for (std::uint16_t i = 0; i < kNumLabels; ++i) {
    if (kNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

const std::array<Category, kNumObjectCategories>& object_categories() {
  static const std::array<Category, kNumObjectCategories> all = [] {
    std::array<Category, kNumObjectCategories> a{};
    for (int i = 0; i < kNumObjectCategories; ++i) a[i] = static_cast<Category>(i);
    return a;
  }();
  return all;
}

void GridSpec::validate() const {
  EPIMEM_CHECK(cell_size > 0.0 && std::isfinite(cell_size),
               "GridSpec: cell_size must be positive, got " << cell_size);
  EPIMEM_CHECK(rows >= 1 && cols >= 1,
               "GridSpec: rows and cols must be positive, got " << rows << "x" << cols);
}

Cell GridSpec::cell_of(double x, double z) const {
  return {static_cast<int>(std::floor((z - origin_z) / cell_size)),
          static_cast<int>(std::floor((x - origin_x) / cell_size))};
}

std::array<double, 2> GridSpec::world_of(Cell c) const {
  return {origin_x + (c.col + 0.5) * cell_size, origin_z + (c.row + 0.5) * cell_size};
}

std::optional<std::uint32_t> GridSpec::flat_index(double x, double z) const {
  const double fc = std::floor((x - origin_x) / cell_size);
  const double fr = std::floor((z - origin_z) / cell_size);
  if (!(fc >= 0.0 && fr >= 0.0 && fc < cols && fr < rows)) return std::nullopt;
  return static_cast<std::uint32_t>(static_cast<std::size_t>(fr) * cols +
                                    static_cast<std::size_t>(fc));
}

GridSpec GridSpec::window(Cell offset, int window_rows, int window_cols) const {
  GridSpec w = *this;
  w.origin_x = origin_x + offset.col * cell_size;
  w.origin_z = origin_z + offset.row * cell_size;
  w.rows = window_rows;
  w.cols = window_cols;
  w.validate();
  return w;
}

nlohmann::json grid_to_json(const GridSpec& s) {
  return {{"cell_size", s.cell_size}, {"origin_x", s.origin_x}, {"origin_z", s.origin_z},
          {"rows", s.rows},           {"cols", s.cols}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec s;
  try {
    s.cell_size = j.at("cell_size").get<double>();
    s.origin_x = j.value("origin_x", 0.0);
    s.origin_z = j.value("origin_z", 0.0);
    s.rows = j.at("rows").get<int>();
    s.cols = j.at("cols").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("grid JSON: ") + e.what());
  }
  s.validate();
  return s;
}

GridSpec grid_for_bounds(double width_m, double depth_m, double cell_size) {
  EPIMEM_CHECK(width_m > 0 && depth_m > 0, "grid_for_bounds: bounds must be positive");
  GridSpec s;
  s.cell_size = cell_size;
  s.cols = static_cast<int>(std::ceil(width_m / cell_size - 1e-9));
  s.rows = static_cast<int>(std::ceil(depth_m / cell_size - 1e-9));
  s.validate();
  return s;
}

SemanticGrid SemanticGrid::crop(const GridSpec& window) const {
  EPIMEM_CHECK(window.cell_size == spec.cell_size, "crop: cell size mismatch");
  const double col_off = (window.origin_x - spec.origin_x) / spec.cell_size;
  const double row_off = (window.origin_z - spec.origin_z) / spec.cell_size;
  const long co = std::lround(col_off);
  const long ro = std::lround(row_off);
  EPIMEM_CHECK(std::abs(col_off - co) < 1e-6 && std::abs(row_off - ro) < 1e-6,
               "crop: window is not aligned to the grid");
  SemanticGrid out(window);
  for (int r = 0; r < window.rows; ++r) {
    const long sr = r + ro;
    if (sr < 0 || sr >= spec.rows) continue;
    for (int c = 0; c < window.cols; ++c) {
      const long sc = c + co;
      if (sc < 0 || sc >= spec.cols) continue;
      const std::size_t src = static_cast<std::size_t>(sr) * spec.cols + sc;
      out.category[window.index(r, c)] = category[src];
      out.instance[window.index(r, c)] = instance[src];
    }
  }
  return out;
}

}  // namespace epimem
