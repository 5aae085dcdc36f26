#pragma once

#include <vector>

#include "epimem/grid.hpp"

namespace epimem {

/// Per-cell answer belief in [0, 1].
struct Heatmap {
  GridSpec spec;
  std::vector<double> score;

  Heatmap() = default;
  explicit Heatmap(const GridSpec& s) : spec(s), score(s.size(), 0.0) {}
};

}  // namespace epimem
