#pragma once

#include <cstdint>
#include <vector>

#include "epimem/scene.hpp"
#include "epimem/tour.hpp"

namespace epimem::test {

inline Scene open_scene(double width = 10.0, double depth = 10.0) {
  Scene s;
  s.seed = 0;
  s.width = width;
  s.depth = depth;
  s.wall_height = 2.5;
  s.rooms.push_back({{0.0, 0.0}, {width, depth}});
  return s;
}

inline ObjectInstance box(std::uint16_t id, Category cat, double x0, double z0, double x1,
                          double z1, double height) {
  ObjectInstance o;
  o.instance_id = id;
  o.category = cat;
  o.footprint = {{x0, z0}, {x1, z1}};
  o.height = height;
  return o;
}

// Small deterministic LCG for test data that should not depend on <random>
// distribution implementations.
struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed * 2862933555777941757ULL + 3037000493ULL) {}
  std::uint64_t next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 11;
  }
  double uniform() { return static_cast<double>(next()) / static_cast<double>(1ULL << 53); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

}  // namespace epimem::test
