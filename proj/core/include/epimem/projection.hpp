#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "epimem/grid.hpp"
#include "epimem/tour.hpp"

namespace epimem {

/// Camera frame: x right, y down, z forward (meters).
struct CameraPoint {
  double x = 0, y = 0, z = 0;
};

/// World frame: x, z on the ground plane, y up from the floor.
struct WorldPoint {
  double x = 0, z = 0, y = 0;
};

/// Pinhole inversion: (u - cx) * depth / fx, (v - cy) * depth / fy, depth.
/// Throws when depth <= 0.
CameraPoint unproject(double u, double v, double depth, const CameraIntrinsics& intr);

/// Rigid transform of a camera point into the world under the heading
/// convention in tour.hpp; y = camera_height - Yc.
WorldPoint cam_to_world(const CameraPoint& p, const Pose& pose, double camera_height);
CameraPoint world_to_cam(const WorldPoint& p, const Pose& pose, double camera_height);

/// Sparse per-cell label histogram of one frame, sorted by (cell, category).
struct VoteEntry {
  std::uint32_t cell = 0;
  std::uint16_t category = 0;
  std::uint32_t count = 0;
  friend bool operator==(const VoteEntry&, const VoteEntry&) = default;
};

struct CellVotes {
  GridSpec spec;
  int step_index = 0;
  std::vector<VoteEntry> entries;

  std::size_t total() const;
  /// Associative, commutative merge of two histograms on the same grid.
  static CellVotes merge(const CellVotes& a, const CellVotes& b);
};

/// Cells hit by at least one projected pixel of one step. Stored as a sorted
/// list of flat cell indices; `dense()` expands to one byte per cell.
struct ObservedMask {
  GridSpec spec;
  int step_index = 0;
  std::vector<std::uint32_t> cells;

  bool contains(std::uint32_t cell) const;
  std::size_t count() const { return cells.size(); }
  std::vector<std::uint8_t> dense() const;
};

struct Projection {
  CellVotes votes;
  ObservedMask observed;
};

struct ProjectionOptions {
  double min_height = -0.05;
  double max_height = 2.5;  // set to the scene's wall height
};

/// Bins every pixel with depth > 0 into the grid; points outside the grid or
/// outside [min_height, max_height] are dropped.
Projection project_frame(const Frame& frame, const Pose& pose, const CameraIntrinsics& intr,
                         const GridSpec& spec, const ProjectionOptions& options = {});

/// project_frame over a whole tour; runs frame-parallel.
std::vector<Projection> project_frames(const std::vector<Frame>& frames,
                                       const std::vector<Pose>& poses,
                                       const CameraIntrinsics& intr, const GridSpec& spec,
                                       const ProjectionOptions& options = {});

/// Per-pixel flat cell index (or -1 when the pixel is not binned).
std::vector<std::int32_t> pixel_cells(const Frame& frame, const Pose& pose,
                                      const CameraIntrinsics& intr, const GridSpec& spec,
                                      const ProjectionOptions& options = {});

/// Binary PBM (P4) of an observed mask, row 0 at the top.
void write_pbm(std::ostream& out, const ObservedMask& mask);

}  // namespace epimem
