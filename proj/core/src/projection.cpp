#include "epimem/projection.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "epimem/error.hpp"
#include "epimem/parallel.hpp"

namespace epimem {

CameraPoint unproject(double u, double v, double depth, const CameraIntrinsics& intr) {
  EPIMEM_CHECK(depth > 0.0, "unproject: depth must be positive, got " << depth);
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

WorldPoint cam_to_world(const CameraPoint& p, const Pose& pose, double camera_height) {
  const double s = std::sin(pose.yaw);
  const double c = std::cos(pose.yaw);
  // forward = (c, s), right = (-s, c)
  return {pose.x + p.z * c - p.x * s, pose.z + p.z * s + p.x * c, camera_height - p.y};
}

CameraPoint world_to_cam(const WorldPoint& p, const Pose& pose, double camera_height) {
  const double s = std::sin(pose.yaw);
  const double c = std::cos(pose.yaw);
  const double dx = p.x - pose.x;
  const double dz = p.z - pose.z;
  return {-dx * s + dz * c, camera_height - p.y, dx * c + dz * s};
}

std::size_t CellVotes::total() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

CellVotes CellVotes::merge(const CellVotes& a, const CellVotes& b) {
  EPIMEM_CHECK(a.spec == b.spec, "CellVotes::merge: grid mismatch");
  CellVotes out;
  out.spec = a.spec;
  out.step_index = std::min(a.step_index, b.step_index);
  out.entries.reserve(a.entries.size() + b.entries.size());
  auto key = [](const VoteEntry& e) {
    return (static_cast<std::uint64_t>(e.cell) << 16) | e.category;
  };
  std::size_t i = 0, j = 0;
  while (i < a.entries.size() || j < b.entries.size()) {
    if (j == b.entries.size() || (i < a.entries.size() && key(a.entries[i]) < key(b.entries[j]))) {
      out.entries.push_back(a.entries[i++]);
    } else if (i == a.entries.size() || key(b.entries[j]) < key(a.entries[i])) {
      out.entries.push_back(b.entries[j++]);
    } else {
      VoteEntry e = a.entries[i++];
      e.count += b.entries[j++].count;
      out.entries.push_back(e);
    }
  }
  return out;
}

bool ObservedMask::contains(std::uint32_t cell) const {
  return std::binary_search(cells.begin(), cells.end(), cell);
}

std::vector<std::uint8_t> ObservedMask::dense() const {
  std::vector<std::uint8_t> out(spec.size(), 0);
  for (auto c : cells) out[c] = 1;
  return out;
}

namespace {

// Shared per-pixel binning; calls emit(pixel, cell) for each binned pixel.
template <class Emit>
void bin_pixels(const Frame& frame, const Pose& pose, const CameraIntrinsics& intr,
                const GridSpec& spec, const ProjectionOptions& options, Emit&& emit) {
  EPIMEM_CHECK(frame.width == intr.width && frame.height == intr.height,
               "projection: frame size " << frame.width << "x" << frame.height
                                         << " does not match intrinsics");
  const double s = std::sin(pose.yaw);
  const double c = std::cos(pose.yaw);
  for (int v = 0; v < frame.height; ++v) {
    const double ry = (v - intr.cy) / intr.fy;
    for (int u = 0; u < frame.width; ++u) {
      const std::size_t p = static_cast<std::size_t>(v) * frame.width + u;
      const double d = frame.depth[p];
      if (!(d > 0.0)) continue;
      const double xc = (u - intr.cx) * d / intr.fx;
      const double yw = intr.camera_height - ry * d;
      if (yw < options.min_height || yw > options.max_height) continue;
      const double xw = pose.x + d * c - xc * s;
      const double zw = pose.z + d * s + xc * c;
      if (auto cell = spec.flat_index(xw, zw)) emit(p, *cell);
    }
  }
}

}  // namespace

Projection project_frame(const Frame& frame, const Pose& pose, const CameraIntrinsics& intr,
                         const GridSpec& spec, const ProjectionOptions& options) {
  std::vector<std::uint64_t> keys;
  keys.reserve(frame.depth.size());
  bin_pixels(frame, pose, intr, spec, options, [&](std::size_t p, std::uint32_t cell) {
    keys.push_back((static_cast<std::uint64_t>(cell) << 16) | frame.category[p]);
  });
  std::sort(keys.begin(), keys.end());

  Projection out;
  out.votes.spec = spec;
  out.votes.step_index = pose.step_index;
  out.observed.spec = spec;
  out.observed.step_index = pose.step_index;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const auto cell = static_cast<std::uint32_t>(keys[i] >> 16);
    out.votes.entries.push_back(
        {cell, static_cast<std::uint16_t>(keys[i] & 0xffff), static_cast<std::uint32_t>(j - i)});
    if (out.observed.cells.empty() || out.observed.cells.back() != cell)
      out.observed.cells.push_back(cell);
    i = j;
  }
  return out;
}

std::vector<Projection> project_frames(const std::vector<Frame>& frames,
                                       const std::vector<Pose>& poses,
                                       const CameraIntrinsics& intr, const GridSpec& spec,
                                       const ProjectionOptions& options) {
  EPIMEM_CHECK(frames.size() == poses.size(), "project_frames: " << frames.size()
                                                                 << " frames vs " << poses.size()
                                                                 << " poses");
  std::vector<Projection> out(frames.size());
  parallel_for(frames.size(), [&](std::size_t i) {
    out[i] = project_frame(frames[i], poses[i], intr, spec, options);
  });
  return out;
}

std::vector<std::int32_t> pixel_cells(const Frame& frame, const Pose& pose,
                                      const CameraIntrinsics& intr, const GridSpec& spec,
                                      const ProjectionOptions& options) {
  std::vector<std::int32_t> out(frame.depth.size(), -1);
  bin_pixels(frame, pose, intr, spec, options, [&](std::size_t p, std::uint32_t cell) {
    out[p] = static_cast<std::int32_t>(cell);
  });
  return out;
}

void write_pbm(std::ostream& out, const ObservedMask& mask) {
  const auto dense = mask.dense();
  out << "P4\n" << mask.spec.cols << ' ' << mask.spec.rows << '\n';
  const int row_bytes = (mask.spec.cols + 7) / 8;
  std::vector<unsigned char> row(row_bytes);
  for (int r = 0; r < mask.spec.rows; ++r) {
    std::fill(row.begin(), row.end(), 0);
    for (int c = 0; c < mask.spec.cols; ++c)
      if (dense[mask.spec.index(r, c)]) row[c / 8] |= static_cast<unsigned char>(0x80 >> (c % 8));
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
}

}  // namespace epimem
