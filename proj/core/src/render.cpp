#include <algorithm>
#include <cmath>
#include <limits>

#include "epimem/error.hpp"
#include "epimem/parallel.hpp"
#include "epimem/rng.hpp"
#include "epimem/tour.hpp"

namespace epimem {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  Rect footprint;
  double height;
  std::uint16_t category;
  std::uint16_t instance;
};

// Parametric interval where origin + t * dir lies in [lo, hi] on one axis.
inline void slab(double origin, double dir, double lo, double hi, double& t0, double& t1) {
  if (std::abs(dir) < 1e-15) {
    if (origin < lo || origin > hi) {
      t0 = kInf;
      t1 = -kInf;
    } else {
      t0 = -kInf;
      t1 = kInf;
    }
    return;
  }
  const double a = (lo - origin) / dir;
  const double b = (hi - origin) / dir;
  t0 = std::min(a, b);
  t1 = std::max(a, b);
}

}  // namespace

Frame render_frame(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr) {
  intr.validate();
  std::vector<Box> boxes;
  boxes.reserve(scene.walls.size() + scene.objects.size());
  for (const auto& w : scene.walls) boxes.push_back({w, scene.wall_height, kBackgroundId, kNoInstance});
  for (const auto& o : scene.objects)
    boxes.push_back({o.footprint, o.height, to_id(o.category), o.instance_id});

  const double s = std::sin(pose.yaw);
  const double c = std::cos(pose.yaw);
  const double h = intr.camera_height;
  Frame frame(intr.width, intr.height);

  // The horizontal part of a pixel ray depends only on its column, so the
  // footprint slabs are intersected once per column and box.
  std::vector<double> col_t0(boxes.size());
  std::vector<double> col_t1(boxes.size());
  for (int u = 0; u < intr.width; ++u) {
    const double a = (u - intr.cx) / intr.fx;
    const double dx = c - a * s;
    const double dz = s + a * c;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      double x0, x1, z0, z1;
      slab(pose.x, dx, boxes[k].footprint.min[0], boxes[k].footprint.max[0], x0, x1);
      slab(pose.z, dz, boxes[k].footprint.min[1], boxes[k].footprint.max[1], z0, z1);
      col_t0[k] = std::max(x0, z0);
      col_t1[k] = std::min(x1, z1);
    }
    for (int v = 0; v < intr.height; ++v) {
      const double b = (v - intr.cy) / intr.fy;  // image v grows downward
      double best = kInf;
      std::uint16_t cat = kBackgroundId;
      std::uint16_t inst = kNoInstance;
      for (std::size_t k = 0; k < boxes.size(); ++k) {
        if (col_t0[k] > col_t1[k]) continue;
        // y(t) = h - b t must lie in [0, box height].
        double y0, y1;
        slab(h, -b, 0.0, boxes[k].height, y0, y1);
        const double enter = std::max({col_t0[k], y0, 0.0});
        const double exit = std::min(col_t1[k], y1);
        if (enter <= exit && enter < best) {
          best = enter;
          cat = boxes[k].category;
          inst = boxes[k].instance;
        }
      }
      if (b > 0) {
        const double floor_t = h / b;
        if (floor_t < best) {
          best = floor_t;
          cat = kBackgroundId;
          inst = kNoInstance;
        }
      }
      const std::size_t p = static_cast<std::size_t>(v) * intr.width + u;
      if (best > 0 && best <= intr.max_depth) {
        frame.depth[p] = static_cast<float>(best);
        frame.category[p] = cat;
        frame.instance[p] = inst;
      }
    }
  }
  return frame;
}

std::vector<Frame> render_frames(const Scene& scene, const std::vector<Pose>& poses,
                                 const CameraIntrinsics& intr) {
  std::vector<Frame> frames(poses.size());
  parallel_for(poses.size(), [&](std::size_t i) { frames[i] = render_frame(scene, poses[i], intr); });
  return frames;
}

Frame corrupt_labels(const Frame& frame, double epsilon, std::uint64_t seed, int step) {
  EPIMEM_CHECK(epsilon >= 0.0 && epsilon <= 1.0, "corrupt_labels: epsilon must be in [0, 1]");
  Frame out = frame;
  if (epsilon == 0.0) return out;
  auto rng = keyed_rng(seed, RngStream::kLabelCorruption, static_cast<std::uint64_t>(step));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> shift(1, kNumLabels - 1);
  for (std::size_t p = 0; p < out.depth.size(); ++p) {
    if (out.depth[p] <= 0.0f) continue;
    if (coin(rng) < epsilon) {
      out.category[p] = static_cast<std::uint16_t>((out.category[p] + shift(rng)) % kNumLabels);
    }
  }
  return out;
}

}  // namespace epimem
