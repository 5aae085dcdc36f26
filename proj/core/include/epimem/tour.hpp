#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "epimem/scene.hpp"

namespace epimem {

// Heading convention, used everywhere: yaw 0 faces world +x and positive yaw
// rotates toward +z. With y up, the camera's right vector is (-sin, cos) in
// (x, z), so TurnRight increases yaw and TurnLeft decreases it.

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kForwardStep = 0.10;           // meters
inline constexpr double kTurnAngle = 9.0 * kPi / 180;  // radians

/// Wraps an angle to (-pi, pi].
double normalize_yaw(double yaw);

struct Pose {
  double x = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  int step_index = 0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

enum class Action : std::uint8_t { kForward, kTurnLeft, kTurnRight };

std::string_view action_name(Action a);
Action action_from_name(std::string_view name);

struct CameraIntrinsics {
  int width = 64;
  int height = 64;
  double fx = 32.0;
  double fy = 32.0;
  double cx = 32.0;
  double cy = 32.0;
  double camera_height = 1.5;
  double max_depth = 10.0;

  void validate() const;
  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// One egocentric observation. Depth is the camera-frame z distance in meters
/// (0 = no hit within max_depth); labels are row-major like depth.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  std::vector<std::uint16_t> category;
  std::vector<std::uint16_t> instance;

  Frame() = default;
  Frame(int w, int h)
      : width(w),
        height(h),
        depth(static_cast<std::size_t>(w) * h, 0.0f),
        category(static_cast<std::size_t>(w) * h, kBackgroundId),
        instance(static_cast<std::size_t>(w) * h, kNoInstance) {}
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct StepResult {
  Pose pose;
  bool collided = false;
};

/// Discrete motion model: Forward moves kForwardStep along the heading unless
/// the agent disc would collide (then the position is kept and the step is
/// flagged); turns rotate by kTurnAngle. The step index always increments.
StepResult step_agent(const Pose& pose, Action action, const Scene& scene,
                      double agent_radius = 0.2);

struct TourConfig {
  int target_steps = 2500;
  double agent_radius = 0.2;
  double nav_resolution = 0.1;
  double coverage_target = 0.6;  // fraction of free-space cells observed
  int coverage_retries = 2;
  double sight_range = 3.0;      // planner's notion of "seen" for frontier picking
  bool spin_at_rooms = true;     // full turn on reaching each room centroid
  CameraIntrinsics intrinsics;
  double cell_size = 0.02;       // grid used for the coverage measurement
};

struct TourPlan {
  std::vector<Action> actions;
  std::vector<Pose> poses;  // actions.size() + 1 poses
  double coverage = 0.0;    // observed fraction of free cells
  int attempts = 1;
  std::vector<Frame> frames;  // rendered while measuring coverage
};

/// Coverage-seeking walk: visits every room centroid, then frontier targets,
/// until the step budget is used. Deterministic for fixed (scene, seed, config).
/// Warns (and returns the best attempt) when the coverage target is not met.
TourPlan generate_tour(const Scene& scene, std::uint64_t seed, const TourConfig& config);

/// Ray-cast depth and semantics for one pose. Pure.
Frame render_frame(const Scene& scene, const Pose& pose, const CameraIntrinsics& intr);

/// Renders all poses; frames are independent so this may run in parallel.
std::vector<Frame> render_frames(const Scene& scene, const std::vector<Pose>& poses,
                                 const CameraIntrinsics& intr);

/// Flips each observed pixel's category with probability `epsilon` to a
/// different label drawn uniformly from the other 12 labels. The random
/// stream is keyed by (seed, step) so frames corrupt independently.
Frame corrupt_labels(const Frame& frame, double epsilon, std::uint64_t seed, int step);

struct Tour {
  std::string id;
  std::uint64_t seed = 0;
  CameraIntrinsics intrinsics;
  std::vector<Action> actions;
  std::vector<Pose> poses;
  std::vector<Frame> frames;  // may be empty: frames are reproducible
  std::optional<nlohmann::json> noise;  // provenance block for noisy poses

  void validate() const;
};

Tour make_tour(const Scene& scene, std::string id, std::uint64_t seed,
               const CameraIntrinsics& intr, TourPlan plan, bool render = true);

nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::json poses_to_json(const std::vector<Pose>& poses);
std::vector<Pose> poses_from_json(const nlohmann::json& j);
nlohmann::json tour_to_json(const Tour& tour);
Tour tour_from_json(const nlohmann::json& j);

/// Little-endian frame pack: per frame, H*W float32 depths, then H*W uint16
/// categories, then H*W uint16 instances.
void write_frame_pack(std::ostream& out, const std::vector<Frame>& frames);
std::vector<Frame> read_frame_pack(std::istream& in, int width, int height);

}  // namespace epimem
