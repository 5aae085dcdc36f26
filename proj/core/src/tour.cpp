#include "epimem/tour.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>

#include "binary_io.hpp"
#include "epimem/error.hpp"
#include "epimem/log.hpp"
#include "epimem/projection.hpp"
#include "epimem/rng.hpp"

namespace epimem {

double normalize_yaw(double yaw) {
  double y = std::remainder(yaw, 2 * kPi);  // [-pi, pi]
  if (y <= -kPi) y += 2 * kPi;
  return y;
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kForward: return "forward";
    case Action::kTurnLeft: return "turn_left";
    case Action::kTurnRight: return "turn_right";
  }
  return "?";
}

Action action_from_name(std::string_view name) {
  if (name == "forward") return Action::kForward;
  if (name == "turn_left") return Action::kTurnLeft;
  if (name == "turn_right") return Action::kTurnRight;
  throw Error("unknown action '" + std::string(name) + "'");
}

void CameraIntrinsics::validate() const {
  EPIMEM_CHECK(width > 0 && height > 0, "intrinsics: image size must be positive");
  EPIMEM_CHECK(fx > 0 && fy > 0, "intrinsics: focal lengths must be positive");
  EPIMEM_CHECK(cx >= 0 && cx < width && cy >= 0 && cy < height,
               "intrinsics: principal point outside the image");
  EPIMEM_CHECK(max_depth > 0, "intrinsics: max_depth must be positive");
}

StepResult step_agent(const Pose& pose, Action action, const Scene& scene,
                      double agent_radius) {
  StepResult r{pose, false};
  r.pose.step_index = pose.step_index + 1;
  switch (action) {
    case Action::kTurnLeft:
      r.pose.yaw = normalize_yaw(pose.yaw - kTurnAngle);
      break;
    case Action::kTurnRight:
      r.pose.yaw = normalize_yaw(pose.yaw + kTurnAngle);
      break;
    case Action::kForward: {
      const double nx = pose.x + kForwardStep * std::cos(pose.yaw);
      const double nz = pose.z + kForwardStep * std::sin(pose.yaw);
      if (disc_is_free(scene, nx, nz, agent_radius)) {
        r.pose.x = nx;
        r.pose.z = nz;
      } else {
        r.collided = true;
      }
      break;
    }
  }
  return r;
}

namespace {

constexpr int kUnreachable = std::numeric_limits<int>::max();

class Planner {
 public:
  Planner(const Scene& scene, const TourConfig& cfg, std::uint64_t seed, int attempt)
      : scene_(scene),
        cfg_(cfg),
                // Plan with a margin of half a nav cell diagonal so the agent, which
        // is rarely exactly on a cell center, does not clip corners.
        nav_(build_nav_grid(scene, cfg.nav_resolution,
                            cfg.agent_radius + 0.75 * cfg.nav_resolution)),
        rng_(keyed_rng(seed, RngStream::kTourPlanner, static_cast<std::uint64_t>(attempt))) {
    // Obstacles at nav resolution without inflation, used for line of sight.
    blocked_.assign(nav_.spec.size(), 0);
    for (int r = 0; r < nav_.spec.rows; ++r) {
      for (int c = 0; c < nav_.spec.cols; ++c) {
        const auto p = nav_.spec.world_of({r, c});
        blocked_[nav_.spec.index(r, c)] = disc_is_free(scene, p[0], p[1], 1e-6) ? 0 : 1;
      }
    }
    seen_.assign(nav_.spec.size(), 0);
  }

  TourPlan run() {
    TourPlan plan;
    std::vector<std::size_t> free_cells;
    for (std::size_t i = 0; i < nav_.free.size(); ++i)
      if (nav_.free[i]) free_cells.push_back(i);
    EPIMEM_CHECK(!free_cells.empty(), "generate_tour: scene has no navigable space");

    const auto start = nav_.spec.world_of(nav_.spec.cell_at(
        free_cells[std::uniform_int_distribution<std::size_t>(0, free_cells.size() - 1)(rng_)]));
    pose_ = Pose{start[0], start[1],
                 normalize_yaw(std::uniform_int_distribution<int>(0, 39)(rng_) * kTurnAngle), 0};
    plan.poses.push_back(pose_);
    mark_seen();

    for (const auto& room : scene_.rooms) {
      const auto c = room.center();
      if (auto cell = nearest_free(c[0], c[1])) room_targets_.push_back(*cell);
    }

    while (static_cast<int>(plan.actions.size()) < cfg_.target_steps) {
      const Action a = next_action();
      const StepResult r = step_agent(pose_, a, scene_, cfg_.agent_radius);
      pose_ = r.pose;
      plan.actions.push_back(a);
      plan.poses.push_back(pose_);
      mark_seen();
      if (r.collided) {
        ++collisions_;
        target_.reset();
      } else if (a == Action::kForward) {
        collisions_ = 0;
      }
    }
    return plan;
  }

 private:
  std::optional<std::size_t> nearest_free(double x, double z) const {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nav_.free.size(); ++i) {
      if (!nav_.free[i]) continue;
      const auto p = nav_.spec.world_of(nav_.spec.cell_at(i));
      const double d = std::hypot(p[0] - x, p[1] - z);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::size_t current_cell() const {
    const Cell c = nav_.spec.cell_of(pose_.x, pose_.z);
    return nav_.spec.index(std::clamp(c.row, 0, nav_.spec.rows - 1),
                           std::clamp(c.col, 0, nav_.spec.cols - 1));
  }

  // BFS distances (8-connected, no corner cutting) from `target`.
  std::vector<int> distance_field(std::size_t target) const {
    std::vector<int> dist(nav_.free.size(), kUnreachable);
    std::deque<std::size_t> queue{target};
    dist[target] = 0;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const Cell c = nav_.spec.cell_at(i);
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const Cell n{c.row + dr, c.col + dc};
          if (!nav_.spec.contains(n)) continue;
          const std::size_t j = nav_.spec.index(n);
          if (!nav_.free[j] || dist[j] != kUnreachable) continue;
          if (dr != 0 && dc != 0 &&
              (!nav_.free[nav_.spec.index(c.row + dr, c.col)] ||
               !nav_.free[nav_.spec.index(c.row, c.col + dc)]))
            continue;
          dist[j] = dist[i] + 1;
          queue.push_back(j);
        }
      }
    }
    return dist;
  }

  // The floor only enters the bottom image row beyond this distance.
  double near_distance() const {
    return cfg_.intrinsics.camera_height * cfg_.intrinsics.fy /
           std::max(1.0, cfg_.intrinsics.height - 1 - cfg_.intrinsics.cy);
  }

  void mark_seen() {
    const double half_fov = std::atan(cfg_.intrinsics.cx / cfg_.intrinsics.fx);
    const int rays = 17;
    const double step = nav_.spec.cell_size * 0.5;
    const double near = near_distance();
    for (int k = 0; k < rays; ++k) {
      const double a = pose_.yaw - half_fov + 2 * half_fov * k / (rays - 1);
      const double dx = std::cos(a);
      const double dz = std::sin(a);
      for (double t = 0; t <= cfg_.sight_range; t += step) {
        const Cell c = nav_.spec.cell_of(pose_.x + t * dx, pose_.z + t * dz);
        if (!nav_.spec.contains(c)) break;
        const std::size_t i = nav_.spec.index(c);
        if (t >= near || blocked_[i]) seen_[i] = 1;
        if (blocked_[i]) break;
      }
    }
  }

  bool pick_target() {
    const std::size_t here = current_cell();
    if (!room_targets_.empty()) {
      // Greedy nearest room centroid.
      std::size_t best_k = 0;
      int best_d = kUnreachable;
      for (std::size_t k = 0; k < room_targets_.size(); ++k) {
        const auto dist = distance_field(room_targets_[k]);
        const int d = reach_distance(dist, here);
        if (d < best_d) {
          best_d = d;
          best_k = k;
        }
      }
      const std::size_t t = room_targets_[best_k];
      room_targets_.erase(room_targets_.begin() + static_cast<long>(best_k));
      if (best_d == kUnreachable) return pick_target();
      set_target(t, true);
      return true;
    }
    // Frontier: nearest free cell not yet seen, by path distance from here.
    const auto from_here = distance_field(nearest_reachable(here));
    std::size_t best = 0;
    int best_d = kUnreachable;
    for (std::size_t i = 0; i < nav_.free.size(); ++i) {
      if (!nav_.free[i] || seen_[i] || from_here[i] == kUnreachable) continue;
      // Nearby cells are below the camera's floor horizon; they get seen on
      // the way to farther targets.
      if (from_here[i] * nav_.spec.cell_size < near_distance()) continue;
      // Random tie breaking keeps different seeds apart.
      const int d = from_here[i] * 4 + std::uniform_int_distribution<int>(0, 3)(rng_);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best_d == kUnreachable) {
      std::fill(seen_.begin(), seen_.end(), 0);
      mark_seen();
      for (const auto& room : scene_.rooms) {
        const auto c = room.center();
        if (auto cell = nearest_free(c[0], c[1])) room_targets_.push_back(*cell);
      }
      if (++resets_ > 50) return false;
      return pick_target();
    }
    set_target(best, false);
    return true;
  }

  std::size_t nearest_reachable(std::size_t here) const {
    if (nav_.free[here]) return here;
    const Cell c = nav_.spec.cell_at(here);
    std::size_t best = here;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dr = -3; dr <= 3; ++dr) {
      for (int dc = -3; dc <= 3; ++dc) {
        const Cell n{c.row + dr, c.col + dc};
        if (!nav_.spec.contains(n) || !nav_.free[nav_.spec.index(n)]) continue;
        const double d = std::hypot(dr, dc);
        if (d < best_d) {
          best_d = d;
          best = nav_.spec.index(n);
        }
      }
    }
    return best;
  }

  int reach_distance(const std::vector<int>& dist, std::size_t here) const {
    return dist[nearest_reachable(here)];
  }

  void set_target(std::size_t cell, bool spin) {
    target_ = cell;
    target_dist_ = distance_field(cell);
    spin_after_ = spin && cfg_.spin_at_rooms;
    steps_on_target_ = 0;
  }

  Action next_action() {
    if (pending_turns_ > 0) {
      --pending_turns_;
      return pending_turn_;
    }
    if (pending_forwards_ > 0) {
      --pending_forwards_;
      return Action::kForward;
    }
    pending_turn_ = Action::kTurnRight;
    if (collisions_ >= 2) {
      // Stuck: face a random direction and walk a few steps before replanning.
      collisions_ = 0;
      pending_turn_ = std::uniform_int_distribution<int>(0, 1)(rng_) ? Action::kTurnLeft
                                                                      : Action::kTurnRight;
      pending_turns_ = std::uniform_int_distribution<int>(4, 20)(rng_);
      pending_forwards_ = 5;
      target_.reset();
      return pending_turn_;
    }
    if (!target_ || ++steps_on_target_ > 600) {
      if (!pick_target()) return Action::kTurnRight;
    }
    const auto goal = nav_.spec.world_of(nav_.spec.cell_at(*target_));
    if (std::hypot(goal[0] - pose_.x, goal[1] - pose_.z) < 0.2) {
      const bool spin = spin_after_;
      target_.reset();
      if (spin) {
        pending_turns_ = 39;
        return Action::kTurnRight;
      }
      if (++arrivals_in_a_row_ > 4) {
        arrivals_in_a_row_ = 0;
        return Action::kTurnRight;
      }
      return next_action();
    }
    arrivals_in_a_row_ = 0;
    // Look ahead a few cells along the descending distance field.
    std::size_t cell = nearest_reachable(current_cell());
    if (target_dist_[cell] == kUnreachable) {
      target_.reset();
      return Action::kTurnLeft;
    }
    for (int k = 0; k < 3 && target_dist_[cell] > 0; ++k) {
      const Cell c = nav_.spec.cell_at(cell);
      std::size_t next = cell;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{c.row + dr, c.col + dc};
          if (!nav_.spec.contains(n)) continue;
          const std::size_t j = nav_.spec.index(n);
          if (target_dist_[j] < target_dist_[next]) next = j;
        }
      }
      if (next == cell) break;
      cell = next;
    }
    const auto aim = nav_.spec.world_of(nav_.spec.cell_at(cell));
    const double desired = std::atan2(aim[1] - pose_.z, aim[0] - pose_.x);
    const double diff = normalize_yaw(desired - pose_.yaw);
    if (std::abs(diff) <= kTurnAngle / 2 + 1e-9 ||
        std::hypot(aim[0] - pose_.x, aim[1] - pose_.z) < 1e-9)
      return Action::kForward;
    return diff > 0 ? Action::kTurnRight : Action::kTurnLeft;
  }

  const Scene& scene_;
  const TourConfig& cfg_;
  NavGrid nav_;
  std::mt19937_64 rng_;
  std::vector<std::uint8_t> blocked_;
  std::vector<std::uint8_t> seen_;
  std::vector<std::size_t> room_targets_;
  std::optional<std::size_t> target_;
  std::vector<int> target_dist_;
  Pose pose_;
  bool spin_after_ = false;
  int pending_turns_ = 0;
  int collisions_ = 0;
  int steps_on_target_ = 0;
  int resets_ = 0;
  int arrivals_in_a_row_ = 0;
  int pending_forwards_ = 0;
  Action pending_turn_ = Action::kTurnRight;
};

double measure_coverage(const Scene& scene, const TourConfig& cfg, const TourPlan& plan) {
  const GridSpec spec = grid_for_bounds(scene.width, scene.depth, cfg.cell_size);
  const auto free = free_space_mask(scene, spec);
  std::vector<std::uint8_t> observed(spec.size(), 0);
  ProjectionOptions opts;
  opts.max_height = scene.wall_height;
  const auto projections = project_frames(plan.frames, plan.poses, cfg.intrinsics, spec, opts);
  for (const auto& p : projections)
    for (auto c : p.observed.cells) observed[c] = 1;
  std::size_t n_free = 0, n_seen = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    n_free += free[i];
    n_seen += free[i] & observed[i];
  }
  return n_free == 0 ? 0.0 : static_cast<double>(n_seen) / static_cast<double>(n_free);
}

}  // namespace

TourPlan generate_tour(const Scene& scene, std::uint64_t seed, const TourConfig& config) {
  EPIMEM_CHECK(config.target_steps >= 0, "generate_tour: target_steps must be >= 0");
  config.intrinsics.validate();
  TourPlan best;
  bool have_best = false;
  const int attempts = std::max(1, config.coverage_retries + 1);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    TourPlan plan = Planner(scene, config, seed, attempt).run();
    plan.frames = render_frames(scene, plan.poses, config.intrinsics);
    plan.coverage = measure_coverage(scene, config, plan);
    plan.attempts = attempt + 1;
    if (!have_best || plan.coverage > best.coverage) {
      best = std::move(plan);
      have_best = true;
    }
    if (best.coverage >= config.coverage_target || config.target_steps == 0) return best;
  }
  warn("generate_tour: coverage " + std::to_string(best.coverage) + " below target " +
       std::to_string(config.coverage_target) + " after " + std::to_string(attempts) +
       " attempts (seed " + std::to_string(seed) + "); returning best effort");
  return best;
}

void Tour::validate() const {
  EPIMEM_CHECK(!poses.empty(), "tour '" << id << "' has no poses");
  EPIMEM_CHECK(frames.empty() || frames.size() == poses.size(),
               "tour '" << id << "': " << frames.size() << " frames for " << poses.size()
                        << " poses");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EPIMEM_CHECK(i == 0 ? poses[0].step_index == 0
                        : poses[i].step_index > poses[i - 1].step_index,
                 "tour '" << id << "': step indices must increase from 0");
  }
}

Tour make_tour(const Scene& scene, std::string id, std::uint64_t seed,
               const CameraIntrinsics& intr, TourPlan plan, bool render) {
  Tour t;
  t.id = std::move(id);
  t.seed = seed;
  t.intrinsics = intr;
  t.actions = std::move(plan.actions);
  t.poses = std::move(plan.poses);
  if (render) {
    if (plan.frames.size() == t.poses.size())
      t.frames = std::move(plan.frames);
    else
      t.frames = render_frames(scene, t.poses, intr);
  }
  t.validate();
  return t;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& i) {
  return {{"width_px", i.width},   {"height_px", i.height},
          {"fx", i.fx},            {"fy", i.fy},
          {"cx", i.cx},            {"cy", i.cy},
          {"camera_height_m", i.camera_height}, {"max_depth_m", i.max_depth}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics i;
  i.width = j.value("width_px", i.width);
  i.height = j.value("height_px", i.height);
  i.fx = j.value("fx", i.fx);
  i.fy = j.value("fy", i.fy);
  i.cx = j.value("cx", i.cx);
  i.cy = j.value("cy", i.cy);
  i.camera_height = j.value("camera_height_m", i.camera_height);
  i.max_depth = j.value("max_depth_m", i.max_depth);
  i.validate();
  return i;
}

nlohmann::json poses_to_json(const std::vector<Pose>& poses) {
  auto arr = nlohmann::json::array();
  for (const auto& p : poses)
    arr.push_back({{"step", p.step_index}, {"x", p.x}, {"z", p.z}, {"yaw", p.yaw}});
  return arr;
}

std::vector<Pose> poses_from_json(const nlohmann::json& j) {
  std::vector<Pose> out;
  for (const auto& p : j)
    out.push_back({p.at("x").get<double>(), p.at("z").get<double>(), p.at("yaw").get<double>(),
                   p.at("step").get<int>()});
  return out;
}

nlohmann::json tour_to_json(const Tour& tour) {
  nlohmann::json j;
  j["id"] = tour.id;
  j["seed"] = tour.seed;
  j["intrinsics"] = intrinsics_to_json(tour.intrinsics);
  auto actions = nlohmann::json::array();
  for (auto a : tour.actions) actions.push_back(std::string(action_name(a)));
  j["actions"] = std::move(actions);
  j["poses"] = poses_to_json(tour.poses);
  if (tour.noise) j["noise"] = *tour.noise;
  return j;
}

Tour tour_from_json(const nlohmann::json& j) {
  Tour t;
  try {
    t.id = j.value("id", std::string("tour"));
    t.seed = j.value("seed", std::uint64_t{0});
    t.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    for (const auto& a : j.value("actions", nlohmann::json::array()))
      t.actions.push_back(action_from_name(a.get<std::string>()));
    t.poses = poses_from_json(j.at("poses"));
    if (j.contains("noise")) t.noise = j.at("noise");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("tour JSON: ") + e.what());
  }
  t.validate();
  return t;
}


void write_frame_pack(std::ostream& out, const std::vector<Frame>& frames) {
  for (const auto& f : frames) {
    detail::put_plane(out, f.depth);
    detail::put_plane(out, f.category);
    detail::put_plane(out, f.instance);
  }
}

std::vector<Frame> read_frame_pack(std::istream& in, int width, int height) {
  std::vector<Frame> frames;
  while (in.peek() != std::char_traits<char>::eof()) {
    Frame f(width, height);
    const std::size_t n = f.depth.size();
    f.depth = detail::get_plane<float>(in, n);
    f.category = detail::get_plane<std::uint16_t>(in, n);
    f.instance = detail::get_plane<std::uint16_t>(in, n);
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace epimem
