#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "epimem/tour.hpp"

namespace epimem {

struct IndependentNoiseParams {
  double sigma_x = 0.01;                   // meters
  double sigma_z = 0.01;                   // meters
  double sigma_yaw = 0.5 * kPi / 180.0;    // radians
  double multiplier = 1.0;
  void validate() const;
};

struct DriftNoiseParams {
  double sigma_dx = 0.005;                 // meters per step
  double sigma_dz = 0.005;
  double sigma_dyaw = 0.25 * kPi / 180.0;  // radians per step
  double multiplier = 1.0;
  void validate() const;
};

/// Adds i.i.d. Gaussian noise to each pose, drawn from a stream keyed by
/// (seed, step index) so a prefix of the noisy tour is the noisy prefix.
std::vector<Pose> perturb_independent(const std::vector<Pose>& poses,
                                      const IndependentNoiseParams& params, std::uint64_t seed);

/// Dead reckoning: starts at the first ground-truth pose and composes the
/// ground-truth body-frame step deltas after adding Gaussian noise to each.
std::vector<Pose> integrate_drift(const std::vector<Pose>& gt_poses,
                                  const DriftNoiseParams& params, std::uint64_t seed);

struct TrajectoryRmse {
  double x = 0.0;
  double z = 0.0;
};
TrajectoryRmse trajectory_rmse(const std::vector<Pose>& gt, const std::vector<Pose>& noisy);

enum class NoiseModel { kNone, kIndependent, kDrift };
std::string_view noise_model_name(NoiseModel m);
NoiseModel noise_model_from_name(std::string_view name);

/// One noise setting as carried in configs and in the tour "noise" block.
struct NoiseSpec {
  NoiseModel model = NoiseModel::kNone;
  IndependentNoiseParams independent;
  DriftNoiseParams drift;
  double multiplier = 1.0;
  std::uint64_t seed = 0;

  std::vector<Pose> apply(const std::vector<Pose>& poses) const;
  nlohmann::json to_json() const;
  static NoiseSpec from_json(const nlohmann::json& j);
};

}  // namespace epimem
