#include "epimem/noise.hpp"

#include <cmath>

#include "epimem/error.hpp"
#include "epimem/parallel.hpp"
#include "epimem/rng.hpp"

namespace epimem {

void IndependentNoiseParams::validate() const {
  EPIMEM_CHECK(sigma_x >= 0 && sigma_z >= 0 && sigma_yaw >= 0,
               "independent noise: sigmas must be >= 0");
  EPIMEM_CHECK(multiplier >= 0, "independent noise: multiplier must be >= 0");
}

void DriftNoiseParams::validate() const {
  EPIMEM_CHECK(sigma_dx >= 0 && sigma_dz >= 0 && sigma_dyaw >= 0,
               "drift noise: sigmas must be >= 0");
  EPIMEM_CHECK(multiplier >= 0, "drift noise: multiplier must be >= 0");
}

std::vector<Pose> perturb_independent(const std::vector<Pose>& poses,
                                      const IndependentNoiseParams& params, std::uint64_t seed) {
  params.validate();
  std::vector<Pose> out(poses);
  parallel_for(poses.size(), [&](std::size_t i) {
    auto rng = keyed_rng(seed, RngStream::kIndependentNoise,
                         static_cast<std::uint64_t>(poses[i].step_index));
    std::normal_distribution<double> n(0.0, 1.0);
    const double ex = n(rng), ez = n(rng), eyaw = n(rng);
    out[i].x += params.multiplier * params.sigma_x * ex;
    out[i].z += params.multiplier * params.sigma_z * ez;
    out[i].yaw = normalize_yaw(out[i].yaw + params.multiplier * params.sigma_yaw * eyaw);
  });
  return out;
}

std::vector<Pose> integrate_drift(const std::vector<Pose>& gt, const DriftNoiseParams& params,
                                  std::uint64_t seed) {
  params.validate();
  EPIMEM_CHECK(!gt.empty(), "integrate_drift: need at least one pose");
  std::vector<Pose> out;
  out.reserve(gt.size());
  out.push_back(gt.front());
  for (std::size_t t = 1; t < gt.size(); ++t) {
    const Pose& a = gt[t - 1];
    const Pose& b = gt[t];
    // Ground-truth motion expressed in the previous body frame (forward, right).
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    const double wx = b.x - a.x, wz = b.z - a.z;
    double fwd = wx * c + wz * s;
    double right = -wx * s + wz * c;
    double dyaw = normalize_yaw(b.yaw - a.yaw);

    auto rng = keyed_rng(seed, RngStream::kDriftNoise, static_cast<std::uint64_t>(b.step_index));
    std::normal_distribution<double> n(0.0, 1.0);
    fwd += params.multiplier * params.sigma_dx * n(rng);
    right += params.multiplier * params.sigma_dz * n(rng);
    dyaw += params.multiplier * params.sigma_dyaw * n(rng);

    const Pose& p = out.back();
    const double pc = std::cos(p.yaw), ps = std::sin(p.yaw);
    Pose q;
    q.x = p.x + fwd * pc - right * ps;
    q.z = p.z + fwd * ps + right * pc;
    q.yaw = normalize_yaw(p.yaw + dyaw);
    q.step_index = b.step_index;
    out.push_back(q);
  }
  return out;
}

TrajectoryRmse trajectory_rmse(const std::vector<Pose>& gt, const std::vector<Pose>& noisy) {
  EPIMEM_CHECK(gt.size() == noisy.size(),
               "trajectory_rmse: length mismatch " << gt.size() << " vs " << noisy.size());
  if (gt.empty()) return {};
  double sx = 0, sz = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    sx += (noisy[i].x - gt[i].x) * (noisy[i].x - gt[i].x);
    sz += (noisy[i].z - gt[i].z) * (noisy[i].z - gt[i].z);
  }
  const double n = static_cast<double>(gt.size());
  return {std::sqrt(sx / n), std::sqrt(sz / n)};
}

std::string_view noise_model_name(NoiseModel m) {
  switch (m) {
    case NoiseModel::kNone: return "none";
    case NoiseModel::kIndependent: return "independent";
    case NoiseModel::kDrift: return "drift";
  }
  return "?";
}

NoiseModel noise_model_from_name(std::string_view name) {
  if (name == "none") return NoiseModel::kNone;
  if (name == "independent") return NoiseModel::kIndependent;
  if (name == "drift") return NoiseModel::kDrift;
  throw Error("unknown noise model '" + std::string(name) + "' (expected none|independent|drift)");
}

std::vector<Pose> NoiseSpec::apply(const std::vector<Pose>& poses) const {
  switch (model) {
    case NoiseModel::kNone: return poses;
    case NoiseModel::kIndependent: {
      IndependentNoiseParams p = independent;
      p.multiplier = multiplier;
      return perturb_independent(poses, p, seed);
    }
    case NoiseModel::kDrift: {
      DriftNoiseParams p = drift;
      p.multiplier = multiplier;
      return integrate_drift(poses, p, seed);
    }
  }
  return poses;
}

nlohmann::json NoiseSpec::to_json() const {
  nlohmann::json params;
  if (model == NoiseModel::kIndependent)
    params = {{"sigma_x", independent.sigma_x},
              {"sigma_z", independent.sigma_z},
              {"sigma_yaw", independent.sigma_yaw}};
  else if (model == NoiseModel::kDrift)
    params = {{"sigma_dx", drift.sigma_dx},
              {"sigma_dz", drift.sigma_dz},
              {"sigma_dyaw", drift.sigma_dyaw}};
  else
    params = nlohmann::json::object();
  params["multiplier"] = multiplier;
  return {{"model", std::string(noise_model_name(model))}, {"params", params}, {"seed", seed}};
}

NoiseSpec NoiseSpec::from_json(const nlohmann::json& j) {
  NoiseSpec n;
  try {
    n.model = noise_model_from_name(j.value("model", std::string("none")));
    n.seed = j.value("seed", std::uint64_t{0});
    const auto p = j.value("params", nlohmann::json::object());
    n.multiplier = p.value("multiplier", 1.0);
    n.independent.sigma_x = p.value("sigma_x", n.independent.sigma_x);
    n.independent.sigma_z = p.value("sigma_z", n.independent.sigma_z);
    n.independent.sigma_yaw = p.value("sigma_yaw", n.independent.sigma_yaw);
    n.drift.sigma_dx = p.value("sigma_dx", n.drift.sigma_dx);
    n.drift.sigma_dz = p.value("sigma_dz", n.drift.sigma_dz);
    n.drift.sigma_dyaw = p.value("sigma_dyaw", n.drift.sigma_dyaw);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("noise JSON: ") + e.what());
  }
  return n;
}

}  // namespace epimem
