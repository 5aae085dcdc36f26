#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "epimem/answerers.hpp"
#include "epimem/lingunet.hpp"
#include "epimem/memory.hpp"

namespace epimem {

struct TrainSample {
  std::shared_ptr<const EpisodicMemory> memory;
  std::vector<int> tokens;
  std::vector<std::uint8_t> target;  // one byte per memory cell
  bool temporal = false;             // First/Last question
};

struct TrainConfig {
  double gamma = 2.0;
  double learning_rate = 2e-4;
  double final_learning_rate = -1;  // < 0: constant; else linear decay to it
  double weight_decay = 4e-4;  // L2 term added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch = 4;               // singleton samples averaged per update
  int epochs = 1;
  int max_updates = 0;         // 0 = no cap
  int temporal_repeat = 1;     // visits per epoch of each temporal sample
  std::uint64_t seed = 0;      // shuffling
  ChannelMode mode = ChannelMode::kFull;
  int divergence_patience = 100;
  double divergence_factor = 10.0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainResult {
  MiniLingUNetParams params;
  std::vector<double> loss_history;  // mean sample loss of each update
};

/// Positive-to-negative cell ratio over all targets (the output-bias prior).
double positive_ratio(const std::vector<TrainSample>& samples);

/// Adam over mini-batches of `batch` samples visited in a seeded shuffled
/// order each epoch. Throws Error when the loss stays above
/// divergence_factor x the first update's loss for divergence_patience
/// consecutive updates. `progress(update, loss)` is called after each update.
TrainResult train_answerer(const MiniLingUNetParams& init, const std::vector<TrainSample>& samples,
                           const TrainConfig& config,
                           const std::function<void(int, double)>& progress = {});

std::string loss_history_csv(const std::vector<double>& history);

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::map<std::string, double> per_group;  // max relative error per parameter tensor
  std::size_t checked = 0;
};

/// Central differences (step h) in long double against the analytic
/// gradient, on `per_group` random entries of every parameter tensor.
/// Relative error is |ga - gfd| / max(|ga|, |gfd|, 1e-8).
GradCheckResult grad_check(const MiniLingUNetParams& params, const NetInput<long double>& input,
                           const std::vector<int>& tokens,
                           const std::vector<std::uint8_t>& target, double gamma = 2.0,
                           int per_group = 8, double h = 1e-5, std::uint64_t seed = 0);

}  // namespace epimem
