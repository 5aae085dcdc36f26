#include "epimem/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "epimem/error.hpp"
#include "epimem/parallel.hpp"
#include "epimem/rng.hpp"

namespace epimem {

void TrainConfig::validate() const {
  EPIMEM_CHECK(gamma >= 0, "train: gamma must be >= 0");
  EPIMEM_CHECK(learning_rate >= 0 && weight_decay >= 0, "train: lr and weight decay must be >= 0");
  EPIMEM_CHECK(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "train: Adam betas in [0, 1)");
  EPIMEM_CHECK(batch >= 1 && epochs >= 1, "train: batch and epochs must be positive");
  EPIMEM_CHECK(max_updates >= 0, "train: max_updates must be >= 0");
  EPIMEM_CHECK(temporal_repeat >= 1, "train: temporal_repeat must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"gamma", gamma},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"batch", batch},
          {"epochs", epochs},
          {"max_updates", max_updates},
          {"temporal_repeat", temporal_repeat},
          {"final_learning_rate", final_learning_rate},
          {"seed", seed},
          {"mode", std::string(channel_mode_name(mode))},
          {"divergence_patience", divergence_patience},
          {"divergence_factor", divergence_factor}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.batch = j.value("batch", c.batch);
  c.epochs = j.value("epochs", c.epochs);
  c.max_updates = j.value("max_updates", c.max_updates);
  c.temporal_repeat = j.value("temporal_repeat", c.temporal_repeat);
  c.final_learning_rate = j.value("final_learning_rate", c.final_learning_rate);
  c.seed = j.value("seed", c.seed);
  c.mode = channel_mode_from_name(j.value("mode", std::string("full")));
  c.divergence_patience = j.value("divergence_patience", c.divergence_patience);
  c.divergence_factor = j.value("divergence_factor", c.divergence_factor);
  c.validate();
  return c;
}

double positive_ratio(const std::vector<TrainSample>& samples) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : samples) {
    const auto p = static_cast<std::size_t>(std::count(s.target.begin(), s.target.end(), 1));
    pos += p;
    neg += s.target.size() - p;
  }
  EPIMEM_CHECK(neg > 0, "positive_ratio: no negative cells");
  return static_cast<double>(pos) / static_cast<double>(neg);
}

TrainResult train_answerer(const MiniLingUNetParams& init, const std::vector<TrainSample>& samples,
                           const TrainConfig& config,
                           const std::function<void(int, double)>& progress) {
  config.validate();
  EPIMEM_CHECK(!samples.empty(), "train_answerer: empty dataset");
  const int levels = init.config.levels();
  const std::size_t n = init.values.size();
  for (const auto& s : samples) {
    EPIMEM_CHECK(s.memory && s.target.size() == s.memory->spec.size(),
                 "train_answerer: sample target does not match its memory");
  }

  TrainResult result;
  result.params = init;
  std::vector<double>& w = result.params.values;
  std::vector<double> m(n, 0.0), v(n, 0.0);
  const int batch = config.batch;
  std::vector<std::vector<float>> grads(static_cast<std::size_t>(batch));
  std::vector<double> losses(static_cast<std::size_t>(batch));

  double first_loss = -1.0;
  int above = 0;
  int update = 0;
  std::vector<std::size_t> visits;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (int r = 0; r < (samples[i].temporal ? config.temporal_repeat : 1); ++r) visits.push_back(i);
  const std::size_t per_epoch = (visits.size() + static_cast<std::size_t>(batch) - 1) / static_cast<std::size_t>(batch);
  std::size_t total = per_epoch * static_cast<std::size_t>(config.epochs);
  if (config.max_updates > 0) total = std::min(total, static_cast<std::size_t>(config.max_updates));
  const double final_lr = config.final_learning_rate < 0 ? config.learning_rate : config.final_learning_rate;
  std::vector<std::size_t> order;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order = visits;
    auto rng = keyed_rng(config.seed, RngStream::kShuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      if (config.max_updates > 0 && update >= config.max_updates) break;
      const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(batch),
                                                      order.size() - start);
      const std::vector<float> wf(w.begin(), w.end());
      // Per-sample gradients go to separate buffers and are summed in a
      // fixed order, so the result does not depend on the thread count.
      parallel_for(count, [&](std::size_t b) {
        const auto& s = samples[order[start + b]];
        grads[b].assign(n, 0.0f);
        const auto input = memory_input(*s.memory, config.mode, levels);
        losses[b] = sample_loss<float>(init.config, wf.data(), input, s.tokens, s.target,
                                       static_cast<float>(config.gamma), grads[b].data());
      });
      double loss = 0;
      for (std::size_t b = 0; b < count; ++b) loss += losses[b];
      loss /= static_cast<double>(count);
      EPIMEM_CHECK(std::isfinite(loss), "train_answerer: non-finite loss at update " << update);

      // Linear from learning_rate at the first update to final_lr at the last.
      const double t = total > 1 ? static_cast<double>(update) / static_cast<double>(total - 1) : 0.0;
      const double lr = config.learning_rate + (final_lr - config.learning_rate) * t;
      ++update;
      const double bc1 = 1.0 - std::pow(config.beta1, update);
      const double bc2 = 1.0 - std::pow(config.beta2, update);
      for (std::size_t i = 0; i < n; ++i) {
        double g = 0;
        for (std::size_t b = 0; b < count; ++b) g += grads[b][i];
        g = g / static_cast<double>(count) + config.weight_decay * w[i];
        m[i] = config.beta1 * m[i] + (1 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1 - config.beta2) * g * g;
        w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.epsilon);
      }
      result.loss_history.push_back(loss);
      if (progress) progress(update, loss);

      if (first_loss < 0) first_loss = loss;
      above = loss > config.divergence_factor * first_loss ? above + 1 : 0;
      EPIMEM_CHECK(above < config.divergence_patience,
                   "train_answerer: diverged; loss " << loss << " has exceeded "
                                                     << config.divergence_factor
                                                     << "x the initial loss " << first_loss
                                                     << " for " << above
                                                     << " consecutive updates (update " << update
                                                     << ", lr " << lr << ")");
    }
    if (config.max_updates > 0 && update >= config.max_updates) break;
  }
  return result;
}

std::string loss_history_csv(const std::vector<double>& history) {
  std::ostringstream os;
  os.precision(10);
  os << "update_index,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) os << i << ',' << history[i] << '\n';
  return os.str();
}

GradCheckResult grad_check(const MiniLingUNetParams& params, const NetInput<long double>& input,
                           const std::vector<int>& tokens,
                           const std::vector<std::uint8_t>& target, double gamma, int per_group,
                           double h, std::uint64_t seed) {
  using LD = long double;
  const std::vector<LD> p(params.values.begin(), params.values.end());
  std::vector<LD> g(p.size(), 0.0L);
  sample_loss<LD>(params.config, p.data(), input, tokens, target, static_cast<LD>(gamma),
                  g.data());

  GradCheckResult r;
  auto rng = keyed_rng(seed, RngStream::kGradCheck);
  std::vector<LD> q = p;
  for (const auto& slot : param_layout(params.config)) {
    std::vector<std::size_t> idx(slot.size);
    std::iota(idx.begin(), idx.end(), slot.offset);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(per_group)));
    double worst = 0;
    for (std::size_t i : idx) {
      q[i] = p[i] + static_cast<LD>(h);
      const LD up = sample_loss<LD>(params.config, q.data(), input, tokens, target,
                                    static_cast<LD>(gamma), nullptr);
      q[i] = p[i] - static_cast<LD>(h);
      const LD down = sample_loss<LD>(params.config, q.data(), input, tokens, target,
                                      static_cast<LD>(gamma), nullptr);
      q[i] = p[i];
      const LD fd = (up - down) / (2 * static_cast<LD>(h));
      const LD abs_err = std::fabs(g[i] - fd);
      const LD denom = std::max({std::fabs(g[i]), std::fabs(fd), 1e-8L});
      worst = std::max(worst, static_cast<double>(abs_err / denom));
      r.max_abs_error = std::max(r.max_abs_error, static_cast<double>(abs_err));
      ++r.checked;
    }
    r.per_group[slot.name] = worst;
    r.max_rel_error = std::max(r.max_rel_error, worst);
  }
  return r;
}

}  // namespace epimem
