#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "epimem/heatmap.hpp"

namespace epimem {

/// Template vocabulary: the question words plus the twelve category names.
const std::vector<std::string>& question_vocabulary();
/// Lowercase word tokens (the trailing '?' is dropped). Throws on a word
/// outside the vocabulary.
std::vector<int> tokenize_question(const std::string& text);

struct LingUNetConfig {
  int in_channels = 33;            // one-hot labels (13) + temporal bits (20)
  std::vector<int> widths{32, 64}; // one entry per encoder level
  int embed_dim = 32;
  int question_dim = 64;
  bool linear = false;             // identity activations (gradient checks)

  int levels() const { return static_cast<int>(widths.size()); }
  void validate() const;
  nlohmann::json to_json() const;
  static LingUNetConfig from_json(const nlohmann::json& j);
};

struct ParamSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::vector<int> shape;
};

/// Flat parameter layout in declaration order:
///   embedding [V, E], question.weight [Q, E], question.bias [Q],
///   per level l: enc{l}.weight [C_l, C_{l-1}, 3, 3], enc{l}.bias [C_l],
///                lang{l}.weight [C_l * C_l, Q], lang{l}.bias [C_l * C_l],
///   per level l: dec{l}.weight [C_l, C_out(l), 3, 3], dec{l}.bias [C_out(l)]
///                (C_out(l) = C_{l-1} for l > 1 and C_1 for l = 1),
///   out.weight [C_1], out.bias [1].
std::vector<ParamSlot> param_layout(const LingUNetConfig& config);
std::size_t param_count(const LingUNetConfig& config);

struct MiniLingUNetParams {
  LingUNetConfig config;
  std::uint64_t seed = 0;
  std::vector<double> values;

  ParamSlot slot(const std::string& name) const;
  double* data(const std::string& name) { return values.data() + slot(name).offset; }
  const double* data(const std::string& name) const { return values.data() + slot(name).offset; }
};

/// log(pi / (1 - pi)); throws unless 0 < pi < 1.
double prior_bias(double pi);

/// Seeded symmetric uniform initialization; the output bias is prior_bias(pi).
MiniLingUNetParams init_params(std::uint64_t seed, const LingUNetConfig& config, double pi);

/// Dense CHW input. `height`/`width` are padded to a multiple of 2^levels;
/// `rows`/`cols` is the real map region in the top-left corner.
template <class T>
struct NetInput {
  int channels = 0;
  int height = 0;
  int width = 0;
  int rows = 0;
  int cols = 0;
  std::vector<T> data;
};

/// Unit-norm question embedding: mean token embedding, linear map, L2 norm.
std::vector<double> encode_question(const std::string& text, const MiniLingUNetParams& params);

/// Runs the network for a question embedding `q` (rescaled to unit norm
/// before use). Output covers the real region of the input.
Heatmap lingunet_forward(const NetInput<double>& input, const std::vector<double>& q,
                         const MiniLingUNetParams& params, const GridSpec& spec);
Heatmap lingunet_forward(const NetInput<float>& input, const std::vector<int>& tokens,
                         const MiniLingUNetParams& params, const GridSpec& spec);

/// Per-cell focal loss, averaged, with its gradient w.r.t. the logits.
/// `grad` may be null. Probabilities are clamped to [1e-7, 1 - 1e-7].
template <class T>
T focal_loss_logits(const T* logits, const std::uint8_t* target, std::size_t n, T gamma,
                    T* grad);

struct FocalResult {
  double loss = 0.0;
  std::vector<double> grad_logits;
};
/// Same loss evaluated on a heatmap of probabilities.
FocalResult focal_loss(const Heatmap& heatmap, const std::vector<std::uint8_t>& target,
                       double gamma);

/// Loss of one (input, question, target) sample and, when `grad` is not
/// null, its gradient w.r.t. every parameter (accumulated into `grad`).
/// `params` follows param_layout(config).
template <class T>
T sample_loss(const LingUNetConfig& config, const T* params, const NetInput<T>& input,
              const std::vector<int>& tokens, const std::vector<std::uint8_t>& target,
              T gamma, T* grad, std::vector<T>* logits_out = nullptr);

/// Checkpoint: one JSON header line, then the parameters as little-endian
/// float64 in layout order.
void write_checkpoint(std::ostream& out, const MiniLingUNetParams& params,
                      const nlohmann::json& extra = nlohmann::json::object());
MiniLingUNetParams read_checkpoint(std::istream& in, nlohmann::json* header = nullptr);

}  // namespace epimem
