#include "epimem/lingunet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "epimem/error.hpp"
#include "epimem/grid.hpp"
#include "epimem/rng.hpp"

namespace epimem {

// ---------------------------------------------------------------- vocabulary

const std::vector<std::string>& question_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    std::vector<std::string> v{"where", "did", "you", "see", "the", "first", "last"};
    for (Category c : object_categories()) v.emplace_back(category_name(c));
    return v;
  }();
  return vocab;
}

std::vector<int> tokenize_question(const std::string& text) {
  std::string clean;
  for (char ch : text) {
    if (ch == '?') continue;
    clean += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  std::istringstream is(clean);
  const auto& vocab = question_vocabulary();
  std::vector<int> tokens;
  for (std::string w; is >> w;) {
    const auto it = std::find(vocab.begin(), vocab.end(), w);
    EPIMEM_CHECK(it != vocab.end(), "question: unknown token '" << w << "'");
    tokens.push_back(static_cast<int>(it - vocab.begin()));
  }
  EPIMEM_CHECK(!tokens.empty(), "question: empty text");
  return tokens;
}

// -------------------------------------------------------------------- config

void LingUNetConfig::validate() const {
  EPIMEM_CHECK(in_channels > 0, "lingunet: in_channels must be positive");
  EPIMEM_CHECK(!widths.empty(), "lingunet: need at least one level");
  for (int w : widths) EPIMEM_CHECK(w > 0, "lingunet: channel widths must be positive");
  EPIMEM_CHECK(embed_dim > 0 && question_dim > 0, "lingunet: embedding sizes must be positive");
}

nlohmann::json LingUNetConfig::to_json() const {
  return {{"in_channels", in_channels}, {"widths", widths},   {"embed_dim", embed_dim},
          {"question_dim", question_dim}, {"linear", linear}};
}

LingUNetConfig LingUNetConfig::from_json(const nlohmann::json& j) {
  LingUNetConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.widths = j.value("widths", c.widths);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.question_dim = j.value("question_dim", c.question_dim);
  c.linear = j.value("linear", c.linear);
  c.validate();
  return c;
}

namespace {

int dec_out_channels(const LingUNetConfig& c, int level) {
  return level > 1 ? c.widths[static_cast<std::size_t>(level - 2)] : c.widths[0];
}

int width_at(const LingUNetConfig& c, int level) {
  return level == 0 ? c.in_channels : c.widths[static_cast<std::size_t>(level - 1)];
}

}  // namespace

std::vector<ParamSlot> param_layout(const LingUNetConfig& c) {
  c.validate();
  std::vector<ParamSlot> slots;
  std::size_t off = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    slots.push_back({std::move(name), off, n, std::move(shape)});
    off += n;
  };
  const int V = static_cast<int>(question_vocabulary().size());
  add("embedding", {V, c.embed_dim});
  add("question.weight", {c.question_dim, c.embed_dim});
  add("question.bias", {c.question_dim});
  for (int l = 1; l <= c.levels(); ++l) {
    const int cl = width_at(c, l);
    add("enc" + std::to_string(l) + ".weight", {cl, width_at(c, l - 1), 3, 3});
    add("enc" + std::to_string(l) + ".bias", {cl});
    add("lang" + std::to_string(l) + ".weight", {cl * cl, c.question_dim});
    add("lang" + std::to_string(l) + ".bias", {cl * cl});
  }
  for (int l = 1; l <= c.levels(); ++l) {
    add("dec" + std::to_string(l) + ".weight", {width_at(c, l), dec_out_channels(c, l), 3, 3});
    add("dec" + std::to_string(l) + ".bias", {dec_out_channels(c, l)});
  }
  add("out.weight", {c.widths[0]});
  add("out.bias", {1});
  return slots;
}

std::size_t param_count(const LingUNetConfig& c) {
  const auto slots = param_layout(c);
  return slots.back().offset + slots.back().size;
}

ParamSlot MiniLingUNetParams::slot(const std::string& name) const {
  for (auto& s : param_layout(config))
    if (s.name == name) return s;
  throw Error("lingunet: no parameter named '" + name + "'");
}

double prior_bias(double pi) {
  EPIMEM_CHECK(pi > 0.0 && pi < 1.0, "prior_bias: prior must be in (0, 1), got " << pi);
  return std::log(pi / (1.0 - pi));
}

MiniLingUNetParams init_params(std::uint64_t seed, const LingUNetConfig& config, double pi) {
  const double bias = prior_bias(pi);
  MiniLingUNetParams p;
  p.config = config;
  p.seed = seed;
  p.values.assign(param_count(config), 0.0);
  auto rng = keyed_rng(seed, RngStream::kParamInit);
  for (const auto& s : param_layout(config)) {
    double a = 0.0;
    const auto& sh = s.shape;
    if (s.name == "embedding") {
      a = 1.0;
    } else if (s.name.ends_with(".bias")) {
      a = 0.0;
    } else if (s.name.starts_with("lang")) {
      // K = reshape(G q) with |q| = 1: entries get variance a^2 / 3, chosen
      // as 1 / C so the skip roughly preserves activation scale.
      const int c = static_cast<int>(std::lround(std::sqrt(static_cast<double>(sh[0]))));
      a = std::sqrt(3.0 / c);
    } else if (sh.size() == 4) {
      const double fan_in = sh[1] * 9.0, fan_out = sh[0] * 9.0;
      a = std::sqrt(6.0 / (fan_in + fan_out));
    } else if (sh.size() == 2) {
      a = std::sqrt(6.0 / (sh[0] + sh[1]));
    } else {
      a = std::sqrt(6.0 / (sh[0] + 1.0));
    }
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < s.size; ++i) p.values[s.offset + i] = a > 0 ? u(rng) : 0.0;
  }
  p.values[p.slot("out.bias").offset] = bias;
  return p;
}

// ------------------------------------------------------------------- kernels

namespace {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using RowMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using RowMapMut = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Activations are C x (H * W) with column index y * W + x. For a 3x3,
// stride-2, pad-1 window the column matrix has row c * 9 + ky * 3 + kx and
// column oy * Wo + ox, reading input pixel (2 oy + ky - 1, 2 ox + kx - 1).
template <class T>
void im2col(const Mat<T>& in, int h, int w, Mat<T>& cols) {
  const int c = static_cast<int>(in.rows());
  const int ho = h / 2, wo = w / 2;
  cols.resize(c * 9, static_cast<Eigen::Index>(ho) * wo);
  for (int ch = 0; ch < c; ++ch) {
    const T* src = in.data() + static_cast<std::size_t>(ch) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = cols.data() + static_cast<std::size_t>(ch * 9 + ky * 3 + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy, dst += wo) {
          const int y = 2 * oy + ky - 1;
          if (y < 0 || y >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* row = src + static_cast<std::size_t>(y) * w;
          // Only kx == 0 reads off the left edge, at ox == 0.
          int ox = 0;
          if (kx == 0) dst[ox++] = T(0);
          for (; ox < wo; ++ox) dst[ox] = row[2 * ox + kx - 1];
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column entries back onto a C x (h * w) map.
template <class T>
void col2im(const Mat<T>& cols, int c, int h, int w, Mat<T>& out) {
  const int ho = h / 2, wo = w / 2;
  out.setZero(c, static_cast<Eigen::Index>(h) * w);
  for (int ch = 0; ch < c; ++ch) {
    T* dst = out.data() + static_cast<std::size_t>(ch) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = cols.data() + static_cast<std::size_t>(ch * 9 + ky * 3 + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy, src += wo) {
          const int y = 2 * oy + ky - 1;
          if (y < 0 || y >= h) continue;
          T* row = dst + static_cast<std::size_t>(y) * w;
          int ox = kx == 0 ? 1 : 0;
          for (; ox < wo; ++ox) row[2 * ox + kx - 1] += src[ox];
        }
      }
    }
  }
}

template <class T>
void activate(Mat<T>& m, bool linear) {
  if (!linear) m = m.cwiseMax(T(0));
}

template <class T>
void activate_backward(const Mat<T>& post, Mat<T>& grad, bool linear) {
  if (linear) return;
  grad = (post.array() > T(0)).select(grad, T(0));
}

template <class T>
struct Forward {
  int h = 0, w = 0;  // padded input size
  Vec<T> mean_embedding, raw_q, q;
  std::vector<Mat<T>> e;     // e[0] input, e[l] encoder outputs
  std::vector<Mat<T>> cols;  // cols[l] = im2col(e[l - 1])
  std::vector<Mat<T>> k;     // k[l] language kernel C_l x C_l
  std::vector<Mat<T>> s;     // s[l] = k[l] e[l]
  std::vector<Mat<T>> u;     // u[l] decoder output at level l - 1
  std::vector<Mat<T>> d;     // d[l] decoder input at level l
  Mat<T> logits;             // 1 x (h * w)
};

template <class T>
class Net {
 public:
  Net(const LingUNetConfig& c, const T* params) : c_(c), p_(params) {
    for (const auto& s : param_layout(c)) slots_.push_back(s);
  }

  const T* at(const std::string& name) const { return p_ + find(name).offset; }
  const ParamSlot& find(const std::string& name) const {
    for (const auto& s : slots_)
      if (s.name == name) return s;
    throw Error("lingunet: no parameter named '" + name + "'");
  }

  void embed(const std::vector<int>& tokens, Forward<T>& f) const {
    EPIMEM_CHECK(!tokens.empty(), "lingunet: empty question");
    const int E = c_.embed_dim;
    const int V = static_cast<int>(question_vocabulary().size());
    f.mean_embedding = Vec<T>::Zero(E);
    const T* emb = at("embedding");
    for (int t : tokens) {
      EPIMEM_CHECK(t >= 0 && t < V, "lingunet: token id out of range");
      for (int i = 0; i < E; ++i) f.mean_embedding(i) += emb[t * E + i];
    }
    f.mean_embedding /= static_cast<T>(tokens.size());
    const RowMap<T> wq(at("question.weight"), c_.question_dim, E);
    const Eigen::Map<const Vec<T>> bq(at("question.bias"), c_.question_dim);
    f.raw_q = wq * f.mean_embedding + bq;
  }

  void normalize(Forward<T>& f) const {
    const T n = f.raw_q.norm();
    EPIMEM_CHECK(n > T(0) && std::isfinite(static_cast<double>(n)),
                 "lingunet: question embedding has zero or non-finite norm");
    f.q = f.raw_q / n;
  }

  void run(const NetInput<T>& in, Forward<T>& f) const {
    const int L = c_.levels();
    EPIMEM_CHECK(in.channels == c_.in_channels, "lingunet: input has " << in.channels
                                                                       << " channels, expected "
                                                                       << c_.in_channels);
    EPIMEM_CHECK(in.height % (1 << L) == 0 && in.width % (1 << L) == 0,
                 "lingunet: input size must be divisible by 2^levels (pad first)");
    f.h = in.height;
    f.w = in.width;
    // resize keeps buffers that already have the right shape.
    for (auto* v : {&f.e, &f.cols, &f.k, &f.s, &f.u, &f.d}) v->resize(L + 1);
    f.e[0] = Eigen::Map<const Mat<T>>(in.data.data(), in.channels,
                                      static_cast<Eigen::Index>(in.height) * in.width);

    int h = in.height, w = in.width;
    for (int l = 1; l <= L; ++l) {
      const std::string n = std::to_string(l);
      const int cin = width_at(c_, l - 1), cout = width_at(c_, l);
      im2col(f.e[l - 1], h, w, f.cols[l]);
      const RowMap<T> wt(at("enc" + n + ".weight"), cout, cin * 9);
      const Eigen::Map<const Vec<T>> b(at("enc" + n + ".bias"), cout);
      f.e[l].noalias() = wt * f.cols[l];
      f.e[l].colwise() += b;
      activate(f.e[l], c_.linear);
      h /= 2;
      w /= 2;
      // Language kernel for this level.
      const RowMap<T> g(at("lang" + n + ".weight"), cout * cout, c_.question_dim);
      const Eigen::Map<const Vec<T>> gb(at("lang" + n + ".bias"), cout * cout);
      const Vec<T> kv = g * f.q + gb;
      f.k[l] = RowMap<T>(kv.data(), cout, cout);
      f.s[l].noalias() = f.k[l] * f.e[l];
    }
    f.d[L] = f.s[L];
    for (int l = L; l >= 1; --l) {
      const std::string n = std::to_string(l);
      const int cin = width_at(c_, l), cout = dec_out_channels(c_, l);
      const RowMap<T> tw(at("dec" + n + ".weight"), cin, cout * 9);
      const Eigen::Map<const Vec<T>> tb(at("dec" + n + ".bias"), cout);
      const Mat<T> cols = tw.transpose() * f.d[l];
      col2im(cols, cout, h * 2, w * 2, f.u[l]);
      f.u[l].colwise() += tb;
      activate(f.u[l], c_.linear);
      h *= 2;
      w *= 2;
      if (l > 1) f.d[l - 1] = f.u[l] + f.s[l - 1];
    }
    const Eigen::Map<const Vec<T>> wo(at("out.weight"), c_.widths[0]);
    const T bo = *at("out.bias");
    f.logits = wo.transpose() * f.u[1];
    f.logits.array() += bo;
    for (Eigen::Index i = 0; i < f.logits.size(); ++i)
      EPIMEM_CHECK(std::isfinite(static_cast<double>(f.logits(i))),
                   "lingunet: non-finite activation in the output");
  }

  // dlogits: 1 x (h * w). Accumulates into grad (layout order).
  void backward(const Forward<T>& f, const std::vector<int>& tokens, const Mat<T>& dlogits,
                T* grad) const {
    const int L = c_.levels();
    auto g = [&](const std::string& name) { return grad + find(name).offset; };

    const Eigen::Map<const Vec<T>> wo(at("out.weight"), c_.widths[0]);
    Eigen::Map<Vec<T>>(g("out.weight"), c_.widths[0]) += f.u[1] * dlogits.transpose();
    *g("out.bias") += dlogits.sum();

    std::vector<Mat<T>> ds(L + 1);
    Mat<T> du = wo * dlogits;  // C1 x (H * W)
    int h = f.h, w = f.w;
    for (int l = 1; l <= L; ++l) {
      const std::string n = std::to_string(l);
      const int cin = width_at(c_, l), cout = dec_out_channels(c_, l);
      activate_backward(f.u[l], du, c_.linear);
      Eigen::Map<Vec<T>>(g("dec" + n + ".bias"), cout) += du.rowwise().sum();
      Mat<T> dcols;
      im2col(du, h, w, dcols);  // cout*9 x (h/2 * w/2)
      const RowMap<T> tw(at("dec" + n + ".weight"), cin, cout * 9);
      RowMapMut<T>(g("dec" + n + ".weight"), cin, cout * 9) += f.d[l] * dcols.transpose();
      Mat<T> dd = tw * dcols;  // cin x (h/2 * w/2)
      h /= 2;
      w /= 2;
      ds[l] = dd;  // d[l] = u[l + 1] + s[l], or s[L] at the bottom
      du = std::move(dd);
    }

    Vec<T> dq = Vec<T>::Zero(c_.question_dim);
    std::vector<Mat<T>> de(L + 1);
    for (int l = 1; l <= L; ++l) {
      const std::string n = std::to_string(l);
      const int cl = width_at(c_, l);
      const Mat<T> dk = ds[l] * f.e[l].transpose();  // cl x cl
      de[l] = f.k[l].transpose() * ds[l];
      // Row-major flattening matches the generator output order.
      Vec<T> dk_rm(cl * cl);
      for (int i = 0; i < cl; ++i)
        for (int j = 0; j < cl; ++j) dk_rm(i * cl + j) = dk(i, j);
      RowMapMut<T>(g("lang" + n + ".weight"), cl * cl, c_.question_dim) += dk_rm * f.q.transpose();
      Eigen::Map<Vec<T>>(g("lang" + n + ".bias"), cl * cl) += dk_rm;
      const RowMap<T> gw(at("lang" + n + ".weight"), cl * cl, c_.question_dim);
      dq += gw.transpose() * dk_rm;
    }

    // Encoder, top level down.
    h = f.h >> L;
    w = f.w >> L;
    for (int l = L; l >= 1; --l) {
      const std::string n = std::to_string(l);
      const int cin = width_at(c_, l - 1), cout = width_at(c_, l);
      activate_backward(f.e[l], de[l], c_.linear);
      Eigen::Map<Vec<T>>(g("enc" + n + ".bias"), cout) += de[l].rowwise().sum();
      RowMapMut<T>(g("enc" + n + ".weight"), cout, cin * 9) += de[l] * f.cols[l].transpose();
      if (l > 1) {
        const RowMap<T> wt(at("enc" + n + ".weight"), cout, cin * 9);
        const Mat<T> dcols = wt.transpose() * de[l];
        Mat<T> dprev;
        col2im(dcols, cin, h * 2, w * 2, dprev);
        de[l - 1] += dprev;
      }
      h *= 2;
      w *= 2;
    }

    // Question encoder: q = r / |r|, r = W m + b, m = mean of embeddings.
    const T rn = f.raw_q.norm();
    const Vec<T> dr = (dq - f.q * f.q.dot(dq)) / rn;
    const int E = c_.embed_dim;
    RowMapMut<T>(g("question.weight"), c_.question_dim, E) += dr * f.mean_embedding.transpose();
    Eigen::Map<Vec<T>>(g("question.bias"), c_.question_dim) += dr;
    const RowMap<T> wq(at("question.weight"), c_.question_dim, E);
    const Vec<T> dm = wq.transpose() * dr / static_cast<T>(tokens.size());
    T* gemb = g("embedding");
    for (int t : tokens)
      for (int i = 0; i < E; ++i) gemb[t * E + i] += dm(i);
  }

 private:
  const LingUNetConfig& c_;
  const T* p_;
  std::vector<ParamSlot> slots_;
};

template <class T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace

template <class T>
T focal_loss_logits(const T* logits, const std::uint8_t* target, std::size_t n, T gamma,
                    T* grad) {
  EPIMEM_CHECK(gamma >= T(0), "focal_loss: gamma must be >= 0");
  if (n == 0) return T(0);
  const T lo = T(1e-7), hi = T(1) - T(1e-7);
  const T inv_n = T(1) / static_cast<T>(n);
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T p = std::clamp(sigmoid(logits[i]), lo, hi);
    if (target[i]) {
      const T lp = std::log(p), omp = T(1) - p;
      total -= std::pow(omp, gamma) * lp;
      if (grad)
        grad[i] = (gamma * p * std::pow(omp, gamma) * lp - std::pow(omp, gamma + 1)) * inv_n;
    } else {
      const T l1p = std::log(T(1) - p), omp = T(1) - p;
      total -= std::pow(p, gamma) * l1p;
      if (grad)
        grad[i] = (-gamma * std::pow(p, gamma) * omp * l1p + std::pow(p, gamma + 1)) * inv_n;
    }
  }
  return total * inv_n;
}

FocalResult focal_loss(const Heatmap& heatmap, const std::vector<std::uint8_t>& target,
                       double gamma) {
  EPIMEM_CHECK(heatmap.score.size() == target.size(), "focal_loss: shape mismatch");
  std::vector<double> logits(target.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::clamp(heatmap.score[i], 1e-7, 1 - 1e-7);
    logits[i] = std::log(p / (1 - p));
  }
  FocalResult r;
  r.grad_logits.resize(target.size());
  r.loss = focal_loss_logits(logits.data(), target.data(), logits.size(), gamma,
                             r.grad_logits.data());
  return r;
}

template <class T>
T sample_loss(const LingUNetConfig& config, const T* params, const NetInput<T>& input,
              const std::vector<int>& tokens, const std::vector<std::uint8_t>& target, T gamma,
              T* grad, std::vector<T>* logits_out) {
  const Net<T> net(config, params);
  thread_local Forward<T> f;  // reused across calls to avoid reallocating
  net.embed(tokens, f);
  net.normalize(f);
  net.run(input, f);
  EPIMEM_CHECK(target.size() == static_cast<std::size_t>(input.rows) * input.cols,
               "sample_loss: target does not match the map region");
  // Gather the real region.
  std::vector<T> z(target.size());
  for (int r = 0; r < input.rows; ++r)
    for (int c = 0; c < input.cols; ++c)
      z[static_cast<std::size_t>(r) * input.cols + c] = f.logits(0, r * input.width + c);
  std::vector<T> dz(grad ? z.size() : 0);
  const T loss = focal_loss_logits(z.data(), target.data(), z.size(), gamma,
                                   grad ? dz.data() : nullptr);
  if (logits_out) *logits_out = z;
  if (grad) {
    Mat<T> dl = Mat<T>::Zero(1, f.logits.cols());
    for (int r = 0; r < input.rows; ++r)
      for (int c = 0; c < input.cols; ++c)
        dl(0, r * input.width + c) = dz[static_cast<std::size_t>(r) * input.cols + c];
    net.backward(f, tokens, dl, grad);
  }
  return loss;
}

template float focal_loss_logits<float>(const float*, const std::uint8_t*, std::size_t, float,
                                        float*);
template double focal_loss_logits<double>(const double*, const std::uint8_t*, std::size_t,
                                          double, double*);
template long double focal_loss_logits<long double>(const long double*, const std::uint8_t*,
                                                    std::size_t, long double, long double*);
template float sample_loss<float>(const LingUNetConfig&, const float*, const NetInput<float>&,
                                  const std::vector<int>&, const std::vector<std::uint8_t>&,
                                  float, float*, std::vector<float>*);
template double sample_loss<double>(const LingUNetConfig&, const double*,
                                    const NetInput<double>&, const std::vector<int>&,
                                    const std::vector<std::uint8_t>&, double, double*,
                                    std::vector<double>*);
template long double sample_loss<long double>(const LingUNetConfig&, const long double*,
                                              const NetInput<long double>&,
                                              const std::vector<int>&,
                                              const std::vector<std::uint8_t>&, long double,
                                              long double*, std::vector<long double>*);

std::vector<double> encode_question(const std::string& text, const MiniLingUNetParams& params) {
  const Net<double> net(params.config, params.values.data());
  Forward<double> f;
  net.embed(tokenize_question(text), f);
  net.normalize(f);
  return {f.q.data(), f.q.data() + f.q.size()};
}

namespace {

template <class T>
Heatmap finish_heatmap(const Forward<T>& f, const NetInput<T>& input, const GridSpec& spec) {
  EPIMEM_CHECK(spec.rows == input.rows && spec.cols == input.cols,
               "lingunet_forward: grid does not match the input region");
  Heatmap h(spec);
  for (int r = 0; r < input.rows; ++r)
    for (int c = 0; c < input.cols; ++c)
      h.score[static_cast<std::size_t>(r) * input.cols + c] =
          sigmoid(static_cast<double>(f.logits(0, r * input.width + c)));
  return h;
}

}  // namespace

Heatmap lingunet_forward(const NetInput<double>& input, const std::vector<double>& q,
                         const MiniLingUNetParams& params, const GridSpec& spec) {
  EPIMEM_CHECK(static_cast<int>(q.size()) == params.config.question_dim,
               "lingunet_forward: question embedding has the wrong size");
  const Net<double> net(params.config, params.values.data());
  Forward<double> f;
  f.raw_q = Eigen::Map<const Vec<double>>(q.data(), static_cast<Eigen::Index>(q.size()));
  net.normalize(f);
  net.run(input, f);
  return finish_heatmap(f, input, spec);
}

Heatmap lingunet_forward(const NetInput<float>& input, const std::vector<int>& tokens,
                         const MiniLingUNetParams& params, const GridSpec& spec) {
  const std::vector<float> p(params.values.begin(), params.values.end());
  const Net<float> net(params.config, p.data());
  Forward<float> f;
  net.embed(tokens, f);
  net.normalize(f);
  net.run(input, f);
  return finish_heatmap(f, input, spec);
}

// ---------------------------------------------------------------- checkpoint

void write_checkpoint(std::ostream& out, const MiniLingUNetParams& params,
                      const nlohmann::json& extra) {
  EPIMEM_CHECK(params.values.size() == param_count(params.config),
               "write_checkpoint: parameter count does not match the layout");
  nlohmann::json h;
  h["format"] = "epimem-lingunet";
  h["version"] = 1;
  h["seed"] = params.seed;
  h["config"] = params.config.to_json();
  auto shapes = nlohmann::json::array();
  for (const auto& s : param_layout(params.config))
    shapes.push_back({{"name", s.name}, {"shape", s.shape}});
  h["params"] = std::move(shapes);
  h["count"] = params.values.size();
  h["dtype"] = "float64-le";
  h["extra"] = extra;
  out << h.dump() << '\n';
  detail::put_plane(out, params.values);
  EPIMEM_CHECK(out.good(), "write_checkpoint: stream error");
}

MiniLingUNetParams read_checkpoint(std::istream& in, nlohmann::json* header) {
  std::string line;
  EPIMEM_CHECK(std::getline(in, line), "read_checkpoint: missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("read_checkpoint: bad header: ") + e.what());
  }
  EPIMEM_CHECK(h.value("format", "") == "epimem-lingunet", "read_checkpoint: not a checkpoint");
  MiniLingUNetParams p;
  p.config = LingUNetConfig::from_json(h.at("config"));
  p.seed = h.value("seed", std::uint64_t{0});
  const std::size_t n = h.at("count").get<std::size_t>();
  EPIMEM_CHECK(n == param_count(p.config), "read_checkpoint: count does not match the config");
  p.values = detail::get_plane<double>(in, n);
  for (double v : p.values)
    EPIMEM_CHECK(std::isfinite(v), "read_checkpoint: non-finite parameter");
  if (header) *header = h;
  return p;
}

}  // namespace epimem
