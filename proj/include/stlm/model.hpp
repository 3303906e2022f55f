#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stlm/errors.hpp"
#include "stlm/rng.hpp"
#include "stlm/vocab.hpp"

namespace stlm {

using Mat = Eigen::MatrixXd;

struct ModelConfig {
  int layers = 2;
  int model_dim = 64;
  int heads = 4;
  int ff_dim = 128;
  int context_len = 256;
  double rope_theta = 100000.0;  // alternate setting: 10000
  double init_std = 0.05;
  bool tied_embeddings = false;
  std::uint64_t seed = 0;

  int head_dim() const { return model_dim / heads; }
};

inline void validate_model_config(const ModelConfig& c) {
  if (c.layers < 1) fail_config("model: layers must be >= 1");
  if (c.heads < 1 || c.model_dim % c.heads != 0) {
    fail_config("model: model_dim must be divisible by heads");
  }
  if (c.head_dim() % 2 != 0) fail_config("model: head dimension must be even for rotary positions");
  if (c.context_len < 2) fail_config("model: context_len must be >= 2");
  if (c.ff_dim < 1) fail_config("model: ff_dim must be >= 1");
  if (c.rope_theta <= 0) fail_config("model: rope_theta must be positive");
}

// ---------------------------------------------------------------------------
// Parameters. Norm gains are 1 x dim matrices so every tensor shares one type
// and the visit() helpers can drive Adam, checkpointing and gradient checks.

struct LayerParams {
  Mat ln1, ln2;          // 1 x dim
  Mat wq, wk, wv, wo;    // dim x dim
  Mat w1;                // dim x ff
  Mat w2;                // ff x dim
};

struct Params {
  Mat embed;    // vocab x dim
  Mat unembed;  // vocab x dim; unused (0 x 0) when embeddings are tied
  Mat lnf;      // 1 x dim
  std::vector<LayerParams> layers;

  template <typename F>
  void visit(F&& f) {
    f("embed", embed);
    if (unembed.size() > 0) f("unembed", unembed);
    f("lnf", lnf);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      auto& lay = layers[l];
      f(p + "ln1", lay.ln1);
      f(p + "wq", lay.wq);
      f(p + "wk", lay.wk);
      f(p + "wv", lay.wv);
      f(p + "wo", lay.wo);
      f(p + "ln2", lay.ln2);
      f(p + "w1", lay.w1);
      f(p + "w2", lay.w2);
    }
  }

  template <typename F>
  void visit(F&& f) const {
    const_cast<Params*>(this)->visit([&](const std::string& name, Mat& m) {
      f(name, static_cast<const Mat&>(m));
    });
  }

  // Same shapes, all entries set to `value`.
  Params like(double value) const {
    Params out = *this;
    out.visit([&](const std::string&, Mat& m) { m.setConstant(value); });
    return out;
  }
};

// ---------------------------------------------------------------------------

inline void softmax_row_inplace(Eigen::Ref<Eigen::RowVectorXd> row) {
  const double m = row.maxCoeff();
  row = (row.array() - m).exp();
  row /= row.sum();
}

inline double rms_of(const Eigen::Ref<const Eigen::RowVectorXd>& row, double eps = 1e-6) {
  return std::sqrt(row.squaredNorm() / static_cast<double>(row.size()) + eps);
}

// Rotary rotation applied in place to an n x dim block (one head), row i
// rotated by positions[i]. Pair j uses frequency theta^(-2j/dim). Position 0
// is the identity.
inline void rope_rotate(Eigen::Ref<Mat> x, std::span<const int> positions, double theta,
                        bool inverse = false) {
  const auto dim = static_cast<int>(x.cols());
  if (dim % 2 != 0) fail_config("rope_rotate: dimension must be even");
  if (static_cast<std::size_t>(x.rows()) != positions.size()) {
    fail_data("rope_rotate: positions do not match rows");
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < dim / 2; ++j) {
      const double freq = std::pow(theta, -2.0 * j / static_cast<double>(dim));
      double angle = positions[static_cast<std::size_t>(i)] * freq;
      if (inverse) angle = -angle;
      const double c = std::cos(angle), s = std::sin(angle);
      const double x0 = x(i, 2 * j), x1 = x(i, 2 * j + 1);
      x(i, 2 * j) = x0 * c - x1 * s;
      x(i, 2 * j + 1) = x0 * s + x1 * c;
    }
  }
}

// ---------------------------------------------------------------------------

namespace detail {

// Everything the backward pass needs from one layer's forward.
struct LayerCache {
  Mat x_in;             // residual stream entering the block
  Mat h1;               // rmsnorm(x_in)
  Eigen::VectorXd r1;   // per-row rms of x_in
  Mat q, k, v;          // post-rope q/k, plain v (n x dim, heads side by side)
  std::vector<Mat> attn_probs;  // per head, n x n lower-triangular rows
  Mat attn_concat;      // n x dim
  Mat x_mid;            // after attention residual
  Mat h2;               // rmsnorm(x_mid)
  Eigen::VectorXd r2;
  Mat u;                // h2 * w1
  Mat s;                // silu(u)
};

struct ForwardCache {
  std::vector<Mat> residuals;  // layers+1 states: embeddings, then per block
  Mat final_normed;            // rmsnorm(residuals.back())
  Eigen::VectorXd rf;
  Mat logits;                  // n x vocab
  std::vector<LayerCache> layers;
};

inline Mat rmsnorm(const Mat& x, const Mat& gain, Eigen::VectorXd& rms_out, double eps = 1e-6) {
  Mat y(x.rows(), x.cols());
  rms_out.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = rms_of(x.row(i), eps);
    rms_out(i) = r;
    y.row(i) = x.row(i).cwiseProduct(gain.row(0)) / r;
  }
  return y;
}

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

}  // namespace detail

// A decoder-only autoregressive transformer over the unified vocabulary:
// pre-norm blocks, rotary attention, SiLU feed-forward, tied or untied output
// embeddings. Immutable while scoring or generating; training owns the value
// exclusively.
class TransformerLm {
 public:
  TransformerLm(ModelConfig config, VocabularyLayout layout)
      : config_(config), layout_(layout) {
    validate_model_config(config_);
    const int v = layout_.total();
    const int d = config_.model_dim;
    Rng rng(config_.seed);
    auto gauss = [&](Eigen::Index rows, Eigen::Index cols) {
      Mat m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = config_.init_std * rng.normal();
      }
      return m;
    };
    params_.embed = gauss(v, d);
    if (!config_.tied_embeddings) params_.unembed = gauss(v, d);
    params_.lnf = Mat::Ones(1, d);
    params_.layers.resize(static_cast<std::size_t>(config_.layers));
    for (auto& lay : params_.layers) {
      lay.ln1 = Mat::Ones(1, d);
      lay.ln2 = Mat::Ones(1, d);
      lay.wq = gauss(d, d);
      lay.wk = gauss(d, d);
      lay.wv = gauss(d, d);
      lay.wo = gauss(d, d);
      lay.w1 = gauss(d, config_.ff_dim);
      lay.w2 = gauss(config_.ff_dim, d);
    }
  }

  const ModelConfig& config() const { return config_; }
  const VocabularyLayout& layout() const { return layout_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  const Mat& output_embedding() const {
    return config_.tied_embeddings ? params_.embed : params_.unembed;
  }

  detail::ForwardCache forward(std::span<const int> ids) const {
    const auto n = static_cast<Eigen::Index>(ids.size());
    if (n == 0) fail_data("forward: empty sequence");
    if (n > config_.context_len) fail_data("forward: sequence exceeds context length");
    const int d = config_.model_dim;
    const int h = config_.heads;
    const int dh = config_.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);

    detail::ForwardCache cache;
    Mat x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int id = ids[static_cast<std::size_t>(i)];
      if (id < 0 || id >= layout_.total()) fail_data("forward: token id out of vocabulary");
      x.row(i) = params_.embed.row(id);
    }
    cache.residuals.push_back(x);

    cache.layers.resize(params_.layers.size());
    for (std::size_t l = 0; l < params_.layers.size(); ++l) {
      const auto& lay = params_.layers[l];
      auto& lc = cache.layers[l];
      lc.x_in = x;
      lc.h1 = detail::rmsnorm(x, lay.ln1, lc.r1);
      lc.q = lc.h1 * lay.wq;
      lc.k = lc.h1 * lay.wk;
      lc.v = lc.h1 * lay.wv;
      for (int head = 0; head < h; ++head) {
        rope_rotate(lc.q.middleCols(head * dh, dh), positions, config_.rope_theta);
        rope_rotate(lc.k.middleCols(head * dh, dh), positions, config_.rope_theta);
      }
      lc.attn_concat.resize(n, d);
      lc.attn_probs.assign(static_cast<std::size_t>(h), Mat());
      for (int head = 0; head < h; ++head) {
        const auto qh = lc.q.middleCols(head * dh, dh);
        const auto kh = lc.k.middleCols(head * dh, dh);
        const auto vh = lc.v.middleCols(head * dh, dh);
        Mat& probs = lc.attn_probs[static_cast<std::size_t>(head)];
        probs = Mat::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          Eigen::RowVectorXd scores = (qh.row(i) * kh.topRows(i + 1).transpose()) * scale;
          softmax_row_inplace(scores);
          probs.row(i).head(i + 1) = scores;
          lc.attn_concat.row(i).segment(head * dh, dh) = scores * vh.topRows(i + 1);
        }
      }
      x = lc.x_in + lc.attn_concat * lay.wo;
      lc.x_mid = x;
      lc.h2 = detail::rmsnorm(x, lay.ln2, lc.r2);
      lc.u = lc.h2 * lay.w1;
      lc.s = lc.u.unaryExpr([](double v) { return detail::silu(v); });
      x = lc.x_mid + lc.s * lay.w2;
      cache.residuals.push_back(x);
    }

    cache.final_normed = detail::rmsnorm(x, params_.lnf, cache.rf);
    cache.logits = cache.final_normed * output_embedding().transpose();
    return cache;
  }

  // Hidden states entering the probe: layer 0 is the embedding output and
  // layer l (1-based) the post-block residual state.
  Mat extract_layer_features(std::span<const int> ids, int layer) const {
    if (layer < 0 || layer > config_.layers) fail_config("extract_layer_features: layer out of range");
    auto cache = forward(ids);
    return cache.residuals[static_cast<std::size_t>(layer)];
  }

 private:
  ModelConfig config_;
  VocabularyLayout layout_;
  Params params_;
};

}  // namespace stlm
