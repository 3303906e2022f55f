#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/model.hpp"
#include "stlm/rng.hpp"
#include "stlm/unified.hpp"

namespace stlm {

struct GenerationParams {
  double temperature = 0.8;
  double top_p = 0.95;
  int max_new_tokens = 50;
  std::function<bool(int)> stop_condition;  // optional; checked on each new token
};

inline void validate_generation_params(const GenerationParams& p) {
  if (!(p.temperature > 0)) fail_config("generate: temperature must be positive");
  if (!(p.top_p > 0) || p.top_p > 1.0) fail_config("generate: top_p must be in (0, 1]");
  if (p.max_new_tokens < 0) fail_config("generate: max_new_tokens must be >= 0");
}

// Nucleus sampling from one logits row: divide by temperature, keep the
// smallest probability-sorted prefix with cumulative mass >= top_p,
// renormalize, draw. Ties in probability order break by token id, so the
// draw is fully deterministic given the rng.
inline int sample_top_p(const Eigen::RowVectorXd& logits, double temperature, double top_p,
                        Rng& rng) {
  Eigen::RowVectorXd p = logits / temperature;
  softmax_row_inplace(p);

  std::vector<int> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (p(a) != p(b)) return p(a) > p(b);
    return a < b;
  });

  double mass = 0.0;
  std::size_t keep = order.size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    mass += p(order[i]);
    if (mass >= top_p) {
      keep = i + 1;
      break;
    }
  }

  const double u = rng.real01() * mass;
  double acc = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    acc += p(order[i]);
    if (u < acc) return order[i];
  }
  return order[keep - 1];
}

// Autoregressive decoding with an exact per-layer key/value cache. Returns
// only the newly generated ids. Stops at max_new_tokens, at a satisfied
// stop_condition (the stopping token is kept), or when the context is full.
inline std::vector<int> generate_ids(const TransformerLm& model, std::span<const int> prompt,
                                     const GenerationParams& params, Rng& rng) {
  validate_generation_params(params);
  if (prompt.empty()) fail_data("generate: prompt must be non-empty");
  if (static_cast<int>(prompt.size()) > model.config().context_len - 1) {
    fail_data("generate: prompt exceeds context budget");
  }

  const auto& cfg = model.config();
  const auto& p = model.params();
  const int h = cfg.heads;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // k/v caches per layer grow one row per processed token.
  std::vector<Mat> k_cache(p.layers.size()), v_cache(p.layers.size());
  for (auto& m : k_cache) m.resize(0, cfg.model_dim);
  for (auto& m : v_cache) m.resize(0, cfg.model_dim);

  Eigen::RowVectorXd logits;
  auto feed = [&](int id, int position) {
    Eigen::RowVectorXd x = p.embed.row(id);
    const std::vector<int> pos{position};
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const auto& lay = p.layers[l];
      const double r1 = rms_of(x);
      Eigen::RowVectorXd h1 = x.cwiseProduct(lay.ln1.row(0)) / r1;
      Eigen::RowVectorXd q = h1 * lay.wq;
      Eigen::RowVectorXd k = h1 * lay.wk;
      Eigen::RowVectorXd v = h1 * lay.wv;
      for (int head = 0; head < h; ++head) {
        Mat qb = q.segment(head * dh, dh);
        Mat kb = k.segment(head * dh, dh);
        rope_rotate(qb, pos, cfg.rope_theta);
        rope_rotate(kb, pos, cfg.rope_theta);
        q.segment(head * dh, dh) = qb;
        k.segment(head * dh, dh) = kb;
      }
      k_cache[l].conservativeResize(k_cache[l].rows() + 1, Eigen::NoChange);
      k_cache[l].bottomRows(1) = k;
      v_cache[l].conservativeResize(v_cache[l].rows() + 1, Eigen::NoChange);
      v_cache[l].bottomRows(1) = v;

      Eigen::RowVectorXd attn(cfg.model_dim);
      for (int head = 0; head < h; ++head) {
        Eigen::RowVectorXd scores =
            (q.segment(head * dh, dh) * k_cache[l].middleCols(head * dh, dh).transpose()) * scale;
        softmax_row_inplace(scores);
        attn.segment(head * dh, dh) = scores * v_cache[l].middleCols(head * dh, dh);
      }
      x += attn * lay.wo;
      const double r2 = rms_of(x);
      Eigen::RowVectorXd h2 = x.cwiseProduct(lay.ln2.row(0)) / r2;
      Eigen::RowVectorXd u = h2 * lay.w1;
      x += u.unaryExpr([](double s) { return detail::silu(s); }) * lay.w2;
    }
    const double rf = rms_of(x);
    logits = (x.cwiseProduct(p.lnf.row(0)) / rf) * model.output_embedding().transpose();
  };

  int position = 0;
  for (int id : prompt) feed(id, position++);

  std::vector<int> out;
  while (static_cast<int>(out.size()) < params.max_new_tokens &&
         position < cfg.context_len) {
    const int next = sample_top_p(logits, params.temperature, params.top_p, rng);
    out.push_back(next);
    if (params.stop_condition && params.stop_condition(next)) break;
    feed(next, position++);
  }
  return out;
}

inline UnifiedSequence generate(const TransformerLm& model, const UnifiedSequence& prompt,
                                const GenerationParams& params, Rng& rng) {
  const auto ids = model.layout().encode(prompt);
  return model.layout().decode(generate_ids(model, ids, params, rng));
}

}  // namespace stlm
