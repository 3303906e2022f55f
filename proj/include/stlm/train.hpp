#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/model.hpp"
#include "stlm/rng.hpp"

namespace stlm {

namespace detail {

// Backward of y = gain (.) x / rms(x) given dy; accumulates dgain, returns dx.
inline Mat rmsnorm_backward(const Mat& dy, const Mat& x, const Mat& gain,
                            const Eigen::VectorXd& rms, Mat& dgain) {
  Mat dx(x.rows(), x.cols());
  const auto d = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = rms(i);
    const Eigen::RowVectorXd gdy = dy.row(i).cwiseProduct(gain.row(0));
    const double inner = gdy.cwiseProduct(x.row(i)).sum();
    dx.row(i) = gdy / r - x.row(i) * (inner / (d * r * r * r));
    dgain.row(0) += dy.row(i).cwiseProduct(x.row(i)) / r;
  }
  return dx;
}

}  // namespace detail

// Mean cross-entropy of next-token prediction over a batch of id sequences.
// Positions with no successor contribute nothing. When `grad` is non-null the
// parameter gradients are accumulated into it (it must be zero-filled by the
// caller).
inline double batch_loss(const TransformerLm& model, const std::vector<std::vector<int>>& batch,
                         Params* grad = nullptr) {
  const auto& cfg = model.config();
  const auto& params = model.params();
  std::int64_t total_targets = 0;
  for (const auto& seq : batch) {
    if (static_cast<int>(seq.size()) > cfg.context_len) {
      fail_data("batch_loss: sequence exceeds context length");
    }
    if (seq.size() >= 2) total_targets += static_cast<std::int64_t>(seq.size()) - 1;
  }
  if (total_targets == 0) fail_data("batch_loss: batch has no next-token targets");
  const double inv_count = 1.0 / static_cast<double>(total_targets);

  double loss = 0.0;
  for (const auto& seq : batch) {
    if (seq.size() < 2) continue;
    auto cache = model.forward(seq);
    const auto n = static_cast<Eigen::Index>(seq.size());

    Mat dlogits;
    if (grad != nullptr) dlogits = Mat::Zero(n, cache.logits.cols());
    for (Eigen::Index t = 0; t + 1 < n; ++t) {
      Eigen::RowVectorXd p = cache.logits.row(t);
      softmax_row_inplace(p);
      const int target = seq[static_cast<std::size_t>(t) + 1];
      loss -= std::log(std::max(p(target), 1e-300)) * inv_count;
      if (grad != nullptr) {
        dlogits.row(t) = p * inv_count;
        dlogits(t, target) -= inv_count;
      }
    }
    if (grad == nullptr) continue;

    // ---- backward through the unembedding and final norm
    const Mat& w_out = model.output_embedding();
    Mat dfinal = dlogits * w_out;  // n x d
    Mat dw_out = dlogits.transpose() * cache.final_normed;
    if (cfg.tied_embeddings) grad->embed += dw_out;
    else grad->unembed += dw_out;

    Mat dx = detail::rmsnorm_backward(dfinal, cache.residuals.back(), params.lnf, cache.rf, grad->lnf);

    const int h = cfg.heads;
    const int dh = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<int> positions(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) positions[i] = static_cast<int>(i);

    for (int l = cfg.layers - 1; l >= 0; --l) {
      const auto& lay = params.layers[static_cast<std::size_t>(l)];
      auto& glay = grad->layers[static_cast<std::size_t>(l)];
      const auto& lc = cache.layers[static_cast<std::size_t>(l)];

      // MLP half: x = x_mid + silu(h2 w1) w2
      Mat ds = dx * lay.w2.transpose();
      glay.w2 += lc.s.transpose() * dx;
      Mat du = ds.cwiseProduct(lc.u.unaryExpr([](double v) { return detail::silu_grad(v); }));
      glay.w1 += lc.h2.transpose() * du;
      Mat dh2 = du * lay.w1.transpose();
      Mat dx_mid = dx + detail::rmsnorm_backward(dh2, lc.x_mid, lay.ln2, lc.r2, glay.ln2);

      // Attention half: x_mid = x_in + concat(heads) wo
      Mat dattn = dx_mid * lay.wo.transpose();
      glay.wo += lc.attn_concat.transpose() * dx_mid;

      Mat dq = Mat::Zero(n, cfg.model_dim);
      Mat dk = Mat::Zero(n, cfg.model_dim);
      Mat dv = Mat::Zero(n, cfg.model_dim);
      for (int head = 0; head < h; ++head) {
        const auto qh = lc.q.middleCols(head * dh, dh);
        const auto kh = lc.k.middleCols(head * dh, dh);
        const auto vh = lc.v.middleCols(head * dh, dh);
        const Mat& probs = lc.attn_probs[static_cast<std::size_t>(head)];
        const auto dah = dattn.middleCols(head * dh, dh);

        dv.middleCols(head * dh, dh) = probs.transpose() * dah;
        Mat dp = dah * vh.transpose();  // n x n; entries past the diagonal are unused
        Mat dscore(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double inner = dp.row(i).cwiseProduct(probs.row(i)).sum();
          dscore.row(i) = probs.row(i).cwiseProduct(dp.row(i) - Eigen::RowVectorXd::Constant(n, inner));
        }
        dq.middleCols(head * dh, dh) = dscore * kh * scale;
        dk.middleCols(head * dh, dh) = dscore.transpose() * qh * scale;
      }
      // Undo the rotary rotation to reach the projection outputs.
      for (int head = 0; head < h; ++head) {
        rope_rotate(dq.middleCols(head * dh, dh), positions, cfg.rope_theta, /*inverse=*/true);
        rope_rotate(dk.middleCols(head * dh, dh), positions, cfg.rope_theta, /*inverse=*/true);
      }
      glay.wq += lc.h1.transpose() * dq;
      glay.wk += lc.h1.transpose() * dk;
      glay.wv += lc.h1.transpose() * dv;
      Mat dh1 = dq * lay.wq.transpose() + dk * lay.wk.transpose() + dv * lay.wv.transpose();
      dx = dx_mid + detail::rmsnorm_backward(dh1, lc.x_in, lay.ln1, lc.r1, glay.ln1);
    }

    for (Eigen::Index t = 0; t < n; ++t) {
      grad->embed.row(seq[static_cast<std::size_t>(t)]) += dx.row(t);
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------

struct TrainConfig {
  int steps = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied with the learning rate
};

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per step
};

using BatchSource = std::function<std::vector<std::vector<int>>(int step, Rng& rng)>;

// Adam on the full parameter set; deterministic for a fixed seed and batch
// source. A non-finite loss aborts with the offending step in the message.
inline TrainResult train(TransformerLm& model, const BatchSource& batches,
                         const TrainConfig& config) {
  TrainResult result;
  if (config.steps <= 0) return result;
  Rng rng(config.seed);
  Params grad = model.params().like(0.0);
  Params m1 = model.params().like(0.0);
  Params m2 = model.params().like(0.0);

  std::vector<Mat*> p_list, g_list, m1_list, m2_list;
  model.params().visit([&](const std::string&, Mat& t) { p_list.push_back(&t); });
  grad.visit([&](const std::string&, Mat& t) { g_list.push_back(&t); });
  m1.visit([&](const std::string&, Mat& t) { m1_list.push_back(&t); });
  m2.visit([&](const std::string&, Mat& t) { m2_list.push_back(&t); });

  for (int step = 0; step < config.steps; ++step) {
    const auto batch = batches(step, rng);
    for (Mat* g : g_list) g->setZero();
    const double loss = batch_loss(model, batch, &grad);
    if (!std::isfinite(loss)) {
      fail_numeric("train: non-finite loss at step " + std::to_string(step));
    }
    result.loss_curve.push_back(loss);

    const double bc1 = 1.0 - std::pow(config.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(config.beta2, step + 1);
    for (std::size_t i = 0; i < p_list.size(); ++i) {
      Mat& p = *p_list[i];
      Mat& g = *g_list[i];
      Mat& ma = *m1_list[i];
      Mat& vb = *m2_list[i];
      ma = config.beta1 * ma + (1.0 - config.beta1) * g;
      vb = config.beta2 * vb + (1.0 - config.beta2) * g.cwiseProduct(g);
      if (config.weight_decay > 0) p *= 1.0 - config.learning_rate * config.weight_decay;
      p.array() -= config.learning_rate * (ma.array() / bc1) /
                   ((vb.array() / bc2).sqrt() + config.eps);
    }
  }
  return result;
}

inline void write_loss_csv(const std::string& path, const std::vector<double>& curve) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write loss curve: " + path);
  out << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, curve[i]);
    out << buf;
  }
}

}  // namespace stlm
