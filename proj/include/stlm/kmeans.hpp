#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/features.hpp"
#include "stlm/rng.hpp"
#include "stlm/tokens.hpp"

namespace stlm {

struct Codebook {
  std::vector<std::vector<double>> centroids;

  int size() const { return static_cast<int>(centroids.size()); }
  std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

// Nearest centroid by Euclidean distance; ties break to the lowest index.
inline int nearest_centroid(const std::vector<double>& frame, const Codebook& codebook) {
  if (frame.size() != codebook.dim()) fail_data("nearest_centroid: dimension mismatch");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c = 0; c < codebook.size(); ++c) {
    const double d = squared_distance(frame, codebook.centroids[static_cast<std::size_t>(c)]);
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

struct KMeansResult {
  Codebook codebook;
  std::vector<double> inertia_curve;  // one entry per Lloyd iteration
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed;
// a cluster that loses every point keeps its previous centroid.
inline KMeansResult train_kmeans(const std::vector<FeatureFrames>& inputs, int k, int max_iters,
                                 std::uint64_t seed) {
  if (k < 1) fail_config("train_kmeans: k must be >= 1");
  std::vector<const std::vector<double>*> frames;
  std::size_t d = 0;
  for (const auto& f : inputs) {
    if (!f.empty()) {
      if (d == 0) d = f.dim();
      else if (f.dim() != d) fail_data("train_kmeans: dimension mismatch across inputs");
    }
    for (const auto& frame : f.frames) frames.push_back(&frame);
  }
  if (frames.size() < static_cast<std::size_t>(k)) {
    fail_data("train_kmeans: fewer frames than clusters");
  }

  Rng rng(seed);
  KMeansResult result;
  auto& centroids = result.codebook.centroids;
  centroids.reserve(static_cast<std::size_t>(k));

  // k-means++ seeding: first centroid uniform, then proportional to the
  // squared distance to the closest chosen centroid.
  centroids.push_back(*frames[rng.below(frames.size())]);
  std::vector<double> dist2(frames.size(), 0.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      double best = squared_distance(*frames[i], centroids[0]);
      for (std::size_t j = 1; j < centroids.size(); ++j) {
        best = std::min(best, squared_distance(*frames[i], centroids[j]));
      }
      dist2[i] = best;
      total += best;
    }
    std::size_t chosen;
    if (total <= 0.0) {
      chosen = rng.below(frames.size());
    } else {
      const double target = rng.real01() * total;
      double acc = 0.0;
      chosen = frames.size() - 1;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        acc += dist2[i];
        if (acc > target) {
          chosen = i;
          break;
        }
      }
    }
    centroids.push_back(*frames[chosen]);
  }

  std::vector<int> assignment(frames.size(), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const int a = nearest_centroid(*frames[i], result.codebook);
      inertia += squared_distance(*frames[i], centroids[static_cast<std::size_t>(a)]);
      if (a != assignment[i]) {
        assignment[i] = a;
        changed = true;
      }
    }
    if (!result.inertia_curve.empty() && inertia > result.inertia_curve.back() + 1e-9) {
      fail_numeric("train_kmeans: inertia increased between iterations");
    }
    result.inertia_curve.push_back(inertia);
    result.iterations = iter + 1;
    if (!changed) break;

    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto a = static_cast<std::size_t>(assignment[i]);
      ++counts[a];
      for (std::size_t j = 0; j < d; ++j) sums[a][j] += (*frames[i])[j];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < d; ++j) {
        centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
  }
  return result;
}

// Maps every frame to its nearest centroid; token time is frame / frame_rate.
inline SpeechTokenStream quantize(const FeatureFrames& features, const Codebook& codebook,
                                  TokenKind kind, const TokenRates& rates = TokenRates{}) {
  if (!features.empty() && features.dim() != codebook.dim()) {
    fail_data("quantize: feature dimension does not match codebook");
  }
  SpeechTokenStream out;
  out.rates = rates;
  const Rational rate = Rational::from_decimal(features.frame_rate);
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.tokens.push_back(SpeechToken{kind, nearest_centroid(features.frames[i], codebook),
                                     Rational::from_frame(static_cast<std::int64_t>(i), rate)});
  }
  return out;
}

// Contour -> per-frame [log f0 (0 if unvoiced), voicing flag] features.
inline FeatureFrames pitch_features(const F0Contour& contour) {
  FeatureFrames f;
  f.frame_rate = contour.frame_rate;
  for (const auto& fr : contour.frames) {
    f.frames.push_back({fr.voiced ? std::log(fr.f0) : 0.0, fr.voiced ? 1.0 : 0.0});
  }
  return f;
}

// Codebook-quantized pitch track: pool the (log f0, voicing) features down to
// target_rate with non-overlapping mean windows, then take nearest centroids.
// Emits ceil(duration * target_rate) tokens.
inline SpeechTokenStream pitch_tokenize(const F0Contour& contour, const Codebook& codebook,
                                        double target_rate = 12.5,
                                        const TokenRates& rates = TokenRates{}) {
  validate_contour(contour);
  if (target_rate > contour.frame_rate) {
    fail_config("pitch_tokenize: target rate exceeds contour frame rate");
  }
  const FeatureFrames feats = pitch_features(contour);
  const double frames_per_token = contour.frame_rate / target_rate;

  SpeechTokenStream out;
  out.rates = rates;
  const Rational rate = Rational::from_decimal(target_rate);
  std::size_t start = 0;
  std::size_t w = 0;
  while (start < feats.size()) {
    auto end = static_cast<std::size_t>(std::floor(static_cast<double>(w + 1) * frames_per_token + 0.5));
    if (end > feats.size()) end = feats.size();
    if (end <= start) end = start + 1;
    std::vector<double> mean(feats.dim(), 0.0);
    for (std::size_t i = start; i < end; ++i) {
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += feats.frames[i][j];
    }
    for (double& x : mean) x /= static_cast<double>(end - start);
    out.tokens.push_back(SpeechToken{TokenKind::Pitch, nearest_centroid(mean, codebook),
                                     Rational::from_frame(static_cast<std::int64_t>(w), rate)});
    start = end;
    ++w;
  }
  return out;
}

// Plain text persistence: "stlm-codebook v1", k and d, then k rows of d
// decimals printed with full round-trip precision.
inline void save_codebook(const Codebook& codebook, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write codebook: " + path);
  out << "stlm-codebook v1\n" << codebook.size() << " " << codebook.dim() << "\n";
  char buf[64];
  for (const auto& c : codebook.centroids) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", c[j]);
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
}

inline Codebook load_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read codebook: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "stlm-codebook" || version != "v1") fail_data("codebook: bad header in " + path);
  int k = 0;
  std::size_t d = 0;
  if (!(in >> k >> d) || k < 1) fail_data("codebook: bad shape line");
  Codebook cb;
  cb.centroids.assign(static_cast<std::size_t>(k), std::vector<double>(d));
  for (auto& c : cb.centroids) {
    for (auto& x : c) {
      if (!(in >> x)) fail_data("codebook: truncated data");
      if (std::isnan(x)) fail_data("codebook: NaN entry");
    }
  }
  return cb;
}

}  // namespace stlm
