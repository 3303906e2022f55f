#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stlm/errors.hpp"

namespace stlm {

// A sequence of fixed-dimension feature vectors at a constant frame rate.
struct FeatureFrames {
  std::vector<std::vector<double>> frames;
  double frame_rate = 25.0;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  std::size_t dim() const { return frames.empty() ? 0 : frames.front().size(); }
};

inline void validate_features(const FeatureFrames& f) {
  if (f.frame_rate <= 0) fail_data("features: frame rate must be positive");
  const std::size_t d = f.dim();
  if (!f.empty() && d == 0) fail_data("features: zero-dimensional frames");
  for (const auto& frame : f.frames) {
    if (frame.size() != d) fail_data("features: inconsistent frame dimension");
    for (double x : frame) {
      if (!std::isfinite(x)) fail_data("features: non-finite entry");
    }
  }
}

// Fundamental-frequency contour; f0 == 0 exactly when the frame is unvoiced.
struct F0Contour {
  struct Frame {
    double f0 = 0.0;
    bool voiced = false;
  };
  std::vector<Frame> frames;
  double frame_rate = 100.0;

  std::size_t size() const { return frames.size(); }
  double duration() const { return static_cast<double>(frames.size()) / frame_rate; }
};

inline void validate_contour(const F0Contour& c) {
  if (c.frame_rate <= 0) fail_data("contour: frame rate must be positive");
  for (const auto& fr : c.frames) {
    if (!std::isfinite(fr.f0) || fr.f0 < 0) fail_data("contour: bad f0 value");
    if ((fr.f0 == 0.0) != !fr.voiced) fail_data("contour: f0 == 0 must match voiced == false");
  }
}

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // 0 marks a zero-variance dimension
};

inline FeatureStats compute_feature_stats(const std::vector<FeatureFrames>& inputs) {
  std::size_t d = 0, n = 0;
  for (const auto& f : inputs) {
    if (!f.empty()) {
      if (d == 0) d = f.dim();
      else if (f.dim() != d) fail_data("feature stats: dimension mismatch across inputs");
      n += f.size();
    }
  }
  if (n == 0) fail_data("feature stats: no frames");

  FeatureStats stats;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);
  for (const auto& f : inputs) {
    for (const auto& frame : f.frames) {
      for (std::size_t j = 0; j < d; ++j) stats.mean[j] += frame[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) stats.mean[j] /= static_cast<double>(n);
  for (const auto& f : inputs) {
    for (const auto& frame : f.frames) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dx = frame[j] - stats.mean[j];
        stats.stddev[j] += dx * dx;
      }
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    stats.stddev[j] = std::sqrt(stats.stddev[j] / static_cast<double>(n));
  }
  return stats;
}

// Per-dimension (x - mean) / stddev; zero-variance dimensions pass through.
inline FeatureFrames normalize_features(const FeatureFrames& input, const FeatureStats& stats) {
  if (!input.empty() && input.dim() != stats.mean.size()) {
    fail_data("normalize_features: dimension mismatch with stats");
  }
  FeatureFrames out = input;
  for (auto& frame : out.frames) {
    for (std::size_t j = 0; j < frame.size(); ++j) {
      if (stats.stddev[j] > 0) frame[j] = (frame[j] - stats.mean[j]) / stats.stddev[j];
    }
  }
  return out;
}

// Mean over non-overlapping windows of `window` seconds. A trailing partial
// window is averaged over its actual frame count. Output rate is 1/window.
inline FeatureFrames style_pool(const FeatureFrames& input, double window = 1.0) {
  if (input.empty()) return FeatureFrames{{}, 1.0 / window};
  const double frames_per_window = input.frame_rate * window;
  if (frames_per_window < 1.0) fail_config("style_pool: window shorter than one frame");

  FeatureFrames out;
  out.frame_rate = 1.0 / window;
  const std::size_t d = input.dim();
  std::size_t start = 0;
  std::size_t w = 0;
  while (start < input.size()) {
    auto end = static_cast<std::size_t>(std::floor(static_cast<double>(w + 1) * frames_per_window + 0.5));
    if (end > input.size()) end = input.size();
    if (end <= start) end = start + 1;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = start; i < end; ++i) {
      for (std::size_t j = 0; j < d; ++j) mean[j] += input.frames[i][j];
    }
    const auto count = static_cast<double>(end - start);
    for (double& x : mean) x /= count;
    out.frames.push_back(std::move(mean));
    start = end;
    ++w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixture file format: one header line per record, then one whitespace-
// separated row of decimals per frame.
//
//   utterance <id> <n_frames> <dim> <frame_rate>
//   <v0> <v1> ... <v_dim-1>
//
// Contours use the same container with dim == 2 columns (f0, voiced).

struct FeatureRecord {
  std::string id;
  FeatureFrames features;
};

inline void write_feature_file(const std::string& path, const std::vector<FeatureRecord>& records) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write feature file: " + path);
  char buf[64];
  for (const auto& rec : records) {
    out << "utterance " << rec.id << " " << rec.features.size() << " " << rec.features.dim() << " ";
    std::snprintf(buf, sizeof buf, "%.17g", rec.features.frame_rate);
    out << buf << "\n";
    for (const auto& frame : rec.features.frames) {
      for (std::size_t j = 0; j < frame.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", frame[j]);
        out << (j ? " " : "") << buf;
      }
      out << "\n";
    }
  }
}

inline std::vector<FeatureRecord> read_feature_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read feature file: " + path);
  std::vector<FeatureRecord> records;
  std::string word;
  while (in >> word) {
    if (word != "utterance") fail_data("feature file: expected 'utterance', got '" + word + "'");
    FeatureRecord rec;
    std::size_t n = 0, d = 0;
    if (!(in >> rec.id >> n >> d >> rec.features.frame_rate)) {
      fail_data("feature file: malformed record header");
    }
    rec.features.frames.assign(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (!(in >> rec.features.frames[i][j])) fail_data("feature file: truncated frame data");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline F0Contour contour_from_features(const FeatureFrames& f) {
  F0Contour c;
  c.frame_rate = f.frame_rate;
  if (!f.empty() && f.dim() != 2) fail_data("contour record must have 2 columns (f0, voiced)");
  for (const auto& frame : f.frames) {
    c.frames.push_back(F0Contour::Frame{frame[0], frame[1] != 0.0});
  }
  validate_contour(c);
  return c;
}

inline FeatureFrames contour_to_features(const F0Contour& c) {
  FeatureFrames f;
  f.frame_rate = c.frame_rate;
  for (const auto& fr : c.frames) {
    f.frames.push_back({fr.f0, fr.voiced ? 1.0 : 0.0});
  }
  return f;
}

}  // namespace stlm
