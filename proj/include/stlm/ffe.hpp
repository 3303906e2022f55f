#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/features.hpp"
#include "stlm/tokens.hpp"

namespace stlm {

// Nearest-frame resampling so two contours can be compared frame by frame.
inline F0Contour resample_contour(const F0Contour& input, double target_rate,
                                  std::size_t target_frames) {
  if (input.frames.empty()) fail_data("resample_contour: empty contour");
  F0Contour out;
  out.frame_rate = target_rate;
  for (std::size_t j = 0; j < target_frames; ++j) {
    const double t = static_cast<double>(j) / target_rate;
    auto src = static_cast<std::size_t>(std::llround(t * input.frame_rate));
    if (src >= input.frames.size()) src = input.frames.size() - 1;
    out.frames.push_back(input.frames[src]);
  }
  return out;
}

// F0 Frame Error: the fraction of frames with a voicing-decision mismatch or,
// when both frames are voiced, an F0 deviation above 20% of the reference.
inline double ffe(const F0Contour& reference, const F0Contour& hypothesis) {
  if (reference.frames.empty()) fail_data("ffe: zero frames");
  if (reference.frames.size() != hypothesis.frames.size()) {
    fail_data("ffe: frame counts differ (resample first)");
  }
  std::size_t errors = 0;
  for (std::size_t i = 0; i < reference.frames.size(); ++i) {
    const auto& r = reference.frames[i];
    const auto& h = hypothesis.frames[i];
    if (r.voiced != h.voiced) {
      ++errors;
    } else if (r.voiced && std::abs(h.f0 - r.f0) > 0.2 * r.f0) {
      ++errors;
    }
  }
  return static_cast<double>(errors) / static_cast<double>(reference.frames.size());
}

// ---------------------------------------------------------------------------
// Style classification accuracy over labeled streams (the resynthesis
// report's expressive-style column). The classifier is pluggable and returns
// nullopt on failure; failed items are excluded and counted.

struct StyledStream {
  SpeechTokenStream speech;
  std::string label;
};

using StyleClassifier = std::function<std::optional<std::string>(const SpeechTokenStream&)>;

struct StyleAccuracy {
  double accuracy = 0.0;
  int evaluated = 0;
  int excluded = 0;
};

inline StyleAccuracy style_accuracy(const std::vector<StyledStream>& items,
                                    const StyleClassifier& classifier) {
  if (items.empty()) fail_data("style_accuracy: no items");
  StyleAccuracy out;
  int correct = 0;
  for (const auto& item : items) {
    const auto got = classifier(item.speech);
    if (!got.has_value()) {
      ++out.excluded;
      continue;
    }
    ++out.evaluated;
    if (*got == item.label) ++correct;
  }
  if (out.evaluated == 0) fail_data("style_accuracy: every item was excluded");
  out.accuracy = static_cast<double>(correct) / out.evaluated;
  return out;
}

}  // namespace stlm
