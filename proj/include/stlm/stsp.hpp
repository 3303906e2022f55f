#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/rng.hpp"
#include "stlm/sentiment.hpp"

namespace stlm {

enum class StspDirection { TextToText, TextToSpeech, SpeechToSpeech, SpeechToText };

inline const char* direction_name(StspDirection d) {
  switch (d) {
    case StspDirection::TextToText: return "T->T";
    case StspDirection::TextToSpeech: return "T->S";
    case StspDirection::SpeechToSpeech: return "S->S";
    case StspDirection::SpeechToText: return "S->T";
  }
  return "?";
}

inline Modality direction_source(StspDirection d) {
  return (d == StspDirection::TextToText || d == StspDirection::TextToSpeech) ? Modality::Text
                                                                              : Modality::Speech;
}

inline Modality direction_target(StspDirection d) {
  return (d == StspDirection::TextToText || d == StspDirection::SpeechToText) ? Modality::Text
                                                                              : Modality::Speech;
}

// Generation settings per direction: 50 new tokens toward text, 200 for
// T->S, 300 for S->S, temperature 0.8, top_p 0.95.
struct DirectionParams {
  StspDirection direction = StspDirection::TextToText;
  int max_new_tokens = 50;
  double temperature = 0.8;
  double top_p = 0.95;

  static DirectionParams defaults(StspDirection d) {
    DirectionParams p;
    p.direction = d;
    switch (d) {
      case StspDirection::TextToText:
      case StspDirection::SpeechToText: p.max_new_tokens = 50; break;
      case StspDirection::TextToSpeech: p.max_new_tokens = 200; break;
      case StspDirection::SpeechToSpeech: p.max_new_tokens = 300; break;
    }
    return p;
  }
};

// ---------------------------------------------------------------------------

// Stratified 60/20/20 split: per-sentiment seeded shuffle, then contiguous
// cuts, so class balance carries into every part.
struct StspSplit {
  std::vector<StspItem> train, dev, test;
};

inline StspSplit split_dataset(const std::vector<StspItem>& items,
                               std::array<double, 3> ratios = {0.6, 0.2, 0.2},
                               std::uint64_t seed = 0) {
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    fail_config("split_dataset: ratios must sum to 1");
  }
  std::map<SentimentLabel, std::vector<const StspItem*>> by_class;
  for (const auto& item : items) by_class[item.sentiment].push_back(&item);

  StspSplit split;
  Rng rng(seed);
  for (auto& [label, members] : by_class) {
    if (members.size() < 3) {
      fail_data(std::string("split_dataset: class '") + sentiment_name(label) +
                "' has fewer than 3 items");
    }
    rng.shuffle(members);
    const auto n = members.size();
    const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n)));
    const auto n_dev = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) split.train.push_back(*members[i]);
      else if (i < n_train + n_dev) split.dev.push_back(*members[i]);
      else split.test.push_back(*members[i]);
    }
  }
  return split;
}

// ---------------------------------------------------------------------------

// A generated continuation in the direction's target modality.
struct StspGeneration {
  std::string text;
  SpeechTokenStream speech;
};

// Continuation generator: the LM-backed implementation lives in the pipeline;
// tests plug in oracles.
using StspGenerator =
    std::function<StspGeneration(const StspItem&, const DirectionParams&, Rng&)>;

struct DirectionReport {
  StspDirection direction = StspDirection::TextToText;
  double accuracy = 0.0;            // mean over runs
  std::vector<double> per_run;
  int evaluated = 0;                // items classified, per run
  int excluded = 0;                 // classifier failures, summed over runs
  std::vector<std::uint64_t> seeds;
};

// Generates one continuation per item, classifies it and scores agreement
// with the prompt's sentiment; repeats over `seeds` and averages.
inline DirectionReport run_direction(const StspGenerator& generator,
                                     const std::vector<StspItem>& items,
                                     const DirectionParams& dparams,
                                     const SentimentClassifier& classifier,
                                     const std::vector<std::uint64_t>& seeds = {11, 22, 33}) {
  if (items.empty()) fail_data("run_direction: no items");
  if (seeds.empty()) fail_config("run_direction: need at least one seed");
  const Modality source = direction_source(dparams.direction);
  for (const auto& item : items) {
    if (item.modality != source) {
      fail_data("run_direction: item " + item.id + " modality does not match direction source");
    }
  }

  DirectionReport report;
  report.direction = dparams.direction;
  report.seeds = seeds;
  for (const std::uint64_t seed : seeds) {
    int correct = 0, counted = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      // Per-item derived stream keeps the run order-independent.
      Rng rng(mix_seed(seed, i));
      StspGeneration gen;
      try {
        gen = generator(item, dparams, rng);
      } catch (const Error&) {
        ++report.excluded;
        continue;
      }
      const auto label = direction_target(dparams.direction) == Modality::Text
                             ? classifier.classify_text(gen.text)
                             : classifier.classify_speech(gen.speech);
      if (!label.has_value()) {
        ++report.excluded;
        continue;
      }
      ++counted;
      if (*label == item.sentiment) ++correct;
    }
    if (counted == 0) fail_data("run_direction: every item was excluded");
    report.per_run.push_back(static_cast<double>(correct) / counted);
    report.evaluated = counted;
  }
  for (double a : report.per_run) report.accuracy += a;
  report.accuracy /= static_cast<double>(report.per_run.size());
  return report;
}

// ---------------------------------------------------------------------------
// Few-shot example construction: long prompts are halved; a pair survives
// when the classifier gives both halves the same label; n/3 consistent pairs
// per sentiment are sampled and concatenated (no separator).

struct FewShotExample {
  StspItem full_item;
  SentimentLabel consistent_label = SentimentLabel::Neutral;
};

struct FewShotSelection {
  std::vector<FewShotExample> examples;
  std::vector<std::string> ids;
};

inline FewShotSelection build_sentiment_few_shot(const std::vector<StspItem>& train_items, int n,
                                                 const SentimentClassifier& classifier,
                                                 std::uint64_t seed,
                                                 std::size_t min_prompt_tokens = 8) {
  if (n % 3 != 0 || n <= 0) fail_config("build_sentiment_few_shot: n must be 3, 6 or 9");
  std::map<SentimentLabel, std::vector<FewShotExample>> pool;
  for (const auto& item : train_items) {
    if (item.prompt_tokens() < min_prompt_tokens) continue;
    std::optional<SentimentLabel> first, second;
    if (item.modality == Modality::Text) {
      auto words = split_words(item.prompt_text);
      const std::size_t half = words.size() / 2;
      std::string a, b;
      for (std::size_t i = 0; i < words.size(); ++i) {
        auto& dst = i < half ? a : b;
        if (!dst.empty()) dst += ' ';
        dst += words[i];
      }
      first = classifier.classify_text(a);
      second = classifier.classify_text(b);
    } else {
      const std::size_t half = item.prompt_speech.size() / 2;
      SpeechTokenStream a, b;
      a.rates = b.rates = item.prompt_speech.rates;
      a.tokens.assign(item.prompt_speech.tokens.begin(),
                      item.prompt_speech.tokens.begin() + static_cast<std::ptrdiff_t>(half));
      b.tokens.assign(item.prompt_speech.tokens.begin() + static_cast<std::ptrdiff_t>(half),
                      item.prompt_speech.tokens.end());
      first = classifier.classify_speech(a);
      second = classifier.classify_speech(b);
    }
    if (first.has_value() && second.has_value() && *first == *second) {
      pool[*first].push_back(FewShotExample{item, *first});
    }
  }

  const int per_class = n / 3;
  Rng rng(seed);
  FewShotSelection out;
  for (SentimentLabel label : kAllSentiments) {
    auto& candidates = pool[label];
    if (static_cast<int>(candidates.size()) < per_class) {
      fail_data(std::string("build_sentiment_few_shot: not enough consistent '") +
                sentiment_name(label) + "' examples");
    }
    rng.shuffle(candidates);
    for (int i = 0; i < per_class; ++i) {
      out.examples.push_back(candidates[static_cast<std::size_t>(i)]);
      out.ids.push_back(candidates[static_cast<std::size_t>(i)].full_item.id);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

inline void write_stsp_report_csv(const std::string& path,
                                  const std::vector<DirectionReport>& reports) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write stsp report: " + path);
  out << "direction,n,accuracy,excluded,seeds\n";
  for (const auto& r : reports) {
    std::string seeds;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      if (i > 0) seeds += ' ';
      seeds += std::to_string(r.seeds[i]);
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%d,%s\n", direction_name(r.direction), r.evaluated,
                  r.accuracy, r.excluded, seeds.c_str());
    out << buf;
  }
}

}  // namespace stlm
