#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlm/errors.hpp"
#include "stlm/textmetrics.hpp"
#include "stlm/token_text.hpp"
#include "stlm/tokens.hpp"
#include "stlm/unified.hpp"

namespace stlm {

enum class SentimentLabel : int { Positive = 0, Negative = 1, Neutral = 2 };

inline const char* sentiment_name(SentimentLabel s) {
  switch (s) {
    case SentimentLabel::Positive: return "positive";
    case SentimentLabel::Negative: return "negative";
    case SentimentLabel::Neutral: return "neutral";
  }
  return "?";
}

constexpr std::array<SentimentLabel, 3> kAllSentiments{
    SentimentLabel::Positive, SentimentLabel::Negative, SentimentLabel::Neutral};

// Emotion class -> sentiment: happy and amused are positive, sad and angry
// negative, default and neutral neutral. Unknown emotions are an error.
inline SentimentLabel map_emotion(const std::string& emotion) {
  std::string e;
  for (char c : emotion) e += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (e == "happy" || e == "amused") return SentimentLabel::Positive;
  if (e == "sad" || e == "angry") return SentimentLabel::Negative;
  if (e == "default" || e == "neutral") return SentimentLabel::Neutral;
  fail_data("map_emotion: unknown emotion '" + emotion + "'");
}

inline SentimentLabel sentiment_from_name(const std::string& name) {
  for (SentimentLabel s : kAllSentiments) {
    if (name == sentiment_name(s)) return s;
  }
  fail_data("unknown sentiment label '" + name + "'");
}

// A sentiment-labeled prompt in one modality.
struct StspItem {
  std::string id;
  Modality modality = Modality::Text;
  SentimentLabel sentiment = SentimentLabel::Neutral;
  std::string prompt_text;        // for text prompts
  SpeechTokenStream prompt_speech;  // for speech prompts
  std::string source_dataset;

  std::size_t prompt_tokens() const {
    return modality == Modality::Text ? split_words(prompt_text).size() : prompt_speech.size();
  }
};

inline void validate_stsp_item(const StspItem& item) {
  const bool empty =
      item.modality == Modality::Text ? item.prompt_text.empty() : item.prompt_speech.empty();
  if (empty) fail_data("stsp item " + item.id + ": empty prompt");
}

// ---------------------------------------------------------------------------
// Pluggable classifiers. Both calls are deterministic; a classifier returns
// nullopt for inputs it cannot judge, and the harness excludes (and counts)
// those items.
class SentimentClassifier {
 public:
  virtual ~SentimentClassifier() = default;
  virtual std::optional<SentimentLabel> classify_text(const std::string& text) const = 0;
  virtual std::optional<SentimentLabel> classify_speech(const SpeechTokenStream& speech) const = 0;
};

// Word-list classifier: counts positive and negative lexicon hits on
// normalized text; ties and no hits fall back to neutral.
class LexiconTextClassifier : public SentimentClassifier {
 public:
  LexiconTextClassifier(std::set<std::string> positive, std::set<std::string> negative)
      : positive_(std::move(positive)), negative_(std::move(negative)) {}

  std::optional<SentimentLabel> classify_text(const std::string& text) const override {
    int pos = 0, neg = 0;
    for (const auto& w : split_words(normalize_text(text))) {
      if (positive_.count(w)) ++pos;
      if (negative_.count(w)) ++neg;
    }
    if (pos > neg) return SentimentLabel::Positive;
    if (neg > pos) return SentimentLabel::Negative;
    return SentimentLabel::Neutral;
  }

  std::optional<SentimentLabel> classify_speech(const SpeechTokenStream&) const override {
    return std::nullopt;  // text-only classifier
  }

 private:
  std::set<std::string> positive_;
  std::set<std::string> negative_;
};

// Naive-Bayes style speech classifier over style-token histograms, trained on
// labeled fixtures. Falls back to nullopt when the stream has no style tokens.
class StyleTokenClassifier : public SentimentClassifier {
 public:
  StyleTokenClassifier(int n_style_ids, double smoothing = 1.0)
      : n_ids_(n_style_ids), smoothing_(smoothing) {
    for (auto& h : counts_) h.assign(static_cast<std::size_t>(n_ids_), 0.0);
  }

  void add_example(SentimentLabel label, const SpeechTokenStream& speech) {
    for (const auto& t : speech.tokens) {
      if (t.kind != TokenKind::Style) continue;
      if (t.id < 0 || t.id >= n_ids_) fail_data("StyleTokenClassifier: style id out of range");
      counts_[static_cast<std::size_t>(label)][static_cast<std::size_t>(t.id)] += 1.0;
      ++totals_[static_cast<std::size_t>(label)];
    }
  }

  std::optional<SentimentLabel> classify_text(const std::string&) const override {
    return std::nullopt;  // speech-only classifier
  }

  std::optional<SentimentLabel> classify_speech(const SpeechTokenStream& speech) const override {
    bool any = false;
    std::array<double, 3> ll{0.0, 0.0, 0.0};
    for (const auto& t : speech.tokens) {
      if (t.kind != TokenKind::Style || t.id < 0 || t.id >= n_ids_) continue;
      any = true;
      for (std::size_t c = 0; c < 3; ++c) {
        const double p = (counts_[c][static_cast<std::size_t>(t.id)] + smoothing_) /
                         (totals_[c] + smoothing_ * n_ids_);
        ll[c] += std::log(p);
      }
    }
    if (!any) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c) {
      if (ll[c] > ll[best]) best = c;
    }
    return static_cast<SentimentLabel>(best);
  }

 private:
  int n_ids_;
  double smoothing_;
  std::array<std::vector<double>, 3> counts_{};
  std::array<double, 3> totals_{0.0, 0.0, 0.0};
};

// ---------------------------------------------------------------------------
// STSP fixture JSONL:
//   {"id": str, "modality": "text"|"speech", "sentiment": str, "prompt": str,
//    "source": str}
// Speech prompts hold the bare token text format.

inline void write_stsp_items(const std::string& path, const std::vector<StspItem>& items) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write stsp file: " + path);
  for (const auto& item : items) {
    nlohmann::json j;
    j["id"] = item.id;
    j["modality"] = item.modality == Modality::Text ? "text" : "speech";
    j["sentiment"] = sentiment_name(item.sentiment);
    j["prompt"] = item.modality == Modality::Text ? item.prompt_text
                                                  : serialize_speech_tokens(item.prompt_speech);
    j["source"] = item.source_dataset;
    out << j.dump() << "\n";
  }
}

inline std::vector<StspItem> read_stsp_items(const std::string& path,
                                             const TokenRates& rates = TokenRates{},
                                             const CodebookSizes& sizes = CodebookSizes{}) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read stsp file: " + path);
  std::vector<StspItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail_data("stsp file " + path + ": bad JSON line");
    StspItem item;
    item.id = j.at("id").get<std::string>();
    item.modality = j.at("modality").get<std::string>() == "text" ? Modality::Text : Modality::Speech;
    item.sentiment = sentiment_from_name(j.at("sentiment").get<std::string>());
    if (item.modality == Modality::Text) {
      item.prompt_text = j.at("prompt").get<std::string>();
    } else {
      item.prompt_speech = parse_speech_tokens(j.at("prompt").get<std::string>(), rates, sizes);
    }
    item.source_dataset = j.value("source", "");
    validate_stsp_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace stlm
