#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlm/errors.hpp"
#include "stlm/interleave.hpp"
#include "stlm/score.hpp"
#include "stlm/token_text.hpp"

namespace stlm {

// Likelihood multiple choice: a shared context and >= 2 hypothesis
// continuations, one of which is correct.
struct MultipleChoiceItem {
  UnifiedSequence context;
  std::vector<UnifiedSequence> hypotheses;
  int gold = 0;
};

inline void validate_item(const MultipleChoiceItem& item) {
  if (item.hypotheses.size() < 2) fail_data("multiple choice item needs >= 2 hypotheses");
  if (item.gold < 0 || item.gold >= static_cast<int>(item.hypotheses.size())) {
    fail_data("multiple choice item: gold index out of range");
  }
}

struct ScoredItem {
  std::optional<int> predicted;  // empty when the item was skipped
  bool skipped = false;
  std::string note;
  std::vector<double> total_logprob;
  std::vector<double> normalized;
};

// Argmax of hypothesis log-likelihood (total, or per-token when `normalize`);
// ties resolve to the lowest index, so a single-hypothesis item returns 0. A
// hypothesis that overflows the context skips the whole item with a note
// rather than scoring a truncated sequence.
inline ScoredItem score_item(const TransformerLm& model, const MultipleChoiceItem& item,
                             bool normalize) {
  if (item.hypotheses.empty()) fail_data("score_item: no hypotheses");
  ScoredItem out;
  for (std::size_t h = 0; h < item.hypotheses.size(); ++h) {
    const auto& hyp = item.hypotheses[h];
    if (item.context.size() + hyp.size() > static_cast<std::size_t>(model.config().context_len)) {
      out.skipped = true;
      out.note = "hypothesis " + std::to_string(h) + " overflows the context";
      return out;
    }
    const ScoreResult r = log_likelihood(model, item.context, hyp);
    out.total_logprob.push_back(r.total_logprob);
    out.normalized.push_back(r.normalized());
  }
  const auto& scores = normalize ? out.normalized : out.total_logprob;
  int best = 0;
  for (std::size_t h = 1; h < scores.size(); ++h) {
    if (scores[h] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(h);
  }
  out.predicted = best;
  return out;
}

// ---------------------------------------------------------------------------
// Cross-modal story assembly: both modalities of a story are available, the
// direction picks which one carries the context and which the hypotheses.

struct CrossModalStory {
  std::string id;
  std::string context_text;
  SpeechTokenStream context_speech;
  struct Hypothesis {
    std::string text;
    SpeechTokenStream speech;
  };
  std::vector<Hypothesis> hypotheses;
  int gold = 0;
};

enum class CrossModalDirection { TextToSpeech, SpeechToText };

inline MultipleChoiceItem build_cross_modal_item(const CrossModalStory& story,
                                                 CrossModalDirection direction,
                                                 const TextTokenizer& tokenizer,
                                                 KindSet dedup_kinds = {TokenKind::Phonetic,
                                                                        TokenKind::Pitch}) {
  if (story.hypotheses.size() < 2) fail_data("cross-modal story needs >= 2 hypotheses");
  MultipleChoiceItem item;
  item.gold = story.gold;
  if (direction == CrossModalDirection::TextToSpeech) {
    if (story.context_text.empty()) fail_data("cross-modal story: missing context text");
    item.context = encode_unimodal(story.context_text, tokenizer);
    for (const auto& h : story.hypotheses) {
      if (h.speech.empty()) fail_data("cross-modal story: hypothesis missing speech");
      item.hypotheses.push_back(encode_unimodal(h.speech, dedup_kinds));
    }
  } else {
    if (story.context_speech.empty()) fail_data("cross-modal story: missing context speech");
    item.context = encode_unimodal(story.context_speech, dedup_kinds);
    for (const auto& h : story.hypotheses) {
      if (h.text.empty()) fail_data("cross-modal story: hypothesis missing text");
      item.hypotheses.push_back(encode_unimodal(h.text, tokenizer));
    }
  }
  validate_item(item);
  return item;
}

// ---------------------------------------------------------------------------
// Task files: JSONL with serialized token strings.
//   {"context": "...", "hypotheses": ["...", ...], "gold": 0}

inline void write_mc_tasks(const std::string& path, const std::vector<MultipleChoiceItem>& items,
                           const TextTokenizer& tokenizer) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write task file: " + path);
  for (const auto& item : items) {
    nlohmann::json j;
    j["context"] = serialize(item.context, tokenizer);
    auto hyps = nlohmann::json::array();
    for (const auto& h : item.hypotheses) hyps.push_back(serialize(h, tokenizer));
    j["hypotheses"] = std::move(hyps);
    j["gold"] = item.gold;
    out << j.dump() << "\n";
  }
}

inline std::vector<MultipleChoiceItem> read_mc_tasks(const std::string& path,
                                                     const TextTokenizer& tokenizer,
                                                     const CodebookSizes& sizes = CodebookSizes{}) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read task file: " + path);
  std::vector<MultipleChoiceItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail_data("task file " + path + ": bad JSON line");
    MultipleChoiceItem item;
    item.context = parse(j.at("context").get<std::string>(), tokenizer, sizes);
    for (const auto& h : j.at("hypotheses")) {
      item.hypotheses.push_back(parse(h.get<std::string>(), tokenizer, sizes));
    }
    item.gold = j.at("gold").get<int>();
    validate_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

// Aggregate accuracies over a task set, under both scoring modes.
struct McReport {
  std::string task;
  std::string direction;
  int n_items = 0;
  int n_skipped = 0;
  double accuracy = 0.0;        // unnormalized scoring
  double accuracy_token = 0.0;  // token-normalized scoring
};

inline McReport evaluate_mc(const TransformerLm& model, const std::vector<MultipleChoiceItem>& items,
                            const std::string& task, const std::string& direction) {
  McReport report;
  report.task = task;
  report.direction = direction;
  int correct = 0, correct_norm = 0, scored = 0;
  for (const auto& item : items) {
    const auto raw = score_item(model, item, false);
    if (raw.skipped) {
      ++report.n_skipped;
      continue;
    }
    const auto normed = score_item(model, item, true);
    ++scored;
    if (*raw.predicted == item.gold) ++correct;
    if (*normed.predicted == item.gold) ++correct_norm;
  }
  report.n_items = scored;
  if (scored > 0) {
    report.accuracy = static_cast<double>(correct) / scored;
    report.accuracy_token = static_cast<double>(correct_norm) / scored;
  }
  return report;
}

inline void write_mc_report_csv(const std::string& path, const std::vector<McReport>& reports) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write report: " + path);
  out << "task,direction,n_items,n_skipped,acc,acc_token\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.6f,%.6f\n", r.task.c_str(), r.direction.c_str(),
                  r.n_items, r.n_skipped, r.accuracy, r.accuracy_token);
    out << buf;
  }
}

}  // namespace stlm
