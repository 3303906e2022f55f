#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlm/errors.hpp"
#include "stlm/rational.hpp"
#include "stlm/token_text.hpp"
#include "stlm/tokens.hpp"

namespace stlm {

struct AlignedWord {
  std::string text;
  Rational start;
  Rational end;
};

// One manifest record: the word-level alignment plus the full-rate,
// pre-deduplication speech stream. Text-only records carry no speech and
// speech-only records may carry no word spans.
struct AlignedUtterance {
  std::string id;
  std::vector<AlignedWord> words;
  SpeechTokenStream speech;

  std::string transcript() const {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i > 0) out += ' ';
      out += words[i].text;
    }
    return out;
  }
};

// Checks the aligned-record invariants: non-overlapping increasing spans,
// start < end everywhere, and speech reaching the last word's span.
inline void validate_utterance(const AlignedUtterance& utt,
                               const CodebookSizes& sizes = CodebookSizes{}) {
  if (utt.words.empty()) fail_data("utterance " + utt.id + ": no words");
  Rational prev_end(0, 1);
  for (const auto& w : utt.words) {
    if (!(w.start < w.end)) fail_data("utterance " + utt.id + ": word span must have start < end");
    if (w.start < prev_end) fail_data("utterance " + utt.id + ": overlapping word spans");
    prev_end = w.end;
  }
  validate_stream(utt.speech, sizes);
  if (utt.speech.empty()) fail_data("utterance " + utt.id + ": no speech tokens");
  // The final frame must reach into the last word: last token time plus one
  // phonetic frame period covers [0, last end].
  const Rational period(utt.speech.rates.phonetic.den(), utt.speech.rates.phonetic.num());
  if (utt.speech.tokens.back().time + period < utt.words.back().end) {
    fail_data("utterance " + utt.id + ": speech does not cover the word spans");
  }
}

// ---------------------------------------------------------------------------
// JSONL manifest:
//   {"id": str, "words": [{"w": str, "s": float, "e": float}], "speech": "<token text>"}

inline nlohmann::json utterance_to_json(const AlignedUtterance& utt) {
  nlohmann::json j;
  j["id"] = utt.id;
  auto words = nlohmann::json::array();
  for (const auto& w : utt.words) {
    words.push_back({{"w", w.text}, {"s", w.start.to_double()}, {"e", w.end.to_double()}});
  }
  j["words"] = std::move(words);
  j["speech"] = serialize_speech_tokens(utt.speech);
  return j;
}

inline AlignedUtterance utterance_from_json(const nlohmann::json& j,
                                            const TokenRates& rates = TokenRates{},
                                            const CodebookSizes& sizes = CodebookSizes{}) {
  AlignedUtterance utt;
  utt.id = j.at("id").get<std::string>();
  for (const auto& w : j.value("words", nlohmann::json::array())) {
    utt.words.push_back(AlignedWord{w.at("w").get<std::string>(),
                                    Rational::from_seconds(w.at("s").get<double>()),
                                    Rational::from_seconds(w.at("e").get<double>())});
  }
  utt.speech = parse_speech_tokens(j.value("speech", ""), rates, sizes);
  return utt;
}

inline void write_manifest(const std::string& path, const std::vector<AlignedUtterance>& utts) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write manifest: " + path);
  for (const auto& utt : utts) out << utterance_to_json(utt).dump() << "\n";
}

inline std::vector<AlignedUtterance> read_manifest(const std::string& path,
                                                   const TokenRates& rates = TokenRates{},
                                                   const CodebookSizes& sizes = CodebookSizes{}) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read manifest: " + path);
  std::vector<AlignedUtterance> utts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      fail_data("manifest " + path + ": bad JSON on line " + std::to_string(line_no));
    }
    utts.push_back(utterance_from_json(j, rates, sizes));
  }
  return utts;
}

}  // namespace stlm
