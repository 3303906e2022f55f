#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/token_text.hpp"
#include "stlm/unified.hpp"

namespace stlm {

// Few-shot prompt skeletons. Speech sequences arrive already tokenized and
// serialized ("[Hu..][Hu..]"); transcripts and labels are plain text.
//
// ASR, one example then the query:
//   [Speech]<tokens>[Text] <START Transcript> <transcript> <END>
//   [Speech]<query tokens>[Text]
// TTS:
//   [Text] <text> 'stop' [Speech]<tokens><stop unit sequence>
//   [Text] <query text> 'stop' [Speech]
// Intent classification:
//   [Speech]<tokens>[Text]\nA:<label>
//   [Speech]<query tokens>[Text]\nA:

struct AsrExample {
  std::string speech_tokens;
  std::string transcript;
};

inline std::string build_asr_prompt(const std::vector<AsrExample>& examples,
                                    const std::string& query_speech_tokens) {
  std::string out;
  for (const auto& ex : examples) {
    out += "[Speech]" + ex.speech_tokens + "[Text] <START Transcript> " + ex.transcript + " <END>";
  }
  out += "[Speech]" + query_speech_tokens + "[Text]";
  return out;
}

struct ExtractedText {
  std::string text;
  bool truncated = false;  // no <END> before the generation ran out
};

// Text between the first "<START Transcript>" and the following "<END>",
// whitespace-trimmed; everything to the end (flagged) when <END> is missing.
inline ExtractedText postprocess_asr(const std::string& generated_text) {
  static const std::string kStart = "<START Transcript>";
  static const std::string kEnd = "<END>";
  ExtractedText out;
  auto begin = generated_text.find(kStart);
  begin = begin == std::string::npos ? 0 : begin + kStart.size();
  auto end = generated_text.find(kEnd, begin);
  if (end == std::string::npos) {
    end = generated_text.size();
    out.truncated = true;
  }
  out.text = generated_text.substr(begin, end - begin);
  const auto first = out.text.find_first_not_of(" \t\n");
  const auto last = out.text.find_last_not_of(" \t\n");
  out.text = first == std::string::npos ? "" : out.text.substr(first, last - first + 1);
  return out;
}

struct TtsExample {
  std::string text;
  std::string speech_tokens;
};

inline std::string build_tts_prompt(const std::vector<TtsExample>& examples,
                                    const std::string& query_text,
                                    const std::string& stop_word_tokens) {
  if (stop_word_tokens.empty()) fail_config("build_tts_prompt: stop token sequence required");
  std::string out;
  for (const auto& ex : examples) {
    out += "[Text] " + ex.text + " 'stop' [Speech]" + ex.speech_tokens + stop_word_tokens;
  }
  out += "[Text] " + query_text + " 'stop' [Speech]";
  return out;
}

struct ExtractedSpeech {
  std::vector<SpeechUnit> units;
  bool stopped = false;  // the stop sequence was found and cut off
};

// Truncates the generated units at the first occurrence of the configured
// stop sequence (contiguous subsequence match).
inline ExtractedSpeech postprocess_tts(const std::vector<SpeechUnit>& generated,
                                       const std::vector<SpeechUnit>& stop_units) {
  ExtractedSpeech out;
  if (stop_units.empty()) {
    out.units = generated;
    return out;
  }
  for (std::size_t i = 0; i + stop_units.size() <= generated.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < stop_units.size(); ++j) {
      if (!(generated[i + j] == stop_units[j])) {
        match = false;
        break;
      }
    }
    if (match) {
      out.units.assign(generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(i));
      out.stopped = true;
      return out;
    }
  }
  out.units = generated;
  return out;
}

struct IcExample {
  std::string speech_tokens;
  std::string label;
};

inline std::string build_ic_prompt(const std::vector<IcExample>& examples,
                                   const std::string& query_speech_tokens) {
  std::string out;
  for (const auto& ex : examples) {
    out += "[Speech]" + ex.speech_tokens + "[Text]\nA:" + ex.label;
  }
  out += "[Speech]" + query_speech_tokens + "[Text]\nA:";
  return out;
}

// First line following "A:", whitespace-trimmed.
inline std::string postprocess_ic(const std::string& generated_text) {
  auto begin = generated_text.find("A:");
  begin = begin == std::string::npos ? 0 : begin + 2;
  auto end = generated_text.find('\n', begin);
  if (end == std::string::npos) end = generated_text.size();
  std::string line = generated_text.substr(begin, end - begin);
  const auto first = line.find_first_not_of(" \t");
  const auto last = line.find_last_not_of(" \t");
  return first == std::string::npos ? "" : line.substr(first, last - first + 1);
}

}  // namespace stlm
