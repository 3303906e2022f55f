#pragma once

#include <string>
#include <variant>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/tokens.hpp"

namespace stlm {

// Modality markers, in vocabulary order.
enum class Marker : int { Text = 0, Speech = 1, Asr = 2, Tts = 3 };

enum class Modality { Text, Speech };

// [Text] and [ASR] introduce text runs; [Speech] and [TTS] introduce speech
// runs.
inline Modality marker_modality(Marker m) {
  return (m == Marker::Text || m == Marker::Asr) ? Modality::Text : Modality::Speech;
}

inline const char* marker_text(Marker m) {
  switch (m) {
    case Marker::Text: return "[Text]";
    case Marker::Speech: return "[Speech]";
    case Marker::Asr: return "[ASR]";
    case Marker::Tts: return "[TTS]";
  }
  return "";
}

struct TextToken {
  int id = 0;
  friend bool operator==(const TextToken&, const TextToken&) = default;
};

// A speech token as the LM sees it: kind and codebook id, no timestamp.
struct SpeechUnit {
  TokenKind kind = TokenKind::Phonetic;
  int id = 0;
  friend bool operator==(const SpeechUnit&, const SpeechUnit&) = default;
};

using UnifiedToken = std::variant<TextToken, SpeechUnit, Marker>;

struct UnifiedSequence {
  std::vector<UnifiedToken> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  void push_marker(Marker m) { tokens.emplace_back(m); }
  void push_text(int id) { tokens.emplace_back(TextToken{id}); }
  void push_unit(TokenKind kind, int id) { tokens.emplace_back(SpeechUnit{kind, id}); }

  void append(const UnifiedSequence& other) {
    tokens.insert(tokens.end(), other.tokens.begin(), other.tokens.end());
  }

  friend bool operator==(const UnifiedSequence& a, const UnifiedSequence& b) {
    return a.tokens == b.tokens;
  }
};

inline UnifiedSequence concat(const UnifiedSequence& a, const UnifiedSequence& b) {
  UnifiedSequence out = a;
  out.append(b);
  return out;
}

// Every text token must sit under an active Text modality and every speech
// unit under an active Speech modality, so the modality at any position is
// well defined.
inline void validate_sequence(const UnifiedSequence& seq,
                              const CodebookSizes& sizes = CodebookSizes{}) {
  bool have_modality = false;
  Modality active = Modality::Text;
  for (const auto& tok : seq.tokens) {
    if (const auto* m = std::get_if<Marker>(&tok)) {
      active = marker_modality(*m);
      have_modality = true;
    } else if (const auto* u = std::get_if<SpeechUnit>(&tok)) {
      if (!have_modality || active != Modality::Speech) {
        fail_data("speech unit outside a speech run");
      }
      if (u->id < 0 || u->id >= sizes.of(u->kind)) {
        fail_data("speech unit id out of range: " + std::to_string(u->id));
      }
    } else {
      if (!have_modality || active != Modality::Text) {
        fail_data("text token outside a text run");
      }
    }
  }
}

// Counts of each content class; markers tracked separately.
struct SequenceStats {
  std::size_t text_tokens = 0;
  std::size_t speech_units = 0;
  std::size_t markers = 0;
};

inline SequenceStats sequence_stats(const UnifiedSequence& seq) {
  SequenceStats s;
  for (const auto& tok : seq.tokens) {
    if (std::holds_alternative<TextToken>(tok)) ++s.text_tokens;
    else if (std::holds_alternative<SpeechUnit>(tok)) ++s.speech_units;
    else ++s.markers;
  }
  return s;
}

}  // namespace stlm
