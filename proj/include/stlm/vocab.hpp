#pragma once

#include <vector>

#include "stlm/errors.hpp"
#include "stlm/unified.hpp"

namespace stlm {

// Flat LM vocabulary: text ids, then the four markers, then the phonetic,
// pitch and style blocks, contiguously in that order.
struct VocabularyLayout {
  int text_size = 256;
  int n_phonetic = 501;
  int n_pitch = 64;
  int n_style = 100;

  static constexpr int n_markers = 4;

  int marker_base() const { return text_size; }
  int phonetic_base() const { return text_size + n_markers; }
  int pitch_base() const { return phonetic_base() + n_phonetic; }
  int style_base() const { return pitch_base() + n_pitch; }
  int total() const { return style_base() + n_style; }

  CodebookSizes codebook_sizes() const { return CodebookSizes{n_phonetic, n_pitch, n_style}; }

  int id_of(const UnifiedToken& tok) const {
    if (const auto* t = std::get_if<TextToken>(&tok)) {
      if (t->id < 0 || t->id >= text_size) fail_data("vocab: text id out of range");
      return t->id;
    }
    if (const auto* m = std::get_if<Marker>(&tok)) {
      return marker_base() + static_cast<int>(*m);
    }
    const auto& u = std::get<SpeechUnit>(tok);
    switch (u.kind) {
      case TokenKind::Phonetic:
        if (u.id < 0 || u.id >= n_phonetic) fail_data("vocab: phonetic id out of range");
        return phonetic_base() + u.id;
      case TokenKind::Pitch:
        if (u.id < 0 || u.id >= n_pitch) fail_data("vocab: pitch id out of range");
        return pitch_base() + u.id;
      case TokenKind::Style:
        if (u.id < 0 || u.id >= n_style) fail_data("vocab: style id out of range");
        return style_base() + u.id;
    }
    fail_data("vocab: unknown token kind");
  }

  UnifiedToken token_of(int flat) const {
    if (flat < 0 || flat >= total()) fail_data("vocab: flat id out of range");
    if (flat < text_size) return TextToken{flat};
    if (flat < phonetic_base()) return static_cast<Marker>(flat - marker_base());
    if (flat < pitch_base()) return SpeechUnit{TokenKind::Phonetic, flat - phonetic_base()};
    if (flat < style_base()) return SpeechUnit{TokenKind::Pitch, flat - pitch_base()};
    return SpeechUnit{TokenKind::Style, flat - style_base()};
  }

  bool is_marker_id(int flat) const { return flat >= marker_base() && flat < phonetic_base(); }

  std::vector<int> encode(const UnifiedSequence& seq) const {
    std::vector<int> ids;
    ids.reserve(seq.size());
    for (const auto& tok : seq.tokens) ids.push_back(id_of(tok));
    return ids;
  }

  UnifiedSequence decode(const std::vector<int>& ids) const {
    UnifiedSequence seq;
    seq.tokens.reserve(ids.size());
    for (int id : ids) seq.tokens.push_back(token_of(id));
    return seq;
  }
};

}  // namespace stlm
