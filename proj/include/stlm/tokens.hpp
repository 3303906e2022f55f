#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/rational.hpp"

namespace stlm {

// Enum order doubles as the tie-break rank for tokens sharing a timestamp:
// Style < Pitch < Phonetic.
enum class TokenKind : int { Style = 0, Pitch = 1, Phonetic = 2 };

constexpr std::array<TokenKind, 3> kAllTokenKinds{TokenKind::Style, TokenKind::Pitch,
                                                  TokenKind::Phonetic};

inline const char* kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::Style: return "Style";
    case TokenKind::Pitch: return "Pitch";
    case TokenKind::Phonetic: return "Phonetic";
  }
  return "?";
}

// Small value-type set of token kinds.
class KindSet {
 public:
  constexpr KindSet() = default;
  constexpr KindSet(std::initializer_list<TokenKind> kinds) {
    for (TokenKind k : kinds) bits_ |= bit(k);
  }

  static constexpr KindSet all() { return {TokenKind::Style, TokenKind::Pitch, TokenKind::Phonetic}; }
  static constexpr KindSet none() { return {}; }

  constexpr bool contains(TokenKind k) const { return (bits_ & bit(k)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }

 private:
  static constexpr unsigned bit(TokenKind k) { return 1u << static_cast<int>(k); }
  unsigned bits_ = 0;
};

// Codebook sizes per kind. Defaults follow the reference vocabularies
// (501 phonetic units, 64 pitch units, 100 style units); desk-scale fixtures
// shrink them freely.
struct CodebookSizes {
  int phonetic = 501;
  int pitch = 64;
  int style = 100;

  int of(TokenKind k) const {
    switch (k) {
      case TokenKind::Phonetic: return phonetic;
      case TokenKind::Pitch: return pitch;
      case TokenKind::Style: return style;
    }
    return 0;
  }
};

// Token emission rates in tokens per second (25, 12.5, 1 by default).
struct TokenRates {
  Rational phonetic{25, 1};
  Rational pitch{25, 2};
  Rational style{1, 1};

  Rational of(TokenKind k) const {
    switch (k) {
      case TokenKind::Phonetic: return phonetic;
      case TokenKind::Pitch: return pitch;
      case TokenKind::Style: return style;
    }
    return Rational(1, 1);
  }
};

struct SpeechToken {
  TokenKind kind = TokenKind::Phonetic;
  int id = 0;
  Rational time;

  friend bool operator==(const SpeechToken& a, const SpeechToken& b) {
    return a.kind == b.kind && a.id == b.id && a.time == b.time;
  }
};

// Stream order key: (time, kind rank).
inline bool stream_order_less(const SpeechToken& a, const SpeechToken& b) {
  if (a.time != b.time) return a.time < b.time;
  return static_cast<int>(a.kind) < static_cast<int>(b.kind);
}

struct SpeechTokenStream {
  std::vector<SpeechToken> tokens;
  TokenRates rates;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }

  // Tokens of one kind, in stream order.
  std::vector<SpeechToken> project(TokenKind kind) const {
    std::vector<SpeechToken> out;
    for (const auto& t : tokens) {
      if (t.kind == kind) out.push_back(t);
    }
    return out;
  }
};

// Throws on any invariant violation: negative or out-of-range ids, unsorted
// order, or non-increasing times within one kind.
inline void validate_stream(const SpeechTokenStream& stream,
                            const CodebookSizes& sizes = CodebookSizes{}) {
  std::array<const SpeechToken*, 3> last_of_kind{nullptr, nullptr, nullptr};
  const SpeechToken* prev = nullptr;
  for (const auto& t : stream.tokens) {
    if (t.id < 0 || t.id >= sizes.of(t.kind)) {
      fail_data("stream token id " + std::to_string(t.id) + " out of range for kind " +
                kind_name(t.kind));
    }
    if (t.time < Rational(0, 1)) fail_data("stream token with negative time");
    if (prev != nullptr && stream_order_less(t, *prev)) fail_data("stream not sorted by (time, kind)");
    const SpeechToken*& last = last_of_kind[static_cast<std::size_t>(t.kind)];
    if (last != nullptr && !(last->time < t.time)) {
      fail_data(std::string("times not strictly increasing within kind ") + kind_name(t.kind));
    }
    last = &t;
    prev = &t;
  }
}

// Collapses consecutive equal ids per kind, keeping the first occurrence and
// its timestamp. "Consecutive" is in per-kind order, i.e. an intervening token
// of another kind does not break a run. Kinds outside `kinds` pass through.
inline SpeechTokenStream deduplicate(const SpeechTokenStream& stream, KindSet kinds) {
  SpeechTokenStream out;
  out.rates = stream.rates;
  out.tokens.reserve(stream.tokens.size());
  std::array<int, 3> last_id{-1, -1, -1};
  for (const auto& t : stream.tokens) {
    const auto idx = static_cast<std::size_t>(t.kind);
    if (kinds.contains(t.kind) && last_id[idx] == t.id) continue;
    last_id[idx] = t.id;
    out.tokens.push_back(t);
  }
  return out;
}

// Timestamp-sorted union of the three per-kind streams. Each input must hold
// only its own kind; equal timestamps resolve Style < Pitch < Phonetic.
inline SpeechTokenStream merge_streams(const SpeechTokenStream& phonetic,
                                       const SpeechTokenStream& pitch,
                                       const SpeechTokenStream& style) {
  const std::array<const SpeechTokenStream*, 3> inputs{&style, &pitch, &phonetic};
  const std::array<TokenKind, 3> expected{TokenKind::Style, TokenKind::Pitch, TokenKind::Phonetic};
  for (std::size_t i = 0; i < 3; ++i) {
    for (const auto& t : inputs[i]->tokens) {
      if (t.kind != expected[i]) {
        fail_data(std::string("merge_streams: ") + kind_name(expected[i]) +
                  " input contains a " + kind_name(t.kind) + " token");
      }
    }
  }

  SpeechTokenStream out;
  out.rates = phonetic.rates;
  out.tokens.reserve(style.size() + pitch.size() + phonetic.size());
  std::array<std::size_t, 3> pos{0, 0, 0};
  while (true) {
    const SpeechToken* best = nullptr;
    std::size_t best_input = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (pos[i] >= inputs[i]->tokens.size()) continue;
      const SpeechToken& cand = inputs[i]->tokens[pos[i]];
      if (best == nullptr || stream_order_less(cand, *best)) {
        best = &cand;
        best_input = i;
      }
    }
    if (best == nullptr) break;
    out.tokens.push_back(*best);
    ++pos[best_input];
  }
  return out;
}

// Bits per second of the selected kinds: sum of log2(codebook size) * rate.
inline double bitrate(const TokenRates& rates, const CodebookSizes& sizes, KindSet kinds) {
  double bps = 0.0;
  for (TokenKind k : kAllTokenKinds) {
    if (!kinds.contains(k)) continue;
    const int size = sizes.of(k);
    if (size < 2) {
      fail_config("bitrate: codebook size must be >= 2, got " + std::to_string(size) + " for " +
                  kind_name(k));
    }
    const Rational rate = rates.of(k);
    if (!(Rational(0, 1) < rate)) fail_config("bitrate: rates must be positive");
    bps += std::log2(static_cast<double>(size)) * rate.to_double();
  }
  return bps;
}

}  // namespace stlm
