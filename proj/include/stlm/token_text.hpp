#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stlm/bpe.hpp"
#include "stlm/errors.hpp"
#include "stlm/tokens.hpp"
#include "stlm/unified.hpp"

namespace stlm {

// Token text format
// -----------------
// Markers:      [Text] [Speech] [ASR] [TTS]
// Speech units: [Hu<id>] [Pi<id>] [St<id>]
// Text:         verbatim UTF-8 bytes between a text-mode marker and the next
//               bracketed token. The serializer inserts no whitespace around
//               bracketed tokens; '[' cannot occur inside a text run.

inline const char* unit_prefix(TokenKind k) {
  switch (k) {
    case TokenKind::Phonetic: return "Hu";
    case TokenKind::Pitch: return "Pi";
    case TokenKind::Style: return "St";
  }
  return "";
}

inline std::string unit_text(TokenKind kind, int id) {
  return std::string("[") + unit_prefix(kind) + std::to_string(id) + "]";
}

inline std::string serialize(const UnifiedSequence& seq, const TextTokenizer& tokenizer) {
  std::string out;
  for (const auto& tok : seq.tokens) {
    if (const auto* m = std::get_if<Marker>(&tok)) {
      out += marker_text(*m);
    } else if (const auto* u = std::get_if<SpeechUnit>(&tok)) {
      out += unit_text(u->kind, u->id);
    } else {
      out += tokenizer.piece(std::get<TextToken>(tok).id);
    }
  }
  return out;
}

// Speech-only rendering, e.g. "[St10][Pi0][Hu28]". Timestamps are dropped;
// see parse_speech_tokens for how they are reconstructed.
inline std::string serialize_speech_tokens(const SpeechTokenStream& stream) {
  std::string out;
  for (const auto& t : stream.tokens) out += unit_text(t.kind, t.id);
  return out;
}

namespace detail {

struct BracketToken {
  bool is_marker = false;
  Marker marker = Marker::Text;
  SpeechUnit unit;
};

// Parses one "[...]" token starting at `pos` (which must point at '[').
// Advances pos past the closing bracket.
inline BracketToken parse_bracket(std::string_view s, std::size_t& pos, const CodebookSizes& sizes) {
  const std::size_t close = s.find(']', pos);
  if (close == std::string_view::npos) {
    fail_data("parse: unterminated bracket token at offset " + std::to_string(pos));
  }
  const std::string_view body = s.substr(pos + 1, close - pos - 1);
  pos = close + 1;

  BracketToken out;
  if (body == "Text") { out.is_marker = true; out.marker = Marker::Text; return out; }
  if (body == "Speech") { out.is_marker = true; out.marker = Marker::Speech; return out; }
  if (body == "ASR") { out.is_marker = true; out.marker = Marker::Asr; return out; }
  if (body == "TTS") { out.is_marker = true; out.marker = Marker::Tts; return out; }

  TokenKind kind;
  if (body.starts_with("Hu")) kind = TokenKind::Phonetic;
  else if (body.starts_with("Pi")) kind = TokenKind::Pitch;
  else if (body.starts_with("St")) kind = TokenKind::Style;
  else fail_data("parse: unknown bracket token [" + std::string(body) + "]");

  const std::string_view digits = body.substr(2);
  if (digits.empty()) fail_data("parse: missing id in [" + std::string(body) + "]");
  int id = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') fail_data("parse: malformed id in [" + std::string(body) + "]");
    id = id * 10 + (c - '0');
    if (id > 100000000) fail_data("parse: id overflow in [" + std::string(body) + "]");
  }
  if (id >= sizes.of(kind)) {
    fail_data("parse: id " + std::to_string(id) + " out of range for [" + std::string(body) + "]");
  }
  out.unit = SpeechUnit{kind, id};
  return out;
}

}  // namespace detail

inline UnifiedSequence parse(std::string_view s, const TextTokenizer& tokenizer,
                             const CodebookSizes& sizes = CodebookSizes{}) {
  UnifiedSequence seq;
  bool have_modality = false;
  Modality active = Modality::Text;

  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] == '[') {
      auto tok = detail::parse_bracket(s, pos, sizes);
      if (tok.is_marker) {
        seq.push_marker(tok.marker);
        active = marker_modality(tok.marker);
        have_modality = true;
      } else {
        if (!have_modality) fail_data("parse: speech unit before any modality marker");
        if (active != Modality::Speech) fail_data("parse: speech unit inside a text run");
        seq.tokens.emplace_back(tok.unit);
      }
    } else {
      const std::size_t next = s.find('[', pos);
      const std::string_view run = s.substr(pos, next == std::string_view::npos ? s.size() - pos
                                                                                : next - pos);
      if (!have_modality) fail_data("parse: text before any modality marker");
      if (active != Modality::Text) fail_data("parse: text inside a speech run");
      for (int id : tokenizer.encode(run)) seq.push_text(id);
      pos = next == std::string_view::npos ? s.size() : next;
    }
  }
  return seq;
}

// Parses a bare speech token string. Timestamps are rebuilt from per-kind
// frame counters: the i-th token of a kind sits at i / rate(kind), which is
// exact for full-rate (pre-dedup) streams.
inline SpeechTokenStream parse_speech_tokens(std::string_view s,
                                             const TokenRates& rates = TokenRates{},
                                             const CodebookSizes& sizes = CodebookSizes{}) {
  SpeechTokenStream stream;
  stream.rates = rates;
  std::array<std::int64_t, 3> frame{0, 0, 0};
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] != '[') fail_data("parse_speech_tokens: stray text at offset " + std::to_string(pos));
    auto tok = detail::parse_bracket(s, pos, sizes);
    if (tok.is_marker) fail_data("parse_speech_tokens: markers not allowed in bare streams");
    const auto idx = static_cast<std::size_t>(tok.unit.kind);
    stream.tokens.push_back(SpeechToken{
        tok.unit.kind, tok.unit.id, Rational::from_frame(frame[idx], rates.of(tok.unit.kind))});
    ++frame[idx];
  }
  std::sort(stream.tokens.begin(), stream.tokens.end(),
            [](const SpeechToken& a, const SpeechToken& b) { return stream_order_less(a, b); });
  return stream;
}

// Unit list without timestamps, e.g. for configured stop sequences.
inline std::vector<SpeechUnit> parse_speech_units(std::string_view s,
                                                  const CodebookSizes& sizes = CodebookSizes{}) {
  std::vector<SpeechUnit> units;
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] != '[') fail_data("parse_speech_units: stray text at offset " + std::to_string(pos));
    auto tok = detail::parse_bracket(s, pos, sizes);
    if (tok.is_marker) fail_data("parse_speech_units: markers not allowed");
    units.push_back(tok.unit);
  }
  return units;
}

}  // namespace stlm
