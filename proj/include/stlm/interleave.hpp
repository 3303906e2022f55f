#pragma once

#include <string>
#include <vector>

#include "stlm/align.hpp"
#include "stlm/bpe.hpp"
#include "stlm/errors.hpp"
#include "stlm/rng.hpp"
#include "stlm/unified.hpp"

namespace stlm {

// One span of the interleaving plan: a half-open word index range rendered in
// one modality.
struct PlanSegment {
  Modality modality = Modality::Text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct SpanPlan {
  std::vector<PlanSegment> segments;
};

inline void validate_plan(const SpanPlan& plan, const AlignedUtterance& utt) {
  if (plan.segments.empty()) fail_data("span plan: empty");
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    const auto& seg = plan.segments[i];
    if (seg.begin != cursor || seg.end <= seg.begin) fail_data("span plan: segments must tile the words");
    if (i > 0 && seg.modality == plan.segments[i - 1].modality) {
      fail_data("span plan: modalities must alternate");
    }
    cursor = seg.end;
  }
  if (cursor != utt.words.size()) fail_data("span plan: does not cover the utterance");
}

// Word-span lengths for interleaving: 10-30 words per text span, 5-15 per
// speech span by default.
struct SpanConfig {
  int text_min = 10;
  int text_max = 30;
  int speech_min = 5;
  int speech_max = 15;
};

// Starting modality uniform; each span length uniform in its modality's
// range; the final span truncates at the utterance end.
inline SpanPlan sample_span_plan(const AlignedUtterance& utt, Rng& rng,
                                 const SpanConfig& config = SpanConfig{}) {
  if (utt.words.empty()) fail_data("sample_span_plan: empty utterance");
  SpanPlan plan;
  Modality modality = rng.below(2) == 0 ? Modality::Text : Modality::Speech;
  std::size_t cursor = 0;
  while (cursor < utt.words.size()) {
    const int lo = modality == Modality::Text ? config.text_min : config.speech_min;
    const int hi = modality == Modality::Text ? config.text_max : config.speech_max;
    auto len = static_cast<std::size_t>(rng.range(lo, hi));
    if (cursor + len > utt.words.size()) len = utt.words.size() - cursor;
    plan.segments.push_back(PlanSegment{modality, cursor, cursor + len});
    cursor += len;
    modality = modality == Modality::Text ? Modality::Speech : Modality::Text;
  }
  return plan;
}

// Raised when a speech span selects no tokens, which signals a hole in the
// word alignment.
class AlignmentHoleError : public Error {
 public:
  AlignmentHoleError(std::string utterance_id, std::size_t begin, std::size_t end)
      : Error(ErrorCategory::Data,
              "alignment hole in utterance " + utterance_id + ": words [" +
                  std::to_string(begin) + ", " + std::to_string(end) + ") select no speech tokens"),
        begin_(begin),
        end_(end) {}

  std::size_t word_begin() const { return begin_; }
  std::size_t word_end() const { return end_; }

 private:
  std::size_t begin_;
  std::size_t end_;
};

// Speech tokens of `utt` whose time falls in the half-open span
// [words[begin].start, words[end-1].end).
inline std::vector<SpeechToken> speech_in_span(const AlignedUtterance& utt, std::size_t begin,
                                               std::size_t end) {
  const Rational t0 = utt.words[begin].start;
  const Rational t1 = utt.words[end - 1].end;
  std::vector<SpeechToken> out;
  for (const auto& tok : utt.speech.tokens) {
    if (t0 <= tok.time && tok.time < t1) out.push_back(tok);
  }
  return out;
}

// Builds the training sequence for one utterance under a span plan. Text
// segments emit [Text] plus the joined words (with a trailing space when
// another segment follows); speech segments emit [Speech] plus the span's
// tokens deduplicated within the segment.
inline UnifiedSequence build_interleaved(const AlignedUtterance& utt, const SpanPlan& plan,
                                         const TextTokenizer& tokenizer,
                                         KindSet dedup_kinds = {TokenKind::Phonetic,
                                                                TokenKind::Pitch}) {
  validate_plan(plan, utt);
  UnifiedSequence seq;
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const auto& seg = plan.segments[s];
    const bool last_segment = s + 1 == plan.segments.size();
    if (seg.modality == Modality::Text) {
      seq.push_marker(Marker::Text);
      std::string text;
      for (std::size_t w = seg.begin; w < seg.end; ++w) {
        if (w > seg.begin) text += ' ';
        text += utt.words[w].text;
      }
      if (!last_segment) text += ' ';
      for (int id : tokenizer.encode(text)) seq.push_text(id);
    } else {
      seq.push_marker(Marker::Speech);
      SpeechTokenStream span;
      span.rates = utt.speech.rates;
      span.tokens = speech_in_span(utt, seg.begin, seg.end);
      if (span.tokens.empty()) throw AlignmentHoleError(utt.id, seg.begin, seg.end);
      for (const auto& tok : deduplicate(span, dedup_kinds).tokens) {
        seq.push_unit(tok.kind, tok.id);
      }
    }
  }
  return seq;
}

inline UnifiedSequence encode_unimodal(const std::string& text, const TextTokenizer& tokenizer) {
  UnifiedSequence seq;
  seq.push_marker(Marker::Text);
  for (int id : tokenizer.encode(text)) seq.push_text(id);
  return seq;
}

inline UnifiedSequence encode_unimodal(const SpeechTokenStream& stream,
                                       KindSet dedup_kinds = {TokenKind::Phonetic,
                                                              TokenKind::Pitch}) {
  UnifiedSequence seq;
  seq.push_marker(Marker::Speech);
  for (const auto& tok : deduplicate(stream, dedup_kinds).tokens) {
    seq.push_unit(tok.kind, tok.id);
  }
  return seq;
}

}  // namespace stlm
