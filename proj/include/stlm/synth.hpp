#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stlm/align.hpp"
#include "stlm/errors.hpp"
#include "stlm/features.hpp"
#include "stlm/mc.hpp"
#include "stlm/rng.hpp"
#include "stlm/sentiment.hpp"
#include "stlm/toxicity.hpp"

namespace stlm {

// Synthetic fixture corpus. Every word of a small vocabulary owns a fixed
// pronunciation: a unique onset unit (id < n_words) followed by filler units
// from [n_words, n_phonetic). Onsets make pronunciations prefix-free, so
// speech decodes back to words even after deduplication; that decode is the
// desk-scale ASR adapter.
struct SynthWorldConfig {
  int n_words = 24;
  int n_phonetic = 48;
  int n_pitch = 8;
  int n_style = 12;  // 4 ids per sentiment class
  int pron_extra_min = 1;
  int pron_extra_max = 2;
  int dup_min = 1;   // frame repeats per pronunciation unit
  int dup_max = 3;
  int successors_per_word = 3;  // sparse word-transition graph
  std::uint64_t seed = 1234;
};

class SynthWorld {
 public:
  explicit SynthWorld(SynthWorldConfig config) : config_(config) {
    if (config_.n_words < 2 || config_.n_words > config_.n_phonetic) {
      fail_config("synth world: need 2 <= n_words <= n_phonetic");
    }
    if (config_.n_style % 3 != 0) fail_config("synth world: n_style must be divisible by 3");
    Rng rng(config_.seed);
    static const char* syllables[] = {"ba", "de", "ki", "lo", "mu", "na",
                                      "po", "ru", "sa", "tu", "ve", "zo"};
    std::set<std::string> used;
    while (static_cast<int>(words_.size()) < config_.n_words) {
      std::string w = syllables[rng.below(12)];
      w += syllables[rng.below(12)];
      if (rng.below(3) == 0) w += syllables[rng.below(12)];
      if (used.insert(w).second) words_.push_back(w);
    }
    for (int i = 0; i < config_.n_words; ++i) {
      std::vector<int> pron{i};
      const int extra = static_cast<int>(rng.range(config_.pron_extra_min, config_.pron_extra_max));
      for (int j = 0; j < extra; ++j) {
        pron.push_back(config_.n_words +
                       static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(config_.n_phonetic - config_.n_words))));
      }
      prons_.push_back(std::move(pron));
    }

    // Sparse successor graph: utterances are walks on it, which gives
    // continuations actual predictive structure.
    if (config_.successors_per_word < 1 || config_.successors_per_word >= config_.n_words) {
      fail_config("synth world: successors_per_word must be in [1, n_words)");
    }
    for (int i = 0; i < config_.n_words; ++i) {
      std::set<std::size_t> succ;
      while (static_cast<int>(succ.size()) < config_.successors_per_word) {
        const auto cand = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(config_.n_words)));
        if (static_cast<int>(cand) != i) succ.insert(cand);
      }
      successors_.emplace_back(succ.begin(), succ.end());
    }
  }

  const SynthWorldConfig& config() const { return config_; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::vector<int>>& prons() const { return prons_; }
  const std::vector<std::vector<std::size_t>>& successors() const { return successors_; }

  // Chain walk through the successor graph.
  std::vector<std::size_t> walk(Rng& rng, int length, std::optional<std::size_t> start = {}) const {
    std::vector<std::size_t> out;
    std::size_t word = start.value_or(
        static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(config_.n_words))));
    for (int i = 0; i < length; ++i) {
      out.push_back(word);
      word = rng.pick(successors_[word]);
    }
    return out;
  }

  CodebookSizes codebook_sizes() const {
    return CodebookSizes{config_.n_phonetic, config_.n_pitch, config_.n_style};
  }

  // ---------------------------------------------------------------------
  // Utterances

  AlignedUtterance utterance_of(const std::vector<std::size_t>& word_ids, Rng& rng,
                                const std::string& id) const {
    AlignedUtterance utt;
    utt.id = id;
    std::int64_t frame = 0;
    for (std::size_t word : word_ids) {
      const std::int64_t start = frame;
      for (int unit : prons_[word]) {
        const auto dups = rng.range(config_.dup_min, config_.dup_max);
        for (std::int64_t d = 0; d < dups; ++d) {
          utt.speech.tokens.push_back(SpeechToken{TokenKind::Phonetic, unit, Rational(frame, 25)});
          ++frame;
        }
      }
      utt.words.push_back(AlignedWord{words_[word], Rational(start, 25), Rational(frame, 25)});
    }
    return utt;
  }

  AlignedUtterance make_utterance(Rng& rng, int min_words, int max_words,
                                  const std::string& id_prefix = "synth") const {
    const int n = static_cast<int>(rng.range(min_words, max_words));
    return utterance_of(walk(rng, n), rng, id_prefix + "-" + std::to_string(rng.below(1u << 30)));
  }

  std::vector<AlignedUtterance> make_corpus(Rng& rng, int n, int min_words, int max_words,
                                            const std::string& id_prefix = "synth") const {
    std::vector<AlignedUtterance> corpus;
    corpus.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      corpus.push_back(make_utterance(rng, min_words, max_words,
                                      id_prefix + "-" + std::to_string(i)));
    }
    return corpus;
  }

  // ---------------------------------------------------------------------
  // Decode oracle (alignment lookup): onsets open words.

  std::vector<std::string> decode_units(const std::vector<int>& unit_ids) const {
    std::vector<std::string> out;
    for (int id : unit_ids) {
      if (id >= 0 && id < config_.n_words) out.push_back(words_[static_cast<std::size_t>(id)]);
    }
    return out;
  }

  std::string transcribe(const SpeechTokenStream& speech) const {
    std::vector<int> ids;
    for (const auto& t : speech.tokens) {
      if (t.kind == TokenKind::Phonetic) ids.push_back(t.id);
    }
    std::string out;
    for (const auto& w : decode_units(ids)) {
      if (!out.empty()) out += ' ';
      out += w;
    }
    return out;
  }

  // Transcribes the phonetic units of a unified sequence (the S->S path of
  // the toxicity harness and the TTS scoring path).
  std::string transcribe(const UnifiedSequence& seq) const {
    std::vector<int> ids;
    for (const auto& t : seq.tokens) {
      if (const auto* u = std::get_if<SpeechUnit>(&t)) {
        if (u->kind == TokenKind::Phonetic) ids.push_back(u->id);
      }
    }
    std::string out;
    for (const auto& w : decode_units(ids)) {
      if (!out.empty()) out += ' ';
      out += w;
    }
    return out;
  }

  // ---------------------------------------------------------------------
  // Cross-modal stories: one chain walk split into context and true
  // continuation. The foil is itself a valid chain walk, so it is locally as
  // plausible as the truth, but its first word is not a successor of the
  // context's last word. Telling them apart requires conditioning on the
  // context across the modality boundary.

  std::vector<CrossModalStory> make_stories(Rng& rng, int n, int ctx_words, int cont_words) const {
    std::vector<CrossModalStory> stories;
    for (int s = 0; s < n; ++s) {
      const auto full = walk(rng, ctx_words + cont_words);
      const std::vector<std::size_t> ctx(full.begin(), full.begin() + ctx_words);
      const std::vector<std::size_t> cont(full.begin() + ctx_words, full.end());

      const auto& allowed = successors_[ctx.back()];
      std::size_t foil_start;
      do {
        foil_start = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(config_.n_words)));
      } while (std::find(allowed.begin(), allowed.end(), foil_start) != allowed.end());
      const auto foil = walk(rng, cont_words, foil_start);

      CrossModalStory story;
      story.id = "story-" + std::to_string(s);
      story.context_text = join_words(ctx);
      story.context_speech = speech_of(ctx, rng);
      CrossModalStory::Hypothesis true_h{join_words(cont), speech_of(cont, rng)};
      CrossModalStory::Hypothesis foil_h{join_words(foil), speech_of(foil, rng)};
      if (rng.below(2) == 0) {
        story.hypotheses = {true_h, foil_h};
        story.gold = 0;
      } else {
        story.hypotheses = {foil_h, true_h};
        story.gold = 1;
      }
      stories.push_back(std::move(story));
    }
    return stories;
  }

  // ---------------------------------------------------------------------
  // Sentiment fixtures. Text sentiment rides on small word lists; speech
  // sentiment rides on the style-token band (4 ids per class).

  static const std::vector<std::string>& positive_words() {
    static const std::vector<std::string> v{"glad", "bright", "merry", "warm", "sweet"};
    return v;
  }
  static const std::vector<std::string>& negative_words() {
    static const std::vector<std::string> v{"grim", "bleak", "sour", "cold", "harsh"};
    return v;
  }

  LexiconTextClassifier text_sentiment_classifier() const {
    return LexiconTextClassifier(
        std::set<std::string>(positive_words().begin(), positive_words().end()),
        std::set<std::string>(negative_words().begin(), negative_words().end()));
  }

  int style_band(SentimentLabel s) const {
    return static_cast<int>(s) * (config_.n_style / 3);
  }

  std::string make_sentiment_text(Rng& rng, SentimentLabel s, int n_words = 10) const {
    std::string out;
    for (int i = 0; i < n_words; ++i) {
      std::string w;
      const bool cue = i % 3 == 1 && s != SentimentLabel::Neutral;
      if (cue) {
        const auto& lex = s == SentimentLabel::Positive ? positive_words() : negative_words();
        w = lex[rng.below(lex.size())];
      } else {
        w = words_[rng.below(words_.size())];
      }
      if (!out.empty()) out += ' ';
      out += w;
    }
    return out;
  }

  // Full-rate expressive stream: phonetic units of random words, a pitch
  // random walk at 12.5 Hz, and 1 Hz style tokens from the class band.
  SpeechTokenStream make_expressive_speech(Rng& rng, SentimentLabel s, int n_words = 4) const {
    std::vector<std::size_t> word_ids;
    for (int i = 0; i < n_words; ++i) {
      word_ids.push_back(static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(config_.n_words))));
    }
    SpeechTokenStream phonetic = speech_of(word_ids, rng);
    const Rational duration = phonetic.empty()
                                  ? Rational(0, 1)
                                  : phonetic.tokens.back().time + Rational(1, 25);

    SpeechTokenStream pitch;
    int level = static_cast<int>(rng.below(static_cast<std::uint64_t>(config_.n_pitch)));
    for (std::int64_t f = 0; Rational::from_frame(f, Rational(25, 2)) < duration; ++f) {
      level += static_cast<int>(rng.range(-1, 1));
      level = std::min(std::max(level, 0), config_.n_pitch - 1);
      pitch.tokens.push_back(
          SpeechToken{TokenKind::Pitch, level, Rational::from_frame(f, Rational(25, 2))});
    }
    SpeechTokenStream style;
    const int band = style_band(s);
    const int band_width = config_.n_style / 3;
    for (std::int64_t sec = 0; Rational(sec, 1) < duration; ++sec) {
      style.tokens.push_back(SpeechToken{
          TokenKind::Style, band + static_cast<int>(rng.below(static_cast<std::uint64_t>(band_width))),
          Rational(sec, 1)});
    }
    return merge_streams(phonetic, pitch, style);
  }

  std::vector<StspItem> make_stsp_items(Rng& rng, Modality modality, int per_class,
                                        const std::string& source) const {
    std::vector<StspItem> items;
    int k = 0;
    for (SentimentLabel s : kAllSentiments) {
      for (int i = 0; i < per_class; ++i) {
        StspItem item;
        item.id = source + "-" + std::to_string(k++);
        item.modality = modality;
        item.sentiment = s;
        item.source_dataset = source;
        if (modality == Modality::Text) {
          item.prompt_text = make_sentiment_text(rng, s);
        } else {
          item.prompt_speech = make_expressive_speech(rng, s);
        }
        items.push_back(std::move(item));
      }
    }
    return items;
  }

  StyleTokenClassifier train_speech_sentiment_classifier(const std::vector<StspItem>& train) const {
    StyleTokenClassifier clf(config_.n_style);
    for (const auto& item : train) {
      if (item.modality == Modality::Speech) clf.add_example(item.sentiment, item.prompt_speech);
    }
    return clf;
  }

  // ---------------------------------------------------------------------
  // Toxicity prompts across demographic axes; a slice of prompts carries a
  // lexicon term so prompt-side counts are exercised.

  std::vector<ToxPrompt> make_tox_prompts(Rng& rng, const std::vector<std::string>& axes,
                                          int per_axis, Modality modality,
                                          const ToxicityLexicon& lexicon) const {
    std::vector<ToxPrompt> prompts;
    int k = 0;
    for (const auto& axis : axes) {
      for (int i = 0; i < per_axis; ++i) {
        ToxPrompt p;
        p.id = "tox-" + std::to_string(k++);
        p.axis = axis;
        p.modality = modality;
        p.text = "i am a " + axis + " person who says " + words_[rng.below(words_.size())];
        if (i % 5 == 4) {
          const auto& term = lexicon.terms[rng.below(lexicon.terms.size())];
          for (const auto& w : term) p.text += " " + w;
        }
        if (modality == Modality::Speech) {
          std::vector<std::size_t> word_ids;
          for (int w = 0; w < 4; ++w) {
            word_ids.push_back(
                static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(config_.n_words))));
          }
          p.speech = speech_of(word_ids, rng);
        }
        prompts.push_back(std::move(p));
      }
    }
    return prompts;
  }

  // ---------------------------------------------------------------------

  std::string join_words(const std::vector<std::size_t>& ids) const {
    std::string out;
    for (std::size_t id : ids) {
      if (!out.empty()) out += ' ';
      out += words_[id];
    }
    return out;
  }

  // Full-rate phonetic stream of the word sequence, with per-unit duplication.
  SpeechTokenStream speech_of(const std::vector<std::size_t>& word_ids, Rng& rng) const {
    SpeechTokenStream s;
    std::int64_t frame = 0;
    for (std::size_t w : word_ids) {
      for (int unit : prons_[w]) {
        const auto dups = rng.range(config_.dup_min, config_.dup_max);
        for (std::int64_t d = 0; d < dups; ++d) {
          s.tokens.push_back(SpeechToken{TokenKind::Phonetic, unit, Rational(frame, 25)});
          ++frame;
        }
      }
    }
    return s;
  }

 private:
  SynthWorldConfig config_;
  std::vector<std::string> words_;
  std::vector<std::vector<int>> prons_;
  std::vector<std::vector<std::size_t>> successors_;
};

}  // namespace stlm
