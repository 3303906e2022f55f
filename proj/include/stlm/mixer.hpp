#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stlm/align.hpp"
#include "stlm/errors.hpp"
#include "stlm/interleave.hpp"

namespace stlm {

enum class SubsetKind { TextOnly, SpeechOnly, Aligned };

inline const char* subset_kind_name(SubsetKind k) {
  switch (k) {
    case SubsetKind::TextOnly: return "text";
    case SubsetKind::SpeechOnly: return "speech";
    case SubsetKind::Aligned: return "aligned";
  }
  return "?";
}

struct MixerSubset {
  std::string name;
  SubsetKind kind = SubsetKind::Aligned;
  double tokens_speech = 0;  // corpus size in speech tokens
  double tokens_text = 0;    // corpus size in text tokens
  double proportion = 0;     // sampling proportion of training batches
};

struct MixerConfig {
  std::vector<MixerSubset> subsets;
};

inline void validate_mixer(const MixerConfig& config) {
  if (config.subsets.empty()) fail_config("mixer: no subsets");
  double total = 0;
  for (const auto& s : config.subsets) {
    if (s.proportion < 0) fail_config("mixer: negative proportion for " + s.name);
    total += s.proportion;
    const bool has_speech = s.kind != SubsetKind::TextOnly;
    const bool has_text = s.kind != SubsetKind::SpeechOnly;
    if (has_speech && s.tokens_speech <= 0) {
      fail_config("mixer: subset " + s.name + " needs a speech token count");
    }
    if (has_text && s.tokens_text <= 0) {
      fail_config("mixer: subset " + s.name + " needs a text token count");
    }
  }
  if (std::abs(total - 1.0) > 1e-9) fail_config("mixer: proportions must sum to 1");
}

// Epochs over a subset after `total_training_tokens` tokens of training:
// proportion * total / subset size.
inline double epochs_seen(const MixerSubset& subset, double total_training_tokens) {
  const double size = subset.tokens_speech + subset.tokens_text;
  if (size <= 0) fail_config("epochs_seen: subset " + subset.name + " has no tokens");
  return subset.proportion * total_training_tokens / size;
}

// ---------------------------------------------------------------------------
// Key-value config file, one subset per line:
//   subset <name> <kind: text|speech|aligned> <proportion> <speech_tokens> <text_tokens>
// with '#' comments.

inline MixerConfig load_mixer_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot read mixer config: " + path);
  MixerConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string keyword;
    if (!(ss >> keyword)) continue;
    if (keyword != "subset") {
      fail_config(path + ":" + std::to_string(line_no) + ": expected 'subset', got '" + keyword + "'");
    }
    MixerSubset s;
    std::string kind;
    if (!(ss >> s.name >> kind >> s.proportion >> s.tokens_speech >> s.tokens_text)) {
      fail_config(path + ":" + std::to_string(line_no) + ": malformed subset line");
    }
    if (kind == "text") s.kind = SubsetKind::TextOnly;
    else if (kind == "speech") s.kind = SubsetKind::SpeechOnly;
    else if (kind == "aligned") s.kind = SubsetKind::Aligned;
    else fail_config(path + ":" + std::to_string(line_no) + ": unknown subset kind '" + kind + "'");
    config.subsets.push_back(std::move(s));
  }
  validate_mixer(config);
  return config;
}

inline void save_mixer_config(const MixerConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_config("cannot write mixer config: " + path);
  char buf[128];
  for (const auto& s : config.subsets) {
    std::snprintf(buf, sizeof buf, "subset %s %s %.17g %.17g %.17g\n", s.name.c_str(),
                  subset_kind_name(s.kind), s.proportion, s.tokens_speech, s.tokens_text);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

struct BatchSample {
  std::vector<UnifiedSequence> sequences;
  std::map<std::string, std::size_t> draws_per_subset;
  std::size_t total_tokens = 0;
};

// Draws subsets i.i.d. by proportion, renders one manifest record per draw in
// the subset's modality, and packs sequences until the token budget is met.
inline BatchSample sample_batch(const MixerConfig& mixer,
                                const std::map<std::string, std::vector<AlignedUtterance>>& manifests,
                                Rng& rng, std::size_t batch_token_budget,
                                const TextTokenizer& tokenizer,
                                KindSet dedup_kinds = {TokenKind::Phonetic, TokenKind::Pitch},
                                const SpanConfig& spans = SpanConfig{}) {
  validate_mixer(mixer);
  BatchSample batch;
  while (batch.total_tokens < batch_token_budget) {
    const double u = rng.real01();
    double acc = 0;
    const MixerSubset* subset = &mixer.subsets.back();
    for (const auto& s : mixer.subsets) {
      acc += s.proportion;
      if (u < acc) {
        subset = &s;
        break;
      }
    }
    auto it = manifests.find(subset->name);
    if (it == manifests.end() || it->second.empty()) {
      fail_data("sample_batch: no manifest records for subset " + subset->name);
    }
    const AlignedUtterance& utt = it->second[rng.below(it->second.size())];

    UnifiedSequence seq;
    switch (subset->kind) {
      case SubsetKind::TextOnly:
        seq = encode_unimodal(utt.transcript(), tokenizer);
        break;
      case SubsetKind::SpeechOnly:
        seq = encode_unimodal(utt.speech, dedup_kinds);
        break;
      case SubsetKind::Aligned: {
        const SpanPlan plan = sample_span_plan(utt, rng, spans);
        seq = build_interleaved(utt, plan, tokenizer, dedup_kinds);
        break;
      }
    }
    batch.total_tokens += seq.size();
    ++batch.draws_per_subset[subset->name];
    batch.sequences.push_back(std::move(seq));
  }
  return batch;
}

}  // namespace stlm
