#pragma once

#include <map>
#include <string>
#include <vector>

#include "stlm/bpe.hpp"
#include "stlm/interleave.hpp"
#include "stlm/mc.hpp"
#include "stlm/mixer.hpp"
#include "stlm/model.hpp"
#include "stlm/probe.hpp"
#include "stlm/synth.hpp"
#include "stlm/train.hpp"

namespace stlm {

// Controlled comparison on the synthetic paired-vocabulary corpus: one model
// trains on text-only + speech-only + word-level interleaved data, the other
// on text-only + speech-only alone, at an identical step and token budget.
// Both are then scored on cross-modal multiple choice and probed for
// word-level feature alignment. Only interleaving exposes the hidden
// word-pronunciation mapping, so the gap is attributable to it.
struct AblationConfig {
  SynthWorldConfig world;
  double aligned_proportion = 1.0 / 3.0;
  int corpus_size = 200;
  int utt_min_words = 6;
  int utt_max_words = 12;
  int bpe_vocab = 300;
  ModelConfig model;
  TrainConfig train;
  SpanConfig spans{2, 5, 2, 5};
  std::size_t batch_token_budget = 512;
  int n_stories = 120;
  int ctx_words = 6;
  int cont_words = 3;
  int probe_pairs = 64;
  int probe_words = 3;  // short probe sentences keep positional phase from
                        // dominating the word-level similarity

  // Pinned by the pilot runs recorded in tests/data/ablation_pilot.md.
  static AblationConfig defaults() {
    AblationConfig c;
    c.model.layers = 3;
    c.model.model_dim = 32;
    c.model.heads = 4;
    c.model.ff_dim = 64;
    c.model.context_len = 160;
    c.model.init_std = 0.05;
    c.train.steps = 1800;
    c.train.learning_rate = 3e-3;
    return c;
  }
};

struct AblationRun {
  double interleaved_acc = 0.0;     // cross-modal accuracy, mean of T->S and S->T
  double no_interleave_acc = 0.0;
  double interleaved_mid_sim = 0.0;   // word_max_similarity at the middle layer
  double no_interleave_mid_sim = 0.0;
  std::vector<LayerCurvePoint> interleaved_curve;
  std::vector<LayerCurvePoint> no_interleave_curve;
};

namespace detail {

inline TransformerLm train_condition(const AblationConfig& config, const SynthWorld& world,
                                     const TextTokenizer& tokenizer,
                                     const std::vector<AlignedUtterance>& corpus,
                                     bool with_interleaving, std::uint64_t seed) {
  MixerConfig mixer;
  if (with_interleaving) {
    const double pa = config.aligned_proportion;
    mixer.subsets = {MixerSubset{"text", SubsetKind::TextOnly, 0, 1, (1.0 - pa) / 2},
                     MixerSubset{"speech", SubsetKind::SpeechOnly, 1, 0, (1.0 - pa) / 2},
                     MixerSubset{"aligned", SubsetKind::Aligned, 1, 1, pa}};
  } else {
    mixer.subsets = {MixerSubset{"text", SubsetKind::TextOnly, 0, 1, 0.5},
                     MixerSubset{"speech", SubsetKind::SpeechOnly, 1, 0, 0.5}};
  }
  std::map<std::string, std::vector<AlignedUtterance>> manifests;
  for (const auto& subset : mixer.subsets) manifests[subset.name] = corpus;

  VocabularyLayout layout{tokenizer.vocab_size(), world.config().n_phonetic,
                          world.config().n_pitch, world.config().n_style};
  ModelConfig mc = config.model;
  mc.seed = mix_seed(seed, with_interleaving ? 1 : 2);
  TransformerLm model(mc, layout);

  TrainConfig tc = config.train;
  tc.seed = mix_seed(seed, with_interleaving ? 11 : 12);
  const auto max_len = static_cast<std::size_t>(mc.context_len);
  train(model,
        [&](int, Rng& rng) {
          auto batch = sample_batch(mixer, manifests, rng, config.batch_token_budget, tokenizer,
                                    {TokenKind::Phonetic, TokenKind::Pitch}, config.spans);
          std::vector<std::vector<int>> ids;
          for (const auto& seq : batch.sequences) {
            auto enc = layout.encode(seq);
            if (enc.size() > max_len) enc.resize(max_len);
            if (enc.size() >= 2) ids.push_back(std::move(enc));
          }
          return ids;
        },
        tc);
  return model;
}

inline double cross_modal_accuracy(const TransformerLm& model,
                                   const std::vector<CrossModalStory>& stories,
                                   const TextTokenizer& tokenizer) {
  int correct = 0, total = 0;
  for (auto direction : {CrossModalDirection::TextToSpeech, CrossModalDirection::SpeechToText}) {
    for (const auto& story : stories) {
      const auto item = build_cross_modal_item(story, direction, tokenizer);
      const auto scored = score_item(model, item, /*normalize=*/true);
      if (scored.skipped) continue;
      ++total;
      if (*scored.predicted == item.gold) ++correct;
    }
  }
  if (total == 0) fail_data("cross_modal_accuracy: every story overflowed the context");
  return static_cast<double>(correct) / total;
}

}  // namespace detail

inline AblationRun run_ablation(const AblationConfig& config, std::uint64_t seed) {
  const SynthWorld world(config.world);
  Rng rng(mix_seed(seed, 1000));
  const auto corpus =
      world.make_corpus(rng, config.corpus_size, config.utt_min_words, config.utt_max_words);

  std::vector<std::string> transcripts;
  for (const auto& utt : corpus) transcripts.push_back(utt.transcript());
  const auto tokenizer = TextTokenizer::train(transcripts, config.bpe_vocab);

  const auto stories = world.make_stories(rng, config.n_stories, config.ctx_words, config.cont_words);

  auto with = detail::train_condition(config, world, tokenizer, corpus, true, seed);
  auto without = detail::train_condition(config, world, tokenizer, corpus, false, seed);

  AblationRun run;
  run.interleaved_acc = detail::cross_modal_accuracy(with, stories, tokenizer);
  run.no_interleave_acc = detail::cross_modal_accuracy(without, stories, tokenizer);

  Rng probe_rng(mix_seed(seed, 77));
  std::vector<ProbePair> pairs;
  for (int i = 0; i < config.probe_pairs; ++i) {
    pairs.push_back(make_probe_pair(
        world.make_utterance(probe_rng, config.probe_words, config.probe_words, "probe"),
        tokenizer));
  }
  run.interleaved_curve = layer_curve(with, pairs);
  run.no_interleave_curve = layer_curve(without, pairs);
  const int mid = config.model.layers / 2 + (config.model.layers % 2);
  run.interleaved_mid_sim = run.interleaved_curve[static_cast<std::size_t>(mid)].mean_max_similarity;
  run.no_interleave_mid_sim =
      run.no_interleave_curve[static_cast<std::size_t>(mid)].mean_max_similarity;
  return run;
}

}  // namespace stlm
